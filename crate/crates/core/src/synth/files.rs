//! Text formats for scenes and trajectories.
//!
//! Scene file:
//!
//! ```text
//! rig.focal = 200
//! rig.baseline = 0.5
//! rig.principal_point = 127.5 63.5
//! rig.size = 256 128
//! rig.max_disparity = 64
//! texture.seed = 7
//! texture.texel_pixels = 1.5
//! background = 128
//! plane = 30                  # Z
//! plane = 12 -2 2 -1 1        # Z x_min x_max y_min y_max
//! box = -1 -1 9  1 1 10       # min corner, max corner
//! ```
//!
//! Trajectory file, either generated:
//!
//! ```text
//! frames = 10
//! start = 0 0 0
//! step = 0 0 0.5
//! yaw_step_deg = 0
//! ```
//!
//! or listed as repeated `pose = r00 r01 r02 t0 r10 ... t2` lines giving
//! world-from-camera poses.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Matrix4, Vector3};

use super::scene::{PlaneBounds, Primitive, SceneSpec};
use super::sequence::Trajectory;
use crate::error::Result;
use crate::kv::KvFile;
use crate::types::{RigidMotion, StereoRig};

const SCENE_KEYS: &[&str] = &[
    "rig.focal",
    "rig.baseline",
    "rig.principal_point",
    "rig.size",
    "rig.max_disparity",
    "texture.seed",
    "texture.texel_pixels",
    "background",
    "plane",
    "box",
];

fn required<T: std::str::FromStr>(kv: &KvFile, key: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    kv.value(key)?.ok_or_else(|| kv.missing(key))
}

fn required_floats(kv: &KvFile, key: &str, n: usize) -> Result<Vec<f64>> {
    match kv.get(key)? {
        Some(e) => kv.floats(e, &[n]),
        None => Err(kv.missing(key)),
    }
}

pub fn parse_scene(kv: &KvFile) -> Result<SceneSpec> {
    kv.check_keys(SCENE_KEYS)?;
    let pp = required_floats(kv, "rig.principal_point", 2)?;
    let size = required_floats(kv, "rig.size", 2)?;
    let dims = (size[0] as usize, size[1] as usize);
    if size.iter().any(|&s| s.fract() != 0.0 || s < 0.0) {
        let e = kv.get("rig.size")?.expect("present");
        return Err(kv.error(e, "image size must be whole numbers"));
    }
    let rig = StereoRig::new(
        required(kv, "rig.focal")?,
        required(kv, "rig.baseline")?,
        (pp[0], pp[1]),
        dims,
        required(kv, "rig.max_disparity")?,
    )?;

    let mut primitives = Vec::new();
    for e in kv.entries() {
        match e.key.as_str() {
            "plane" => {
                let v = kv.floats(e, &[1, 5])?;
                let bounds = (v.len() == 5).then(|| PlaneBounds {
                    x_min: v[1],
                    x_max: v[2],
                    y_min: v[3],
                    y_max: v[4],
                });
                primitives.push(Primitive::Plane { depth: v[0], bounds });
            }
            "box" => {
                let v = kv.floats(e, &[6])?;
                primitives.push(Primitive::Box {
                    min: Vector3::new(v[0], v[1], v[2]),
                    max: Vector3::new(v[3], v[4], v[5]),
                });
            }
            _ => {}
        }
    }
    let mut scene = SceneSpec::new(rig, primitives, kv.value("texture.seed")?.unwrap_or(0))?;
    if let Some(t) = kv.value("texture.texel_pixels")? {
        scene.texel_pixels = t;
    }
    if let Some(b) = kv.value("background")? {
        scene.background = b;
    }
    scene.validate()?;
    Ok(scene)
}

pub fn read_scene(path: impl AsRef<Path>) -> Result<SceneSpec> {
    parse_scene(&KvFile::read(path)?)
}

/// Serialises a scene; [`parse_scene`] reads it back exactly.
pub fn format_scene(scene: &SceneSpec) -> String {
    let rig = &scene.rig;
    let (cx, cy) = rig.principal_point();
    let mut s = String::new();
    let _ = writeln!(s, "rig.focal = {}", rig.focal());
    let _ = writeln!(s, "rig.baseline = {}", rig.baseline());
    let _ = writeln!(s, "rig.principal_point = {cx} {cy}");
    let _ = writeln!(s, "rig.size = {} {}", rig.width(), rig.height());
    let _ = writeln!(s, "rig.max_disparity = {}", rig.max_disparity());
    let _ = writeln!(s, "texture.seed = {}", scene.texture_seed);
    let _ = writeln!(s, "texture.texel_pixels = {}", scene.texel_pixels);
    let _ = writeln!(s, "background = {}", scene.background);
    for p in &scene.primitives {
        match p {
            Primitive::Plane { depth, bounds: None } => {
                let _ = writeln!(s, "plane = {depth}");
            }
            Primitive::Plane { depth, bounds: Some(b) } => {
                let _ = writeln!(s, "plane = {depth} {} {} {} {}", b.x_min, b.x_max, b.y_min, b.y_max);
            }
            Primitive::Box { min, max } => {
                let _ = writeln!(s, "box = {} {} {} {} {} {}", min.x, min.y, min.z, max.x, max.y, max.z);
            }
        }
    }
    s
}

const TRAJECTORY_KEYS: &[&str] = &["frames", "start", "step", "yaw_step_deg", "pose"];

pub fn parse_trajectory(kv: &KvFile) -> Result<Trajectory> {
    kv.check_keys(TRAJECTORY_KEYS)?;
    let listed: Vec<_> = kv.get_all("pose").collect();
    if !listed.is_empty() {
        if let Some(e) = kv.entries().iter().find(|e| e.key != "pose") {
            return Err(kv.error(e, "explicit poses cannot be mixed with generator keys"));
        }
        let mut poses = Vec::with_capacity(listed.len());
        for e in listed {
            let v = kv.floats(e, &[12])?;
            let mut m = Matrix4::identity();
            for r in 0..3 {
                for c in 0..4 {
                    m[(r, c)] = v[r * 4 + c];
                }
            }
            poses.push(RigidMotion::orthonormalized(m, 1e-6).map_err(|err| kv.error(e, err.to_string()))?);
        }
        return Trajectory::new(poses);
    }
    let frames: usize = required(kv, "frames")?;
    let vec3 = |key: &str| -> Result<Vector3<f64>> {
        Ok(match kv.get(key)? {
            Some(e) => Vector3::from_vec(kv.floats(e, &[3])?),
            None => Vector3::zeros(),
        })
    };
    let yaw: f64 = kv.value("yaw_step_deg")?.unwrap_or(0.0);
    Trajectory::linear(frames, vec3("start")?, vec3("step")?, yaw.to_radians())
}

pub fn read_trajectory(path: impl AsRef<Path>) -> Result<Trajectory> {
    parse_trajectory(&KvFile::read(path)?)
}

/// Serialises a trajectory as explicit pose lines.
pub fn format_trajectory(trajectory: &Trajectory) -> String {
    let mut s = String::new();
    for pose in trajectory.poses() {
        let m = pose.matrix();
        let values: Vec<String> = (0..3)
            .flat_map(|r| (0..4).map(move |c| (r, c)))
            .map(|(r, c)| m[(r, c)].to_string())
            .collect();
        let _ = writeln!(s, "pose = {}", values.join(" "));
    }
    s
}
