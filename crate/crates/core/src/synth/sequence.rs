use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::scene::{RenderedFrame, SceneSpec};
use crate::error::{Error, Result};
use crate::types::{GrayImage, RigidMotion};

/// Camera path as world-from-camera poses of the left camera.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    poses: Vec<RigidMotion>,
}

impl Trajectory {
    pub fn new(poses: Vec<RigidMotion>) -> Result<Self> {
        if poses.is_empty() {
            return Err(Error::InvalidParameter("trajectory has no poses".into()));
        }
        Ok(Self { poses })
    }

    /// `frames` poses starting at `start`, moving by `step` (world metres)
    /// and turning by `yaw_step` radians about the vertical axis per frame.
    pub fn linear(frames: usize, start: Vector3<f64>, step: Vector3<f64>, yaw_step: f64) -> Result<Self> {
        let poses = (0..frames)
            .map(|k| {
                let k = k as f64;
                RigidMotion::from_axis_angle(Vector3::y(), yaw_step * k, start + step * k)
            })
            .collect();
        Self::new(poses)
    }

    pub fn poses(&self) -> &[RigidMotion] {
        &self.poses
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    /// Motion taking frame `k - 1` camera coordinates to frame `k`:
    /// `P_k^-1 P_{k-1}`. Identity for `k = 0`.
    pub fn relative_motion(&self, k: usize) -> RigidMotion {
        if k == 0 {
            return RigidMotion::identity();
        }
        self.poses[k].inverse() * self.poses[k - 1]
    }

    /// Checks that no camera of the rig sits inside a box or beyond a plane.
    pub fn check_against(&self, scene: &SceneSpec) -> Result<()> {
        use super::scene::Primitive;
        for (k, pose) in self.poses.iter().enumerate() {
            for centre in [pose.translation(), scene.right_pose(pose).translation()] {
                for prim in &scene.primitives {
                    let bad = match *prim {
                        Primitive::Plane { depth, .. } => centre.z >= depth,
                        Primitive::Box { min, max } => (0..3).all(|a| centre[a] >= min[a] && centre[a] <= max[a]),
                    };
                    if bad {
                        return Err(Error::InvalidParameter(format!(
                            "pose {k} puts a camera at {:?} inside or beyond {prim:?}",
                            centre.as_slice()
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Perturbations applied to a synthetic sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequenceNoise {
    /// Per-axis rotation noise of the reported motion (rad).
    pub rotation_sigma: f64,
    /// Per-axis translation noise of the reported motion (m).
    pub translation_sigma: f64,
    /// Additive Gaussian image noise (intensity levels).
    pub image_sigma: f64,
    pub seed: u64,
}

impl Default for SequenceNoise {
    fn default() -> Self {
        Self {
            rotation_sigma: 0.0,
            translation_sigma: 0.0,
            image_sigma: 0.0,
            seed: 0,
        }
    }
}

impl SequenceNoise {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("rotation", self.rotation_sigma),
            ("translation", self.translation_sigma),
            ("image", self.image_sigma),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParameter(format!("{name} noise {v} must be >= 0")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticFrame {
    pub index: usize,
    /// Images carry the configured image noise; ground truth is exact.
    pub rendered: RenderedFrame,
    pub pose: RigidMotion,
    pub exact_motion: RigidMotion,
    pub noisy_motion: RigidMotion,
}

fn normal3(rng: &mut ChaCha8Rng, sigma: f64) -> Vector3<f64> {
    let mut v = Vector3::zeros();
    for c in v.iter_mut() {
        let n: f64 = rng.sample(StandardNormal);
        *c = sigma * n;
    }
    v
}

/// Left-multiplies a small random rotation and adds translation noise.
pub fn perturb_motion(motion: &RigidMotion, rotation_sigma: f64, translation_sigma: f64, rng: &mut ChaCha8Rng) -> RigidMotion {
    let w = normal3(rng, rotation_sigma);
    let dt = normal3(rng, translation_sigma);
    let delta = RigidMotion::from_axis_angle(w, w.norm(), dt);
    delta * *motion
}

/// Adds rounded Gaussian noise, clamped to the intensity range.
pub fn add_image_noise(image: &GrayImage, sigma: f64, rng: &mut ChaCha8Rng) -> GrayImage {
    if sigma == 0.0 {
        return image.clone();
    }
    let data = image
        .data()
        .iter()
        .map(|&v| {
            let n: f64 = rng.sample(StandardNormal);
            (f64::from(v) + sigma * n).round().clamp(0.0, 255.0) as u8
        })
        .collect();
    GrayImage::new(image.width(), image.height(), data).expect("same dimensions")
}

/// Renders every pose of `trajectory` and pairs each frame with its exact
/// and perturbed relative motion. Deterministic in `noise.seed`.
pub fn make_sequence(scene: &SceneSpec, trajectory: &Trajectory, noise: &SequenceNoise) -> Result<Vec<SyntheticFrame>> {
    scene.validate()?;
    noise.validate()?;
    trajectory.check_against(scene)?;
    let mut motion_rng = ChaCha8Rng::seed_from_u64(noise.seed);
    motion_rng.set_stream(1);
    let mut image_rng = ChaCha8Rng::seed_from_u64(noise.seed);
    image_rng.set_stream(2);

    let mut frames = Vec::with_capacity(trajectory.len());
    for (k, pose) in trajectory.poses().iter().enumerate() {
        let mut rendered = scene.render_frame(pose);
        rendered.left = add_image_noise(&rendered.left, noise.image_sigma, &mut image_rng);
        rendered.right = add_image_noise(&rendered.right, noise.image_sigma, &mut image_rng);
        let exact_motion = trajectory.relative_motion(k);
        let noisy_motion = if k == 0 {
            exact_motion
        } else {
            perturb_motion(&exact_motion, noise.rotation_sigma, noise.translation_sigma, &mut motion_rng)
        };
        frames.push(SyntheticFrame {
            index: k,
            rendered,
            pose: *pose,
            exact_motion,
            noisy_motion,
        });
    }
    Ok(frames)
}
