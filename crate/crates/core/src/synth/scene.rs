use nalgebra::Vector3;
use rayon::prelude::*;

use super::texture::SurfaceTexture;
use crate::error::{Error, Result};
use crate::geometry::right_to_left;
use crate::types::{DisparityMap, GrayImage, RigidMotion, StereoRig, ValidityMask};

const HIT_EPS: f64 = 1e-9;

/// Rectangle limits of a plane, in world metres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneBounds {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Primitive {
    /// Plane `Z = depth` facing the world origin, unbounded when `bounds` is
    /// `None`.
    Plane { depth: f64, bounds: Option<PlaneBounds> },
    /// Axis-aligned box between two corners.
    Box { min: Vector3<f64>, max: Vector3<f64> },
}

impl Primitive {
    /// World depth used to size the texture: the nearest `Z` of the shape.
    fn reference_depth(&self) -> f64 {
        match *self {
            Primitive::Plane { depth, .. } => depth,
            Primitive::Box { min, .. } => min.z,
        }
    }
}

/// A static scene of textured planes and boxes seen by one stereo rig.
///
/// World coordinates follow the camera convention: `X` right, `Y` down,
/// `Z` forward.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub rig: StereoRig,
    pub primitives: Vec<Primitive>,
    pub texture_seed: u64,
    /// Fine texel size in pixels at each primitive's reference depth.
    pub texel_pixels: f64,
    /// Intensity of rays that hit nothing.
    pub background: u8,
}

/// Nearest intersection along a ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    /// Ray parameter; equals camera depth for pixel rays.
    pub t: f64,
    pub primitive: usize,
    surface: u64,
    uv: (f64, f64),
}

/// Left and right images with ground-truth disparity for one rig pose.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedFrame {
    pub left: GrayImage,
    pub right: GrayImage,
    pub gt_left: DisparityMap,
    pub gt_right: DisparityMap,
}

impl SceneSpec {
    pub fn new(rig: StereoRig, primitives: Vec<Primitive>, texture_seed: u64) -> Result<Self> {
        let scene = Self {
            rig,
            primitives,
            texture_seed,
            texel_pixels: 1.5,
            background: 128,
        };
        scene.validate()?;
        Ok(scene)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.texel_pixels.is_finite() && self.texel_pixels > 0.0) {
            return Err(Error::InvalidParameter("texel size must be > 0".into()));
        }
        let b = self.rig.baseline();
        for (k, p) in self.primitives.iter().enumerate() {
            let ok = match *p {
                Primitive::Plane { depth, bounds } => {
                    depth.is_finite()
                        && depth > b
                        && bounds.is_none_or(|r| r.x_min < r.x_max && r.y_min < r.y_max)
                }
                Primitive::Box { min, max } => {
                    min.iter().chain(max.iter()).all(|v| v.is_finite())
                        && (0..3).all(|i| min[i] < max[i])
                        && min.z > b
                }
            };
            if !ok {
                return Err(Error::InvalidParameter(format!(
                    "primitive {k} is degenerate or not beyond the baseline ({b} m): {p:?}"
                )));
            }
        }
        Ok(())
    }

    fn texture(&self, surface: u64, primitive: usize) -> SurfaceTexture {
        let depth = self.primitives[primitive].reference_depth().max(1.0);
        SurfaceTexture::new(self.texture_seed, surface, self.texel_pixels * depth / self.rig.focal())
    }

    /// Nearest primitive hit by the ray `origin + t dir`, `t > 0`. Exact
    /// ties go to the earlier primitive.
    pub fn cast(&self, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<Hit> {
        let mut best: Option<Hit> = None;
        for (k, prim) in self.primitives.iter().enumerate() {
            let hit = match *prim {
                Primitive::Plane { depth, bounds } => cast_plane(origin, dir, depth, bounds),
                Primitive::Box { min, max } => cast_box(origin, dir, &min, &max),
            };
            if let Some((t, face, uv)) = hit {
                if best.is_none_or(|b| t < b.t) {
                    best = Some(Hit {
                        t,
                        primitive: k,
                        surface: (k as u64) << 3 | face,
                        uv,
                    });
                }
            }
        }
        best
    }

    /// Ray through pixel `(x, y)` of a camera with world-from-camera `pose`.
    /// The direction has unit camera-frame depth.
    pub fn pixel_ray(&self, pose: &RigidMotion, x: f64, y: f64) -> (Vector3<f64>, Vector3<f64>) {
        let (cx, cy) = self.rig.principal_point();
        let f = self.rig.focal();
        let local = Vector3::new((x - cx) / f, (y - cy) / f, 1.0);
        (pose.translation(), pose.rotation() * local)
    }

    /// Camera depth of the surface seen at pixel `(x, y)`, sub-pixel
    /// positions allowed.
    pub fn depth_at(&self, pose: &RigidMotion, x: f64, y: f64) -> Option<f64> {
        let (o, d) = self.pixel_ray(pose, x, y);
        self.cast(&o, &d).map(|h| h.t)
    }

    fn render_view(&self, pose: &RigidMotion) -> (GrayImage, DisparityMap) {
        let (w, h) = self.rig.dims();
        let fb = self.rig.focal_baseline();
        let rows: Vec<(Vec<u8>, Vec<Option<f64>>)> = (0..h)
            .into_par_iter()
            .map(|y| {
                let mut img = Vec::with_capacity(w);
                let mut gt = Vec::with_capacity(w);
                for x in 0..w {
                    let (o, d) = self.pixel_ray(pose, x as f64, y as f64);
                    match self.cast(&o, &d) {
                        Some(hit) => {
                            let tex = self.texture(hit.surface, hit.primitive);
                            img.push(tex.sample(hit.uv.0, hit.uv.1));
                            gt.push(Some(fb / hit.t));
                        }
                        None => {
                            img.push(self.background);
                            gt.push(None);
                        }
                    }
                }
                (img, gt)
            })
            .collect();
        let mut data = Vec::with_capacity(w * h);
        let mut gt = DisparityMap::invalid(w, h).expect("rig dimensions are valid");
        for (y, (img_row, gt_row)) in rows.into_iter().enumerate() {
            data.extend(img_row);
            for (x, d) in gt_row.into_iter().enumerate() {
                if let Some(d) = d {
                    gt.set(x, y, d);
                }
            }
        }
        (GrayImage::new(w, h, data).expect("rig dimensions are valid"), gt)
    }

    /// World-from-camera pose of the right camera for a left-camera pose.
    pub fn right_pose(&self, pose: &RigidMotion) -> RigidMotion {
        *pose * right_to_left(&self.rig)
    }

    /// Ray-casts both views for the left-camera `pose` (world from camera).
    pub fn render_frame(&self, pose: &RigidMotion) -> RenderedFrame {
        let right_pose = self.right_pose(pose);
        let ((left, gt_left), (right, gt_right)) =
            rayon::join(|| self.render_view(pose), || self.render_view(&right_pose));
        RenderedFrame {
            left,
            right,
            gt_left,
            gt_right,
        }
    }

    /// Pixels of the camera at `from` whose surface point the camera at `to`
    /// also sees: inside its image and not hidden behind another surface.
    pub fn visibility_mask(&self, from: &RigidMotion, to: &RigidMotion) -> ValidityMask {
        let (w, h) = self.rig.dims();
        let (cx, cy) = self.rig.principal_point();
        let f = self.rig.focal();
        let to_inv = to.inverse();
        let to_origin = to.translation();
        let mut mask = ValidityMask::filled(w, h, false);
        for y in 0..h {
            for x in 0..w {
                let (o, d) = self.pixel_ray(from, x as f64, y as f64);
                let Some(hit) = self.cast(&o, &d) else {
                    continue;
                };
                let p = o + d * hit.t;
                let local = to_inv.transform_point(&p);
                if local.z <= HIT_EPS {
                    continue;
                }
                let (u, v) = (f * local.x / local.z + cx, f * local.y / local.z + cy);
                if !(u > -0.5 && v > -0.5 && u < w as f64 - 0.5 && v < h as f64 - 0.5) {
                    continue;
                }
                let toward = p - to_origin;
                if let Some(other) = self.cast(&to_origin, &toward) {
                    // `toward` reaches the point at t = 1.
                    if other.t >= 1.0 - 1e-7 {
                        mask.set(x, y, true);
                    }
                }
            }
        }
        mask
    }
}

fn cast_plane(
    origin: &Vector3<f64>,
    dir: &Vector3<f64>,
    depth: f64,
    bounds: Option<PlaneBounds>,
) -> Option<(f64, u64, (f64, f64))> {
    if dir.z == 0.0 {
        return None;
    }
    let t = (depth - origin.z) / dir.z;
    if !(t > HIT_EPS) {
        return None;
    }
    let (x, y) = (origin.x + t * dir.x, origin.y + t * dir.y);
    if let Some(r) = bounds {
        if !(x >= r.x_min && x <= r.x_max && y >= r.y_min && y <= r.y_max) {
            return None;
        }
    }
    Some((t, 0, (x, y)))
}

/// Slab test; rays starting inside the box do not hit it.
fn cast_box(
    origin: &Vector3<f64>,
    dir: &Vector3<f64>,
    min: &Vector3<f64>,
    max: &Vector3<f64>,
) -> Option<(f64, u64, (f64, f64))> {
    let mut t_near = f64::NEG_INFINITY;
    let mut t_far = f64::INFINITY;
    let mut face = 0u64;
    for a in 0..3 {
        if dir[a] == 0.0 {
            if origin[a] < min[a] || origin[a] > max[a] {
                return None;
            }
            continue;
        }
        let t1 = (min[a] - origin[a]) / dir[a];
        let t2 = (max[a] - origin[a]) / dir[a];
        let (lo, hi, side) = if t1 <= t2 { (t1, t2, 0) } else { (t2, t1, 1) };
        if lo > t_near {
            t_near = lo;
            face = (a as u64) << 1 | side;
        }
        t_far = t_far.min(hi);
    }
    if !(t_near > HIT_EPS && t_near <= t_far) {
        return None;
    }
    let p = origin + dir * t_near;
    let uv = match face >> 1 {
        0 => (p.z, p.y),
        1 => (p.x, p.z),
        _ => (p.x, p.y),
    };
    Some((t_near, 1 + face, uv))
}
