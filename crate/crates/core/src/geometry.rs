//! Rigid motion expressed in disparity space.
//!
//! A camera-frame point `M = (X, Y, Z, 1)` and its disparity-space image
//! `w = (x, y, d, 1)` with `x = fX/Z`, `y = fY/Z`, `d = fb/Z` are related by
//! a fixed projective map `G`. A rigid motion `T` acting on `M` therefore acts
//! on `w` as `H = G T G^-1`, which lets a whole disparity map be warped
//! without ever leaving disparity space.
//!
//! Disparity-space `x` and `y` are measured from the principal point. Use
//! [`PixelWarp`] to go from pixel coordinates and back.

use nalgebra::{Matrix4, Vector3, Vector4};

use crate::error::{Error, Result};
use crate::types::{RigidMotion, StereoRig};

const INFINITY_EPS: f64 = 1e-12;
const SINGULAR_DET: f64 = 1e-12;

/// A 4x4 projective transform of homogeneous disparity-space coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectiveMap4(Matrix4<f64>);

impl ProjectiveMap4 {
    pub fn new(matrix: Matrix4<f64>) -> Result<Self> {
        let det = matrix.determinant();
        if !det.is_finite() || det.abs() <= SINGULAR_DET {
            return Err(Error::Internal(format!(
                "projective map is singular (det = {det:e})"
            )));
        }
        Ok(Self(matrix))
    }

    pub fn identity() -> Self {
        Self(Matrix4::identity())
    }

    #[inline]
    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.0
    }

    pub fn inverse(&self) -> Result<Self> {
        self.0
            .try_inverse()
            .map(Self)
            .ok_or_else(|| Error::Internal("projective map is not invertible".into()))
    }

    /// `self * other`: apply `other` first.
    pub fn compose(&self, other: &ProjectiveMap4) -> Self {
        Self(self.0 * other.0)
    }
}

/// A point in centred disparity-space coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisparityPoint {
    pub x: f64,
    pub y: f64,
    pub d: f64,
}

impl DisparityPoint {
    pub const fn new(x: f64, y: f64, d: f64) -> Self {
        Self { x, y, d }
    }
}

/// The Euclidean to disparity-space projective map.
pub fn gamma(rig: &StereoRig) -> ProjectiveMap4 {
    let f = rig.focal();
    let fb = rig.focal_baseline();
    #[rustfmt::skip]
    let m = Matrix4::new(
        f,   0.0, 0.0, 0.0,
        0.0, f,   0.0, 0.0,
        0.0, 0.0, 0.0, fb,
        0.0, 0.0, 1.0, 0.0,
    );
    ProjectiveMap4(m)
}

/// Closed-form inverse of [`gamma`].
pub fn gamma_inverse(rig: &StereoRig) -> ProjectiveMap4 {
    let f = rig.focal();
    let fb = rig.focal_baseline();
    #[rustfmt::skip]
    let m = Matrix4::new(
        1.0 / f, 0.0,     0.0,      0.0,
        0.0,     1.0 / f, 0.0,      0.0,
        0.0,     0.0,     0.0,      1.0,
        0.0,     0.0,     1.0 / fb, 0.0,
    );
    ProjectiveMap4(m)
}

/// `H = G T G^-1` for a motion `T` taking previous-frame camera coordinates
/// into the current frame.
///
/// The product is expanded symbolically so that no `f * (1/f)` round trips
/// appear; the identity motion maps to the exact identity matrix.
pub fn disparity_homography(rig: &StereoRig, motion: &RigidMotion) -> Result<ProjectiveMap4> {
    let f = rig.focal();
    let b = rig.baseline();
    let fb = f * b;
    if !(fb.is_finite() && fb > 0.0) {
        return Err(Error::Internal(format!("singular disparity-space map (fb = {fb})")));
    }
    let r = motion.rotation();
    let t = motion.translation();
    #[rustfmt::skip]
    let h = Matrix4::new(
        r[(0, 0)],     r[(0, 1)],     t[0] / b,  f * r[(0, 2)],
        r[(1, 0)],     r[(1, 1)],     t[1] / b,  f * r[(1, 2)],
        0.0,           0.0,           1.0,       0.0,
        r[(2, 0)] / f, r[(2, 1)] / f, t[2] / fb, r[(2, 2)],
    );
    Ok(ProjectiveMap4(h))
}

/// Applies `H` and rescales by the fourth homogeneous component.
///
/// The returned disparity may be zero or negative when the point ends up
/// level with or behind the camera; callers reject those.
pub fn warp_point(h: &ProjectiveMap4, p: DisparityPoint) -> Result<DisparityPoint> {
    let w = h.0 * Vector4::new(p.x, p.y, p.d, 1.0);
    if w[3].abs() < INFINITY_EPS {
        return Err(Error::PointAtInfinity { w: w[3] });
    }
    Ok(DisparityPoint::new(w[0] / w[3], w[1] / w[3], w[2] / w[3]))
}

/// Reference path for [`warp_point`]: triangulate, move in Euclidean space,
/// project again. Only used to verify the disparity-space route.
pub fn euclidean_warp_oracle(
    rig: &StereoRig,
    motion: &RigidMotion,
    p: DisparityPoint,
) -> Result<DisparityPoint> {
    let f = rig.focal();
    let fb = rig.focal_baseline();
    let z = fb / p.d;
    let m = Vector3::new(p.x * z / f, p.y * z / f, z);
    let moved = motion.transform_point(&m);
    if moved.z <= 0.0 {
        return Err(Error::BehindCamera { depth: moved.z });
    }
    Ok(DisparityPoint::new(
        f * moved.x / moved.z,
        f * moved.y / moved.z,
        fb / moved.z,
    ))
}

/// Transform from right-camera coordinates into left-camera coordinates:
/// a translation by `+b` along `X`.
pub fn right_to_left(rig: &StereoRig) -> RigidMotion {
    RigidMotion::from_translation(rig.baseline(), 0.0, 0.0)
}

/// The left-camera motion seen from the right camera, `B^-1 T B`.
pub fn right_camera_motion(rig: &StereoRig, motion: &RigidMotion) -> RigidMotion {
    let b = right_to_left(rig);
    b.inverse() * *motion * b
}

/// Disparity-space warp that accepts and returns pixel coordinates.
#[derive(Debug, Clone, Copy)]
pub struct PixelWarp {
    h: ProjectiveMap4,
    cx: f64,
    cy: f64,
}

impl PixelWarp {
    pub fn new(rig: &StereoRig, motion: &RigidMotion) -> Result<Self> {
        let (cx, cy) = rig.principal_point();
        Ok(Self {
            h: disparity_homography(rig, motion)?,
            cx,
            cy,
        })
    }

    pub fn homography(&self) -> &ProjectiveMap4 {
        &self.h
    }

    /// Warps pixel `(x, y)` with disparity `d`; `None` for points at infinity.
    pub fn warp(&self, x: f64, y: f64, d: f64) -> Option<(f64, f64, f64)> {
        let p = DisparityPoint::new(x - self.cx, y - self.cy, d);
        warp_point(&self.h, p)
            .ok()
            .map(|q| (q.x + self.cx, q.y + self.cy, q.d))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rig(f: f64, b: f64) -> StereoRig {
        StereoRig::new(f, b, (0.0, 0.0), (1242, 375), 128).unwrap()
    }

    fn close(a: DisparityPoint, b: DisparityPoint, tol: f64) -> bool {
        let rel = |u: f64, v: f64| (u - v).abs() / v.abs().max(1.0);
        rel(a.x, b.x) <= tol && rel(a.y, b.y) <= tol && rel(a.d, b.d) <= tol
    }

    #[test]
    fn gamma_projects_point() {
        let g = gamma(&rig(2.0, 3.0));
        let w = g.matrix() * Vector4::new(1.0, 1.0, 2.0, 1.0);
        assert_eq!(w, Vector4::new(2.0, 2.0, 6.0, 2.0));
        assert_eq!(w / w[3], Vector4::new(1.0, 1.0, 3.0, 1.0));
    }

    #[test]
    fn gamma_inverse_identity() {
        let r = rig(1.0, 1.0);
        let prod = gamma_inverse(&r).matrix() * gamma(&r).matrix();
        assert!((prod - Matrix4::identity()).abs().max() <= 1e-12);
        let r = rig(721.5377, 0.5372);
        let prod = gamma_inverse(&r).matrix() * gamma(&r).matrix();
        assert!((prod - Matrix4::identity()).abs().max() <= 1e-12);
    }

    #[test]
    fn kitti_like_disparity_at_ten_metres() {
        let r = rig(721.5, 0.54);
        let d = r.disparity_at_depth(10.0);
        assert!((d - 38.961).abs() < 1e-9);
        let p = euclidean_warp_oracle(&r, &RigidMotion::identity(), DisparityPoint::new(0.0, 0.0, d))
            .unwrap();
        assert!((p.d - 38.961).abs() < 1e-9);
    }

    #[test]
    fn identity_motion_is_identity_map() {
        let h = disparity_homography(&rig(721.5, 0.54), &RigidMotion::identity()).unwrap();
        assert_eq!(*h.matrix(), Matrix4::identity());
        let p = DisparityPoint::new(37.2, 11.0, 4.5);
        assert_eq!(warp_point(&h, p).unwrap(), p);
    }

    #[test]
    fn closed_form_matches_matrix_product() {
        let r = rig(650.0, 0.3);
        let t = RigidMotion::from_axis_angle(
            Vector3::new(0.3, -1.0, 0.2),
            0.07,
            Vector3::new(0.4, -0.1, -1.3),
        );
        let product = gamma(&r).matrix() * t.matrix() * gamma_inverse(&r).matrix();
        let closed = disparity_homography(&r, &t).unwrap();
        assert!((product - closed.matrix()).abs().max() < 1e-12 * product.abs().max());
    }

    #[test]
    fn forward_motion_increases_disparity() {
        let r = rig(100.0, 0.5);
        let t = RigidMotion::from_translation(0.0, 0.0, -1.0);
        let h = disparity_homography(&r, &t).unwrap();
        let p = DisparityPoint::new(0.0, 0.0, 10.0);
        let q = warp_point(&h, p).unwrap();
        assert!(close(q, DisparityPoint::new(0.0, 0.0, 12.5), 1e-12));
        let o = euclidean_warp_oracle(&r, &t, p).unwrap();
        assert!(close(o, DisparityPoint::new(0.0, 0.0, 12.5), 1e-12));
    }

    #[test]
    fn baseline_shift_gives_epipolar_identity() {
        let r = rig(100.0, 0.5);
        let t = RigidMotion::from_translation(-0.5, 0.0, 0.0);
        let h = disparity_homography(&r, &t).unwrap();
        for &(x, y, d) in &[(10.0, 4.0, 7.0), (-30.0, 12.5, 22.0), (0.0, 0.0, 1.0)] {
            let q = warp_point(&h, DisparityPoint::new(x, y, d)).unwrap();
            assert!(close(q, DisparityPoint::new(x - d, y, d), 1e-12));
            let o = euclidean_warp_oracle(&r, &t, DisparityPoint::new(x, y, d)).unwrap();
            assert!(close(o, q, 1e-12));
        }
    }

    #[test]
    fn yaw_changes_axial_disparity_by_cosine() {
        // A yaw moves the optical-axis point off-axis; Z shrinks by cos(theta).
        let r = rig(721.5, 0.54);
        let theta = 1f64.to_radians();
        let t = RigidMotion::from_axis_angle(Vector3::y(), theta, Vector3::zeros());
        let p = DisparityPoint::new(0.0, 0.0, 20.0);
        let q = warp_point(&disparity_homography(&r, &t).unwrap(), p).unwrap();
        let o = euclidean_warp_oracle(&r, &t, p).unwrap();
        assert!(close(q, o, 1e-12));
        assert!((q.d - 20.0 / theta.cos()).abs() < 1e-9);
    }

    #[test]
    fn roll_preserves_disparity() {
        let r = rig(721.5, 0.54);
        let t = RigidMotion::from_axis_angle(Vector3::z(), 1f64.to_radians(), Vector3::zeros());
        let h = disparity_homography(&r, &t).unwrap();
        for &(x, y) in &[(0.0, 0.0), (100.0, -40.0), (-500.0, 150.0)] {
            let q = warp_point(&h, DisparityPoint::new(x, y, 20.0)).unwrap();
            assert!((q.d - 20.0).abs() < 1e-12);
        }
    }

    #[test]
    fn point_at_infinity_and_behind_camera() {
        let r = rig(100.0, 0.5);
        // Camera advances exactly onto the point plane: Z' = 0.
        let t = RigidMotion::from_translation(0.0, 0.0, -5.0);
        let p = DisparityPoint::new(0.0, 0.0, 10.0);
        let h = disparity_homography(&r, &t).unwrap();
        assert!(matches!(warp_point(&h, p), Err(Error::PointAtInfinity { .. })));
        assert!(matches!(
            euclidean_warp_oracle(&r, &t, p),
            Err(Error::BehindCamera { .. })
        ));

        let t = RigidMotion::from_translation(0.0, 0.0, -6.0);
        let q = warp_point(&disparity_homography(&r, &t).unwrap(), p).unwrap();
        assert!(q.d < 0.0);
    }

    #[test]
    fn right_motion_conjugation() {
        let r = rig(100.0, 0.5);
        let t = RigidMotion::from_axis_angle(Vector3::y(), 0.05, Vector3::new(0.1, 0.0, -0.8));
        let tr = right_camera_motion(&r, &t);
        // A world point seen by both cameras must move consistently.
        let m_left = Vector3::new(1.0, -0.5, 12.0);
        let m_right = m_left - Vector3::new(0.5, 0.0, 0.0);
        let moved_left = t.transform_point(&m_left);
        let moved_right = tr.transform_point(&m_right);
        assert!((moved_left - Vector3::new(0.5, 0.0, 0.0) - moved_right).norm() < 1e-12);
    }

    fn motion_strategy() -> impl Strategy<Value = RigidMotion> {
        (
            (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64),
            -0.2..0.2f64,
            (-1.0..1.0f64, -0.5..0.5f64, -2.0..2.0f64),
        )
            .prop_map(|((ax, ay, az), angle, (tx, ty, tz))| {
                RigidMotion::from_axis_angle(
                    Vector3::new(ax, ay, az + 1e-3),
                    angle,
                    Vector3::new(tx, ty, tz),
                )
            })
    }

    proptest! {
        #[test]
        fn composition_is_projective_product(t1 in motion_strategy(), t2 in motion_strategy()) {
            let r = rig(500.0, 0.4);
            let joint = disparity_homography(&r, &(t1 * t2)).unwrap();
            let chained = disparity_homography(&r, &t1).unwrap()
                .compose(&disparity_homography(&r, &t2).unwrap());
            let a = joint.matrix() / joint.matrix().norm();
            let b = chained.matrix() / chained.matrix().norm();
            let diff = (a - b).abs().max().min((a + b).abs().max());
            prop_assert!(diff < 1e-12, "diff {}", diff);
        }

        #[test]
        fn identity_fixes_every_point(x in -700.0..700.0f64, y in -200.0..200.0f64, d in 0.01..200.0f64) {
            let h = disparity_homography(&rig(721.5, 0.54), &RigidMotion::identity()).unwrap();
            let p = DisparityPoint::new(x, y, d);
            prop_assert_eq!(warp_point(&h, p).unwrap(), p);
        }

        #[test]
        fn warp_matches_oracle(t in motion_strategy(), x in -600.0..600.0f64, y in -180.0..180.0f64, d in 1.0..120.0f64) {
            let r = rig(721.5, 0.54);
            let p = DisparityPoint::new(x, y, d);
            if let Ok(o) = euclidean_warp_oracle(&r, &t, p) {
                // Skip near-degenerate points that approach the camera plane.
                prop_assume!(o.d < 1e4);
                let q = warp_point(&disparity_homography(&r, &t).unwrap(), p).unwrap();
                prop_assert!(close(q, o, 1e-9), "{:?} vs {:?}", q, o);
            }
        }
    }
}
