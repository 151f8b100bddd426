//! Domain types shared by every pipeline stage.
//!
//! Coordinates follow the image convention: `x` grows rightward, `y` grows
//! downward and the origin sits on the centre of the top-left pixel. A left
//! view disparity is `d = x_left - x_right`.

use nalgebra::{Matrix3, Matrix4, Rotation3, Unit, Vector3};

use crate::error::{Error, Result};

const MIN_SIDE: usize = 2;
const ROTATION_TOLERANCE: f64 = 1e-9;

fn check_dims(width: usize, height: usize) -> Result<()> {
    if width < MIN_SIDE || height < MIN_SIDE {
        return Err(Error::DimensionTooSmall { width, height });
    }
    Ok(())
}

/// 8-bit single channel image stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        check_dims(width, height)?;
        if data.len() != width * height {
            return Err(Error::InvalidParameter(format!(
                "image buffer holds {} samples, expected {}",
                data.len(),
                width * height
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> u8,
    ) -> Result<Self> {
        check_dims(width, height)?;
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    /// Sample with edge replication for out-of-range coordinates.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> u8 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.data[y * self.width + x]
    }
}

/// Calibrated, rectified stereo pair geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StereoRig {
    focal: f64,
    baseline: f64,
    cx: f64,
    cy: f64,
    width: usize,
    height: usize,
    max_disparity: u32,
}

impl StereoRig {
    /// `focal` in pixels, `baseline` in metres, principal point in pixels.
    pub fn new(
        focal: f64,
        baseline: f64,
        principal_point: (f64, f64),
        dims: (usize, usize),
        max_disparity: u32,
    ) -> Result<Self> {
        let (cx, cy) = principal_point;
        let (width, height) = dims;
        if !(focal.is_finite() && focal > 0.0) {
            return Err(Error::InvalidRig(format!("focal length {focal} must be > 0")));
        }
        if !(baseline.is_finite() && baseline > 0.0) {
            return Err(Error::InvalidRig(format!("baseline {baseline} must be > 0")));
        }
        if !(cx.is_finite() && cy.is_finite()) {
            return Err(Error::InvalidRig("principal point must be finite".into()));
        }
        check_dims(width, height)?;
        if max_disparity < 1 || max_disparity as usize >= width {
            return Err(Error::InvalidRig(format!(
                "max disparity {max_disparity} must lie in [1, {width})"
            )));
        }
        Ok(Self {
            focal,
            baseline,
            cx,
            cy,
            width,
            height,
            max_disparity,
        })
    }

    #[inline]
    pub fn focal(&self) -> f64 {
        self.focal
    }

    #[inline]
    pub fn baseline(&self) -> f64 {
        self.baseline
    }

    #[inline]
    pub fn principal_point(&self) -> (f64, f64) {
        (self.cx, self.cy)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn max_disparity(&self) -> u32 {
        self.max_disparity
    }

    /// `f * b`, the numerator of `d = f b / Z`.
    #[inline]
    pub fn focal_baseline(&self) -> f64 {
        self.focal * self.baseline
    }

    pub fn disparity_at_depth(&self, depth: f64) -> f64 {
        self.focal_baseline() / depth
    }

    pub fn depth_at_disparity(&self, disparity: f64) -> f64 {
        self.focal_baseline() / disparity
    }

    pub fn with_max_disparity(mut self, max_disparity: u32) -> Result<Self> {
        if max_disparity < 1 || max_disparity as usize >= self.width {
            return Err(Error::InvalidRig(format!(
                "max disparity {max_disparity} must lie in [1, {})",
                self.width
            )));
        }
        self.max_disparity = max_disparity;
        Ok(self)
    }
}

/// Per-pixel real disparities with explicit validity flags.
///
/// The container accepts any finite, non-negative value at a valid pixel;
/// the stricter `(0, d_max]` state invariant is checked with
/// [`DisparityMap::check_range`] after every pipeline stage.
#[derive(Debug, Clone, PartialEq)]
pub struct DisparityMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
    valid: Vec<bool>,
}

impl DisparityMap {
    pub fn invalid(width: usize, height: usize) -> Result<Self> {
        check_dims(width, height)?;
        Ok(Self {
            width,
            height,
            values: vec![0.0; width * height],
            valid: vec![false; width * height],
        })
    }

    /// Builds a map from a closure returning `Some(d)` for valid pixels.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> Option<f64>,
    ) -> Result<Self> {
        let mut map = Self::invalid(width, height)?;
        for y in 0..height {
            for x in 0..width {
                if let Some(d) = f(x, y) {
                    map.set(x, y, d);
                }
            }
        }
        Ok(map)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Option<f64> {
        self.get_index(y * self.width + x)
    }

    #[inline]
    pub fn get_index(&self, i: usize) -> Option<f64> {
        if self.valid[i] {
            Some(self.values[i])
        } else {
            None
        }
    }

    #[inline]
    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        self.valid[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, d: f64) {
        let i = y * self.width + x;
        self.set_index(i, d);
    }

    #[inline]
    pub fn set_index(&mut self, i: usize, d: f64) {
        debug_assert!(d.is_finite() && d >= 0.0, "disparity {d} is not a valid value");
        self.values[i] = d;
        self.valid[i] = true;
    }

    #[inline]
    pub fn invalidate(&mut self, x: usize, y: usize) {
        self.invalidate_index(y * self.width + x);
    }

    #[inline]
    pub fn invalidate_index(&mut self, i: usize) {
        self.valid[i] = false;
        self.values[i] = 0.0;
    }

    /// Raw value buffer; entries at invalid pixels carry no meaning.
    pub fn raw_values(&self) -> &[f64] {
        &self.values
    }

    pub fn validity(&self) -> &[bool] {
        &self.valid
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    /// Iterates `(x, y, d)` over valid pixels in row-major order.
    pub fn iter_valid(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let w = self.width;
        self.valid
            .iter()
            .zip(&self.values)
            .enumerate()
            .filter(|(_, (&v, _))| v)
            .map(move |(i, (_, &d))| (i % w, i / w, d))
    }

    /// Checks that every valid disparity lies in `(0, max_disparity]`.
    pub fn check_range(&self, max_disparity: u32) -> Result<()> {
        let d_max = f64::from(max_disparity);
        match self.iter_valid().find(|&(_, _, d)| !(d > 0.0 && d <= d_max)) {
            Some((x, y, d)) => Err(Error::Internal(format!(
                "disparity {d} at ({x}, {y}) outside (0, {d_max}]"
            ))),
            None => Ok(()),
        }
    }

    /// Keeps only pixels whose mask entry is set.
    pub fn retain(&mut self, mask: &ValidityMask) {
        assert_eq!(self.dims(), mask.dims(), "mask dimensions differ from map");
        for (i, keep) in mask.keep.iter().enumerate() {
            if !keep {
                self.invalidate_index(i);
            }
        }
    }
}

/// Empty-state constructor: a map with every pixel invalid.
pub fn make_invalid_map(width: usize, height: usize) -> Result<DisparityMap> {
    DisparityMap::invalid(width, height)
}

/// Per-pixel disparity variance in px². Validity is taken from the paired
/// [`DisparityMap`].
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl VarianceMap {
    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        Self::filled(width, height, 0.0)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        check_dims(width, height)?;
        Ok(Self {
            width,
            height,
            values: vec![value; width * height],
        })
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    #[inline]
    pub fn get_index(&self, i: usize) -> f64 {
        self.values[i]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, p: f64) {
        self.values[y * self.width + x] = p;
    }

    #[inline]
    pub fn set_index(&mut self, i: usize, p: f64) {
        self.values[i] = p;
    }

    pub fn raw_values(&self) -> &[f64] {
        &self.values
    }
}

/// A disparity map with its paired variance map.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub disparity: DisparityMap,
    pub variance: VarianceMap,
}

impl Estimate {
    pub fn invalid(width: usize, height: usize) -> Result<Self> {
        Ok(Self {
            disparity: DisparityMap::invalid(width, height)?,
            variance: VarianceMap::zeros(width, height)?,
        })
    }

    pub fn new(disparity: DisparityMap, variance: VarianceMap) -> Result<Self> {
        if disparity.dims() != variance.dims() {
            return Err(Error::DimensionMismatch {
                expected: disparity.dims(),
                found: variance.dims(),
            });
        }
        Ok(Self {
            disparity,
            variance,
        })
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        self.disparity.dims()
    }

    /// Disparity range check plus finite, non-negative variance on the valid set.
    pub fn check(&self, max_disparity: u32) -> Result<()> {
        if self.disparity.dims() != self.variance.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.disparity.dims(),
                found: self.variance.dims(),
            });
        }
        self.disparity.check_range(max_disparity)?;
        let w = self.disparity.width();
        for (x, y, _) in self.disparity.iter_valid() {
            let p = self.variance.get_index(y * w + x);
            if !(p.is_finite() && p >= 0.0) {
                return Err(Error::Internal(format!("variance {p} at ({x}, {y})")));
            }
        }
        Ok(())
    }
}

/// Left and right estimates carried from frame to frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    pub left: Estimate,
    pub right: Estimate,
    pub frame: usize,
}

impl FilterState {
    /// State with nothing known yet, sized to the rig.
    pub fn empty(rig: &StereoRig) -> Result<Self> {
        let (w, h) = rig.dims();
        Ok(Self {
            left: Estimate::invalid(w, h)?,
            right: Estimate::invalid(w, h)?,
            frame: 0,
        })
    }

    pub fn check(&self, rig: &StereoRig) -> Result<()> {
        for side in [&self.left, &self.right] {
            if side.dims() != rig.dims() {
                return Err(Error::DimensionMismatch {
                    expected: rig.dims(),
                    found: side.dims(),
                });
            }
            side.check(rig.max_disparity())?;
        }
        Ok(())
    }
}

/// Per-pixel keep/reject flags produced by the filtering stages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidityMask {
    width: usize,
    height: usize,
    keep: Vec<bool>,
}

impl ValidityMask {
    pub fn filled(width: usize, height: usize, keep: bool) -> Self {
        Self {
            width,
            height,
            keep: vec![keep; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, keep: Vec<bool>) -> Self {
        assert_eq!(keep.len(), width * height);
        Self {
            width,
            height,
            keep,
        }
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.keep[y * self.width + x]
    }

    #[inline]
    pub fn get_index(&self, i: usize) -> bool {
        self.keep[i]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, keep: bool) {
        self.keep[y * self.width + x] = keep;
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.keep
    }

    pub fn kept(&self) -> usize {
        self.keep.iter().filter(|&&k| k).count()
    }

    /// Pixel-wise conjunction.
    pub fn and(&self, other: &ValidityMask) -> ValidityMask {
        assert_eq!(self.dims(), other.dims());
        ValidityMask {
            width: self.width,
            height: self.height,
            keep: self.keep.iter().zip(&other.keep).map(|(a, b)| *a && *b).collect(),
        }
    }
}

/// Homogeneous Euclidean transform with an orthonormal, right-handed rotation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidMotion(Matrix4<f64>);

impl RigidMotion {
    pub fn identity() -> Self {
        Self(Matrix4::identity())
    }

    /// Validates the last row and the rotation block within 1e-9.
    pub fn new(matrix: Matrix4<f64>) -> Result<Self> {
        Self::check_matrix(&matrix, ROTATION_TOLERANCE)?;
        Ok(Self(matrix))
    }

    pub fn from_parts(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&translation);
        Self::new(m)
    }

    pub fn from_translation(x: f64, y: f64, z: f64) -> Self {
        let mut m = Matrix4::identity();
        m[(0, 3)] = x;
        m[(1, 3)] = y;
        m[(2, 3)] = z;
        Self(m)
    }

    /// Rotation of `angle` radians about `axis` followed by `translation`.
    pub fn from_axis_angle(axis: Vector3<f64>, angle: f64, translation: Vector3<f64>) -> Self {
        let rotation = if axis.norm() == 0.0 || angle == 0.0 {
            Matrix3::identity()
        } else {
            Rotation3::from_axis_angle(&Unit::new_normalize(axis), angle).into_inner()
        };
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&translation);
        Self(m)
    }

    /// Accepts a rotation block within `tolerance` of orthonormal and
    /// projects it onto the nearest rotation.
    pub fn orthonormalized(matrix: Matrix4<f64>, tolerance: f64) -> Result<Self> {
        Self::check_matrix(&matrix, tolerance)?;
        let r: Matrix3<f64> = matrix.fixed_view::<3, 3>(0, 0).into_owned();
        let svd = r.svd(true, true);
        let (u, v_t) = match (svd.u, svd.v_t) {
            (Some(u), Some(v_t)) => (u, v_t),
            _ => return Err(Error::InvalidMotion("rotation SVD failed".into())),
        };
        let mut projected = u * v_t;
        if projected.determinant() < 0.0 {
            let mut u = u;
            u.column_mut(2).neg_mut();
            projected = u * v_t;
        }
        let mut m = matrix;
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&projected);
        Ok(Self(m))
    }

    fn check_matrix(m: &Matrix4<f64>, tolerance: f64) -> Result<()> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMotion("non-finite entry".into()));
        }
        if m[(3, 0)] != 0.0 || m[(3, 1)] != 0.0 || m[(3, 2)] != 0.0 || m[(3, 3)] != 1.0 {
            return Err(Error::InvalidMotion("last row must be (0, 0, 0, 1)".into()));
        }
        let r: Matrix3<f64> = m.fixed_view::<3, 3>(0, 0).into_owned();
        let ortho = (r.transpose() * r - Matrix3::identity()).abs().max();
        if ortho > tolerance {
            return Err(Error::InvalidMotion(format!(
                "rotation is not orthonormal (max |R^T R - I| = {ortho:e})"
            )));
        }
        let det = r.determinant();
        if (det - 1.0).abs() > tolerance {
            return Err(Error::InvalidMotion(format!("rotation determinant {det}")));
        }
        Ok(())
    }

    #[inline]
    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.0
    }

    pub fn rotation(&self) -> Matrix3<f64> {
        self.0.fixed_view::<3, 3>(0, 0).into_owned()
    }

    pub fn translation(&self) -> Vector3<f64> {
        self.0.fixed_view::<3, 1>(0, 3).into_owned()
    }

    /// Closed-form inverse `(R^T, -R^T t)`.
    pub fn inverse(&self) -> Self {
        let rt = self.rotation().transpose();
        let t = -(rt * self.translation());
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&rt);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&t);
        Self(m)
    }

    /// `self * other`: apply `other` first.
    pub fn compose(&self, other: &RigidMotion) -> Self {
        let mut m = self.0 * other.0;
        m[(3, 0)] = 0.0;
        m[(3, 1)] = 0.0;
        m[(3, 2)] = 0.0;
        m[(3, 3)] = 1.0;
        Self(m)
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation() * p + self.translation()
    }
}

impl std::ops::Mul for RigidMotion {
    type Output = RigidMotion;

    fn mul(self, rhs: RigidMotion) -> RigidMotion {
        self.compose(&rhs)
    }
}
