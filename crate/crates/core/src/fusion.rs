//! Per-pixel Kalman update of the predicted disparity with the matched one.
//!
//! A prediction never survives on its own: a pixel is valid after fusion
//! only when the current frame produced a measurement there that passed the
//! consistency checks. Pixels without one are dropped, so the next frame
//! searches them over the full range again.

use crate::error::{Error, Result};
use crate::types::{Estimate, FilterState, ValidityMask};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionParams {
    /// Variance given to a measurement with no prediction behind it (px²).
    pub initial_variance: f64,
}

impl Default for FusionParams {
    fn default() -> Self {
        Self {
            initial_variance: 1.0,
        }
    }
}

impl FusionParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.initial_variance.is_finite() && self.initial_variance > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "initial variance {} must be > 0",
                self.initial_variance
            )));
        }
        Ok(())
    }
}

/// `K = p / (p + r)`.
#[inline]
pub fn kalman_gain(p_pred: f64, r: f64) -> f64 {
    debug_assert!(p_pred >= 0.0 && r > 0.0);
    p_pred / (p_pred + r)
}

/// Scalar update: `d = d_pred + K (d_meas - d_pred)`, `p = (1 - K) p_pred`.
#[inline]
pub fn fuse_pixel(d_pred: f64, p_pred: f64, d_meas: f64, r: f64) -> (f64, f64) {
    let k = kalman_gain(p_pred, r);
    let d = d_pred + k * (d_meas - d_pred);
    // Clamp away rounding that could step past either input.
    let d = d.clamp(d_pred.min(d_meas), d_pred.max(d_meas));
    (d, ((1.0 - k) * p_pred).min(r))
}

/// Measurements of both views with their consistency masks.
#[derive(Debug, Clone, Copy)]
pub struct Measurement<'a> {
    pub left: &'a Estimate,
    pub right: &'a Estimate,
    pub left_mask: &'a ValidityMask,
    pub right_mask: &'a ValidityMask,
}

fn fuse_side(
    predicted: &Estimate,
    measured: &Estimate,
    mask: &ValidityMask,
    params: &FusionParams,
) -> Result<Estimate> {
    let dims = predicted.dims();
    for found in [measured.dims(), mask.dims()] {
        if found != dims {
            return Err(Error::DimensionMismatch {
                expected: dims,
                found,
            });
        }
    }
    let (w, h) = dims;
    let mut out = Estimate::invalid(w, h)?;
    for (x, y, d_meas) in measured.disparity.iter_valid() {
        let i = y * w + x;
        if !mask.get_index(i) {
            continue;
        }
        let r = measured.variance.get_index(i);
        let (d, p) = match predicted.disparity.get_index(i) {
            Some(d_pred) => fuse_pixel(d_pred, predicted.variance.get_index(i), d_meas, r),
            None => (d_meas, params.initial_variance),
        };
        out.disparity.set_index(i, d);
        out.variance.set_index(i, p);
    }
    Ok(out)
}

/// Fuses the predicted state with the current measurements.
///
/// Per pixel: prediction and accepted measurement are fused; an accepted
/// measurement without a prediction starts at `initial_variance`; anything
/// else is invalid.
pub fn fuse_maps(
    predicted: &FilterState,
    measurement: Measurement<'_>,
    params: &FusionParams,
) -> Result<FilterState> {
    params.validate()?;
    Ok(FilterState {
        left: fuse_side(&predicted.left, measurement.left, measurement.left_mask, params)?,
        right: fuse_side(&predicted.right, measurement.right, measurement.right_mask, params)?,
        frame: predicted.frame,
    })
}
