//! Eight-path semi-global matching over per-pixel search intervals.
//!
//! The data term is a windowed SAD on intensities. Every pixel carries its
//! own disparity interval; costs outside it are never computed and act as
//! infinite in the path recurrence, with predecessor minima taken over the
//! predecessor's own interval. With full-range intervals everywhere this is
//! ordinary SGM.

mod aggregate;
mod consistency;
mod cost;
mod interval;
mod select;

pub use aggregate::{aggregate_paths, DIRECTIONS};
pub use consistency::{lr_consistency, sad_check};
pub use cost::{border_cost, matching_cost, CostVolume, View};
pub use interval::{interval_for, search_intervals, DisparityInterval, IntervalMap};
pub use select::{matching_variance, select_disparity, variance_map, winner};

use crate::error::{Error, Result};
use crate::types::{DisparityMap, Estimate, GrayImage, ValidityMask};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgmParams {
    /// Odd side length of the SAD window.
    pub window: usize,
    pub p1: u32,
    pub p2: u32,
    /// Cost budget for the matching-variance neighbour count.
    pub s_max: f64,
    /// Floor on the matching variance (px²).
    pub r_min: f64,
    /// Left-right agreement tolerance (px).
    pub lr_tolerance: f64,
    /// Maximum windowed SAD accepted by the photometric check.
    pub sad_threshold: u32,
}

impl Default for SgmParams {
    fn default() -> Self {
        Self {
            window: 3,
            p1: 7,
            p2: 86,
            s_max: 10.0,
            r_min: 0.25,
            lr_tolerance: 1.0,
            sad_threshold: 200,
        }
    }
}

impl SgmParams {
    pub fn validate(&self) -> Result<()> {
        if self.window < 3 || self.window % 2 == 0 {
            return Err(Error::InvalidParameter(format!(
                "window {} must be odd and >= 3",
                self.window
            )));
        }
        if self.p1 == 0 || self.p1 > self.p2 {
            return Err(Error::InvalidParameter(format!(
                "penalties must satisfy 0 < P1 <= P2 (got {}, {})",
                self.p1, self.p2
            )));
        }
        if !(self.s_max > 0.0) {
            return Err(Error::InvalidParameter("S_max must be > 0".into()));
        }
        if !(self.r_min > 0.0) {
            return Err(Error::InvalidParameter("r_min must be > 0".into()));
        }
        if !(self.lr_tolerance >= 0.0) {
            return Err(Error::InvalidParameter("LR tolerance must be >= 0".into()));
        }
        Ok(())
    }
}

/// Result of matching one view: integer winners with their matching
/// variance, plus the search intervals that produced them.
#[derive(Debug, Clone)]
pub struct ViewMatch {
    pub estimate: Estimate,
    pub intervals: IntervalMap,
}

/// Cost, aggregation, winner selection and matching variance for one view.
/// Zero-disparity winners are dropped since they have no finite depth.
pub fn match_view(
    left: &GrayImage,
    right: &GrayImage,
    intervals: IntervalMap,
    params: &SgmParams,
    view: View,
) -> Result<ViewMatch> {
    params.validate()?;
    let raw = matching_cost(left, right, &intervals, params.window, view)?;
    let aggregated = aggregate_paths(&raw, params.p1, params.p2);
    let mut disparity = select_disparity(&aggregated)?;
    let variance = variance_map(&aggregated, &disparity, params.s_max, params.r_min);
    let zero: Vec<usize> = disparity
        .iter_valid()
        .filter(|&(_, _, d)| d == 0.0)
        .map(|(x, y, _)| y * disparity.width() + x)
        .collect();
    for i in zero {
        disparity.invalidate_index(i);
    }
    Ok(ViewMatch {
        estimate: Estimate::new(disparity, variance)?,
        intervals,
    })
}

/// Both views matched with their own intervals, together with the
/// consistency masks.
#[derive(Debug, Clone)]
pub struct StereoMatch {
    pub left: ViewMatch,
    pub right: ViewMatch,
    pub left_mask: ValidityMask,
    pub right_mask: ValidityMask,
}

impl StereoMatch {
    /// Left disparities with the consistency masks applied.
    pub fn filtered_left(&self) -> DisparityMap {
        let mut d = self.left.estimate.disparity.clone();
        d.retain(&self.left_mask);
        d
    }
}

/// Matches both views and runs the left-right and SAD checks.
pub fn match_stereo(
    left: &GrayImage,
    right: &GrayImage,
    left_intervals: IntervalMap,
    right_intervals: IntervalMap,
    params: &SgmParams,
) -> Result<StereoMatch> {
    let (l, r) = rayon::join(
        || match_view(left, right, left_intervals, params, View::Left),
        || match_view(left, right, right_intervals, params, View::Right),
    );
    let (l, r) = (l?, r?);
    let (lr_l, lr_r) = lr_consistency(&l.estimate.disparity, &r.estimate.disparity, params.lr_tolerance);
    let sad_l = sad_check(left, right, &l.estimate.disparity, params.window, params.sad_threshold, View::Left);
    let sad_r = sad_check(left, right, &r.estimate.disparity, params.window, params.sad_threshold, View::Right);
    Ok(StereoMatch {
        left_mask: lr_l.and(&sad_l),
        right_mask: lr_r.and(&sad_r),
        left: l,
        right: r,
    })
}
