//! Forward prediction of the previous frame's disparity state.
//!
//! Each valid source pixel is warped through the disparity-space homography
//! and splatted to the nearest target pixel. Collisions keep the largest
//! disparity (the surface closest to the camera). Pixels sitting on depth
//! discontinuities are dropped before warping, and the one-pixel gaps that
//! forward motion opens up can be closed with [`fill_zoom_holes`].

use crate::error::{Error, Result};
use crate::geometry::{right_camera_motion, PixelWarp};
use crate::types::{
    DisparityMap, Estimate, FilterState, RigidMotion, StereoRig, ValidityMask, VarianceMap,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionParams {
    /// Motion noise added to every predicted variance (px²).
    pub motion_noise: f64,
    /// Neighbour similarity threshold for hole filling (px).
    pub fill_threshold: f64,
    /// Disparity range above which a source pixel counts as an edge (px).
    pub edge_threshold: f64,
    /// Half-width of the edge test neighbourhood.
    pub edge_window: usize,
    pub reject_edges: bool,
    pub fill_holes: bool,
}

impl Default for PredictionParams {
    fn default() -> Self {
        Self {
            motion_noise: 0.5,
            fill_threshold: 3.0,
            edge_threshold: 3.0,
            edge_window: 1,
            reject_edges: true,
            fill_holes: true,
        }
    }
}

impl PredictionParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.motion_noise.is_finite() && self.motion_noise >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "motion noise q = {} must be >= 0",
                self.motion_noise
            )));
        }
        if !(self.fill_threshold > 0.0) {
            return Err(Error::InvalidParameter("fill threshold must be > 0".into()));
        }
        if !(self.edge_threshold > 0.0) {
            return Err(Error::InvalidParameter("edge threshold must be > 0".into()));
        }
        if self.edge_window < 1 {
            return Err(Error::InvalidParameter("edge window must be >= 1".into()));
        }
        Ok(())
    }
}

/// Keep-mask over source pixels: a pixel is rejected when the valid
/// disparities in its `(2w+1)²` neighbourhood span more than `threshold`.
pub fn reject_edges(map: &DisparityMap, threshold: f64, window: usize) -> ValidityMask {
    let (w, h) = map.dims();
    // Separable min/max: horizontal pass then vertical pass.
    let mut row_min = vec![f64::INFINITY; w * h];
    let mut row_max = vec![f64::NEG_INFINITY; w * h];
    for y in 0..h {
        for x in 0..w {
            let (lo, hi) = (x.saturating_sub(window), (x + window).min(w - 1));
            let (mut mn, mut mx) = (f64::INFINITY, f64::NEG_INFINITY);
            for xx in lo..=hi {
                if let Some(d) = map.get(xx, y) {
                    mn = mn.min(d);
                    mx = mx.max(d);
                }
            }
            row_min[y * w + x] = mn;
            row_max[y * w + x] = mx;
        }
    }
    let mut keep = vec![true; w * h];
    for y in 0..h {
        let (lo, hi) = (y.saturating_sub(window), (y + window).min(h - 1));
        for x in 0..w {
            let (mut mn, mut mx) = (f64::INFINITY, f64::NEG_INFINITY);
            for yy in lo..=hi {
                mn = mn.min(row_min[yy * w + x]);
                mx = mx.max(row_max[yy * w + x]);
            }
            if mx - mn > threshold {
                keep[y * w + x] = false;
            }
        }
    }
    ValidityMask::from_vec(w, h, keep)
}

/// Variance after warping: `(d_pred / d_prev)² p_prev + q`.
///
/// Panics if `d_prev <= 0`.
pub fn propagate_variance(d_prev: f64, d_pred: f64, p_prev: f64, q: f64) -> f64 {
    assert!(d_prev > 0.0, "source disparity must be positive, got {d_prev}");
    let phi = d_pred / d_prev;
    phi * phi * p_prev + q
}

fn predict_side(
    source: &Estimate,
    warp: &PixelWarp,
    rig: &StereoRig,
    params: &PredictionParams,
) -> Result<Estimate> {
    let (w, h) = rig.dims();
    if source.dims() != (w, h) {
        return Err(Error::DimensionMismatch {
            expected: (w, h),
            found: source.dims(),
        });
    }
    let d_max = f64::from(rig.max_disparity());
    let edges = params
        .reject_edges
        .then(|| reject_edges(&source.disparity, params.edge_threshold, params.edge_window));

    let mut out = Estimate::invalid(w, h)?;
    for (x, y, d) in source.disparity.iter_valid() {
        let i = y * w + x;
        if edges.as_ref().is_some_and(|m| !m.get_index(i)) {
            continue;
        }
        let Some((tx, ty, td)) = warp.warp(x as f64, y as f64, d) else {
            continue;
        };
        if !(td > 0.0 && td <= d_max) {
            continue;
        }
        let (tx, ty) = (tx.round(), ty.round());
        if !(tx >= 0.0 && ty >= 0.0 && tx < w as f64 && ty < h as f64) {
            continue;
        }
        let t = ty as usize * w + tx as usize;
        // Strictly greater: on exact ties the earliest row-major source wins.
        if out.disparity.get_index(t).is_some_and(|cur| cur >= td) {
            continue;
        }
        out.disparity.set_index(t, td);
        out.variance.set_index(
            t,
            propagate_variance(d, td, source.variance.get_index(i), params.motion_noise),
        );
    }
    Ok(out)
}

/// Warps both views of `state` by `motion` (previous-frame camera into
/// current-frame camera). The right view uses the baseline-conjugated motion.
pub fn predict_maps(
    state: &FilterState,
    motion: &RigidMotion,
    rig: &StereoRig,
    params: &PredictionParams,
) -> Result<FilterState> {
    params.validate()?;
    let left_warp = PixelWarp::new(rig, motion)?;
    let right_warp = PixelWarp::new(rig, &right_camera_motion(rig, motion))?;
    let (left, right) = rayon::join(
        || predict_side(&state.left, &left_warp, rig, params),
        || predict_side(&state.right, &right_warp, rig, params),
    );
    Ok(FilterState {
        left: left?,
        right: right?,
        frame: state.frame + 1,
    })
}

fn fill_pass(
    disparity: &DisparityMap,
    variance: &VarianceMap,
    threshold: f64,
    q: f64,
    horizontal: bool,
) -> (DisparityMap, VarianceMap) {
    let (w, h) = disparity.dims();
    let mut d_out = disparity.clone();
    let mut p_out = variance.clone();
    let (nx, ny) = if horizontal { (1, 0) } else { (0, 1) };
    for y in ny..h - ny {
        for x in nx..w - nx {
            if disparity.is_valid(x, y) {
                continue;
            }
            let (ax, ay, bx, by) = (x - nx, y - ny, x + nx, y + ny);
            let (Some(a), Some(b)) = (disparity.get(ax, ay), disparity.get(bx, by)) else {
                continue;
            };
            if (a - b).abs() < threshold {
                d_out.set(x, y, 0.5 * (a + b));
                p_out.set(x, y, variance.get(ax, ay).max(variance.get(bx, by)) + q);
            }
        }
    }
    (d_out, p_out)
}

/// Fills single-pixel gaps whose two neighbours agree within `threshold`:
/// one horizontal pass, then one vertical pass over the updated map.
/// A filled pixel takes the neighbour mean and the larger neighbour
/// variance plus `q`.
pub fn fill_zoom_holes(estimate: &Estimate, threshold: f64, q: f64) -> Estimate {
    let (d, p) = fill_pass(&estimate.disparity, &estimate.variance, threshold, q, true);
    let (d, p) = fill_pass(&d, &p, threshold, q, false);
    Estimate {
        disparity: d,
        variance: p,
    }
}

/// [`predict_maps`] followed by hole filling when enabled.
pub fn predict_and_refine(
    state: &FilterState,
    motion: &RigidMotion,
    rig: &StereoRig,
    params: &PredictionParams,
) -> Result<FilterState> {
    let mut predicted = predict_maps(state, motion, rig, params)?;
    if params.fill_holes {
        predicted.left = fill_zoom_holes(&predicted.left, params.fill_threshold, params.motion_noise);
        predicted.right =
            fill_zoom_holes(&predicted.right, params.fill_threshold, params.motion_noise);
    }
    Ok(predicted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;
    use proptest::prelude::*;

    fn map_from_rows(rows: &[&[Option<f64>]]) -> DisparityMap {
        DisparityMap::from_fn(rows[0].len(), rows.len(), |x, y| rows[y][x]).unwrap()
    }

    fn estimate(d: DisparityMap, p: f64) -> Estimate {
        let (w, h) = d.dims();
        Estimate::new(d, VarianceMap::filled(w, h, p).unwrap()).unwrap()
    }

    #[test]
    fn constant_map_has_no_edges() {
        let m = DisparityMap::from_fn(6, 5, |_, _| Some(12.0)).unwrap();
        assert_eq!(reject_edges(&m, 3.0, 1).kept(), 30);
    }

    #[test]
    fn step_rejects_two_columns() {
        // d = 10 left of column 4, 30 from column 4 on.
        let c = 4;
        let m = DisparityMap::from_fn(9, 5, |x, _| Some(if x < c { 10.0 } else { 30.0 })).unwrap();
        let mask = reject_edges(&m, 3.0, 1);
        for y in 0..5 {
            for x in 0..9 {
                assert_eq!(mask.get(x, y), !(x == c - 1 || x == c), "({x}, {y})");
            }
        }
    }

    #[test]
    fn isolated_pixel_is_kept() {
        let m = DisparityMap::from_fn(5, 5, |x, y| (x == 2 && y == 2).then_some(40.0)).unwrap();
        assert!(reject_edges(&m, 3.0, 1).get(2, 2));
    }

    #[test]
    fn variance_propagation_values() {
        assert!((propagate_variance(10.0, 12.5, 1.0, 0.01) - 1.5725).abs() < 1e-12);
        assert_eq!(propagate_variance(7.0, 7.0, 2.5, 0.0), 2.5);
        assert!((propagate_variance(40.0, 20.0, 4.0, 0.25) - 1.25).abs() < 1e-12);
    }

    #[test]
    #[should_panic]
    fn variance_propagation_rejects_zero_source() {
        propagate_variance(0.0, 1.0, 1.0, 0.0);
    }

    fn small_rig() -> StereoRig {
        StereoRig::new(100.0, 0.5, (15.5, 9.5), (32, 20), 30).unwrap()
    }

    #[test]
    fn identity_prediction_is_fixed_point() {
        let rig = small_rig();
        let d = DisparityMap::from_fn(32, 20, |x, y| ((x * y) % 7 != 0).then_some(1.0 + ((x * 3 + y) % 25) as f64 * 0.9)).unwrap();
        let mut p = VarianceMap::zeros(32, 20).unwrap();
        for (x, y, _) in d.iter_valid() {
            p.set(x, y, 0.1 + (x + y) as f64 * 0.03);
        }
        let state = FilterState {
            left: Estimate::new(d.clone(), p.clone()).unwrap(),
            right: Estimate::new(d, p).unwrap(),
            frame: 3,
        };
        let params = PredictionParams {
            motion_noise: 0.0,
            reject_edges: false,
            fill_holes: false,
            ..Default::default()
        };
        let out = predict_and_refine(&state, &RigidMotion::identity(), &rig, &params).unwrap();
        assert_eq!(out.left, state.left);
        assert_eq!(out.right, state.right);
        assert_eq!(out.frame, 4);
    }

    #[test]
    fn collision_keeps_nearest() {
        // Lateral translation: x' = x + (t_x / b) d. With t_x / b = 0.5,
        // (5, d=10) -> 10 and (3, d=14) -> 10.
        let rig = small_rig();
        let mut d = DisparityMap::invalid(32, 20).unwrap();
        d.set(5, 4, 10.0);
        d.set(3, 4, 14.0);
        let state = FilterState {
            left: estimate(d.clone(), 1.0),
            right: estimate(DisparityMap::invalid(32, 20).unwrap(), 1.0),
            frame: 0,
        };
        let params = PredictionParams {
            reject_edges: false,
            fill_holes: false,
            ..Default::default()
        };
        let motion = RigidMotion::from_translation(0.25, 0.0, 0.0);
        let out = predict_maps(&state, &motion, &rig, &params).unwrap();
        assert_eq!(out.left.disparity.valid_count(), 1);
        assert_eq!(out.left.disparity.get(10, 4), Some(14.0));
    }

    #[test]
    fn out_of_range_targets_are_dropped() {
        let rig = small_rig();
        let d = DisparityMap::from_fn(32, 20, |_, _| Some(25.0)).unwrap();
        let state = FilterState {
            left: estimate(d.clone(), 1.0),
            right: estimate(d, 1.0),
            frame: 0,
        };
        // Z = 2 m; advance 0.8 m -> d = 41.7 > d_max = 30.
        let motion = RigidMotion::from_translation(0.0, 0.0, -0.8);
        let out = predict_maps(&state, &motion, &rig, &PredictionParams::default()).unwrap();
        assert_eq!(out.left.disparity.valid_count(), 0);
        assert_eq!(out.right.disparity.valid_count(), 0);
    }

    #[test]
    fn fill_mean_and_variance() {
        let d = map_from_rows(&[
            &[Some(10.0), None, Some(12.0)],
            &[Some(10.0), None, Some(20.0)],
        ]);
        let mut p = VarianceMap::filled(3, 2, 0.5).unwrap();
        p.set(2, 0, 0.8);
        let filled = fill_zoom_holes(&Estimate::new(d, p).unwrap(), 3.0, 0.5);
        assert_eq!(filled.disparity.get(1, 0), Some(11.0));
        assert!((filled.variance.get(1, 0) - 1.3).abs() < 1e-12);
        assert_eq!(filled.disparity.get(1, 1), None);
    }

    #[test]
    fn fill_two_pass_trace() {
        let v = Some(10.0);
        let d = map_from_rows(&[
            &[v, v, v, v, v],
            &[v, None, None, v, v],
            &[v, v, v, None, v],
            &[v, None, v, v, v],
            &[v, v, v, v, v],
        ]);
        let est = estimate(d, 1.0);
        let (h, _) = fill_pass(&est.disparity, &est.variance, 3.0, 0.0, true);
        // Horizontal: (1,1),(2,1) form a width-2 gap, untouched; (3,2) and (1,3) fill.
        assert!(!h.is_valid(1, 1) && !h.is_valid(2, 1));
        assert!(h.is_valid(3, 2) && h.is_valid(1, 3));
        // Vertical pass closes the width-2 gap: each cell is a vertical width-1 hole.
        let full = fill_zoom_holes(&est, 3.0, 0.0);
        assert_eq!(full.disparity.valid_count(), 25);
    }

    proptest! {
        #[test]
        fn fuzzed_collisions_keep_maximum(ds in proptest::collection::vec(1.0..20.0f64, 2..8)) {
            // Stack sources on one row so that a lateral motion sends them all
            // to the same target column.
            let rig = StereoRig::new(100.0, 0.5, (40.0, 5.5), (80, 12), 60).unwrap();
            let motion = RigidMotion::from_translation(0.5, 0.0, 0.0);
            // x' = x + d; choose x = 60 - round(d) so targets coincide after rounding.
            let mut d = DisparityMap::invalid(80, 12).unwrap();
            let mut expected = f64::MIN;
            for (k, &v) in ds.iter().enumerate() {
                let v = v.round() + 0.25 * (k % 2) as f64;
                let x = 60 - v.round() as usize;
                if d.is_valid(x, 5) { continue; }
                d.set(x, 5, v);
                expected = expected.max(v);
            }
            let state = FilterState {
                left: estimate(d, 1.0),
                right: estimate(DisparityMap::invalid(80, 12).unwrap(), 1.0),
                frame: 0,
            };
            let params = PredictionParams { reject_edges: false, fill_holes: false, ..Default::default() };
            let out = predict_maps(&state, &motion, &rig, &params).unwrap();
            let target: Vec<_> = out.left.disparity.iter_valid().filter(|&(x, _, _)| x == 60).collect();
            prop_assert_eq!(target.len(), 1);
            prop_assert_eq!(target[0].2, expected);
        }

        #[test]
        fn prediction_respects_bounds_and_variance_floor(
            tz in -1.0..1.0f64, tx in -0.3..0.3f64, yaw in -0.05..0.05f64, seed in 0u64..1000
        ) {
            let rig = small_rig();
            let d = DisparityMap::from_fn(32, 20, |x, y| {
                let h = (x as u64 * 31 + y as u64 * 17 + seed) % 29;
                (h != 0).then_some(1.0 + h as f64)
            }).unwrap();
            let state = FilterState { left: estimate(d.clone(), 0.7), right: estimate(d, 0.7), frame: 0 };
            let motion = RigidMotion::from_axis_angle(Vector3::y(), yaw, Vector3::new(tx, 0.0, tz));
            let params = PredictionParams { fill_holes: false, ..Default::default() };
            let out = predict_maps(&state, &motion, &rig, &params).unwrap();
            out.check(&rig).unwrap();
            for est in [&out.left, &out.right] {
                for (x, y, _) in est.disparity.iter_valid() {
                    prop_assert!(est.variance.get(x, y) >= params.motion_noise);
                }
            }
        }

        #[test]
        fn filled_pixels_lie_between_neighbours(vals in proptest::collection::vec(proptest::option::weighted(0.7, 1.0..40.0f64), 49)) {
            let d = DisparityMap::from_fn(7, 7, |x, y| vals[y * 7 + x]).unwrap();
            let est = estimate(d.clone(), 1.0);
            let (h, _) = fill_pass(&est.disparity, &est.variance, 3.0, 0.5, true);
            for y in 0..7 {
                for x in 1..6 {
                    if !d.is_valid(x, y) && h.is_valid(x, y) {
                        let (a, b) = (d.get(x - 1, y).unwrap(), d.get(x + 1, y).unwrap());
                        let v = h.get(x, y).unwrap();
                        prop_assert!(v >= a.min(b) && v <= a.max(b));
                    }
                }
            }
        }
    }
}
