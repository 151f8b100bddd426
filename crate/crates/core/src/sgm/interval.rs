use crate::types::{Estimate, StereoRig};

/// Inclusive integer disparity range `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DisparityInterval {
    pub lo: u32,
    pub hi: u32,
}

impl DisparityInterval {
    pub const fn new(lo: u32, hi: u32) -> Self {
        Self { lo, hi }
    }

    /// Number of disparities evaluated, `hi - lo + 1`.
    #[inline]
    pub fn count(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    #[inline]
    pub fn contains(&self, d: u32) -> bool {
        self.lo <= d && d <= self.hi
    }
}

/// Per-pixel search interval. Unconstrained pixels cover `[0, d_max]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntervalMap {
    width: usize,
    height: usize,
    max_disparity: u32,
    intervals: Vec<DisparityInterval>,
    constrained: Vec<bool>,
}

impl IntervalMap {
    pub fn full(width: usize, height: usize, max_disparity: u32) -> Self {
        Self {
            width,
            height,
            max_disparity,
            intervals: vec![DisparityInterval::new(0, max_disparity); width * height],
            constrained: vec![false; width * height],
        }
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
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
    pub fn max_disparity(&self) -> u32 {
        self.max_disparity
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> DisparityInterval {
        self.intervals[y * self.width + x]
    }

    #[inline]
    pub fn get_index(&self, i: usize) -> DisparityInterval {
        self.intervals[i]
    }

    #[inline]
    pub fn is_constrained(&self, x: usize, y: usize) -> bool {
        self.constrained[y * self.width + x]
    }

    pub fn intervals(&self) -> &[DisparityInterval] {
        &self.intervals
    }

    /// Restricts one pixel. `lo..=hi` must lie inside `[0, d_max]`.
    pub fn constrain(&mut self, x: usize, y: usize, interval: DisparityInterval) {
        assert!(
            interval.lo <= interval.hi && interval.hi <= self.max_disparity,
            "interval {interval:?} outside [0, {}]",
            self.max_disparity
        );
        let i = y * self.width + x;
        self.intervals[i] = interval;
        self.constrained[i] = true;
    }

    pub fn constrained_count(&self) -> usize {
        self.constrained.iter().filter(|&&c| c).count()
    }

    /// Total number of `(pixel, disparity)` cells evaluated.
    pub fn evaluated_cells(&self) -> usize {
        self.intervals.iter().map(DisparityInterval::count).sum()
    }
}

/// `[floor(d - 3 sqrt(p)), ceil(d + 3 sqrt(p))]` clamped to `[0, d_max]` and
/// widened outward until `hi - lo >= 2`.
pub fn interval_for(d: f64, p: f64, max_disparity: u32) -> DisparityInterval {
    let sigma3 = 3.0 * p.max(0.0).sqrt();
    let d_max = f64::from(max_disparity);
    let lo = (d - sigma3).floor().clamp(0.0, d_max) as u32;
    let hi = (d + sigma3).ceil().clamp(0.0, d_max) as u32;
    let (mut lo, mut hi) = (lo.min(hi), hi);
    while hi - lo < 2 {
        let mut grew = false;
        if lo > 0 {
            lo -= 1;
            grew = true;
        }
        if hi - lo < 2 && hi < max_disparity {
            hi += 1;
            grew = true;
        }
        if !grew {
            break;
        }
    }
    DisparityInterval::new(lo, hi)
}

/// Search intervals from a predicted estimate; unpredicted pixels search the
/// full range.
pub fn search_intervals(predicted: &Estimate, rig: &StereoRig) -> IntervalMap {
    let (w, h) = predicted.dims();
    let mut map = IntervalMap::full(w, h, rig.max_disparity());
    for (x, y, d) in predicted.disparity.iter_valid() {
        let p = predicted.variance.get(x, y);
        map.constrain(x, y, interval_for(d, p, rig.max_disparity()));
    }
    map
}
