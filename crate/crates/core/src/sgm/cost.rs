use rayon::prelude::*;

use super::interval::{DisparityInterval, IntervalMap};
use crate::error::{Error, Result};
use crate::types::GrayImage;

/// Which image is the reference for matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum View {
    /// Left reference; candidate at `x - d` in the right image.
    Left,
    /// Right reference; candidate at `x + d` in the left image.
    Right,
}

impl View {
    #[inline]
    pub(crate) fn target_x(self, x: usize, d: u32, width: usize) -> Option<usize> {
        match self {
            View::Left => x.checked_sub(d as usize),
            View::Right => Some(x + d as usize).filter(|&t| t < width),
        }
    }
}

/// Ragged per-pixel cost stack: pixel `i` owns
/// `costs[offsets[i]..offsets[i + 1]]`, one entry per disparity in its interval.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostVolume {
    intervals: IntervalMap,
    offsets: Vec<usize>,
    costs: Vec<u32>,
}

impl CostVolume {
    /// Zero-filled volume laid out over `intervals`.
    pub fn zeros(intervals: IntervalMap) -> Self {
        let mut offsets = Vec::with_capacity(intervals.intervals().len() + 1);
        let mut total = 0usize;
        offsets.push(0);
        for iv in intervals.intervals() {
            total += iv.count();
            offsets.push(total);
        }
        Self {
            intervals,
            offsets,
            costs: vec![0; total],
        }
    }

    /// Builds a volume from explicit per-pixel cost lists.
    pub fn from_costs(intervals: IntervalMap, per_pixel: &[Vec<u32>]) -> Result<Self> {
        let mut vol = Self::zeros(intervals);
        if per_pixel.len() != vol.pixel_count() {
            return Err(Error::InvalidParameter(format!(
                "{} cost lists for {} pixels",
                per_pixel.len(),
                vol.pixel_count()
            )));
        }
        for (i, costs) in per_pixel.iter().enumerate() {
            let slot = vol.costs_at_mut(i);
            if slot.len() != costs.len() {
                return Err(Error::InvalidParameter(format!(
                    "pixel {i}: {} costs for an interval of {}",
                    costs.len(),
                    slot.len()
                )));
            }
            slot.copy_from_slice(costs);
        }
        Ok(vol)
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        self.intervals.dims()
    }

    #[inline]
    pub fn pixel_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn intervals(&self) -> &IntervalMap {
        &self.intervals
    }

    #[inline]
    pub fn interval_at(&self, i: usize) -> DisparityInterval {
        self.intervals.get_index(i)
    }

    #[inline]
    pub fn costs_at(&self, i: usize) -> &[u32] {
        &self.costs[self.offsets[i]..self.offsets[i + 1]]
    }

    #[inline]
    pub fn costs_at_mut(&mut self, i: usize) -> &mut [u32] {
        &mut self.costs[self.offsets[i]..self.offsets[i + 1]]
    }

    /// Cost at `(x, y, d)`; `None` outside the pixel's interval.
    pub fn cost(&self, x: usize, y: usize, d: u32) -> Option<u32> {
        let i = y * self.intervals.width() + x;
        let iv = self.interval_at(i);
        iv.contains(d).then(|| self.costs_at(i)[(d - iv.lo) as usize])
    }

    pub fn raw(&self) -> &[u32] {
        &self.costs
    }

    pub(crate) fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub(crate) fn raw_mut(&mut self) -> &mut [u32] {
        &mut self.costs
    }

    /// Splits the cost buffer into one mutable slice per image row.
    pub(crate) fn rows_mut(&mut self) -> Vec<&mut [u32]> {
        let (w, h) = self.dims();
        let mut rows = Vec::with_capacity(h);
        let mut rest: &mut [u32] = &mut self.costs;
        for y in 0..h {
            let len = self.offsets[(y + 1) * w] - self.offsets[y * w];
            let (row, tail) = rest.split_at_mut(len);
            rows.push(row);
            rest = tail;
        }
        rows
    }
}

/// Cost assigned when the candidate patch centre falls outside the image.
pub fn border_cost(window: usize) -> u32 {
    (window * window) as u32 * 255
}

#[inline]
fn window_sad(
    reference: &GrayImage,
    target: &GrayImage,
    x: usize,
    tx: usize,
    y: usize,
    half: isize,
) -> u32 {
    let mut sum = 0u32;
    for dy in -half..=half {
        let yy = y as isize + dy;
        for dx in -half..=half {
            let a = reference.get_clamped(x as isize + dx, yy);
            let b = target.get_clamped(tx as isize + dx, yy);
            sum += u32::from(a.abs_diff(b));
        }
    }
    sum
}

/// Windowed SAD between the reference patch and the candidate patch for
/// `d` in each pixel's interval. Patches reaching past the image edge
/// replicate the border row/column; a candidate centre outside the image
/// gets [`border_cost`].
pub fn matching_cost(
    left: &GrayImage,
    right: &GrayImage,
    intervals: &IntervalMap,
    window: usize,
    view: View,
) -> Result<CostVolume> {
    if left.dims() != right.dims() {
        return Err(Error::DimensionMismatch {
            expected: left.dims(),
            found: right.dims(),
        });
    }
    if intervals.dims() != left.dims() {
        return Err(Error::DimensionMismatch {
            expected: left.dims(),
            found: intervals.dims(),
        });
    }
    if window < 1 || window % 2 == 0 {
        return Err(Error::InvalidParameter(format!(
            "matching window {window} must be odd"
        )));
    }
    let (reference, target) = match view {
        View::Left => (left, right),
        View::Right => (right, left),
    };
    let (w, _) = left.dims();
    let half = (window / 2) as isize;
    let border = border_cost(window);

    let mut volume = CostVolume::zeros(intervals.clone());
    volume
        .rows_mut()
        .into_par_iter()
        .enumerate()
        .for_each(|(y, row)| {
            let mut k = 0;
            for x in 0..w {
                let iv = intervals.get(x, y);
                for d in iv.lo..=iv.hi {
                    row[k] = match view.target_x(x, d, w) {
                        Some(tx) => window_sad(reference, target, x, tx, y, half),
                        None => border,
                    };
                    k += 1;
                }
            }
        });
    Ok(volume)
}
