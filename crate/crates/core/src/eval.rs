//! Bad-pixel rate, density and search-space metrics.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use image::{ImageBuffer, Rgb};

use crate::error::{Error, Result};
use crate::sgm::IntervalMap;
use crate::types::DisparityMap;

/// Absolute error threshold (px).
pub const ABSOLUTE_THRESHOLD: f64 = 3.0;
/// Relative error threshold (fraction of the ground truth).
pub const RELATIVE_THRESHOLD: f64 = 0.05;

/// How the absolute and relative thresholds combine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetricMode {
    /// Bad when either threshold is exceeded.
    Or,
    /// Bad only when both are exceeded (the KITTI 2015 devkit rule).
    And,
}

impl MetricMode {
    pub const ALL: [MetricMode; 2] = [MetricMode::Or, MetricMode::And];

    pub fn name(self) -> &'static str {
        match self {
            MetricMode::Or => "or",
            MetricMode::And => "and",
        }
    }
}

impl fmt::Display for MetricMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "or" => Ok(MetricMode::Or),
            "and" => Ok(MetricMode::And),
            _ => Err(Error::InvalidParameter(format!("metric mode `{s}` is not `or` or `and`"))),
        }
    }
}

#[inline]
pub fn is_bad(estimate: f64, truth: f64, mode: MetricMode) -> bool {
    let e = (estimate - truth).abs();
    let abs = e > ABSOLUTE_THRESHOLD;
    let rel = e > RELATIVE_THRESHOLD * truth;
    match mode {
        MetricMode::Or => abs || rel,
        MetricMode::And => abs && rel,
    }
}

/// Pixel counts behind the bad-pixel rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BadPixelStats {
    /// Pixels with valid ground truth.
    pub ground_truth: usize,
    /// Ground-truth pixels that also carry an estimate.
    pub evaluated: usize,
    /// Evaluated pixels over the error threshold.
    pub bad: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl BadPixelStats {
    /// Bad fraction over pixels where both maps are valid.
    pub fn rate(&self) -> f64 {
        ratio(self.bad, self.evaluated)
    }

    /// Bad fraction over ground-truth pixels, missing estimates counted bad.
    pub fn rate_with_missing(&self) -> f64 {
        ratio(self.bad + self.ground_truth - self.evaluated, self.ground_truth)
    }

    /// Fraction of ground-truth pixels that carry an estimate.
    pub fn density(&self) -> f64 {
        ratio(self.evaluated, self.ground_truth)
    }

    pub fn merge(&self, other: &BadPixelStats) -> BadPixelStats {
        BadPixelStats {
            ground_truth: self.ground_truth + other.ground_truth,
            evaluated: self.evaluated + other.evaluated,
            bad: self.bad + other.bad,
        }
    }
}

fn check_dims(estimate: &DisparityMap, truth: &DisparityMap) -> Result<()> {
    if estimate.dims() != truth.dims() {
        return Err(Error::DimensionMismatch {
            expected: truth.dims(),
            found: estimate.dims(),
        });
    }
    Ok(())
}

pub fn bad_pixel_rate(estimate: &DisparityMap, truth: &DisparityMap, mode: MetricMode) -> Result<BadPixelStats> {
    check_dims(estimate, truth)?;
    let mut s = BadPixelStats::default();
    for (x, y, gt) in truth.iter_valid() {
        s.ground_truth += 1;
        if let Some(d) = estimate.get(x, y) {
            s.evaluated += 1;
            if is_bad(d, gt, mode) {
                s.bad += 1;
            }
        }
    }
    Ok(s)
}

/// Valid fraction of all pixels.
pub fn density(map: &DisparityMap) -> f64 {
    ratio(map.valid_count(), map.len())
}

/// Evaluated disparities over the full `W H (d_max + 1)` volume.
pub fn search_space_fraction(intervals: &IntervalMap) -> f64 {
    let (w, h) = intervals.dims();
    let full = (w * h) as f64 * f64::from(intervals.max_disparity() + 1);
    intervals.evaluated_cells() as f64 / full
}

/// Red for bad pixels, blue for good ones, black where either map is
/// invalid.
pub fn error_image(estimate: &DisparityMap, truth: &DisparityMap, mode: MetricMode) -> Result<ImageBuffer<Rgb<u8>, Vec<u8>>> {
    check_dims(estimate, truth)?;
    let (w, h) = truth.dims();
    Ok(ImageBuffer::from_fn(w as u32, h as u32, |x, y| {
        let (x, y) = (x as usize, y as usize);
        match (estimate.get(x, y), truth.get(x, y)) {
            (Some(d), Some(gt)) if is_bad(d, gt, mode) => Rgb([255, 0, 0]),
            (Some(_), Some(_)) => Rgb([0, 0, 255]),
            _ => Rgb([0, 0, 0]),
        }
    }))
}

pub fn write_error_png(estimate: &DisparityMap, truth: &DisparityMap, mode: MetricMode, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    error_image(estimate, truth, mode)?
        .save(path)
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })
}

/// Ordered `key=value` fields rendered on one line or one per line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Record {
    fields: Vec<(String, String)>,
}

impl Record {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl fmt::Display) -> &mut Self {
        self.fields.push((key.into(), value.to_string()));
        self
    }

    /// Fractions are printed with six decimals.
    pub fn push_fraction(&mut self, key: impl Into<String>, value: f64) -> &mut Self {
        self.push(key, format!("{value:.6}"))
    }

    pub fn fields(&self) -> &[(String, String)] {
        &self.fields
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.fields.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn line(&self) -> String {
        let parts: Vec<String> = self.fields.iter().map(|(k, v)| format!("{k}={v}")).collect();
        parts.join(" ")
    }

    pub fn lines(&self) -> String {
        self.fields.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }
}

/// Appends `<prefix>_rate`, `<prefix>_rate_all` and `<prefix>_density`.
pub fn push_stats(record: &mut Record, prefix: &str, stats: &BadPixelStats) {
    record
        .push_fraction(format!("{prefix}_rate"), stats.rate())
        .push_fraction(format!("{prefix}_rate_all"), stats.rate_with_missing())
        .push_fraction(format!("{prefix}_density"), stats.density());
}
