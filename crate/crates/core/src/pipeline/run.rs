use std::fs;
use std::path::Path;

use super::config::Config;
use super::source::{FrameInput, SequenceSource};
use super::{Estimator, EstimatorParams, FrameResult};
use crate::error::{Error, Result};
use crate::eval::{self, BadPixelStats, MetricMode, Record};
use crate::kitti::{self, CalibFile};
use crate::synth::SyntheticFrame;
use crate::types::{RigidMotion, StereoRig};

/// Metrics of one processed frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameMetrics {
    pub index: usize,
    pub name: String,
    pub search_fraction: f64,
    pub search_fraction_right: f64,
    pub density: f64,
    /// Bad-pixel counts of the fused and hole-filled left maps per mode,
    /// when ground truth exists.
    pub fused: Option<[BadPixelStats; 2]>,
    pub interpolated: Option<[BadPixelStats; 2]>,
}

impl FrameMetrics {
    pub fn fused_stats(&self, mode: MetricMode) -> Option<BadPixelStats> {
        self.fused.map(|s| s[mode_index(mode)])
    }

    pub fn interpolated_stats(&self, mode: MetricMode) -> Option<BadPixelStats> {
        self.interpolated.map(|s| s[mode_index(mode)])
    }

    pub fn record(&self) -> Record {
        let mut r = Record::new();
        r.push("frame", self.index)
            .push("name", &self.name)
            .push_fraction("search_fraction", self.search_fraction)
            .push_fraction("search_fraction_right", self.search_fraction_right)
            .push_fraction("density", self.density);
        for mode in MetricMode::ALL {
            if let Some(s) = self.fused_stats(mode) {
                eval::push_stats(&mut r, &format!("bad_{mode}"), &s);
            }
            if let Some(s) = self.interpolated_stats(mode) {
                eval::push_stats(&mut r, &format!("interp_bad_{mode}"), &s);
            }
        }
        r
    }
}

fn mode_index(mode: MetricMode) -> usize {
    match mode {
        MetricMode::Or => 0,
        MetricMode::And => 1,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub frames: Vec<FrameMetrics>,
    pub summary: Record,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn summarize(config: &Config, frames: &[FrameMetrics]) -> Record {
    let mut r = Record::new();
    r.push("frames", frames.len())
        .push("metric_mode", config.metric_mode)
        .push("baseline_sgm", config.baseline_sgm)
        .push_fraction("mean_search_fraction", mean(frames.iter().map(|f| f.search_fraction)))
        .push_fraction(
            "mean_search_fraction_after_first",
            mean(frames.iter().skip(1).map(|f| f.search_fraction)),
        )
        .push_fraction("mean_density", mean(frames.iter().map(|f| f.density)));
    let with_gt: Vec<&FrameMetrics> = frames.iter().filter(|f| f.fused.is_some()).collect();
    r.push("gt_frames", with_gt.len());
    let mut modes = vec![config.metric_mode];
    modes.extend(MetricMode::ALL.into_iter().filter(|&m| m != config.metric_mode));
    for mode in modes {
        let fused: Vec<BadPixelStats> = with_gt.iter().filter_map(|f| f.fused_stats(mode)).collect();
        let interp: Vec<BadPixelStats> = with_gt.iter().filter_map(|f| f.interpolated_stats(mode)).collect();
        r.push_fraction(format!("mean_bad_{mode}_rate"), mean(fused.iter().map(BadPixelStats::rate)))
            .push_fraction(
                format!("mean_bad_{mode}_rate_all"),
                mean(fused.iter().map(BadPixelStats::rate_with_missing)),
            )
            .push_fraction(
                format!("mean_interp_bad_{mode}_rate"),
                mean(interp.iter().map(BadPixelStats::rate)),
            );
    }
    r
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn measure(input: &FrameInput, result: &FrameResult) -> Result<FrameMetrics> {
    let fused_left = &result.fused.left.disparity;
    let stats = |map| -> Result<Option<[BadPixelStats; 2]>> {
        input
            .gt_left
            .as_ref()
            .map(|gt| {
                Ok([
                    eval::bad_pixel_rate(map, gt, MetricMode::Or)?,
                    eval::bad_pixel_rate(map, gt, MetricMode::And)?,
                ])
            })
            .transpose()
    };
    Ok(FrameMetrics {
        index: input.index,
        name: input.name.clone(),
        search_fraction: eval::search_space_fraction(&result.matched.left.intervals),
        search_fraction_right: eval::search_space_fraction(&result.matched.right.intervals),
        density: eval::density(fused_left),
        fused: stats(fused_left)?,
        interpolated: stats(&result.interpolated.disparity)?,
    })
}

/// Runs the estimator over `source`, writing maps and metrics under
/// `out_dir` when given. `observer` sees every frame's inputs and results.
///
/// Output tree: `disparity/<name>.png` (fused left map),
/// `interpolated/<name>.png`, `errors/<name>.png`, `frames.txt` (one
/// record per frame) and `summary.txt`.
pub fn run_source(
    source: &SequenceSource,
    config: &Config,
    out_dir: Option<&Path>,
    observer: &mut dyn FnMut(&FrameInput, &FrameResult) -> Result<()>,
) -> Result<RunSummary> {
    config.validate()?;
    let mut estimator = Estimator::new(*source.rig(), EstimatorParams::from_config(config))?;
    if let Some(dir) = out_dir {
        create_dir(&dir.join("disparity"))?;
        if config.output.interpolated {
            create_dir(&dir.join("interpolated"))?;
        }
        if config.output.error_maps {
            create_dir(&dir.join("errors"))?;
        }
    }
    let mut frames = Vec::with_capacity(source.len());
    let mut lines = String::new();
    for k in 0..source.len() {
        let input = source.frame(k)?;
        let result = estimator.step(&input.left, &input.right, &input.motion)?;
        let metrics = measure(&input, &result)?;
        log::info!("{}", metrics.record().line());
        if let Some(dir) = out_dir {
            let file = format!("{}.png", input.name);
            kitti::write_disparity_png(&result.fused.left.disparity, dir.join("disparity").join(&file))?;
            if config.output.interpolated {
                kitti::write_disparity_png(&result.interpolated.disparity, dir.join("interpolated").join(&file))?;
            }
            if let (true, Some(gt)) = (config.output.error_maps, &input.gt_left) {
                eval::write_error_png(&result.fused.left.disparity, gt, config.metric_mode, dir.join("errors").join(&file))?;
            }
        }
        observer(&input, &result)?;
        lines.push_str(&metrics.record().line());
        lines.push('\n');
        frames.push(metrics);
    }
    let summary = summarize(config, &frames);
    if let Some(dir) = out_dir {
        write_text(&dir.join("frames.txt"), &lines)?;
        write_text(&dir.join("summary.txt"), &summary.lines())?;
    }
    Ok(RunSummary { frames, summary })
}

/// Opens the configured source and runs it; see [`run_source`].
pub fn run_pipeline(config: &Config, out_dir: Option<&Path>) -> Result<RunSummary> {
    let source = SequenceSource::open(config)?;
    run_source(&source, config, out_dir, &mut |_, _| Ok(()))
}

/// Writes a rendered sequence in the on-disk layout read by the `kitti`
/// source: `image_0/`, `image_1/`, `disp_gt/` (left ground truth),
/// `calib.txt`, `poses.txt` (true poses) and `poses_reported.txt` (poses
/// integrated from the perturbed motions).
pub fn write_synthetic_sequence(frames: &[SyntheticFrame], rig: &StereoRig, dir: &Path) -> Result<()> {
    for sub in ["image_0", "image_1", "disp_gt"] {
        create_dir(&dir.join(sub))?;
    }
    let mut reported: Vec<RigidMotion> = Vec::with_capacity(frames.len());
    for f in frames {
        let file = format!("{:06}.png", f.index);
        kitti::write_gray_png(&f.rendered.left, dir.join("image_0").join(&file))?;
        kitti::write_gray_png(&f.rendered.right, dir.join("image_1").join(&file))?;
        kitti::write_disparity_png(&f.rendered.gt_left, dir.join("disp_gt").join(&file))?;
        let pose = match reported.last() {
            None => f.pose,
            Some(prev) => *prev * f.noisy_motion.inverse(),
        };
        reported.push(pose);
    }
    let (cx, cy) = rig.principal_point();
    let calib = CalibFile {
        focal: rig.focal(),
        cx,
        cy,
        baseline: rig.baseline(),
    };
    write_text(&dir.join("calib.txt"), &kitti::format_calib(&calib))?;
    let poses: Vec<RigidMotion> = frames.iter().map(|f| f.pose).collect();
    kitti::write_pose_file(&poses, dir.join("poses.txt"))?;
    kitti::write_pose_file(&reported, dir.join("poses_reported.txt"))
}
