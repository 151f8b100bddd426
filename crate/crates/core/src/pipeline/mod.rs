//! Frame-by-frame predict, match and fuse loop, plus the runner that reads
//! a sequence and writes maps and metrics.

mod config;
mod run;
mod source;

pub use config::{Config, ConfigBuilder, KittiSource, OutputOptions, SourceConfig, SyntheticSource, CONFIG_KEYS};
pub use run::{run_pipeline, run_source, write_synthetic_sequence, FrameMetrics, RunSummary};
pub use source::{FrameInput, SequenceSource};

use crate::error::Result;
use crate::fusion::{fuse_maps, FusionParams, Measurement};
use crate::prediction::{fill_zoom_holes, predict_and_refine, PredictionParams};
use crate::sgm::{match_stereo, search_intervals, SgmParams, StereoMatch};
use crate::types::{Estimate, FilterState, GrayImage, RigidMotion, StereoRig};

/// Everything produced while processing one frame.
#[derive(Debug, Clone)]
pub struct FrameResult {
    pub index: usize,
    /// Motion used for the prediction.
    pub motion: RigidMotion,
    /// Warped previous state; empty on the first frame and in baseline mode.
    pub predicted: FilterState,
    /// Matches of both views with their intervals and consistency masks.
    pub matched: StereoMatch,
    /// State carried to the next frame.
    pub fused: FilterState,
    /// Left fused map with single-pixel holes filled.
    pub interpolated: Estimate,
}

/// Tunables of the per-frame loop.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EstimatorParams {
    pub prediction: PredictionParams,
    pub sgm: SgmParams,
    pub fusion: FusionParams,
    pub baseline_sgm: bool,
}

impl EstimatorParams {
    pub fn from_config(config: &Config) -> Self {
        Self {
            prediction: config.prediction,
            sgm: config.sgm,
            fusion: config.fusion,
            baseline_sgm: config.baseline_sgm,
        }
    }
}

/// Temporal disparity estimator for one rig.
#[derive(Debug, Clone)]
pub struct Estimator {
    rig: StereoRig,
    params: EstimatorParams,
    state: Option<FilterState>,
    frames: usize,
}

impl Estimator {
    pub fn new(rig: StereoRig, params: EstimatorParams) -> Result<Self> {
        params.prediction.validate()?;
        params.sgm.validate()?;
        params.fusion.validate()?;
        Ok(Self {
            rig,
            params,
            state: None,
            frames: 0,
        })
    }

    pub fn rig(&self) -> &StereoRig {
        &self.rig
    }

    pub fn state(&self) -> Option<&FilterState> {
        self.state.as_ref()
    }

    /// Processes the next frame. `motion` takes previous-frame camera
    /// coordinates to the current frame and is ignored on the first frame.
    pub fn step(&mut self, left: &GrayImage, right: &GrayImage, motion: &RigidMotion) -> Result<FrameResult> {
        let index = self.frames;
        let mut predicted = match (&self.state, self.params.baseline_sgm) {
            (Some(prev), false) => predict_and_refine(prev, motion, &self.rig, &self.params.prediction)?,
            _ => FilterState::empty(&self.rig)?,
        };
        predicted.frame = index;
        predicted.check(&self.rig)?;

        let left_iv = search_intervals(&predicted.left, &self.rig);
        let right_iv = search_intervals(&predicted.right, &self.rig);
        let matched = match_stereo(left, right, left_iv, right_iv, &self.params.sgm)?;

        let fused = fuse_maps(
            &predicted,
            Measurement {
                left: &matched.left.estimate,
                right: &matched.right.estimate,
                left_mask: &matched.left_mask,
                right_mask: &matched.right_mask,
            },
            &self.params.fusion,
        )?;
        fused.check(&self.rig)?;
        let interpolated = fill_zoom_holes(
            &fused.left,
            self.params.prediction.fill_threshold,
            self.params.prediction.motion_noise,
        );

        self.state = Some(fused.clone());
        self.frames += 1;
        log::debug!(
            "frame {index}: {} predicted, {} fused left pixels",
            predicted.left.disparity.valid_count(),
            fused.left.disparity.valid_count()
        );
        Ok(FrameResult {
            index,
            motion: *motion,
            predicted,
            matched,
            fused,
            interpolated,
        })
    }
}
