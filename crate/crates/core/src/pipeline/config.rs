use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::eval::MetricMode;
use crate::fusion::FusionParams;
use crate::kv::KvFile;
use crate::prediction::PredictionParams;
use crate::sgm::SgmParams;
use crate::synth::SequenceNoise;

/// Rendered sequence described by scene and trajectory files.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSource {
    pub scene: PathBuf,
    pub trajectory: PathBuf,
    pub noise: SequenceNoise,
}

/// Image directories, calibration and poses on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct KittiSource {
    pub left_dir: PathBuf,
    pub right_dir: PathBuf,
    pub calib: PathBuf,
    pub poses: PathBuf,
    /// Left ground-truth disparities named like the left images.
    pub gt_dir: Option<PathBuf>,
    /// Process at most this many frames.
    pub frames: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SourceConfig {
    Synthetic(SyntheticSource),
    Kitti(KittiSource),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputOptions {
    /// Also write the hole-filled fused map.
    pub interpolated: bool,
    /// Write red/blue error images where ground truth exists.
    pub error_maps: bool,
}

impl Default for OutputOptions {
    fn default() -> Self {
        Self {
            interpolated: true,
            error_maps: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub source: Option<SourceConfig>,
    /// Overrides the rig's disparity range; required for on-disk sequences.
    pub max_disparity: Option<u32>,
    pub prediction: PredictionParams,
    pub sgm: SgmParams,
    pub fusion: FusionParams,
    pub metric_mode: MetricMode,
    /// Full-range matching every frame, no prediction or fusion history.
    pub baseline_sgm: bool,
    pub output: OutputOptions,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            source: None,
            max_disparity: None,
            prediction: PredictionParams::default(),
            sgm: SgmParams::default(),
            fusion: FusionParams::default(),
            metric_mode: MetricMode::Or,
            baseline_sgm: false,
            output: OutputOptions::default(),
        }
    }
}

/// Every accepted key.
pub const CONFIG_KEYS: &[&str] = &[
    "source",
    "synth.scene",
    "synth.trajectory",
    "synth.seed",
    "synth.image_noise",
    "synth.rotation_noise_deg",
    "synth.translation_noise",
    "kitti.left_dir",
    "kitti.right_dir",
    "kitti.calib",
    "kitti.poses",
    "kitti.gt_dir",
    "kitti.frames",
    "max_disparity",
    "prediction.motion_noise",
    "prediction.fill_threshold",
    "prediction.edge_threshold",
    "prediction.edge_window",
    "prediction.reject_edges",
    "prediction.fill_holes",
    "sgm.window",
    "sgm.p1",
    "sgm.p2",
    "sgm.s_max",
    "sgm.r_min",
    "sgm.lr_tolerance",
    "sgm.sad_threshold",
    "fusion.initial_variance",
    "metric.mode",
    "baseline_sgm",
    "output.interpolated",
    "output.error_maps",
];

/// Source fields collected before the source kind is known.
#[derive(Debug, Clone, Default, PartialEq)]
struct PendingSource {
    kind: Option<String>,
    scene: Option<PathBuf>,
    trajectory: Option<PathBuf>,
    noise: SequenceNoise,
    left_dir: Option<PathBuf>,
    right_dir: Option<PathBuf>,
    calib: Option<PathBuf>,
    poses: Option<PathBuf>,
    gt_dir: Option<PathBuf>,
    frames: Option<usize>,
}

/// Accumulates settings from a file and command-line overrides.
#[derive(Debug, Clone, Default)]
pub struct ConfigBuilder {
    config: Config,
    pending: PendingSource,
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::InvalidParameter(format!("bad value `{value}` for `{key}`: {e}")))
}

impl ConfigBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Applies every entry of a config file; relative paths resolve against
    /// the file's directory.
    pub fn apply_file(&mut self, kv: &KvFile) -> Result<&mut Self> {
        kv.check_keys(CONFIG_KEYS)?;
        let base = kv.path().parent().unwrap_or(Path::new("")).to_path_buf();
        for e in kv.entries() {
            self.set(&e.key, &e.value, &base).map_err(|err| kv.error(e, err.to_string()))?;
        }
        Ok(self)
    }

    pub fn read_file(&mut self, path: impl AsRef<Path>) -> Result<&mut Self> {
        self.apply_file(&KvFile::read(path)?)
    }

    /// Sets one key; relative paths resolve against `base`.
    pub fn set(&mut self, key: &str, value: &str, base: &Path) -> Result<&mut Self> {
        let path = || base.join(value);
        let c = &mut self.config;
        let s = &mut self.pending;
        match key {
            "source" => s.kind = Some(value.to_string()),
            "synth.scene" => s.scene = Some(path()),
            "synth.trajectory" => s.trajectory = Some(path()),
            "synth.seed" => s.noise.seed = parse(key, value)?,
            "synth.image_noise" => s.noise.image_sigma = parse(key, value)?,
            "synth.rotation_noise_deg" => s.noise.rotation_sigma = parse::<f64>(key, value)?.to_radians(),
            "synth.translation_noise" => s.noise.translation_sigma = parse(key, value)?,
            "kitti.left_dir" => s.left_dir = Some(path()),
            "kitti.right_dir" => s.right_dir = Some(path()),
            "kitti.calib" => s.calib = Some(path()),
            "kitti.poses" => s.poses = Some(path()),
            "kitti.gt_dir" => s.gt_dir = Some(path()),
            "kitti.frames" => s.frames = Some(parse(key, value)?),
            "max_disparity" => c.max_disparity = Some(parse(key, value)?),
            "prediction.motion_noise" => c.prediction.motion_noise = parse(key, value)?,
            "prediction.fill_threshold" => c.prediction.fill_threshold = parse(key, value)?,
            "prediction.edge_threshold" => c.prediction.edge_threshold = parse(key, value)?,
            "prediction.edge_window" => c.prediction.edge_window = parse(key, value)?,
            "prediction.reject_edges" => c.prediction.reject_edges = parse(key, value)?,
            "prediction.fill_holes" => c.prediction.fill_holes = parse(key, value)?,
            "sgm.window" => c.sgm.window = parse(key, value)?,
            "sgm.p1" => c.sgm.p1 = parse(key, value)?,
            "sgm.p2" => c.sgm.p2 = parse(key, value)?,
            "sgm.s_max" => c.sgm.s_max = parse(key, value)?,
            "sgm.r_min" => c.sgm.r_min = parse(key, value)?,
            "sgm.lr_tolerance" => c.sgm.lr_tolerance = parse(key, value)?,
            "sgm.sad_threshold" => c.sgm.sad_threshold = parse(key, value)?,
            "fusion.initial_variance" => c.fusion.initial_variance = parse(key, value)?,
            "metric.mode" => c.metric_mode = value.parse()?,
            "baseline_sgm" => c.baseline_sgm = parse(key, value)?,
            "output.interpolated" => c.output.interpolated = parse(key, value)?,
            "output.error_maps" => c.output.error_maps = parse(key, value)?,
            _ => return Err(Error::InvalidParameter(format!("unknown key `{key}`"))),
        }
        Ok(self)
    }

    pub fn build(&self) -> Result<Config> {
        let mut config = self.config.clone();
        let s = &self.pending;
        let need = |v: &Option<PathBuf>, key: &str| {
            v.clone()
                .ok_or_else(|| Error::InvalidParameter(format!("`{key}` is required for this source")))
        };
        config.source = match s.kind.as_deref() {
            None => None,
            Some("synthetic") => Some(SourceConfig::Synthetic(SyntheticSource {
                scene: need(&s.scene, "synth.scene")?,
                trajectory: need(&s.trajectory, "synth.trajectory")?,
                noise: s.noise,
            })),
            Some("kitti") => Some(SourceConfig::Kitti(KittiSource {
                left_dir: need(&s.left_dir, "kitti.left_dir")?,
                right_dir: need(&s.right_dir, "kitti.right_dir")?,
                calib: need(&s.calib, "kitti.calib")?,
                poses: need(&s.poses, "kitti.poses")?,
                gt_dir: s.gt_dir.clone(),
                frames: s.frames,
            })),
            Some(other) => {
                return Err(Error::InvalidParameter(format!(
                    "source `{other}` is not `synthetic` or `kitti`"
                )))
            }
        };
        config.validate()?;
        Ok(config)
    }
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        self.prediction.validate()?;
        self.sgm.validate()?;
        self.fusion.validate()?;
        if let Some(SourceConfig::Synthetic(s)) = &self.source {
            s.noise.validate()?;
        }
        if self.max_disparity == Some(0) {
            return Err(Error::InvalidParameter("max_disparity must be >= 1".into()));
        }
        Ok(())
    }
}
