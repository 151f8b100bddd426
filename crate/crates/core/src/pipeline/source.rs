use std::path::{Path, PathBuf};

use super::config::{Config, KittiSource, SourceConfig, SyntheticSource};
use crate::error::{Error, Result};
use crate::kitti;
use crate::synth::{self, SyntheticFrame};
use crate::types::{DisparityMap, GrayImage, RigidMotion, StereoRig};

/// One stereo frame ready for the estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameInput {
    pub index: usize,
    /// Output file stem.
    pub name: String,
    pub left: GrayImage,
    pub right: GrayImage,
    /// Reported motion from the previous frame (identity for frame 0).
    pub motion: RigidMotion,
    pub gt_left: Option<DisparityMap>,
}

#[derive(Debug, Clone)]
enum Frames {
    Synthetic(Vec<SyntheticFrame>),
    Disk {
        left: Vec<PathBuf>,
        right: Vec<PathBuf>,
        motions: Vec<RigidMotion>,
        gt_dir: Option<PathBuf>,
    },
}

/// A sequence of stereo frames with a fixed rig.
#[derive(Debug, Clone)]
pub struct SequenceSource {
    rig: StereoRig,
    frames: Frames,
}

fn apply_max_disparity(rig: StereoRig, config: &Config) -> Result<StereoRig> {
    match config.max_disparity {
        Some(d) => rig.with_max_disparity(d),
        None => Ok(rig),
    }
}

impl SequenceSource {
    pub fn open(config: &Config) -> Result<Self> {
        match &config.source {
            Some(SourceConfig::Synthetic(s)) => Self::synthetic(s, config),
            Some(SourceConfig::Kitti(k)) => Self::kitti(k, config),
            None => Err(Error::InvalidParameter("no sequence source configured (`source`)".into())),
        }
    }

    fn synthetic(s: &SyntheticSource, config: &Config) -> Result<Self> {
        let mut scene = synth::read_scene(&s.scene)?;
        scene.rig = apply_max_disparity(scene.rig, config)?;
        let trajectory = synth::read_trajectory(&s.trajectory)?;
        let frames = synth::make_sequence(&scene, &trajectory, &s.noise)?;
        Ok(Self::from_synthetic(scene.rig, frames))
    }

    /// Wraps an already rendered sequence.
    pub fn from_synthetic(rig: StereoRig, frames: Vec<SyntheticFrame>) -> Self {
        Self {
            rig,
            frames: Frames::Synthetic(frames),
        }
    }

    fn kitti(k: &KittiSource, config: &Config) -> Result<Self> {
        let mut left = kitti::list_pngs(&k.left_dir)?;
        let mut right = kitti::list_pngs(&k.right_dir)?;
        let poses = kitti::read_pose_file(&k.poses)?;
        let mut n = left.len();
        if right.len() != n {
            return Err(Error::InvalidParameter(format!(
                "{} holds {} images but {} holds {}",
                k.left_dir.display(),
                n,
                k.right_dir.display(),
                right.len()
            )));
        }
        if poses.len() < n {
            return Err(Error::InvalidParameter(format!(
                "{} has {} poses for {} frames",
                k.poses.display(),
                poses.len(),
                n
            )));
        }
        if let Some(limit) = k.frames {
            n = n.min(limit);
        }
        if n == 0 {
            return Err(Error::InvalidParameter(format!("{} holds no PNG images", k.left_dir.display())));
        }
        left.truncate(n);
        right.truncate(n);
        let first = kitti::read_gray_png(&left[0])?;
        let calib = kitti::read_calib(&k.calib)?;
        let max_disparity = config.max_disparity.unwrap_or(128.min(first.width() as u32 - 1));
        let rig = calib.rig(first.dims(), max_disparity)?;
        Ok(Self {
            rig,
            frames: Frames::Disk {
                left,
                right,
                motions: kitti::relative_motions(&poses[..n]),
                gt_dir: k.gt_dir.clone(),
            },
        })
    }

    pub fn rig(&self) -> &StereoRig {
        &self.rig
    }

    pub fn len(&self) -> usize {
        match &self.frames {
            Frames::Synthetic(f) => f.len(),
            Frames::Disk { left, .. } => left.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn frame(&self, k: usize) -> Result<FrameInput> {
        let input = match &self.frames {
            Frames::Synthetic(frames) => {
                let f = &frames[k];
                FrameInput {
                    index: k,
                    name: format!("{k:06}"),
                    left: f.rendered.left.clone(),
                    right: f.rendered.right.clone(),
                    motion: f.noisy_motion,
                    gt_left: Some(f.rendered.gt_left.clone()),
                }
            }
            Frames::Disk { left, right, motions, gt_dir } => {
                let name = stem(&left[k]);
                let gt_left = match gt_dir {
                    Some(dir) => {
                        let p = dir.join(left[k].file_name().expect("listed files have names"));
                        p.exists().then(|| kitti::read_disparity_png(&p)).transpose()?
                    }
                    None => None,
                };
                FrameInput {
                    index: k,
                    name,
                    left: kitti::read_gray_png(&left[k])?,
                    right: kitti::read_gray_png(&right[k])?,
                    motion: motions[k],
                    gt_left,
                }
            }
        };
        let dims = self.rig.dims();
        for found in [input.left.dims(), input.right.dims()]
            .into_iter()
            .chain(input.gt_left.as_ref().map(DisparityMap::dims))
        {
            if found != dims {
                return Err(Error::DimensionMismatch { expected: dims, found });
            }
        }
        Ok(input)
    }
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}
