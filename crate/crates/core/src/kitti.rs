//! KITTI-style files: 16-bit disparity PNGs, 8-bit grayscale PNGs,
//! projection-matrix calibration and pose lists.
//!
//! Pose files hold one row-major 3x4 matrix per line. Line `k` is the
//! world-from-camera pose `P_k` of the left camera at frame `k` (the KITTI
//! odometry convention: it maps camera-`k` coordinates into the coordinates
//! of camera 0). The motion taking frame `k - 1` camera coordinates into
//! frame `k` is `P_k^-1 P_{k-1}`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use image::{ColorType, ImageBuffer, ImageReader, Luma};
use nalgebra::Matrix4;

use crate::error::{Error, Result};
use crate::types::{DisparityMap, GrayImage, RigidMotion, StereoRig};

/// Tolerance on `|R^T R - I|` accepted in pose files before projection onto
/// the nearest rotation.
pub const POSE_ORTHONORMAL_TOLERANCE: f64 = 1e-6;

fn open_image(path: &Path) -> Result<image::DynamicImage> {
    let reader = ImageReader::open(path).map_err(|e| Error::io(path, e))?;
    reader.decode().map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

fn describe(color: ColorType) -> String {
    format!("{color:?} ({} channel(s), {} bits per pixel)", color.channel_count(), color.bits_per_pixel())
}

/// Reads a disparity PNG: value / 256, stored 0 meaning invalid.
pub fn read_disparity_png(path: impl AsRef<Path>) -> Result<DisparityMap> {
    let path = path.as_ref();
    let img = open_image(path)?;
    if img.color() != ColorType::L16 {
        return Err(Error::Format {
            path: path.to_path_buf(),
            found: describe(img.color()),
            expected: "16-bit single-channel PNG",
        });
    }
    let buf = img.into_luma16();
    let (w, h) = (buf.width() as usize, buf.height() as usize);
    let raw = buf.into_raw();
    DisparityMap::from_fn(w, h, |x, y| match raw[y * w + x] {
        0 => None,
        v => Some(f64::from(v) / 256.0),
    })
}

/// The 16-bit code of a disparity, or `None` when it is not representable
/// (it would round to 0 or past 65535).
pub fn encode_disparity(d: f64) -> Option<u16> {
    let v = (d * 256.0).round();
    (v >= 1.0 && v <= f64::from(u16::MAX)).then_some(v as u16)
}

/// Writes `round(256 d)` per valid pixel and 0 elsewhere.
pub fn write_disparity_png(map: &DisparityMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let (w, h) = map.dims();
    let mut raw = vec![0u16; w * h];
    for (x, y, d) in map.iter_valid() {
        raw[y * w + x] = encode_disparity(d).ok_or(Error::DisparityRange { x, y, value: d })?;
    }
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(w as u32, h as u32, raw).expect("buffer matches dimensions");
    buf.save(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_gray_png(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let img = open_image(path)?;
    if img.color() != ColorType::L8 {
        return Err(Error::Format {
            path: path.to_path_buf(),
            found: describe(img.color()),
            expected: "8-bit single-channel PNG",
        });
    }
    let buf = img.into_luma8();
    GrayImage::new(buf.width() as usize, buf.height() as usize, buf.into_raw())
}

pub fn write_gray_png(image: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let buf: ImageBuffer<Luma<u8>, Vec<u8>> =
        ImageBuffer::from_raw(image.width() as u32, image.height() as u32, image.data().to_vec())
            .expect("buffer matches dimensions");
    buf.save(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

/// Intrinsics and baseline of a rectified pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibFile {
    pub focal: f64,
    pub cx: f64,
    pub cy: f64,
    pub baseline: f64,
}

impl CalibFile {
    pub fn rig(&self, dims: (usize, usize), max_disparity: u32) -> Result<StereoRig> {
        StereoRig::new(self.focal, self.baseline, (self.cx, self.cy), dims, max_disparity)
    }
}

/// Projection-matrix key pairs tried in order: grayscale odometry, colour
/// odometry, then raw-data rectified cameras.
const CALIB_PAIRS: [(&str, &str); 4] = [("P0", "P1"), ("P2", "P3"), ("P_rect_00", "P_rect_01"), ("P_rect_02", "P_rect_03")];

/// Parses `key: 12 floats` projection rows. The baseline is recovered from
/// the fourth column, `b = (P_L[0][3] - P_R[0][3]) / f`, and both matrices
/// must agree on `f` to 1e-6 relative.
pub fn parse_calib(text: &str, path: impl Into<PathBuf>) -> Result<CalibFile> {
    let path = path.into();
    let mut rows: Vec<(String, usize, Vec<f64>)> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let Some((key, rest)) = line.split_once(':') else {
            continue;
        };
        let key = key.trim();
        if !CALIB_PAIRS.iter().any(|(l, r)| key == *l || key == *r) {
            continue;
        }
        let values = rest
            .split_whitespace()
            .map(str::parse::<f64>)
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| Error::parse(&path, n + 1, format!("bad number in {key}: {e}")))?;
        if values.len() != 12 {
            return Err(Error::parse(&path, n + 1, format!("{key} needs 12 values, got {}", values.len())));
        }
        rows.push((key.to_string(), n + 1, values));
    }
    let find = |k: &str| rows.iter().find(|(key, _, _)| key == k);
    let Some((left, right)) = CALIB_PAIRS
        .iter()
        .find_map(|(l, r)| Some((find(l)?, find(r)?)))
    else {
        return Err(Error::InvalidParameter(format!(
            "{}: no left/right projection matrix pair (P0/P1, P2/P3, P_rect_0x)",
            path.display()
        )));
    };
    let (pl, pr) = (&left.2, &right.2);
    let f = pl[0];
    if !(f > 0.0) {
        return Err(Error::parse(&path, left.1, format!("focal length {f} must be > 0")));
    }
    if ((pr[0] - f) / f).abs() > 1e-6 || ((pr[5] - pl[5]) / pl[5]).abs() > 1e-6 {
        return Err(Error::parse(&path, right.1, "left and right focal lengths differ"));
    }
    let baseline = (pl[3] - pr[3]) / f;
    if !(baseline > 0.0) {
        return Err(Error::parse(&path, right.1, format!("recovered baseline {baseline} must be > 0")));
    }
    Ok(CalibFile {
        focal: f,
        cx: pl[2],
        cy: pl[6],
        baseline,
    })
}

/// `P0`/`P1` rows for a rectified pair, readable by [`parse_calib`].
pub fn format_calib(calib: &CalibFile) -> String {
    let CalibFile { focal: f, cx, cy, baseline: b } = *calib;
    let row = |tx: f64| format!("{f:e} 0 {cx:e} {tx:e} 0 {f:e} {cy:e} 0 0 0 1 0");
    format!("P0: {}\nP1: {}\n", row(0.0), row(-f * b))
}

pub fn read_calib(path: impl AsRef<Path>) -> Result<CalibFile> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_calib(&text, path)
}

pub fn parse_poses(text: &str, path: impl Into<PathBuf>) -> Result<Vec<RigidMotion>> {
    let path = path.into();
    let mut poses = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let values = line
            .split_whitespace()
            .map(str::parse::<f64>)
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| Error::parse(&path, n + 1, format!("bad number: {e}")))?;
        if values.len() != 12 {
            return Err(Error::parse(&path, n + 1, format!("expected 12 values, got {}", values.len())));
        }
        let mut m = Matrix4::identity();
        for r in 0..3 {
            for c in 0..4 {
                m[(r, c)] = values[r * 4 + c];
            }
        }
        let pose = RigidMotion::orthonormalized(m, POSE_ORTHONORMAL_TOLERANCE)
            .map_err(|e| Error::parse(&path, n + 1, e.to_string()))?;
        poses.push(pose);
    }
    Ok(poses)
}

pub fn read_pose_file(path: impl AsRef<Path>) -> Result<Vec<RigidMotion>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_poses(&text, path)
}

pub fn format_poses(poses: &[RigidMotion]) -> String {
    let mut s = String::new();
    for pose in poses {
        let m = pose.matrix();
        for r in 0..3 {
            for c in 0..4 {
                if r + c > 0 {
                    s.push(' ');
                }
                let _ = write!(s, "{:e}", m[(r, c)]);
            }
        }
        s.push('\n');
    }
    s
}

pub fn write_pose_file(poses: &[RigidMotion], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_poses(poses)).map_err(|e| Error::io(path, e))
}

/// `T_k = P_k^-1 P_{k-1}` for each frame, identity for the first.
pub fn relative_motions(poses: &[RigidMotion]) -> Vec<RigidMotion> {
    (0..poses.len())
        .map(|k| {
            if k == 0 {
                RigidMotion::identity()
            } else {
                poses[k].inverse() * poses[k - 1]
            }
        })
        .collect()
}

/// PNG files of a directory in file-name order.
pub fn list_pngs(dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let p = entry.map_err(|e| Error::io(dir, e))?.path();
        if p.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")) {
            files.push(p);
        }
    }
    files.sort();
    Ok(files)
}
