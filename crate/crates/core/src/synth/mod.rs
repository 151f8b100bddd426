//! Ray-cast synthetic stereo sequences with exact ground truth.
//!
//! Scenes are fronto-parallel planes and axis-aligned boxes covered in
//! seeded value noise. Pixels are point-sampled at their centres, so the
//! ground-truth disparity `f b / Z` is exact for the rendered intensity.

mod files;
mod scene;
mod sequence;
mod texture;

pub use files::{format_scene, format_trajectory, parse_scene, parse_trajectory, read_scene, read_trajectory};
pub use scene::{Hit, PlaneBounds, Primitive, RenderedFrame, SceneSpec};
pub use sequence::{add_image_noise, make_sequence, perturb_motion, SequenceNoise, SyntheticFrame, Trajectory};
pub use texture::SurfaceTexture;
