pub mod error;
pub mod eval;
pub mod fusion;
pub mod geometry;
pub mod kitti;
pub mod kv;
pub mod pipeline;
pub mod prediction;
pub mod sgm;
pub mod synth;
pub mod types;

pub use error::{Error, Result};
