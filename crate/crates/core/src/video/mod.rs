//! Video data model, file formats, rain synthesis and quality metrics.

pub mod clip;
pub mod container;
pub mod dataset;
pub mod demo;
pub mod frames;
pub mod metrics;
pub mod ops;
pub mod rain;
pub mod scene;

use std::path::PathBuf;

use thiserror::Error;

pub use clip::{ClipId, ClipSample, VideoClip};
pub use container::{read_tensor_container, write_tensor_container, ContainerError};
pub use dataset::{build_dataset, BatchSpec, DatasetConfig, LabeledSource};
pub use frames::{load_frames_dir, save_frames_dir};
pub use metrics::{psnr_luminance, ssim_luminance, PSNR_CAP_DB};
pub use ops::{chunk_video, composite_rainy, crop_fixed_patch, rgb_to_luminance};
pub use rain::{procedural_rain, RainRecipe};

#[derive(Debug, Error)]
pub enum VideoError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("value {0} outside [0, 1]")]
    Range(f64),
    #[error("non-finite value")]
    NonFinite,
    #[error("window out of bounds: {0}")]
    OutOfBounds(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("no frames found in {0}")]
    EmptyDirectory(PathBuf),
    #[error("frame {path}: {reason}")]
    Frame { path: PathBuf, reason: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
}
