//! Monte Carlo EM training: configuration, losses, persistent batches, the
//! epoch loop, standalone generator fitting and checkpoints.

use thiserror::Error;

use crate::inference::InferenceError;
use crate::nn::NnError;
use crate::priors::PriorError;
use crate::video::container::ContainerError;
use crate::video::VideoError;

pub mod checkpoint;
pub mod config;
pub mod em;
pub mod fit;
pub mod loss;
pub mod optim;
pub mod registry;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use config::{AdamConfig, LearningRates, Mode, TrainConfig};
pub use em::{em_train, evaluate, LogRow, Trainer};
pub use fit::{fit_generator, FitConfig, FitResult};
pub use loss::{m_step_loss, LossGrads, LossTerms};
pub use optim::{clip_grad_norm, step_decay, AdamState};
pub use registry::{BatchRegistry, BatchState};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("registry: {0}")]
    Registry(String),
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFinite { epoch: usize, batch: usize },
    #[error("epoch {epoch}, batch {batch}: {source}")]
    Step {
        epoch: usize,
        batch: usize,
        #[source]
        source: Box<TrainError>,
    },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Prior(#[from] PriorError),
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error(transparent)]
    Network(#[from] NnError),
    #[error(transparent)]
    Video(#[from] VideoError),
    #[error(transparent)]
    Container(#[from] ContainerError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
