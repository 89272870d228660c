//! Network parameterizations with hand-written forward and backward passes.

mod derainer;
mod generator;
pub mod init;
pub mod layers;
mod params;
mod real;

pub use derainer::{derainer_forward, DerainerConfig, DerainerParams, DerainerTape, ResBlock};
pub use generator::{
    EmissionConfig, EmissionParams, GeneratorConfig, GeneratorParams, GeneratorTape, Latents, TransitionConfig,
    TransitionParams,
};
pub use layers::TemporalPadding;
pub use params::{shapes, snapshot, ParamSet};
pub use real::Real;

#[derive(Debug, thiserror::Error)]
pub enum NnError {
    #[error("invalid network configuration: {0}")]
    Config(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite values in {0}")]
    NonFinite(String),
}
