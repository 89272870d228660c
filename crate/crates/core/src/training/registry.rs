//! Persistent mini-batches: fixed membership, one generator and optimizer per
//! batch, one latent chain per member clip.

use ndarray::{ArrayViewD, ArrayViewMutD, IxDyn};

use super::config::{Mode, TrainConfig};
use super::optim::AdamState;
use super::TrainError;
use crate::inference::{init_chain, stream_seed, LatentChain};
use crate::nn::{shapes, GeneratorParams, Real};
use crate::video::{BatchSpec, ClipId, ClipSample};

const GENERATOR_SALT: u64 = 0x6e6e_7261_696e_0001;
const CHAIN_SALT: u64 = 0x6368_6169_6e00_0002;

#[derive(Clone, Debug, PartialEq)]
pub struct BatchState<F> {
    pub spec: BatchSpec,
    pub generator: GeneratorParams<F>,
    pub transition_adam: AdamState<F>,
    pub emission_adam: AdamState<F>,
    /// Aligned with `spec.members`.
    pub chains: Vec<LatentChain<F>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatchRegistry<F> {
    pub batches: Vec<BatchState<F>>,
}

/// Splits generator tensors into the transition and emission groups.
pub fn split_groups<'a, F: Real>(
    tensors: Vec<ArrayViewMutD<'a, F>>,
) -> (Vec<ArrayViewMutD<'a, F>>, Vec<ArrayViewMutD<'a, F>>) {
    let mut t = tensors;
    let e = t.split_off(GeneratorParams::<F>::TRANSITION_TENSORS);
    (t, e)
}

pub fn split_views<'a, F: Real>(tensors: Vec<ArrayViewD<'a, F>>) -> (Vec<ArrayViewD<'a, F>>, Vec<ArrayViewD<'a, F>>) {
    let mut t = tensors;
    let e = t.split_off(GeneratorParams::<F>::TRANSITION_TENSORS);
    (t, e)
}

pub fn generator_adam_states<F: Real>(g: &GeneratorParams<F>) -> (AdamState<F>, AdamState<F>) {
    let all: Vec<IxDyn> = shapes(g);
    let (t, e) = all.split_at(GeneratorParams::<F>::TRANSITION_TENSORS);
    (AdamState::new(t), AdamState::new(e))
}

impl<F: Real> BatchRegistry<F> {
    /// One generator per kept batch, seeded by batch index; one chain per member,
    /// seeded by clip id. Unlabeled batches are dropped unless the mode uses them.
    pub fn build(samples: &[ClipSample], specs: &[BatchSpec], config: &TrainConfig) -> Result<Self, TrainError> {
        let mut batches = Vec::new();
        for spec in specs {
            if !spec.labeled && !config.mode.uses_unlabeled() {
                continue;
            }
            let first = spec
                .members
                .first()
                .and_then(|&m| samples.get(m))
                .ok_or_else(|| TrainError::Registry(format!("batch {} has no valid members", spec.index)))?;
            let (n, _, h, w) = first.rainy.dim();
            let gcfg = config.generator.with_target(h, w)?;
            let generator = GeneratorParams::init(&gcfg, config.seed ^ GENERATOR_SALT ^ spec.index as u64)?;
            let (transition_adam, emission_adam) = generator_adam_states(&generator);
            let mut chains = Vec::with_capacity(spec.members.len());
            for &m in &spec.members {
                let s = samples
                    .get(m)
                    .ok_or_else(|| TrainError::Registry(format!("batch {} names missing sample {m}", spec.index)))?;
                if s.is_labeled() != spec.labeled || s.rainy.dim() != first.rainy.dim() {
                    return Err(TrainError::Registry(format!("sample {m} does not fit batch {}", spec.index)));
                }
                chains.push(init_chain(
                    s.clip_id.clone(),
                    n,
                    &gcfg.transition,
                    stream_seed(config.seed ^ CHAIN_SALT, &s.clip_id, 0),
                ));
            }
            batches.push(BatchState { spec: spec.clone(), generator, transition_adam, emission_adam, chains });
        }
        if batches.is_empty() {
            return Err(TrainError::Registry("no batches to train on".into()));
        }
        Ok(Self { batches })
    }

    pub fn clip_ids(&self) -> Vec<Vec<ClipId>> {
        self.batches.iter().map(|b| b.chains.iter().map(|c| c.clip_id.clone()).collect()).collect()
    }

    pub fn mode_allows(&self, mode: Mode) -> bool {
        mode.uses_unlabeled() || self.batches.iter().all(|b| b.spec.labeled)
    }
}
