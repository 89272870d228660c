use serde::{Deserialize, Serialize};

use super::TrainError;
use crate::inference::LangevinConfig;
use crate::nn::{DerainerConfig, GeneratorConfig};
use crate::priors::PriorConfig;
use crate::video::DatasetConfig;

/// Which terms and which batches take part in training.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Full objective over labeled and unlabeled batches.
    #[default]
    SemiSupervised,
    /// Plain mean squared error against ground truth, labeled batches only.
    Baseline1,
    /// Full objective with the smoothness weight forced to zero, labeled batches only.
    Baseline2,
    /// Full objective with the configured smoothness weight, labeled batches only.
    Baseline3,
}

impl Mode {
    pub fn uses_unlabeled(self) -> bool {
        self == Mode::SemiSupervised
    }

    pub fn uses_generator(self) -> bool {
        self != Mode::Baseline1
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearningRates {
    pub transition: f64,
    pub emission: f64,
    pub derainer: f64,
}

impl Default for LearningRates {
    fn default() -> Self {
        Self { transition: 1e-3, emission: 1e-4, derainer: 2e-4 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub mode: Mode,
    pub epochs: usize,
    /// Leading epochs that update only the derainer and skip sampling.
    pub pretrain_epochs: usize,
    pub learning_rates: LearningRates,
    /// Rates are multiplied by `decay_factor` once every `decay_every` epochs.
    pub decay_every: usize,
    pub decay_factor: f64,
    /// Per-group gradient norm ceiling.
    pub clip_norm: f64,
    pub adam: AdamConfig,
    pub prior: PriorConfig,
    pub langevin: LangevinConfig,
    pub derainer: DerainerConfig,
    pub generator: GeneratorConfig,
    pub dataset: DatasetConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            mode: Mode::SemiSupervised,
            epochs: 60,
            pretrain_epochs: 5,
            learning_rates: LearningRates::default(),
            decay_every: 30,
            decay_factor: 0.5,
            clip_norm: 10.0,
            adam: AdamConfig::default(),
            prior: PriorConfig::default(),
            langevin: LangevinConfig::default(),
            derainer: DerainerConfig::default(),
            generator: GeneratorConfig::default(),
            dataset: DatasetConfig::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: String| Err(TrainError::Config(m));
        let r = &self.learning_rates;
        if ![r.transition, r.emission, r.derainer].iter().all(|v| *v > 0.0 && v.is_finite()) {
            return bad(format!("learning rates must be positive, got {r:?}"));
        }
        if self.epochs == 0 || self.pretrain_epochs >= self.epochs {
            return bad(format!(
                "pretrain epochs ({}) must be fewer than total epochs ({})",
                self.pretrain_epochs, self.epochs
            ));
        }
        if self.decay_every == 0 || !(self.decay_factor > 0.0 && self.decay_factor <= 1.0) {
            return bad("decay needs a positive period and a factor in (0, 1]".into());
        }
        if !(self.clip_norm > 0.0) {
            return bad(format!("clip norm must be positive, got {}", self.clip_norm));
        }
        let a = &self.adam;
        if !((0.0..1.0).contains(&a.beta1) && (0.0..1.0).contains(&a.beta2) && a.eps > 0.0) {
            return bad(format!("invalid Adam constants {a:?}"));
        }
        self.prior.validate()?;
        self.langevin.validate()?;
        self.derainer.validate()?;
        // The emission seed is re-derived from the patch size, so only the retargeted form must hold.
        self.generator.with_target(self.dataset.patch_size, self.dataset.patch_size)?;
        if self.dataset.patch_size % self.derainer.shuffle != 0 {
            return bad(format!(
                "patch size {} not divisible by shuffle factor {}",
                self.dataset.patch_size, self.derainer.shuffle
            ));
        }
        Ok(())
    }

    /// Rate for a group at a 1-based epoch.
    pub fn lr_at(&self, base: f64, epoch: usize) -> f64 {
        super::optim::step_decay(base, epoch, self.decay_every, self.decay_factor)
    }

    /// Small networks and two-clip batches for 64x64, 20-frame desk experiments.
    pub fn desk_scale() -> Self {
        let mut c = Self::default();
        c.derainer.width = 12;
        c.derainer.blocks = 2;
        let t = &mut c.generator.transition;
        t.state_dim = 16;
        t.noise_dim = 8;
        t.appearance_dim = 8;
        t.hidden = 32;
        c.generator.emission.channels = 16;
        c.dataset.batch_size = 2;
        c
    }

    /// Smoothness settings after the mode override.
    pub fn effective_prior(&self) -> PriorConfig {
        let mut p = self.prior.clone();
        if self.mode == Mode::Baseline2 {
            p.rho = 0.0;
        }
        p
    }
}
