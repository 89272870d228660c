//! The epoch loop: E-step sampling on every member chain of a batch, then one
//! clipped Adam step on the derainer and on that batch's generator.

use std::time::Instant;

use ndarray::Array4;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{Mode, TrainConfig};
use super::loss::m_step_loss;
use super::optim::{clip_grad_norm, AdamState};
use super::registry::{split_groups, split_views, BatchRegistry};
use super::TrainError;
use crate::inference::{run_langevin, stream_seed};
use crate::nn::{derainer_forward, shapes, DerainerParams, ParamSet, Real};
use crate::video::{psnr_luminance, ssim_luminance, BatchSpec, ClipSample};

const DERAINER_SALT: u64 = 0x6465_7261_696e_0003;

/// One CSV row: per epoch and batch kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub epoch: usize,
    pub batch_kind: String,
    pub mean_loss: f64,
    pub val_psnr: Option<f64>,
    pub val_ssim: Option<f64>,
    pub lr_derainer: f64,
    pub lr_transition: f64,
    pub lr_emission: f64,
    pub wall_seconds: f64,
}

impl LogRow {
    pub const CSV_HEADER: &'static str =
        "epoch,batch_kind,mean_loss,val_psnr,val_ssim,lr_derainer,lr_transition,lr_emission,wall_seconds";

    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        format!(
            "{},{},{:.9e},{},{},{:e},{:e},{:e},{:.3}",
            self.epoch,
            self.batch_kind,
            self.mean_loss,
            opt(self.val_psnr),
            opt(self.val_ssim),
            self.lr_derainer,
            self.lr_transition,
            self.lr_emission,
            self.wall_seconds
        )
    }
}

pub fn log_to_csv(rows: &[LogRow]) -> String {
    let mut s = String::from(LogRow::CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.to_csv());
        s.push('\n');
    }
    s
}

/// Mean luminance PSNR and SSIM of the clamped derainer output over labeled clips.
pub fn evaluate<F: Real>(derainer: &DerainerParams<F>, clips: &[ClipSample]) -> Result<(f64, f64), TrainError> {
    if clips.is_empty() {
        return Err(TrainError::Config("evaluation needs at least one clip".into()));
    }
    let (mut p, mut s) = (0.0, 0.0);
    for c in clips {
        let clean = c
            .clean
            .as_ref()
            .ok_or_else(|| TrainError::Config(format!("evaluation clip {} has no ground truth", c.clip_id)))?;
        let out = derainer_forward(&c.rainy, derainer)?;
        p += psnr_luminance(&out, clean)?;
        s += ssim_luminance(&out, clean)?;
    }
    let n = clips.len() as f64;
    Ok((p / n, s / n))
}

#[derive(Clone, Debug)]
pub struct Trainer<F> {
    pub config: TrainConfig,
    pub derainer: DerainerParams<F>,
    pub derainer_adam: AdamState<F>,
    pub registry: BatchRegistry<F>,
    /// Completed epochs.
    pub epoch: usize,
    pub log: Vec<LogRow>,
    inputs: Vec<(Array4<F>, Option<Array4<F>>)>,
}

impl<F: Real> Trainer<F> {
    pub fn new(config: TrainConfig, samples: &[ClipSample], specs: &[BatchSpec]) -> Result<Self, TrainError> {
        config.validate()?;
        let derainer = DerainerParams::init(&config.derainer, config.seed ^ DERAINER_SALT)?;
        let registry = BatchRegistry::build(samples, specs, &config)?;
        Self::assemble(config, derainer, None, registry, 0, Vec::new(), samples)
    }

    /// Rebuilds a trainer from saved state; `samples` must be the set the state was trained on.
    pub fn from_parts(
        config: TrainConfig,
        derainer: DerainerParams<F>,
        derainer_adam: AdamState<F>,
        registry: BatchRegistry<F>,
        epoch: usize,
        log: Vec<LogRow>,
        samples: &[ClipSample],
    ) -> Result<Self, TrainError> {
        config.validate()?;
        for b in &registry.batches {
            for (c, &m) in b.chains.iter().zip(&b.spec.members) {
                let s = samples
                    .get(m)
                    .ok_or_else(|| TrainError::Registry(format!("saved batch {} names missing sample {m}", b.spec.index)))?;
                if s.clip_id != c.clip_id {
                    return Err(TrainError::Registry(format!(
                        "sample {m} is {} but the saved chain belongs to {}",
                        s.clip_id, c.clip_id
                    )));
                }
            }
        }
        Self::assemble(config, derainer, Some(derainer_adam), registry, epoch, log, samples)
    }

    fn assemble(
        config: TrainConfig,
        derainer: DerainerParams<F>,
        adam: Option<AdamState<F>>,
        registry: BatchRegistry<F>,
        epoch: usize,
        log: Vec<LogRow>,
        samples: &[ClipSample],
    ) -> Result<Self, TrainError> {
        let derainer_adam = adam.unwrap_or_else(|| AdamState::new(&shapes(&derainer)));
        let inputs = samples.iter().map(|s| (s.rainy.to_real::<F>(), s.clean.as_ref().map(|c| c.to_real::<F>()))).collect();
        Ok(Self { config, derainer, derainer_adam, registry, epoch, log, inputs })
    }

    pub fn is_pretrain(&self, epoch: usize) -> bool {
        epoch <= self.config.pretrain_epochs
    }

    /// Runs one full pass over every batch in index order and appends log rows.
    pub fn run_epoch(&mut self, validation: &[ClipSample]) -> Result<(), TrainError> {
        let epoch = self.epoch + 1;
        let start = Instant::now();
        let (mut lab, mut unl) = ((0.0, 0usize), (0.0, 0usize));
        for b in 0..self.registry.batches.len() {
            let index = self.registry.batches[b].spec.index;
            let loss = self
                .train_batch(b, epoch)
                .map_err(|e| match e {
                    e @ TrainError::NonFinite { .. } => e,
                    e => TrainError::Step { epoch, batch: index, source: Box::new(e) },
                })?;
            let acc = if self.registry.batches[b].spec.labeled { &mut lab } else { &mut unl };
            acc.0 += loss;
            acc.1 += 1;
        }
        self.epoch = epoch;
        let (val_psnr, val_ssim) = if validation.is_empty() {
            (None, None)
        } else {
            let (p, s) = evaluate(&self.derainer, validation)?;
            (Some(p), Some(s))
        };
        let wall = start.elapsed().as_secs_f64();
        let r = &self.config.learning_rates;
        for (kind, (sum, count)) in [("labeled", lab), ("unlabeled", unl)] {
            if count > 0 {
                self.log.push(LogRow {
                    epoch,
                    batch_kind: kind.into(),
                    mean_loss: sum / count as f64,
                    val_psnr,
                    val_ssim,
                    lr_derainer: self.config.lr_at(r.derainer, epoch),
                    lr_transition: self.config.lr_at(r.transition, epoch),
                    lr_emission: self.config.lr_at(r.emission, epoch),
                    wall_seconds: wall,
                });
            }
        }
        Ok(())
    }

    /// Runs the remaining epochs up to `config.epochs`.
    pub fn train(&mut self, validation: &[ClipSample]) -> Result<(), TrainError> {
        while self.epoch < self.config.epochs {
            self.run_epoch(validation)?;
        }
        Ok(())
    }

    /// E-step and M-step on one batch; returns the mean member loss.
    pub fn train_batch(&mut self, b: usize, epoch: usize) -> Result<f64, TrainError> {
        let Self { config, derainer, derainer_adam, registry, inputs, .. } = self;
        let mode = config.mode;
        let pretrain = epoch <= config.pretrain_epochs;
        let prior = config.effective_prior();
        let sigma = config.langevin.sigma;
        let batch = &mut registry.batches[b];
        let update_generator = mode.uses_generator() && !pretrain;

        let mut dw = derainer.zeros_like();
        let mut dtheta = update_generator.then(|| batch.generator.zeros_like());
        let mut total = 0.0;
        for (k, &member) in batch.spec.members.iter().enumerate() {
            let (y, x) = &inputs[member];
            let (bg, tape) = derainer.forward(y)?;
            let generated = if mode.uses_generator() {
                let chain = &mut batch.chains[k];
                if !pretrain {
                    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(config.seed, &chain.clip_id, epoch as u64));
                    run_langevin(chain, y, &bg, &batch.generator, &config.langevin, &mut rng)?;
                }
                Some(batch.generator.generate(&chain.latents)?)
            } else {
                None
            };
            let rain = generated.as_ref().map(|(r, _)| r);
            let (terms, grads) = m_step_loss(y, x.as_ref(), &bg, rain, &prior, sigma, mode)?;
            if !terms.total.is_finite() {
                return Err(TrainError::NonFinite { epoch, batch: batch.spec.index });
            }
            total += terms.total;
            derainer.backward(&tape, &grads.d_background, &mut dw);
            if let (Some(dt), Some((_, gtape)), Some(dr)) = (dtheta.as_mut(), generated.as_ref(), grads.d_rain.as_ref()) {
                batch.generator.backward(gtape, dr, Some(dt));
            }
        }
        let size = batch.spec.members.len() as f64;
        let r = &config.learning_rates;

        dw.scale(F::lit(1.0 / size));
        clip_grad_norm(dw.tensors_mut(), config.clip_norm);
        if !dw.all_finite() {
            return Err(TrainError::NonFinite { epoch, batch: batch.spec.index });
        }
        let grads: Vec<_> = dw.named_tensors().into_iter().map(|(_, t)| t).collect();
        derainer_adam.update(derainer.tensors_mut(), &grads, config.lr_at(r.derainer, epoch), &config.adam);

        if let Some(mut dt) = dtheta {
            dt.scale(F::lit(1.0 / size));
            let (gt, ge) = split_groups(dt.tensors_mut());
            clip_grad_norm(gt, config.clip_norm);
            clip_grad_norm(ge, config.clip_norm);
            if !dt.all_finite() {
                return Err(TrainError::NonFinite { epoch, batch: batch.spec.index });
            }
            let (gt, ge) = split_views(dt.named_tensors().into_iter().map(|(_, t)| t).collect());
            let (pt, pe) = split_groups(batch.generator.tensors_mut());
            batch.transition_adam.update(pt, &gt, config.lr_at(r.transition, epoch), &config.adam);
            batch.emission_adam.update(pe, &ge, config.lr_at(r.emission, epoch), &config.adam);
        }
        Ok(total / size)
    }

    /// Mean loss of one batch at the current parameters and latents, without sampling.
    pub fn batch_loss(&self, b: usize) -> Result<f64, TrainError> {
        let cfg = &self.config;
        let batch = &self.registry.batches[b];
        let prior = cfg.effective_prior();
        let mut total = 0.0;
        for (k, &member) in batch.spec.members.iter().enumerate() {
            let (y, x) = &self.inputs[member];
            let (bg, _) = self.derainer.forward(y)?;
            let rain = if cfg.mode.uses_generator() {
                Some(batch.generator.generate(&batch.chains[k].latents)?.0)
            } else {
                None
            };
            total += m_step_loss(y, x.as_ref(), &bg, rain.as_ref(), &prior, cfg.langevin.sigma, cfg.mode)?.0.total;
        }
        Ok(total / batch.spec.members.len() as f64)
    }
}

/// Builds a trainer and runs every epoch.
pub fn em_train<F: Real>(
    config: TrainConfig,
    samples: &[ClipSample],
    specs: &[BatchSpec],
    validation: &[ClipSample],
) -> Result<Trainer<F>, TrainError> {
    let mut t = Trainer::new(config, samples, specs)?;
    t.train(validation)?;
    Ok(t)
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::SemiSupervised => "semi_supervised",
            Mode::Baseline1 => "baseline1",
            Mode::Baseline2 => "baseline2",
            Mode::Baseline3 => "baseline3",
        }
    }
}
