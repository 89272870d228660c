//! Fitting one generator to a single rain-layer clip by alternating latent
//! sampling and generator-only gradient steps.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::AdamConfig;
use super::optim::clip_grad_norm;
use super::registry::{generator_adam_states, split_groups, split_views};
use super::TrainError;
use crate::inference::{init_chain, rain_gradient, residual, run_langevin, stream_seed, LangevinConfig, LatentChain};
use crate::nn::{GeneratorConfig, GeneratorParams, ParamSet, Real};
use crate::video::{ClipId, VideoClip};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub iterations: usize,
    pub lr_transition: f64,
    pub lr_emission: f64,
    pub clip_norm: f64,
    pub adam: AdamConfig,
    pub langevin: LangevinConfig,
    pub generator: GeneratorConfig,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            iterations: 2000,
            lr_transition: 1e-3,
            lr_emission: 1e-4,
            clip_norm: 10.0,
            adam: AdamConfig::default(),
            langevin: LangevinConfig::default(),
            generator: GeneratorConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FitResult<F> {
    pub generator: GeneratorParams<F>,
    pub chain: LatentChain<F>,
    /// Generator output at the final latents.
    pub reconstruction: VideoClip,
    /// Latent energy after each E-step, before the parameter update.
    pub losses: Vec<f64>,
}

/// Fits a generator, retargeted to the clip size, to `rain`.
pub fn fit_generator<F: Real>(rain: &VideoClip, cfg: &FitConfig) -> Result<FitResult<F>, TrainError> {
    let (n, c, h, w) = rain.dim();
    let gcfg = cfg.generator.with_target(h, w)?;
    if gcfg.emission.out_channels != c {
        return Err(TrainError::Shape(format!(
            "generator emits {} channels, rain clip has {c}",
            gcfg.emission.out_channels
        )));
    }
    if cfg.iterations == 0 || !(cfg.lr_transition > 0.0 && cfg.lr_emission > 0.0 && cfg.clip_norm > 0.0) {
        return Err(TrainError::Config("fit needs iterations, positive rates and a positive clip norm".into()));
    }
    cfg.langevin.validate()?;
    let y = rain.to_real::<F>();
    let background = ndarray::Array4::<F>::zeros(y.dim());
    let mut generator = GeneratorParams::<F>::init(&gcfg, cfg.seed)?;
    let (mut adam_t, mut adam_e) = generator_adam_states(&generator);
    let id = ClipId::new("fit");
    let mut chain = init_chain(id.clone(), n, &gcfg.transition, stream_seed(cfg.seed, &id, u64::MAX));
    let mut losses = Vec::with_capacity(cfg.iterations);

    for it in 0..cfg.iterations {
        let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(cfg.seed, &id, it as u64));
        run_langevin(&mut chain, &y, &background, &generator, &cfg.langevin, &mut rng)?;
        let (out, tape) = generator.generate(&chain.latents)?;
        let res = residual(&y, &background, &out)?;
        let sigma = cfg.langevin.sigma;
        let loss = res.iter().map(|v| v.as_f64().powi(2)).sum::<f64>() / (2.0 * sigma * sigma * res.len() as f64)
            + chain.latents.sq_norm().as_f64() / (2.0 * chain.latents.len() as f64);
        if !loss.is_finite() {
            return Err(TrainError::NonFinite { epoch: it + 1, batch: 0 });
        }
        losses.push(loss);

        let mut grads = generator.zeros_like();
        generator.backward(&tape, &rain_gradient(&res, c, cfg.langevin.sigma), Some(&mut grads));
        let (gt, ge) = split_groups(grads.tensors_mut());
        clip_grad_norm(gt, cfg.clip_norm);
        clip_grad_norm(ge, cfg.clip_norm);
        let (gt, ge) = split_views(grads.named_tensors().into_iter().map(|(_, t)| t).collect());
        let (pt, pe) = split_groups(generator.tensors_mut());
        adam_t.update(pt, &gt, cfg.lr_transition, &cfg.adam);
        adam_e.update(pe, &ge, cfg.lr_emission, &cfg.adam);
    }
    let (out, _) = generator.generate(&chain.latents)?;
    let reconstruction = VideoClip::from_real(out.view())?;
    Ok(FitResult { generator, chain, reconstruction, losses })
}

/// Means of consecutive non-overlapping windows; a trailing partial window is dropped.
pub fn window_means(values: &[f64], window: usize) -> Vec<f64> {
    values.chunks_exact(window.max(1)).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect()
}
