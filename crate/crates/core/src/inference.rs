//! Posterior sampling of the generator latents by Langevin dynamics.
//!
//! Every clip owns a persistent chain `(s0, z, m)`. The energy is the mean
//! squared residual of `Y - background - rain` over `2 sigma^2` plus half the
//! mean squared latent coordinate.

use ndarray::{Array4, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::nn::{GeneratorParams, GeneratorTape, Latents, NnError, Real, TransitionConfig};
use crate::video::ClipId;

/// Ratio of current to initial energy treated as divergence.
pub const DIVERGENCE_FACTOR: f64 = 1e6;
/// Floor on the initial energy used by the divergence test.
const ENERGY_FLOOR: f64 = 1e-12;

#[derive(Debug, thiserror::Error)]
pub enum InferenceError {
    #[error("invalid sampler configuration: {0}")]
    Config(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite {what} for clip {clip}")]
    NonFinite { clip: ClipId, what: &'static str },
    #[error("Langevin chain for clip {clip} diverged: energy {reached:e} from initial {initial:e}")]
    Divergence { clip: ClipId, initial: f64, reached: f64 },
    #[error(transparent)]
    Network(#[from] NnError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LangevinConfig {
    pub delta: f64,
    pub steps: usize,
    /// Residual noise standard deviation in pixel units.
    pub sigma: f64,
    pub noise_enabled: bool,
}

impl Default for LangevinConfig {
    fn default() -> Self {
        Self { delta: 0.01, steps: 5, sigma: 0.05, noise_enabled: true }
    }
}

impl LangevinConfig {
    pub fn validate(&self) -> Result<(), InferenceError> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(InferenceError::Config(format!("delta must be positive, got {}", self.delta)));
        }
        if self.steps == 0 {
            return Err(InferenceError::Config("at least one Langevin step is required".into()));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(InferenceError::Config(format!("sigma must be positive, got {}", self.sigma)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatentChain<F> {
    pub clip_id: ClipId,
    pub latents: Latents<F>,
}

/// Standard-normal draws for every component, in the order s0, z, m.
pub fn init_chain<F: Real>(clip_id: ClipId, frames: usize, dims: &TransitionConfig, seed: u64) -> LatentChain<F> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut latents = Latents::zeros(dims, frames);
    for v in latents.iter_mut() {
        *v = F::lit(rng.sample::<f64, _>(StandardNormal));
    }
    LatentChain { clip_id, latents }
}

/// Seed of the noise stream for one chain in one epoch.
pub fn stream_seed(seed: u64, clip: &ClipId, epoch: u64) -> u64 {
    // splitmix64 finalizer over the combined key
    let mut x = seed ^ clip.stable_hash().rotate_left(17) ^ epoch.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Anything that renders latents into a rain clip of shape (n, 1 or c, h, w)
/// and back-propagates a rain gradient to the latents.
pub trait RainModel<F: Real> {
    type Tape;
    fn render(&self, latents: &Latents<F>) -> Result<(Array4<F>, Self::Tape), InferenceError>;
    fn latent_gradient(&self, tape: &Self::Tape, d_rain: &Array4<F>) -> Latents<F>;
}

impl<F: Real> RainModel<F> for GeneratorParams<F> {
    type Tape = GeneratorTape<F>;

    fn render(&self, latents: &Latents<F>) -> Result<(Array4<F>, Self::Tape), InferenceError> {
        Ok(self.generate(latents)?)
    }

    fn latent_gradient(&self, tape: &Self::Tape, d_rain: &Array4<F>) -> Latents<F> {
        self.backward(tape, d_rain, None)
    }
}

/// `y - background - rain`, with single-channel rain broadcast over channels.
pub fn residual<F: Real>(y: &Array4<F>, background: &Array4<F>, rain: &Array4<F>) -> Result<Array4<F>, InferenceError> {
    let (n, c, h, w) = y.dim();
    let (rn, rc, rh, rw) = rain.dim();
    if background.dim() != y.dim() || (rn, rh, rw) != (n, h, w) || !(rc == 1 || rc == c) {
        return Err(InferenceError::Shape(format!(
            "clip {:?}, background {:?}, rain {:?}",
            y.dim(),
            background.dim(),
            rain.dim()
        )));
    }
    let mut r = y - background;
    if rc == c {
        r -= rain;
    } else {
        for mut ch in r.axis_iter_mut(Axis(1)) {
            ch -= &rain.index_axis(Axis(1), 0);
        }
    }
    Ok(r)
}

/// Gradient of the likelihood term with respect to the rain clip, given the residual.
pub fn rain_gradient<F: Real>(res: &Array4<F>, rain_channels: usize, sigma: f64) -> Array4<F> {
    let k = F::lit(-1.0 / (sigma * sigma * res.len() as f64));
    if rain_channels == res.dim().1 {
        res.mapv(|v| v * k)
    } else {
        res.sum_axis(Axis(1)).insert_axis(Axis(1)).mapv(|v| v * k)
    }
}

fn likelihood<F: Real>(res: &Array4<F>, sigma: f64) -> F {
    res.iter().map(|&v| v * v).sum::<F>() / F::lit(2.0 * sigma * sigma * res.len() as f64)
}

fn prior<F: Real>(latents: &Latents<F>) -> F {
    latents.sq_norm() / F::lit(2.0 * latents.len() as f64)
}

pub fn latent_energy<F: Real, M: RainModel<F>>(
    latents: &Latents<F>,
    y: &Array4<F>,
    background: &Array4<F>,
    model: &M,
    sigma: f64,
) -> Result<F, InferenceError> {
    let (rain, _) = model.render(latents)?;
    let res = residual(y, background, &rain)?;
    Ok(likelihood(&res, sigma) + prior(latents))
}

/// Energy and its exact gradient with respect to (s0, z, m).
pub fn latent_energy_grad<F: Real, M: RainModel<F>>(
    latents: &Latents<F>,
    y: &Array4<F>,
    background: &Array4<F>,
    model: &M,
    sigma: f64,
) -> Result<(F, Latents<F>), InferenceError> {
    let (rain, tape) = model.render(latents)?;
    let res = residual(y, background, &rain)?;
    let mut grad = model.latent_gradient(&tape, &rain_gradient(&res, rain.dim().1, sigma));
    let k = F::lit(1.0 / latents.len() as f64);
    for (g, &u) in grad.iter_mut().zip(latents.iter()) {
        *g += u * k;
    }
    Ok((likelihood(&res, sigma) + prior(latents), grad))
}

/// `u <- u - (delta^2 / 2) grad + delta xi`; `xi` is skipped when `noise` is `None`.
pub fn langevin_step<F: Real, R: Rng + ?Sized>(
    latents: &mut Latents<F>,
    grad: &Latents<F>,
    delta: f64,
    noise: Option<&mut R>,
) -> Result<(), InferenceError> {
    if grad.s0.dim() != latents.s0.dim() || grad.z.dim() != latents.z.dim() || grad.m.dim() != latents.m.dim() {
        return Err(InferenceError::Shape("gradient does not match the chain".into()));
    }
    if !grad.all_finite() {
        return Err(InferenceError::NonFinite { clip: ClipId::new("?"), what: "energy gradient" });
    }
    let drift = F::lit(delta * delta / 2.0);
    for (u, &g) in latents.iter_mut().zip(grad.iter()) {
        *u -= drift * g;
    }
    if let Some(rng) = noise {
        let d = F::lit(delta);
        for u in latents.iter_mut() {
            *u += d * F::lit(rng.sample::<f64, _>(StandardNormal));
        }
    }
    Ok(())
}

/// Energies at the start and end of one sampling run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunStats {
    pub initial_energy: f64,
    pub final_energy: f64,
}

/// Runs `cfg.steps` Langevin steps on `chain` in place.
pub fn run_langevin<F: Real, M: RainModel<F>, R: Rng + ?Sized>(
    chain: &mut LatentChain<F>,
    y: &Array4<F>,
    background: &Array4<F>,
    model: &M,
    cfg: &LangevinConfig,
    rng: &mut R,
) -> Result<RunStats, InferenceError> {
    cfg.validate()?;
    if chain.latents.frames() != y.dim().0 {
        return Err(InferenceError::Shape(format!(
            "chain for {} has {} frames, clip has {}",
            chain.clip_id,
            chain.latents.frames(),
            y.dim().0
        )));
    }
    let non_finite = |what| InferenceError::NonFinite { clip: chain.clip_id.clone(), what };
    let (e0, mut grad) = latent_energy_grad(&chain.latents, y, background, model, cfg.sigma)?;
    let initial = e0.as_f64();
    if !initial.is_finite() {
        return Err(non_finite("initial energy"));
    }
    let limit = DIVERGENCE_FACTOR * initial.max(ENERGY_FLOOR);
    let mut energy = initial;
    for k in 0..cfg.steps {
        let noise = if cfg.noise_enabled { Some(&mut *rng) } else { None };
        langevin_step(&mut chain.latents, &grad, cfg.delta, noise).map_err(|e| match e {
            InferenceError::NonFinite { what, .. } => non_finite(what),
            other => other,
        })?;
        energy = if k + 1 < cfg.steps {
            let (e, g) = latent_energy_grad(&chain.latents, y, background, model, cfg.sigma)?;
            grad = g;
            e.as_f64()
        } else {
            latent_energy(&chain.latents, y, background, model, cfg.sigma)?.as_f64()
        };
        if !energy.is_finite() {
            return Err(non_finite("energy"));
        }
        if energy > limit {
            return Err(InferenceError::Divergence { clip: chain.clip_id.clone(), initial, reached: energy });
        }
    }
    Ok(RunStats { initial_energy: initial, final_energy: energy })
}
