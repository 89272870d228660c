//! Smoothness energy on the background and the ground-truth energy for labeled clips.
//!
//! Inputs are (frames, channels, height, width) arrays. Forward differences are
//! taken along height (i), width (j) and time (t), omitted at the last index of
//! each axis, and every energy is reduced by the total element count.

use ndarray::{Array4, Zip};
use serde::{Deserialize, Serialize};

use crate::nn::Real;

#[derive(Debug, thiserror::Error)]
pub enum PriorError {
    #[error("invalid prior configuration: {0}")]
    Config(String),
    #[error("shape mismatch: {0:?} vs {1:?}")]
    Shape((usize, usize, usize, usize), (usize, usize, usize, usize)),
    #[error("non-finite input to prior energy")]
    NonFinite,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorConfig {
    pub rho: f64,
    /// Weights of the height, width and time differences.
    pub gamma: [f64; 3],
    pub eps0_sq: f64,
    pub charbonnier_eps: f64,
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self { rho: 0.5, gamma: [1.0, 1.0, 2.0], eps0_sq: 1e-6, charbonnier_eps: 1e-3 }
    }
}

impl PriorConfig {
    pub fn validate(&self) -> Result<(), PriorError> {
        if !(self.rho >= 0.0 && self.rho.is_finite()) {
            return Err(PriorError::Config(format!("rho must be non-negative, got {}", self.rho)));
        }
        if self.gamma.iter().any(|g| !(*g >= 0.0 && g.is_finite())) {
            return Err(PriorError::Config(format!("gamma must be non-negative, got {:?}", self.gamma)));
        }
        if !(self.eps0_sq > 0.0 && self.eps0_sq.is_finite()) {
            return Err(PriorError::Config(format!("eps0_sq must be positive, got {}", self.eps0_sq)));
        }
        if !(self.charbonnier_eps > 0.0 && self.charbonnier_eps.is_finite()) {
            return Err(PriorError::Config(format!("charbonnier_eps must be positive, got {}", self.charbonnier_eps)));
        }
        Ok(())
    }
}

/// `sqrt(x^2 + eps^2)`
pub fn charbonnier_abs<F: Real>(x: F, eps: F) -> F {
    (x * x + eps * eps).sqrt()
}

fn check_finite<F: Real>(f: &Array4<F>) -> Result<(), PriorError> {
    if f.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(PriorError::NonFinite)
    }
}

/// Energy and, when `grad` is given, its gradient added into `grad`.
fn mrf_impl<F: Real>(f: &Array4<F>, cfg: &PriorConfig, mut grad: Option<&mut [F]>) -> F {
    let (n, c, h, w) = f.dim();
    let f = f.as_standard_layout();
    let x = f.as_slice().expect("standard layout");
    let eps = F::lit(cfg.charbonnier_eps);
    let scale = F::lit(cfg.rho) / F::lit(x.len() as f64);
    let weights = [F::lit(cfg.gamma[0]), F::lit(cfg.gamma[1]), F::lit(cfg.gamma[2])];
    let strides = [w, 1, c * h * w];
    let mut sums = [F::zero(); 3];
    for t in 0..n {
        for ch in 0..c {
            for i in 0..h {
                for j in 0..w {
                    let idx = ((t * c + ch) * h + i) * w + j;
                    let has = [i + 1 < h, j + 1 < w, t + 1 < n];
                    for a in 0..3 {
                        if !has[a] || cfg.gamma[a] == 0.0 {
                            continue;
                        }
                        let d = x[idx + strides[a]] - x[idx];
                        let r = charbonnier_abs(d, eps);
                        sums[a] += r;
                        if let Some(gr) = grad.as_deref_mut() {
                            let dd = weights[a] * scale * d / r;
                            gr[idx + strides[a]] += dd;
                            gr[idx] -= dd;
                        }
                    }
                }
            }
        }
    }
    (weights[0] * sums[0] + weights[1] * sums[1] + weights[2] * sums[2]) * scale
}

pub fn mrf_energy<F: Real>(f: &Array4<F>, cfg: &PriorConfig) -> Result<F, PriorError> {
    check_finite(f)?;
    Ok(mrf_impl(f, cfg, None))
}

pub fn mrf_energy_grad<F: Real>(f: &Array4<F>, cfg: &PriorConfig) -> Result<(F, Array4<F>), PriorError> {
    check_finite(f)?;
    let mut g = Array4::<F>::zeros(f.dim());
    let e = mrf_impl(f, cfg, Some(g.as_slice_mut().expect("fresh array")));
    Ok((e, g))
}

fn check_pair<F: Real>(f: &Array4<F>, x: &Array4<F>) -> Result<(), PriorError> {
    if f.dim() != x.dim() {
        return Err(PriorError::Shape(f.dim(), x.dim()));
    }
    check_finite(f)?;
    check_finite(x)
}

pub fn mean_squared<F: Real>(a: &Array4<F>, b: &Array4<F>) -> F {
    let mut s = F::zero();
    Zip::from(a).and(b).for_each(|&p, &q| s += (p - q) * (p - q));
    s / F::lit(a.len() as f64)
}

/// `mean((f - x)^2) / eps0^2 + mrf_energy(f)`
pub fn labeled_prior_energy<F: Real>(f: &Array4<F>, x: &Array4<F>, cfg: &PriorConfig) -> Result<F, PriorError> {
    check_pair(f, x)?;
    Ok(mean_squared(f, x) / F::lit(cfg.eps0_sq) + mrf_impl(f, cfg, None))
}

pub fn labeled_prior_energy_grad<F: Real>(
    f: &Array4<F>,
    x: &Array4<F>,
    cfg: &PriorConfig,
) -> Result<(F, Array4<F>), PriorError> {
    check_pair(f, x)?;
    let k = F::lit(2.0 / (cfg.eps0_sq * f.len() as f64));
    let mut g = Zip::from(f).and(x).map_collect(|&p, &q| k * (p - q));
    let mrf = mrf_impl(f, cfg, Some(g.as_slice_mut().expect("fresh array")));
    Ok((mean_squared(f, x) / F::lit(cfg.eps0_sq) + mrf, g))
}
