//! The M-step objective and its gradients with respect to background and rain.

use ndarray::{Array4, Zip};

use super::config::Mode;
use super::TrainError;
use crate::inference::{rain_gradient, residual};
use crate::nn::Real;
use crate::priors::{labeled_prior_energy_grad, mean_squared, mrf_energy_grad, PriorConfig};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossTerms {
    pub total: f64,
    pub likelihood: f64,
    pub smoothness: f64,
    pub truth: f64,
}

#[derive(Clone, Debug)]
pub struct LossGrads<F> {
    pub d_background: Array4<F>,
    /// Present whenever the mode uses the generator.
    pub d_rain: Option<Array4<F>>,
}

/// Loss of one clip. `clean` marks a labeled clip; `rain` is the generator output
/// at the sampled latents and is ignored by `Baseline1`.
pub fn m_step_loss<F: Real>(
    y: &Array4<F>,
    clean: Option<&Array4<F>>,
    background: &Array4<F>,
    rain: Option<&Array4<F>>,
    prior: &PriorConfig,
    sigma: f64,
    mode: Mode,
) -> Result<(LossTerms, LossGrads<F>), TrainError> {
    if background.dim() != y.dim() {
        return Err(TrainError::Shape(format!("background {:?} vs clip {:?}", background.dim(), y.dim())));
    }
    if mode == Mode::Baseline1 {
        let x = clean.ok_or_else(|| TrainError::Shape("the MSE baseline needs ground truth".into()))?;
        if x.dim() != y.dim() {
            return Err(TrainError::Shape(format!("clean {:?} vs clip {:?}", x.dim(), y.dim())));
        }
        let k = F::lit(2.0 / x.len() as f64);
        let d = Zip::from(background).and(x).map_collect(|&f, &t| k * (f - t));
        let mse = mean_squared(background, x).as_f64();
        let terms = LossTerms { total: mse, truth: mse, ..Default::default() };
        return Ok((terms, LossGrads { d_background: d, d_rain: None }));
    }
    let rain = rain.ok_or_else(|| TrainError::Shape("generator output missing".into()))?;
    let mut prior = prior.clone();
    if mode == Mode::Baseline2 {
        prior.rho = 0.0;
    }

    let res = residual(y, background, rain)?;
    let n = res.len() as f64;
    let likelihood = res.iter().map(|v| v.as_f64() * v.as_f64()).sum::<f64>() / (2.0 * sigma * sigma * n);
    let d_rain = rain_gradient(&res, rain.dim().1, sigma);

    let (truth, smoothness, mut d_bg) = match clean {
        Some(x) => {
            let (e, g) = labeled_prior_energy_grad(background, x, &prior)?;
            let truth = mean_squared(background, x).as_f64() / prior.eps0_sq;
            (truth, e.as_f64() - truth, g)
        }
        None => {
            let (e, g) = mrf_energy_grad(background, &prior)?;
            (0.0, e.as_f64(), g)
        }
    };
    let k = F::lit(1.0 / (sigma * sigma * n));
    Zip::from(&mut d_bg).and(&res).for_each(|d, &r| *d -= k * r);
    let terms = LossTerms { total: likelihood + smoothness + truth, likelihood, smoothness, truth };
    Ok((terms, LossGrads { d_background: d_bg, d_rain: Some(d_rain) }))
}
