//! Adam with per-group state, step decay and norm clipping.

use ndarray::{ArrayD, ArrayViewD, ArrayViewMutD, IxDyn, Zip};

use super::config::AdamConfig;
use crate::nn::Real;

/// `base * factor^floor((epoch - 1) / every)` for 1-based epochs.
pub fn step_decay(base: f64, epoch: usize, every: usize, factor: f64) -> f64 {
    let k = (epoch.max(1) - 1) / every.max(1);
    base * factor.powi(k as i32)
}

/// Moment estimates for one parameter group.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<F> {
    pub step: u64,
    pub m: Vec<ArrayD<F>>,
    pub v: Vec<ArrayD<F>>,
}

impl<F: Real> AdamState<F> {
    pub fn new(shapes: &[IxDyn]) -> Self {
        Self {
            step: 0,
            m: shapes.iter().map(|s| ArrayD::zeros(s.clone())).collect(),
            v: shapes.iter().map(|s| ArrayD::zeros(s.clone())).collect(),
        }
    }

    pub fn update(&mut self, params: Vec<ArrayViewMutD<'_, F>>, grads: &[ArrayViewD<'_, F>], lr: f64, cfg: &AdamConfig) {
        assert_eq!(params.len(), self.m.len(), "Adam group size");
        assert_eq!(grads.len(), self.m.len(), "Adam gradient count");
        self.step += 1;
        let t = self.step as i32;
        let b1 = F::lit(cfg.beta1);
        let b2 = F::lit(cfg.beta2);
        let c1 = F::lit(1.0 - cfg.beta1.powi(t));
        let c2 = F::lit(1.0 - cfg.beta2.powi(t));
        let lr = F::lit(lr);
        let eps = F::lit(cfg.eps);
        let one = F::one();
        for (((p, g), m), v) in params.into_iter().zip(grads).zip(self.m.iter_mut()).zip(self.v.iter_mut()) {
            Zip::from(p).and(g).and(m).and(v).for_each(|p, &g, m, v| {
                *m = b1 * *m + (one - b1) * g;
                *v = b2 * *v + (one - b2) * g * g;
                *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
            });
        }
    }
}

/// Rescales the group to norm at most `max_norm`; returns the norm before clipping.
pub fn clip_grad_norm<F: Real>(grads: Vec<ArrayViewMutD<'_, F>>, max_norm: f64) -> f64 {
    let norm = grads.iter().flat_map(|g| g.iter()).map(|v| v.as_f64() * v.as_f64()).sum::<f64>().sqrt();
    if norm > max_norm {
        let k = F::lit(max_norm / norm);
        for mut g in grads {
            g.mapv_inplace(|v| v * k);
        }
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{arr1, Array1};

    #[test]
    fn halving_at_period_boundaries() {
        assert_eq!(step_decay(2e-4, 1, 30, 0.5), 2e-4);
        assert_eq!(step_decay(2e-4, 30, 30, 0.5), 2e-4);
        assert_eq!(step_decay(2e-4, 31, 30, 0.5), 2e-4 / 2.0);
        assert_eq!(step_decay(2e-4, 30, 30, 0.5) / 2.0, step_decay(2e-4, 31, 30, 0.5));
        assert_eq!(step_decay(1e-3, 61, 30, 0.5), 2.5e-4);
    }

    #[test]
    fn first_adam_step_moves_by_the_rate() {
        // With bias correction the first step is lr * g / (|g| + eps).
        let mut p = arr1(&[1.0f64, -2.0, 0.5]);
        let g = arr1(&[0.3f64, -4.0, 0.0]);
        let mut s = AdamState::<f64>::new(&[IxDyn(&[3])]);
        let cfg = AdamConfig::default();
        s.update(vec![p.view_mut().into_dyn()], &[g.view().into_dyn()], 0.1, &cfg);
        let want: Array1<f64> = arr1(&[1.0 - 0.1 * 0.3 / (0.3 + 1e-8), -2.0 + 0.1 * 4.0 / (4.0 + 1e-8), 0.5]);
        assert!((&p - &want).iter().all(|d| d.abs() < 1e-12));
        assert_eq!(s.step, 1);
    }

    #[test]
    fn adam_matches_scalar_recurrence() {
        let cfg = AdamConfig::default();
        let mut s = AdamState::<f64>::new(&[IxDyn(&[1])]);
        let mut p = arr1(&[0.0f64]);
        let (mut m, mut v, mut q) = (0.0f64, 0.0f64, 0.0f64);
        for t in 1..=5 {
            let g = (t as f64).sin();
            s.update(vec![p.view_mut().into_dyn()], &[arr1(&[g]).view().into_dyn()], 0.01, &cfg);
            m = 0.9 * m + 0.1 * g;
            v = 0.999 * v + 0.001 * g * g;
            q -= 0.01 * (m / (1.0 - 0.9f64.powi(t))) / ((v / (1.0 - 0.999f64.powi(t))).sqrt() + 1e-8);
            assert!((p[0] - q).abs() < 1e-14);
        }
    }

    #[test]
    fn clipping_caps_the_group_norm() {
        let mut a = arr1(&[3.0f64, 4.0]);
        let mut b = arr1(&[0.0f64, 12.0]);
        let n = clip_grad_norm(vec![a.view_mut().into_dyn(), b.view_mut().into_dyn()], 6.5);
        assert_eq!(n, 13.0);
        let after = (a.iter().chain(b.iter()).map(|v| v * v).sum::<f64>()).sqrt();
        assert!((after - 6.5).abs() < 1e-12);
        let mut c = arr1(&[0.1f64]);
        assert_eq!(clip_grad_norm(vec![c.view_mut().into_dyn()], 1.0), 0.1);
        assert_eq!(c[0], 0.1);
    }
}
