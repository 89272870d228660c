//! Uniform access to the learnable tensors of a network.

use ndarray::{ArrayD, ArrayViewD, ArrayViewMutD, IxDyn};

use super::layers::{Conv, Linear};
use super::Real;

/// A fixed, ordered collection of named tensors. The order of `named_tensors`
/// and `tensors_mut` must agree.
pub trait ParamSet<F: Real>: Clone {
    fn named_tensors(&self) -> Vec<(String, ArrayViewD<'_, F>)>;
    fn tensors_mut(&mut self) -> Vec<ArrayViewMutD<'_, F>>;

    fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.tensors_mut().into_iter().for_each(|mut t| t.fill(F::zero()));
        z
    }

    fn sq_norm(&self) -> F {
        self.named_tensors()
            .iter()
            .map(|(_, t)| t.iter().map(|&v| v * v).fold(F::zero(), |a, b| a + b))
            .fold(F::zero(), |a, b| a + b)
    }

    fn scale(&mut self, a: F) {
        self.tensors_mut().into_iter().for_each(|mut t| t.mapv_inplace(|v| v * a));
    }

    /// `self += a * other`
    fn add_scaled(&mut self, other: &Self, a: F) {
        let src: Vec<ArrayD<F>> = other.named_tensors().into_iter().map(|(_, t)| t.to_owned()).collect();
        for (mut dst, s) in self.tensors_mut().into_iter().zip(src) {
            dst.scaled_add(a, &s);
        }
    }

    fn all_finite(&self) -> bool {
        self.named_tensors().iter().all(|(_, t)| t.iter().all(|v| v.is_finite()))
    }

    fn num_params(&self) -> usize {
        self.named_tensors().iter().map(|(_, t)| t.len()).sum()
    }

    /// Overwrites every tensor from `values` (same order and shapes).
    fn assign(&mut self, values: &[ArrayD<F>]) -> Result<(), String> {
        let mut dsts = self.tensors_mut();
        if dsts.len() != values.len() {
            return Err(format!("expected {} tensors, got {}", dsts.len(), values.len()));
        }
        for (i, (dst, v)) in dsts.iter_mut().zip(values).enumerate() {
            if dst.shape() != v.shape() {
                return Err(format!("tensor {i}: expected shape {:?}, got {:?}", dst.shape(), v.shape()));
            }
            dst.assign(v);
        }
        Ok(())
    }
}

pub(crate) fn prefixed<'a, F>(prefix: &str, items: Vec<(String, ArrayViewD<'a, F>)>) -> Vec<(String, ArrayViewD<'a, F>)> {
    items.into_iter().map(|(n, t)| (format!("{prefix}.{n}"), t)).collect()
}

impl<F: Real> ParamSet<F> for Conv<F> {
    fn named_tensors(&self) -> Vec<(String, ArrayViewD<'_, F>)> {
        vec![("weight".into(), self.weight.view().into_dyn()), ("bias".into(), self.bias.view().into_dyn())]
    }

    fn tensors_mut(&mut self) -> Vec<ArrayViewMutD<'_, F>> {
        vec![self.weight.view_mut().into_dyn(), self.bias.view_mut().into_dyn()]
    }
}

impl<F: Real> ParamSet<F> for Linear<F> {
    fn named_tensors(&self) -> Vec<(String, ArrayViewD<'_, F>)> {
        vec![("weight".into(), self.weight.view().into_dyn()), ("bias".into(), self.bias.view().into_dyn())]
    }

    fn tensors_mut(&mut self) -> Vec<ArrayViewMutD<'_, F>> {
        vec![self.weight.view_mut().into_dyn(), self.bias.view_mut().into_dyn()]
    }
}

/// Copies all tensors out in order.
pub fn snapshot<F: Real, P: ParamSet<F>>(p: &P) -> Vec<ArrayD<F>> {
    p.named_tensors().into_iter().map(|(_, t)| t.to_owned()).collect()
}

/// Shapes of all tensors, in order.
pub fn shapes<F: Real, P: ParamSet<F>>(p: &P) -> Vec<IxDyn> {
    p.named_tensors().into_iter().map(|(_, t)| t.raw_dim()).collect()
}
