//! Orthogonal initialization.

use nalgebra::DMatrix;
use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;

use super::Real;

/// A `rows` x `cols` matrix whose rows (when rows <= cols) or columns (otherwise)
/// are orthonormal. Signs follow the diagonal of R so the draw is uniform.
pub fn orthogonal<F: Real, R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Array2<F> {
    let (tall, short) = (rows.max(cols), rows.min(cols));
    let a = DMatrix::<f64>::from_fn(tall, short, |_, _| rng.sample(StandardNormal));
    let qr = a.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..short {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    if rows >= cols {
        Array2::from_shape_fn((rows, cols), |(i, j)| F::lit(q[(i, j)]))
    } else {
        Array2::from_shape_fn((rows, cols), |(i, j)| F::lit(q[(j, i)]))
    }
}
