//! Layers over feature maps laid out as (frames, channels, height, width).
//!
//! Every layer exposes `forward` and a `backward` that accumulates parameter
//! gradients into a value of the same type and optionally returns the input
//! gradient. Convolutions are computed one output frame at a time through an
//! im2col buffer and a single matrix product.

use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, Array4, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::Real;

/// How a 3-D convolution fills frames before the first and after the last.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemporalPadding {
    #[default]
    Zero,
    Replicate,
}

/// Convolution with `kt` x `ks` x `ks` kernels, stride 1 and shape-preserving
/// padding. `kt = 1` gives a per-frame 2-D convolution.
#[derive(Clone, Debug, PartialEq)]
pub struct Conv<F> {
    /// (out_channels, in_channels * kt * ks * ks)
    pub weight: Array2<F>,
    pub bias: Array1<F>,
    pub in_channels: usize,
    pub out_channels: usize,
    pub kt: usize,
    pub ks: usize,
    pub temporal_padding: TemporalPadding,
}

impl<F: Real> Conv<F> {
    pub fn zeros(in_channels: usize, out_channels: usize, kt: usize, ks: usize, temporal_padding: TemporalPadding) -> Self {
        assert!(kt % 2 == 1 && ks % 2 == 1, "odd kernels only");
        Self {
            weight: Array2::zeros((out_channels, in_channels * kt * ks * ks)),
            bias: Array1::zeros(out_channels),
            in_channels,
            out_channels,
            kt,
            ks,
            temporal_padding,
        }
    }

    fn source_frame(&self, t: usize, dt: usize, frames: usize) -> Option<usize> {
        let tt = t as isize + dt as isize - (self.kt / 2) as isize;
        if (0..frames as isize).contains(&tt) {
            Some(tt as usize)
        } else {
            match self.temporal_padding {
                TemporalPadding::Zero => None,
                TemporalPadding::Replicate => Some(tt.clamp(0, frames as isize - 1) as usize),
            }
        }
    }

    /// Fills `cols` (rows = in_channels * kt * ks * ks, cols = h * w) for output frame `t`.
    fn im2col(&self, x: &[F], dims: (usize, usize, usize, usize), t: usize, cols: &mut [F]) {
        let (frames, c, h, w) = dims;
        let hw = h * w;
        let pad = (self.ks / 2) as isize;
        let mut row = 0;
        for ci in 0..c {
            for dt in 0..self.kt {
                let src = self.source_frame(t, dt, frames);
                for dy in 0..self.ks {
                    for dx in 0..self.ks {
                        let dst = &mut cols[row * hw..(row + 1) * hw];
                        row += 1;
                        let Some(tt) = src else {
                            dst.fill(F::zero());
                            continue;
                        };
                        let plane = &x[(tt * c + ci) * hw..(tt * c + ci + 1) * hw];
                        let oy = dy as isize - pad;
                        let ox = dx as isize - pad;
                        for y in 0..h {
                            let drow = &mut dst[y * w..(y + 1) * w];
                            let sy = y as isize + oy;
                            if sy < 0 || sy >= h as isize {
                                drow.fill(F::zero());
                                continue;
                            }
                            let srow = &plane[sy as usize * w..(sy as usize + 1) * w];
                            shifted_copy(srow, drow, ox);
                        }
                    }
                }
            }
        }
    }

    /// Scatters `cols` back onto the input-gradient buffer (adjoint of `im2col`).
    fn col2im(&self, cols: &[F], dims: (usize, usize, usize, usize), t: usize, dx_buf: &mut [F]) {
        let (frames, c, h, w) = dims;
        let hw = h * w;
        let pad = (self.ks / 2) as isize;
        let mut row = 0;
        for ci in 0..c {
            for dt in 0..self.kt {
                let src = self.source_frame(t, dt, frames);
                for dy in 0..self.ks {
                    for dx in 0..self.ks {
                        let col = &cols[row * hw..(row + 1) * hw];
                        row += 1;
                        let Some(tt) = src else { continue };
                        let plane = &mut dx_buf[(tt * c + ci) * hw..(tt * c + ci + 1) * hw];
                        let oy = dy as isize - pad;
                        let ox = dx as isize - pad;
                        for y in 0..h {
                            let sy = y as isize + oy;
                            if sy < 0 || sy >= h as isize {
                                continue;
                            }
                            let crow = &col[y * w..(y + 1) * w];
                            let prow = &mut plane[sy as usize * w..(sy as usize + 1) * w];
                            shifted_add(crow, prow, ox);
                        }
                    }
                }
            }
        }
    }

    fn check_input(&self, x: &Array4<F>) {
        assert_eq!(x.dim().1, self.in_channels, "conv input channels");
        assert!(x.is_standard_layout(), "conv input must be contiguous");
    }

    pub fn forward(&self, x: &Array4<F>) -> Array4<F> {
        self.check_input(x);
        let dims = x.dim();
        let (frames, _, h, w) = dims;
        let hw = h * w;
        let xs = x.as_slice().expect("contiguous");
        let mut cols = Array2::<F>::zeros((self.weight.ncols(), hw));
        let mut out = Array4::<F>::zeros((frames, self.out_channels, h, w));
        for t in 0..frames {
            self.im2col(xs, dims, t, cols.as_slice_mut().expect("contiguous"));
            let mut frame = out.index_axis_mut(Axis(0), t);
            let mut o = frame
                .view_mut()
                .into_shape_with_order((self.out_channels, hw))
                .expect("contiguous frame");
            for (mut row, &b) in o.outer_iter_mut().zip(self.bias.iter()) {
                row.fill(b);
            }
            general_mat_mul(F::one(), &self.weight, &cols, F::one(), &mut o);
        }
        out
    }

    /// Accumulates parameter gradients into `grads` (when given) and returns the
    /// input gradient when `want_input` is set.
    pub fn backward(
        &self,
        x: &Array4<F>,
        dout: &Array4<F>,
        mut grads: Option<&mut Conv<F>>,
        want_input: bool,
    ) -> Option<Array4<F>> {
        self.check_input(x);
        let dims = x.dim();
        let (frames, _, h, w) = dims;
        let hw = h * w;
        assert_eq!(dout.dim(), (frames, self.out_channels, h, w), "conv output gradient shape");
        let dout = dout.as_standard_layout();
        let xs = x.as_slice().expect("contiguous");
        let k = self.weight.ncols();
        let mut cols = Array2::<F>::zeros((k, hw));
        let mut dcols = Array2::<F>::zeros((k, hw));
        let mut dx = want_input.then(|| Array4::<F>::zeros(dims));
        for t in 0..frames {
            let d = dout.index_axis(Axis(0), t);
            let d: ArrayView2<F> = d.into_shape_with_order((self.out_channels, hw)).expect("contiguous frame");
            if let Some(g) = grads.as_deref_mut() {
                self.im2col(xs, dims, t, cols.as_slice_mut().expect("contiguous"));
                general_mat_mul(F::one(), &d, &cols.t(), F::one(), &mut g.weight);
                g.bias += &d.sum_axis(Axis(1));
            }
            if let Some(dx) = dx.as_mut() {
                general_mat_mul(F::one(), &self.weight.t(), &d, F::zero(), &mut dcols);
                self.col2im(
                    dcols.as_slice().expect("contiguous"),
                    dims,
                    t,
                    dx.as_slice_mut().expect("contiguous"),
                );
            }
        }
        dx
    }
}

/// `dst[x] = src[x + offset]`, zero where the source index falls outside.
fn shifted_copy<F: Real>(src: &[F], dst: &mut [F], offset: isize) {
    let w = src.len() as isize;
    let lo = (-offset).clamp(0, w) as usize;
    let hi = (w - offset).clamp(0, w) as usize;
    dst[..lo].fill(F::zero());
    if lo < hi {
        let s0 = (lo as isize + offset) as usize;
        dst[lo..hi].copy_from_slice(&src[s0..s0 + (hi - lo)]);
    }
    dst[hi.max(lo)..].fill(F::zero());
}

/// `dst[x + offset] += src[x]` where in range.
fn shifted_add<F: Real>(src: &[F], dst: &mut [F], offset: isize) {
    let w = src.len() as isize;
    let lo = (-offset).clamp(0, w) as usize;
    let hi = (w - offset).clamp(0, w) as usize;
    for x in lo..hi {
        dst[(x as isize + offset) as usize] += src[x];
    }
}

/// Fully connected layer acting on rows: `y = x W^T + b`.
#[derive(Clone, Debug, PartialEq)]
pub struct Linear<F> {
    /// (out_features, in_features)
    pub weight: Array2<F>,
    pub bias: Array1<F>,
}

impl<F: Real> Linear<F> {
    pub fn zeros(in_features: usize, out_features: usize) -> Self {
        Self { weight: Array2::zeros((out_features, in_features)), bias: Array1::zeros(out_features) }
    }

    pub fn in_features(&self) -> usize {
        self.weight.ncols()
    }

    pub fn out_features(&self) -> usize {
        self.weight.nrows()
    }

    pub fn forward(&self, x: ArrayView2<'_, F>) -> Array2<F> {
        x.dot(&self.weight.t()) + &self.bias
    }

    pub fn backward(
        &self,
        x: ArrayView2<'_, F>,
        dy: ArrayView2<'_, F>,
        grads: Option<&mut Linear<F>>,
        want_input: bool,
    ) -> Option<Array2<F>> {
        if let Some(g) = grads {
            general_mat_mul(F::one(), &dy.t(), &x, F::one(), &mut g.weight);
            g.bias += &dy.sum_axis(Axis(0));
        }
        want_input.then(|| dy.dot(&self.weight))
    }
}

pub const LEAKY_SLOPE: f64 = 0.2;

pub fn leaky_relu<F: Real>(x: &Array4<F>) -> Array4<F> {
    let slope = F::lit(LEAKY_SLOPE);
    x.mapv(|v| if v > F::zero() { v } else { v * slope })
}

/// Gradient through a leaky ReLU given its input `x`.
pub fn leaky_relu_backward<F: Real>(x: &Array4<F>, dy: &Array4<F>) -> Array4<F> {
    let slope = F::lit(LEAKY_SLOPE);
    let mut dx = dy.clone();
    ndarray::Zip::from(&mut dx).and(x).for_each(|d, &v| {
        if v <= F::zero() {
            *d *= slope;
        }
    });
    dx
}

/// Rearranges (T, C r^2, H, W) into (T, C, H r, W r); channel `c r^2 + i r + j`
/// lands at sub-pixel offset (i, j).
pub fn pixel_shuffle<F: Real>(x: &Array4<F>, r: usize) -> Array4<F> {
    let (t, cr2, h, w) = x.dim();
    assert_eq!(cr2 % (r * r), 0, "channels not divisible by r^2");
    let c = cr2 / (r * r);
    Array4::from_shape_fn((t, c, h * r, w * r), |(f, ch, y, xx)| {
        x[[f, ch * r * r + (y % r) * r + (xx % r), y / r, xx / r]]
    })
}

/// Inverse of [`pixel_shuffle`]: (T, C, H, W) into (T, C r^2, H / r, W / r).
pub fn pixel_unshuffle<F: Real>(x: &Array4<F>, r: usize) -> Array4<F> {
    let (t, c, h, w) = x.dim();
    assert!(h % r == 0 && w % r == 0, "spatial dims not divisible by r");
    Array4::from_shape_fn((t, c * r * r, h / r, w / r), |(f, ch, y, xx)| {
        let (base, sub) = (ch / (r * r), ch % (r * r));
        x[[f, base, y * r + sub / r, xx * r + sub % r]]
    })
}
