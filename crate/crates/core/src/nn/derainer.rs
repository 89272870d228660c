//! The background network: pixel-unshuffle, 3-D convolutions with
//! pre-activation residual blocks, pixel-shuffle and a global additive skip.

use ndarray::Array4;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::init::orthogonal;
use super::layers::{leaky_relu, leaky_relu_backward, pixel_shuffle, pixel_unshuffle, Conv, TemporalPadding};
use super::params::prefixed;
use super::{NnError, ParamSet, Real};
use crate::video::VideoClip;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DerainerConfig {
    /// Image channels in and out.
    pub channels: usize,
    /// Spatial pixel-shuffle factor r.
    pub shuffle: usize,
    pub width: usize,
    pub blocks: usize,
    pub kernel_t: usize,
    pub kernel_s: usize,
    pub global_skip: bool,
    pub temporal_padding: TemporalPadding,
}

impl Default for DerainerConfig {
    fn default() -> Self {
        Self {
            channels: 3,
            shuffle: 2,
            width: 32,
            blocks: 4,
            kernel_t: 3,
            kernel_s: 3,
            global_skip: true,
            temporal_padding: TemporalPadding::Zero,
        }
    }
}

impl DerainerConfig {
    pub fn validate(&self) -> Result<(), NnError> {
        if self.shuffle == 0 || self.width == 0 || !(self.channels == 1 || self.channels == 3) {
            return Err(NnError::Config(format!(
                "derainer needs shuffle >= 1, width >= 1 and 1 or 3 channels (got {}, {}, {})",
                self.shuffle, self.width, self.channels
            )));
        }
        if self.kernel_t % 2 == 0 || self.kernel_s % 2 == 0 {
            return Err(NnError::Config("derainer kernels must have odd extents".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResBlock<F> {
    pub conv1: Conv<F>,
    pub conv2: Conv<F>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DerainerParams<F> {
    pub config: DerainerConfig,
    pub head: Conv<F>,
    pub blocks: Vec<ResBlock<F>>,
    pub tail: Conv<F>,
}

/// Activations kept for the backward pass.
#[derive(Clone, Debug)]
pub struct DerainerTape<F> {
    x0: Array4<F>,
    /// Input of every block followed by the input of the tail activation.
    trunk: Vec<Array4<F>>,
    /// First convolution output of every block.
    mid: Vec<Array4<F>>,
}

impl<F: Real> DerainerParams<F> {
    /// All-zero parameters of the right shapes.
    pub fn zeros(config: &DerainerConfig) -> Result<Self, NnError> {
        config.validate()?;
        let c = config.channels * config.shuffle * config.shuffle;
        let conv = |i, o| Conv::zeros(i, o, config.kernel_t, config.kernel_s, config.temporal_padding);
        Ok(Self {
            config: config.clone(),
            head: conv(c, config.width),
            blocks: (0..config.blocks)
                .map(|_| ResBlock { conv1: conv(config.width, config.width), conv2: conv(config.width, config.width) })
                .collect(),
            tail: conv(config.width, c),
        })
    }

    /// Orthogonal kernels (flattened to out x fan-in) and zero biases.
    pub fn init(config: &DerainerConfig, seed: u64) -> Result<Self, NnError> {
        let mut p = Self::zeros(config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut convs: Vec<&mut Conv<F>> = vec![&mut p.head];
        for b in p.blocks.iter_mut() {
            convs.push(&mut b.conv1);
            convs.push(&mut b.conv2);
        }
        convs.push(&mut p.tail);
        for conv in convs {
            let (r, c) = conv.weight.dim();
            conv.weight = orthogonal(r, c, &mut rng);
        }
        Ok(p)
    }

    /// Zeroes the final convolution; with the global skip the network is then the identity.
    pub fn zero_tail(&mut self) {
        self.tail.weight.fill(F::zero());
        self.tail.bias.fill(F::zero());
    }

    fn check_input(&self, y: &Array4<F>) -> Result<(), NnError> {
        let (n, c, h, w) = y.dim();
        let r = self.config.shuffle;
        if c != self.config.channels {
            return Err(NnError::Dimension(format!("derainer expects {} channels, got {c}", self.config.channels)));
        }
        if n == 0 || h % r != 0 || w % r != 0 || h == 0 || w == 0 {
            return Err(NnError::Dimension(format!("frame size {h}x{w} not divisible by shuffle factor {r}")));
        }
        Ok(())
    }

    pub fn forward(&self, y: &Array4<F>) -> Result<(Array4<F>, DerainerTape<F>), NnError> {
        self.check_input(y)?;
        let r = self.config.shuffle;
        let x0 = pixel_unshuffle(y, r);
        let mut a = self.head.forward(&x0);
        let mut trunk = Vec::with_capacity(self.blocks.len() + 1);
        let mut mid = Vec::with_capacity(self.blocks.len());
        for b in &self.blocks {
            let v = b.conv1.forward(&leaky_relu(&a));
            let q = b.conv2.forward(&leaky_relu(&v));
            let next = &a + &q;
            trunk.push(a);
            mid.push(v);
            a = next;
        }
        let o = self.tail.forward(&leaky_relu(&a));
        trunk.push(a);
        let mut out = pixel_shuffle(&o, r);
        if self.config.global_skip {
            out += y;
        }
        if out.iter().any(|v| !v.is_finite()) {
            return Err(NnError::NonFinite("derainer activations".into()));
        }
        Ok((out, DerainerTape { x0, trunk, mid }))
    }

    /// Accumulates dL/dW into `grads` and returns dL/dY.
    pub fn backward(&self, tape: &DerainerTape<F>, dout: &Array4<F>, grads: &mut Self) -> Array4<F> {
        let r = self.config.shuffle;
        let d_o = pixel_unshuffle(dout, r);
        let last = tape.trunk.last().expect("tape holds the tail input");
        let d_act = self.tail.backward(&leaky_relu(last), &d_o, Some(&mut grads.tail), true).expect("input grad");
        let mut da = leaky_relu_backward(last, &d_act);
        for (i, b) in self.blocks.iter().enumerate().rev() {
            let (a, v) = (&tape.trunk[i], &tape.mid[i]);
            let g = &mut grads.blocks[i];
            let dp = b.conv2.backward(&leaky_relu(v), &da, Some(&mut g.conv2), true).expect("input grad");
            let dv = leaky_relu_backward(v, &dp);
            let du = b.conv1.backward(&leaky_relu(a), &dv, Some(&mut g.conv1), true).expect("input grad");
            da += &leaky_relu_backward(a, &du);
        }
        let dx0 = self.head.backward(&tape.x0, &da, Some(&mut grads.head), true).expect("input grad");
        let mut dy = pixel_shuffle(&dx0, r);
        if self.config.global_skip {
            dy += dout;
        }
        dy
    }
}

impl<F: Real> ParamSet<F> for DerainerParams<F> {
    fn named_tensors(&self) -> Vec<(String, ndarray::ArrayViewD<'_, F>)> {
        let mut out = prefixed("head", self.head.named_tensors());
        for (i, b) in self.blocks.iter().enumerate() {
            out.extend(prefixed(&format!("block{i}.conv1"), b.conv1.named_tensors()));
            out.extend(prefixed(&format!("block{i}.conv2"), b.conv2.named_tensors()));
        }
        out.extend(prefixed("tail", self.tail.named_tensors()));
        out
    }

    fn tensors_mut(&mut self) -> Vec<ndarray::ArrayViewMutD<'_, F>> {
        let mut out = self.head.tensors_mut();
        for b in self.blocks.iter_mut() {
            out.extend(b.conv1.tensors_mut());
            out.extend(b.conv2.tensors_mut());
        }
        out.extend(self.tail.tensors_mut());
        out
    }
}

/// Inference pass on a clip: output clamped to [0, 1].
pub fn derainer_forward<F: Real>(y: &VideoClip, params: &DerainerParams<F>) -> Result<VideoClip, NnError> {
    let (out, _) = params.forward(&y.to_real::<F>())?;
    VideoClip::from_real(out.view()).map_err(|e| NnError::NonFinite(e.to_string()))
}
