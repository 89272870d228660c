//! The dynamical rain generator.
//!
//! A transition network advances a hidden state `s_t` from `(s_{t-1}, z_t, m)`;
//! an emission network renders each state as one single-channel rain frame.

use ndarray::{concatenate, s, Array1, Array2, Array3, Array4, ArrayView1, ArrayViewD, ArrayViewMutD, Axis, Zip};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::init::orthogonal;
use super::layers::{leaky_relu, leaky_relu_backward, pixel_shuffle, pixel_unshuffle, Conv, Linear, TemporalPadding};
use super::params::prefixed;
use super::{NnError, ParamSet, Real};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransitionConfig {
    pub state_dim: usize,
    pub noise_dim: usize,
    pub appearance_dim: usize,
    pub hidden: usize,
}

impl Default for TransitionConfig {
    fn default() -> Self {
        Self { state_dim: 64, noise_dim: 32, appearance_dim: 64, hidden: 128 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmissionConfig {
    pub seed_height: usize,
    pub seed_width: usize,
    pub channels: usize,
    /// Each stage doubles both spatial dimensions.
    pub stages: usize,
    pub out_channels: usize,
    pub target_height: usize,
    pub target_width: usize,
}

impl Default for EmissionConfig {
    fn default() -> Self {
        Self { seed_height: 8, seed_width: 8, channels: 64, stages: 3, out_channels: 1, target_height: 64, target_width: 64 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub transition: TransitionConfig,
    pub emission: EmissionConfig,
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), NnError> {
        let t = &self.transition;
        let e = &self.emission;
        if [t.state_dim, t.noise_dim, t.appearance_dim, t.hidden].contains(&0) {
            return Err(NnError::Config("transition dimensions must be positive".into()));
        }
        if [e.seed_height, e.seed_width, e.channels, e.out_channels].contains(&0) {
            return Err(NnError::Config("emission dimensions must be positive".into()));
        }
        if e.stages >= 16
            || e.seed_height << e.stages != e.target_height
            || e.seed_width << e.stages != e.target_width
        {
            return Err(NnError::Config(format!(
                "emission seed {}x{} doubled {} times does not reach target {}x{}",
                e.seed_height, e.seed_width, e.stages, e.target_height, e.target_width
            )));
        }
        Ok(())
    }

    /// The same architecture re-targeted to `height` x `width` frames by adjusting the seed size.
    pub fn with_target(&self, height: usize, width: usize) -> Result<Self, NnError> {
        let mut out = self.clone();
        let f = 1usize << self.emission.stages.min(15);
        if height % f != 0 || width % f != 0 || height == 0 || width == 0 {
            return Err(NnError::Config(format!("{height}x{width} not divisible by 2^{}", self.emission.stages)));
        }
        out.emission.seed_height = height / f;
        out.emission.seed_width = width / f;
        out.emission.target_height = height;
        out.emission.target_width = width;
        out.validate()?;
        Ok(out)
    }
}

/// Generator inputs: initial state, one noise vector per frame (rows), appearance vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Latents<F> {
    pub s0: Array1<F>,
    pub z: Array2<F>,
    pub m: Array1<F>,
}

impl<F: Real> Latents<F> {
    pub fn zeros(cfg: &TransitionConfig, frames: usize) -> Self {
        Self {
            s0: Array1::zeros(cfg.state_dim),
            z: Array2::zeros((frames, cfg.noise_dim)),
            m: Array1::zeros(cfg.appearance_dim),
        }
    }

    pub fn frames(&self) -> usize {
        self.z.nrows()
    }

    pub fn len(&self) -> usize {
        self.s0.len() + self.z.len() + self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sq_norm(&self) -> F {
        self.iter().map(|&v| v * v).sum()
    }

    /// Order: s0, z row-major, m.
    pub fn iter(&self) -> impl Iterator<Item = &F> {
        self.s0.iter().chain(self.z.iter()).chain(self.m.iter())
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut F> {
        self.s0.iter_mut().chain(self.z.iter_mut()).chain(self.m.iter_mut())
    }

    pub fn all_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }

    pub fn check(&self, cfg: &TransitionConfig) -> Result<(), NnError> {
        if self.s0.len() != cfg.state_dim || self.z.ncols() != cfg.noise_dim || self.m.len() != cfg.appearance_dim {
            return Err(NnError::Dimension(format!(
                "latents ({}, {}, {}) do not match generator ({}, {}, {})",
                self.s0.len(),
                self.z.ncols(),
                self.m.len(),
                cfg.state_dim,
                cfg.noise_dim,
                cfg.appearance_dim
            )));
        }
        if self.z.nrows() == 0 {
            return Err(NnError::Dimension("at least one frame of noise is required".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransitionParams<F> {
    pub fc1: Linear<F>,
    pub fc2: Linear<F>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmissionParams<F> {
    pub fc: Linear<F>,
    pub stages: Vec<Conv<F>>,
    pub last: Conv<F>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorParams<F> {
    pub config: GeneratorConfig,
    pub transition: TransitionParams<F>,
    pub emission: EmissionParams<F>,
}

/// Activations kept for the backward pass.
#[derive(Clone, Debug)]
pub struct GeneratorTape<F> {
    /// Row t is the transition input `[s_{t-1}; z_t; m]`.
    inputs: Array2<F>,
    /// Row t is tanh(fc1(input_t)).
    hidden: Array2<F>,
    /// Row t is s_{t+1}.
    states: Array2<F>,
    /// Input of every emission convolution.
    maps: Vec<Array4<F>>,
    /// tanh output before the affine remap.
    squashed: Array4<F>,
}

impl<F: Real> TransitionParams<F> {
    /// One transition: `tanh(fc2(tanh(fc1([s_prev; z_t; m]))))`.
    pub fn step(
        &self,
        cfg: &TransitionConfig,
        s_prev: ArrayView1<'_, F>,
        z_t: ArrayView1<'_, F>,
        m: ArrayView1<'_, F>,
    ) -> Result<Array1<F>, NnError> {
        if s_prev.len() != cfg.state_dim || z_t.len() != cfg.noise_dim || m.len() != cfg.appearance_dim {
            return Err(NnError::Dimension(format!(
                "transition inputs ({}, {}, {}) do not match config ({}, {}, {})",
                s_prev.len(),
                z_t.len(),
                m.len(),
                cfg.state_dim,
                cfg.noise_dim,
                cfg.appearance_dim
            )));
        }
        let x = concatenate![Axis(0), s_prev, z_t, m].insert_axis(Axis(0));
        let h = self.fc1.forward(x.view()).mapv(F::tanh);
        Ok(self.fc2.forward(h.view()).mapv(F::tanh).remove_axis(Axis(0)))
    }
}

impl<F: Real> EmissionParams<F> {
    fn forward_batch(&self, cfg: &EmissionConfig, states: &Array2<F>) -> (Array4<F>, Vec<Array4<F>>, Array4<F>) {
        let t = states.nrows();
        let seed = self.fc.forward(states.view());
        let mut u = seed
            .into_shape_with_order((t, cfg.channels, cfg.seed_height, cfg.seed_width))
            .expect("fc output matches the seed size");
        let mut maps = Vec::with_capacity(cfg.stages + 1);
        for conv in &self.stages {
            let next = leaky_relu(&pixel_shuffle(&conv.forward(&u), 2));
            maps.push(u);
            u = next;
        }
        let squashed = self.last.forward(&u).mapv(F::tanh);
        maps.push(u);
        let half = F::lit(0.5);
        let out = squashed.mapv(|v| (v + F::one()) * half);
        (out, maps, squashed)
    }

    /// Renders one frame of shape (out_channels, target_h, target_w) from a state.
    pub fn emit_frame(&self, cfg: &EmissionConfig, state: ArrayView1<'_, F>) -> Result<Array3<F>, NnError> {
        if state.len() != self.fc.in_features() {
            return Err(NnError::Dimension(format!(
                "emission expects a state of {}, got {}",
                self.fc.in_features(),
                state.len()
            )));
        }
        let states = state.to_owned().insert_axis(Axis(0));
        Ok(self.forward_batch(cfg, &states).0.remove_axis(Axis(0)))
    }
}

impl<F: Real> GeneratorParams<F> {
    /// Number of transition tensors at the front of `named_tensors`.
    pub const TRANSITION_TENSORS: usize = 4;

    pub fn zeros(config: &GeneratorConfig) -> Result<Self, NnError> {
        config.validate()?;
        let t = &config.transition;
        let e = &config.emission;
        let conv = |i, o| Conv::zeros(i, o, 1, 3, TemporalPadding::Zero);
        Ok(Self {
            config: config.clone(),
            transition: TransitionParams {
                fc1: Linear::zeros(t.state_dim + t.noise_dim + t.appearance_dim, t.hidden),
                fc2: Linear::zeros(t.hidden, t.state_dim),
            },
            emission: EmissionParams {
                fc: Linear::zeros(t.state_dim, e.channels * e.seed_height * e.seed_width),
                stages: (0..e.stages).map(|_| conv(e.channels, 4 * e.channels)).collect(),
                last: conv(e.channels, e.out_channels),
            },
        })
    }

    /// Orthogonal weights and zero biases.
    pub fn init(config: &GeneratorConfig, seed: u64) -> Result<Self, NnError> {
        let mut p = Self::zeros(config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights =
            vec![&mut p.transition.fc1.weight, &mut p.transition.fc2.weight, &mut p.emission.fc.weight];
        weights.extend(p.emission.stages.iter_mut().map(|c| &mut c.weight));
        weights.push(&mut p.emission.last.weight);
        for w in weights {
            let (r, c) = w.dim();
            *w = orthogonal(r, c, &mut rng);
        }
        Ok(p)
    }

    pub fn transition_step(
        &self,
        s_prev: ArrayView1<'_, F>,
        z_t: ArrayView1<'_, F>,
        m: ArrayView1<'_, F>,
    ) -> Result<Array1<F>, NnError> {
        self.transition.step(&self.config.transition, s_prev, z_t, m)
    }

    pub fn emit_frame(&self, state: ArrayView1<'_, F>) -> Result<Array3<F>, NnError> {
        self.emission.emit_frame(&self.config.emission, state)
    }

    /// Unrolls the transition over all frames and emits them: (n, out_channels, H, W) in [0, 1].
    pub fn generate(&self, lat: &Latents<F>) -> Result<(Array4<F>, GeneratorTape<F>), NnError> {
        let tc = &self.config.transition;
        lat.check(tc)?;
        let n = lat.frames();
        let width = tc.state_dim + tc.noise_dim + tc.appearance_dim;
        let mut inputs = Array2::<F>::zeros((n, width));
        let mut hidden = Array2::<F>::zeros((n, tc.hidden));
        let mut states = Array2::<F>::zeros((n, tc.state_dim));
        let mut s = lat.s0.clone();
        for t in 0..n {
            let mut row = inputs.row_mut(t);
            row.slice_mut(s![..tc.state_dim]).assign(&s);
            row.slice_mut(s![tc.state_dim..tc.state_dim + tc.noise_dim]).assign(&lat.z.row(t));
            row.slice_mut(s![tc.state_dim + tc.noise_dim..]).assign(&lat.m);
            let h = self.transition.fc1.forward(inputs.slice(s![t..t + 1, ..])).mapv(F::tanh);
            s = self.transition.fc2.forward(h.view()).mapv(F::tanh).remove_axis(Axis(0));
            hidden.row_mut(t).assign(&h.row(0));
            states.row_mut(t).assign(&s);
        }
        let (out, maps, squashed) = self.emission.forward_batch(&self.config.emission, &states);
        if out.iter().any(|v| !v.is_finite()) {
            return Err(NnError::NonFinite("generated rain".into()));
        }
        Ok((out, GeneratorTape { inputs, hidden, states, maps, squashed }))
    }

    /// Back-propagates `d_rain` (same shape as the generated clip). Parameter
    /// gradients accumulate into `grads` when given; latent gradients are returned.
    pub fn backward(&self, tape: &GeneratorTape<F>, d_rain: &Array4<F>, grads: Option<&mut Self>) -> Latents<F> {
        let tc = &self.config.transition;
        let ec = &self.config.emission;
        let n = tape.states.nrows();
        let half = F::lit(0.5);
        let (mut eg, mut tg) = match grads {
            Some(g) => (Some(&mut g.emission), Some(&mut g.transition)),
            None => (None, None),
        };

        // Emission, batched over frames.
        let mut d = Zip::from(d_rain).and(&tape.squashed).map_collect(|&g, &y| g * half * (F::one() - y * y));
        let top = tape.maps.last().expect("emission tape");
        d = self.emission.last.backward(top, &d, eg.as_deref_mut().map(|e| &mut e.last), true).expect("input grad");
        for (i, conv) in self.emission.stages.iter().enumerate().rev() {
            let dp = pixel_unshuffle(&leaky_relu_backward(&tape.maps[i + 1], &d), 2);
            d = conv.backward(&tape.maps[i], &dp, eg.as_deref_mut().map(|e| &mut e.stages[i]), true).expect("input grad");
        }
        let d_seed =
            d.into_shape_with_order((n, ec.channels * ec.seed_height * ec.seed_width)).expect("seed gradient");
        let d_states = self
            .emission
            .fc
            .backward(tape.states.view(), d_seed.view(), eg.map(|e| &mut e.fc), true)
            .expect("input grad");

        // Transition, back through time.
        let mut out = Latents::zeros(tc, n);
        let mut carry = Array1::<F>::zeros(tc.state_dim);
        for t in (0..n).rev() {
            let ds = &d_states.row(t) + &carry;
            let da2 = Zip::from(&ds)
                .and(tape.states.row(t))
                .map_collect(|&g, &y| g * (F::one() - y * y))
                .insert_axis(Axis(0));
            let h_t = tape.hidden.slice(s![t..t + 1, ..]);
            let dh = self
                .transition
                .fc2
                .backward(h_t, da2.view(), tg.as_deref_mut().map(|g| &mut g.fc2), true)
                .expect("input grad");
            let da1 = Zip::from(&dh).and(h_t).map_collect(|&g, &y| g * (F::one() - y * y));
            let dx = self
                .transition
                .fc1
                .backward(tape.inputs.slice(s![t..t + 1, ..]), da1.view(), tg.as_deref_mut().map(|g| &mut g.fc1), true)
                .expect("input grad");
            let dx = dx.row(0);
            carry = dx.slice(s![..tc.state_dim]).to_owned();
            out.z.row_mut(t).assign(&dx.slice(s![tc.state_dim..tc.state_dim + tc.noise_dim]));
            out.m += &dx.slice(s![tc.state_dim + tc.noise_dim..]);
        }
        out.s0 = carry;
        out
    }
}

impl<F: Real> ParamSet<F> for GeneratorParams<F> {
    fn named_tensors(&self) -> Vec<(String, ArrayViewD<'_, F>)> {
        let mut out = prefixed("transition.fc1", self.transition.fc1.named_tensors());
        out.extend(prefixed("transition.fc2", self.transition.fc2.named_tensors()));
        out.extend(prefixed("emission.fc", self.emission.fc.named_tensors()));
        for (i, c) in self.emission.stages.iter().enumerate() {
            out.extend(prefixed(&format!("emission.stage{i}"), c.named_tensors()));
        }
        out.extend(prefixed("emission.last", self.emission.last.named_tensors()));
        out
    }

    fn tensors_mut(&mut self) -> Vec<ArrayViewMutD<'_, F>> {
        let mut out = self.transition.fc1.tensors_mut();
        out.extend(self.transition.fc2.tensors_mut());
        out.extend(self.emission.fc.tensors_mut());
        for c in self.emission.stages.iter_mut() {
            out.extend(c.tensors_mut());
        }
        out.extend(self.emission.last.tensors_mut());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn toy() -> GeneratorConfig {
        GeneratorConfig {
            transition: TransitionConfig { state_dim: 3, noise_dim: 2, appearance_dim: 2, hidden: 4 },
            emission: EmissionConfig {
                seed_height: 2,
                seed_width: 2,
                channels: 2,
                stages: 2,
                out_channels: 1,
                target_height: 8,
                target_width: 8,
            },
        }
    }

    fn random_params(cfg: &GeneratorConfig, seed: u64, scale: f64) -> GeneratorParams<f64> {
        let mut p = GeneratorParams::<f64>::zeros(cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for mut t in p.tensors_mut() {
            t.mapv_inplace(|_| scale * (rng.random::<f64>() * 2.0 - 1.0));
        }
        p
    }

    fn random_latents(cfg: &TransitionConfig, n: usize, seed: u64) -> Latents<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut l = Latents::zeros(cfg, n);
        l.iter_mut().for_each(|v| *v = rng.random::<f64>() * 2.0 - 1.0);
        l
    }

    #[test]
    fn default_shapes() {
        let cfg = GeneratorConfig::default();
        let p = GeneratorParams::<f32>::init(&cfg, 0).unwrap();
        let s = p.transition_step(Array1::zeros(64).view(), Array1::zeros(32).view(), Array1::zeros(64).view()).unwrap();
        assert_eq!(s.len(), 64);
        assert!(s.iter().all(|&v| v == 0.0));
        assert_eq!(p.emit_frame(s.view()).unwrap().dim(), (1, 64, 64));
        let (rain, _) = p.generate(&Latents::zeros(&cfg.transition, 20)).unwrap();
        assert_eq!(rain.dim(), (20, 1, 64, 64));
    }

    #[test]
    fn dimension_errors() {
        let p = GeneratorParams::<f64>::init(&toy(), 0).unwrap();
        assert!(p.transition_step(Array1::zeros(2).view(), Array1::zeros(2).view(), Array1::zeros(2).view()).is_err());
        assert!(p.emit_frame(Array1::zeros(4).view()).is_err());
        let mut lat = Latents::zeros(&toy().transition, 2);
        lat.m = Array1::zeros(5);
        assert!(p.generate(&lat).is_err());
        let mut bad = toy();
        bad.emission.target_height = 9;
        assert!(GeneratorParams::<f64>::init(&bad, 0).is_err());
    }

    #[test]
    fn zero_parameters_emit_half() {
        let p = GeneratorParams::<f64>::zeros(&toy()).unwrap();
        let f = p.emit_frame(Array1::from_elem(3, 0.7).view()).unwrap();
        assert!(f.iter().all(|&v| v == 0.5));
    }

    #[test]
    fn outputs_bounded() {
        let p = random_params(&toy(), 1, 3.0);
        for seed in 0..5 {
            let mut lat = random_latents(&toy().transition, 4, seed);
            lat.iter_mut().for_each(|v| *v *= 10.0);
            let (rain, tape) = p.generate(&lat).unwrap();
            assert!(rain.iter().all(|&v| (0.0..=1.0).contains(&v)));
            assert!(tape.states.iter().all(|v| v.abs() <= 1.0));
        }
    }

    #[test]
    fn init_orthogonal_and_seeded() {
        let p = GeneratorParams::<f64>::init(&toy(), 4).unwrap();
        assert_eq!(p, GeneratorParams::<f64>::init(&toy(), 4).unwrap());
        for (name, t) in p.named_tensors() {
            if name.ends_with("bias") {
                assert!(t.iter().all(|&v| v == 0.0));
                continue;
            }
            let w = t.into_dimensionality::<ndarray::Ix2>().unwrap();
            let g = if w.nrows() >= w.ncols() { w.t().dot(&w) } else { w.dot(&w.t()) };
            for ((i, j), v) in g.indexed_iter() {
                assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-5, "{name}");
            }
        }
    }

    #[test]
    fn transition_matches_hand_unroll() {
        let cfg = TransitionConfig { state_dim: 2, noise_dim: 2, appearance_dim: 2, hidden: 2 };
        let gcfg = GeneratorConfig {
            transition: cfg,
            emission: EmissionConfig {
                seed_height: 1,
                seed_width: 1,
                channels: 1,
                stages: 0,
                out_channels: 1,
                target_height: 1,
                target_width: 1,
            },
        };
        let p = random_params(&gcfg, 7, 1.0);
        let (s, z, m) = ([0.3, -0.2], [0.5, 0.1], [-0.4, 0.9]);
        let x = [s[0], s[1], z[0], z[1], m[0], m[1]];
        let fc1 = &p.transition.fc1;
        let fc2 = &p.transition.fc2;
        let h: Vec<f64> =
            (0..2).map(|i| (fc1.bias[i] + (0..6).map(|k| fc1.weight[[i, k]] * x[k]).sum::<f64>()).tanh()).collect();
        let want: Vec<f64> =
            (0..2).map(|i| (fc2.bias[i] + (0..2).map(|k| fc2.weight[[i, k]] * h[k]).sum::<f64>()).tanh()).collect();
        let got = p
            .transition_step(
                Array1::from(s.to_vec()).view(),
                Array1::from(z.to_vec()).view(),
                Array1::from(m.to_vec()).view(),
            )
            .unwrap();
        for i in 0..2 {
            assert!((got[i] - want[i]).abs() < 1e-6);
        }
    }

    #[test]
    fn generate_matches_step_emit_unroll() {
        let p = random_params(&toy(), 8, 0.8);
        let lat = random_latents(&toy().transition, 3, 9);
        let (rain, _) = p.generate(&lat).unwrap();
        let mut s = lat.s0.clone();
        for t in 0..3 {
            s = p.transition_step(s.view(), lat.z.row(t), lat.m.view()).unwrap();
            let frame = p.emit_frame(s.view()).unwrap();
            assert_eq!(rain.index_axis(Axis(0), t), frame);
        }
        let (again, _) = p.generate(&lat).unwrap();
        assert_eq!(rain, again);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let p = random_params(&toy(), 10, 0.7);
        let lat = random_latents(&toy().transition, 3, 11);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let probe = Array4::from_shape_fn((3, 1, 8, 8), |_| rng.random::<f64>() - 0.5);
        let loss = |q: &GeneratorParams<f64>, l: &Latents<f64>| (&q.generate(l).unwrap().0 * &probe).sum();
        let (_, tape) = p.generate(&lat).unwrap();
        let mut g = p.zeros_like();
        let dl = p.backward(&tape, &probe, Some(&mut g));
        let h = 1e-4;
        let rel = |fd: f64, an: f64| (fd - an).abs() / fd.abs().max(an.abs()).max(1e-6);

        let an: Vec<f64> = dl.iter().copied().collect();
        for i in 0..lat.len() {
            let mut up = lat.clone();
            *up.iter_mut().nth(i).unwrap() += h;
            let mut down = lat.clone();
            *down.iter_mut().nth(i).unwrap() -= h;
            let fd = (loss(&p, &up) - loss(&p, &down)) / (2.0 * h);
            assert!(rel(fd, an[i]) <= 1e-3, "latent {i}: fd {fd} vs {}", an[i]);
        }

        let an: Vec<f64> = g.named_tensors().iter().flat_map(|(_, t)| t.iter().copied().collect::<Vec<_>>()).collect();
        let mut q = p.clone();
        let bump = |q: &mut GeneratorParams<f64>, i: usize, d: f64| {
            *q.tensors_mut().into_iter().flat_map(|t| t.into_iter()).nth(i).unwrap() += d;
        };
        for (i, &a) in an.iter().enumerate() {
            bump(&mut q, i, h);
            let up = loss(&q, &lat);
            bump(&mut q, i, -2.0 * h);
            let down = loss(&q, &lat);
            bump(&mut q, i, h);
            let fd = (up - down) / (2.0 * h);
            assert!(rel(fd, a) <= 1e-3, "param {i}: fd {fd} vs {a}");
        }
    }

    #[test]
    fn zero_noise_trajectory_repeats() {
        let p = random_params(&toy(), 13, 0.9);
        let mut lat = random_latents(&toy().transition, 5, 14);
        lat.z.fill(0.0);
        assert_eq!(p.generate(&lat).unwrap().0, p.generate(&lat).unwrap().0);
    }

    #[test]
    fn retargeting_keeps_the_architecture() {
        let c = GeneratorConfig::default().with_target(32, 48).unwrap();
        assert_eq!((c.emission.seed_height, c.emission.seed_width), (4, 6));
        assert!(GeneratorConfig::default().with_target(30, 48).is_err());
    }
}
