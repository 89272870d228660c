//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.
//!
//! `cargo test --test acceptance` runs everything; trailing numeric arguments
//! (`cargo test --test acceptance -- 1 8`) select criteria.

use std::time::Instant;

use ndarray::{Array1, Array2, Array4, ArrayD};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vderain::inference::{
    latent_energy, latent_energy_grad, run_langevin, InferenceError, LangevinConfig, LatentChain, RainModel,
};
use vderain::nn::{
    DerainerConfig, DerainerParams, EmissionConfig, GeneratorConfig, GeneratorParams, Latents, ParamSet,
    TransitionConfig,
};
use vderain::priors::{labeled_prior_energy, labeled_prior_energy_grad, mrf_energy, mrf_energy_grad, PriorConfig};
use vderain::training::fit::{fit_generator, window_means, FitConfig};
use vderain::training::{evaluate, load_checkpoint, save_checkpoint, Checkpoint, Mode, TrainConfig, Trainer};
use vderain::video::demo::{desk_data, DeskData, DeskSpec};
use vderain::video::{
    build_dataset, procedural_rain, psnr_luminance, rgb_to_luminance, ssim_luminance, ClipId, ClipSample,
    LabeledSource, RainRecipe, VideoClip,
};

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

// ---------------------------------------------------------------------------
// Criterion 1: gradients against central differences.

const FD_STEP: f64 = 1e-4;

/// Worst elementwise relative error. Denominators never drop below `floor`, or below
/// 1e-6 of the largest entry when `floor` is `None`.
fn worst_rel_err(analytic: &[f64], numeric: &[f64], floor: Option<f64>) -> f64 {
    let scale = numeric.iter().chain(analytic).fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = floor.unwrap_or((scale * 1e-6).max(1e-12));
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(floor))
        .fold(0.0, f64::max)
}

/// Central differences of `f` over every coordinate of `x`.
fn central_diff(x: &mut [f64], f: &mut dyn FnMut(&[f64]) -> f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let orig = x[i];
            x[i] = orig + FD_STEP;
            let up = f(x);
            x[i] = orig - FD_STEP;
            let dn = f(x);
            x[i] = orig;
            (up - dn) / (2.0 * FD_STEP)
        })
        .collect()
}

/// A shuffled lattice: every neighbour difference is at least 1/n, well clear of the
/// Charbonnier smoothing scale where third derivatives swamp the step.
fn lattice_clip(shape: (usize, usize, usize, usize), seed: u64) -> Array4<f64> {
    let n = shape.0 * shape.1 * shape.2 * shape.3;
    let mut levels: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
    levels.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Array4::from_shape_vec(shape, levels).unwrap()
}

fn random4(shape: (usize, usize, usize, usize), seed: u64) -> Array4<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array4::from_shape_fn(shape, |_| rng.random::<f64>())
}

fn flat(p: &impl ParamSet<f64>) -> Vec<f64> {
    p.named_tensors().into_iter().flat_map(|(_, t)| t.iter().copied().collect::<Vec<_>>()).collect()
}

fn load_flat<P: ParamSet<f64>>(p: &mut P, values: &[f64]) {
    let mut it = values.iter();
    for mut t in p.tensors_mut() {
        t.iter_mut().for_each(|v| *v = *it.next().unwrap());
    }
}

fn toy_generator_config() -> GeneratorConfig {
    GeneratorConfig {
        transition: TransitionConfig { state_dim: 3, noise_dim: 2, appearance_dim: 2, hidden: 4 },
        emission: EmissionConfig {
            seed_height: 2,
            seed_width: 2,
            channels: 3,
            stages: 2,
            out_channels: 1,
            target_height: 8,
            target_width: 8,
        },
    }
}

fn random_latents(cfg: &TransitionConfig, frames: usize, seed: u64) -> Latents<f64> {
    let mut l = Latents::zeros(cfg, frames);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    l.iter_mut().for_each(|v| *v = rng.random::<f64>() * 2.0 - 1.0);
    l
}

fn criterion_1() -> Outcome {
    let mut report = Vec::new();
    let mut pass = true;
    let mut check = |name: &str, analytic: &[f64], numeric: &[f64], tol: f64, floor: Option<f64>| {
        let e = worst_rel_err(analytic, numeric, floor);
        pass &= e <= tol;
        report.push(format!("{name} {e:.1e}"));
    };
    let prior = PriorConfig::default();

    let f = lattice_clip((3, 1, 4, 5), 3);
    let (_, g) = mrf_energy_grad(&f, &prior).unwrap();
    let mut x = f.clone().into_raw_vec_and_offset().0;
    let fd = central_diff(&mut x, &mut |v| mrf_energy(&Array4::from_shape_vec(f.dim(), v.to_vec()).unwrap(), &prior).unwrap());
    check("mrf", g.as_slice().unwrap(), &fd, 1e-4, Some(1e-8));

    let clean = random4(f.dim(), 2);
    let (_, g) = labeled_prior_energy_grad(&f, &clean, &prior).unwrap();
    let fd = central_diff(&mut x, &mut |v| {
        labeled_prior_energy(&Array4::from_shape_vec(f.dim(), v.to_vec()).unwrap(), &clean, &prior).unwrap()
    });
    check("labeled", g.as_slice().unwrap(), &fd, 1e-4, Some(1e-8));

    let gcfg = toy_generator_config();
    let gen = GeneratorParams::<f64>::init(&gcfg, 3).unwrap();
    let lat = random_latents(&gcfg.transition, 3, 4);
    let y = random4((3, 3, 8, 8), 5);
    let bg = random4((3, 3, 8, 8), 6).mapv(|v| v * 0.5);
    let (_, g) = latent_energy_grad(&lat, &y, &bg, &gen, 0.05).unwrap();
    let mut u: Vec<f64> = lat.iter().copied().collect();
    let fd = central_diff(&mut u, &mut |v| {
        let mut l = lat.clone();
        l.iter_mut().zip(v).for_each(|(d, s)| *d = *s);
        latent_energy(&l, &y, &bg, &gen, 0.05).unwrap()
    });
    check("latent", &g.iter().copied().collect::<Vec<_>>(), &fd, 1e-3, None);

    // Derainer: L = sum(c * f(Y)) over the unclamped output, both input and weights.
    let dcfg = DerainerConfig { width: 4, blocks: 2, ..Default::default() };
    let net = DerainerParams::<f64>::init(&dcfg, 7).unwrap();
    let yin = random4((3, 3, 6, 8), 8);
    let c = random4((3, 3, 6, 8), 9).mapv(|v| v - 0.5);
    let loss = |p: &DerainerParams<f64>, input: &Array4<f64>| (&p.forward(input).unwrap().0 * &c).sum();
    let (_, tape) = net.forward(&yin).unwrap();
    let mut grads = net.zeros_like();
    let dy = net.backward(&tape, &c, &mut grads);
    let mut yv = yin.clone().into_raw_vec_and_offset().0;
    let fd = central_diff(&mut yv, &mut |v| loss(&net, &Array4::from_shape_vec(yin.dim(), v.to_vec()).unwrap()));
    check("derainer/input", dy.as_slice().unwrap(), &fd, 1e-3, None);
    let mut w = flat(&net);
    let mut probe = net.clone();
    let fd = central_diff(&mut w, &mut |v| {
        load_flat(&mut probe, v);
        loss(&probe, &yin)
    });
    check("derainer/weights", &flat(&grads), &fd, 1e-3, None);

    // Generator: L = sum(c * G(latents; theta)), latents and weights.
    let c = random4((3, 1, 8, 8), 10).mapv(|v| v - 0.5);
    let gl = |p: &GeneratorParams<f64>, l: &Latents<f64>| (&p.generate(l).unwrap().0 * &c).sum();
    let (_, tape) = gen.generate(&lat).unwrap();
    let mut ggrads = gen.zeros_like();
    let dl = gen.backward(&tape, &c, Some(&mut ggrads));
    let fd = central_diff(&mut u, &mut |v| {
        let mut l = lat.clone();
        l.iter_mut().zip(v).for_each(|(d, s)| *d = *s);
        gl(&gen, &l)
    });
    check("generator/latents", &dl.iter().copied().collect::<Vec<_>>(), &fd, 1e-3, None);
    let mut th = flat(&gen);
    let mut probe = gen.clone();
    let fd = central_diff(&mut th, &mut |v| {
        load_flat(&mut probe, v);
        gl(&probe, &lat)
    });
    check("generator/weights", &flat(&ggrads), &fd, 1e-3, None);

    Outcome::new(pass, format!("worst rel err: {}", report.join(", ")))
}

// ---------------------------------------------------------------------------
// Criterion 2: Langevin samples against a conjugate Gaussian posterior.

/// rain = M [s0; z_1; m] as one 2x2 frame: identity emission over a frozen linear transition.
struct LinearToy {
    dims: TransitionConfig,
    mix: Array2<f64>,
}

impl RainModel<f64> for LinearToy {
    type Tape = ();

    fn render(&self, latents: &Latents<f64>) -> Result<(Array4<f64>, ()), InferenceError> {
        let u: Array1<f64> = latents.iter().copied().collect();
        Ok((self.mix.dot(&u).into_shape_with_order((1, 1, 2, 2)).unwrap(), ()))
    }

    fn latent_gradient(&self, _: &(), d_rain: &Array4<f64>) -> Latents<f64> {
        let d: Array1<f64> = d_rain.iter().copied().collect();
        let g = self.mix.t().dot(&d);
        let mut out = Latents::zeros(&self.dims, 1);
        out.iter_mut().zip(g.iter()).for_each(|(a, b)| *a = *b);
        out
    }
}

fn criterion_2() -> Outcome {
    use nalgebra::{DMatrix, DVector};
    let dims = TransitionConfig { state_dim: 4, noise_dim: 4, appearance_dim: 1, hidden: 1 };
    let (latents, pixels, sigma) = (9usize, 4usize, 4.0f64);
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mix = Array2::from_shape_fn((pixels, latents), |_| rng.random::<f64>() * 2.0 - 1.0);
    let y = Array4::from_shape_vec((1, 1, 2, 2), vec![42.0, -27.0, 18.0, 33.0]).unwrap();
    let bg = Array4::zeros((1, 1, 2, 2));

    // The energy's mean reductions give prior variance L and noise variance sigma^2 P.
    let m = DMatrix::from_fn(pixels, latents, |i, j| mix[[i, j]]);
    let prior_var = latents as f64;
    let noise_var = sigma * sigma * pixels as f64;
    let s_yy = &m * m.transpose() * prior_var + DMatrix::identity(pixels, pixels) * noise_var;
    let s_uy = m.transpose() * prior_var;
    let inv = s_yy.try_inverse().unwrap();
    let mean = &s_uy * &inv * DVector::from_iterator(pixels, y.iter().copied());
    let cov = DMatrix::identity(latents, latents) * prior_var - &s_uy * &inv * s_uy.transpose();

    let toy = LinearToy { dims: dims.clone(), mix };
    let cfg = LangevinConfig { delta: 0.4, steps: 100, sigma, noise_enabled: true };
    let mut chain = LatentChain { clip_id: ClipId::new("toy"), latents: Latents::zeros(&dims, 1) };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..1000 {
        run_langevin(&mut chain, &y, &bg, &toy, &cfg, &mut rng).unwrap();
    }
    let samples = 5000;
    let (mut s1, mut s2) = (vec![0.0; latents], vec![0.0; latents]);
    for _ in 0..samples {
        run_langevin(&mut chain, &y, &bg, &toy, &cfg, &mut rng).unwrap();
        for (k, v) in chain.latents.iter().enumerate() {
            s1[k] += v;
            s2[k] += v * v;
        }
    }
    let n = samples as f64;
    let est: Vec<f64> = s1.iter().map(|v| v / n).collect();
    let err = est.iter().zip(mean.iter()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let mean_rel = err / mean.norm();
    let var_rel = (0..latents)
        .map(|k| ((s2[k] / n - est[k] * est[k]) - cov[(k, k)]).abs() / cov[(k, k)])
        .fold(0.0, f64::max);
    Outcome::new(
        mean_rel <= 0.05 && var_rel <= 0.15,
        format!("posterior mean rel err {mean_rel:.4} (<= 0.05), worst marginal variance rel err {var_rel:.4} (<= 0.15)"),
    )
}

// ---------------------------------------------------------------------------
// Criterion 3: generator mimicry on procedural rain.

/// Under mean-reduced energies the likelihood pull on the latents is weak, so the
/// default step turns the chain into a random walk that the generator cannot
/// track. A small step keeps the codes nearly fixed while the generator fits them.
fn mimicry_config() -> FitConfig {
    let mut cfg = FitConfig { iterations: 2000, lr_emission: 3e-4, ..FitConfig::default() };
    cfg.generator.emission.channels = 32;
    cfg.langevin.delta = 1e-4;
    cfg.langevin.steps = 1;
    cfg
}

fn criterion_3() -> Outcome {
    let rain = procedural_rain(&RainRecipe { seed: 7, ..RainRecipe::default() }, 20, 64, 64).unwrap();
    let fit = fit_generator::<f32>(&rain, &mimicry_config()).unwrap();
    let psnr = psnr_luminance(&fit.reconstruction, &rain).unwrap();
    let windows = window_means(&fit.losses, 50);
    let rises: Vec<usize> = windows.windows(2).enumerate().filter(|(_, w)| w[1] > w[0]).map(|(i, _)| i + 1).collect();
    Outcome::new(
        psnr >= 25.0 && rises.is_empty(),
        format!(
            "reconstruction psnr {psnr:.2} dB (>= 25) after {} iterations; 50-iteration loss means {:.4} -> {:.4}, rising windows {rises:?}",
            fit.losses.len(),
            windows.first().copied().unwrap_or(f64::NAN),
            windows.last().copied().unwrap_or(f64::NAN)
        ),
    )
}

// ---------------------------------------------------------------------------
// Criteria 4 to 6: desk-scale EM runs.

struct Desk {
    samples: Vec<ClipSample>,
    specs: Vec<vderain::video::BatchSpec>,
    validation: Vec<ClipSample>,
    rainy_psnr: f64,
}

fn desk() -> Desk {
    let data: DeskData = desk_data(&DeskSpec::default()).unwrap();
    let cfg = TrainConfig::desk_scale();
    let (samples, specs) = build_dataset(&data.labeled, &data.unlabeled, &cfg.dataset).unwrap();
    let validation: Vec<ClipSample> = data
        .validation
        .iter()
        .map(|s: &LabeledSource| {
            ClipSample::labeled(ClipId::new(format!("val/{}", s.name)), s.rainy.clone(), s.clean.clone().unwrap()).unwrap()
        })
        .collect();
    let rainy_psnr = validation.iter().map(|v| psnr_luminance(&v.rainy, v.clean.as_ref().unwrap()).unwrap()).sum::<f64>()
        / validation.len() as f64;
    Desk { samples, specs, validation, rainy_psnr }
}

/// Trains at desk scale and returns the held-out derained PSNR.
fn desk_run(d: &Desk, mode: Mode, rho: f64, seed: u64) -> f64 {
    let mut cfg = TrainConfig::desk_scale();
    cfg.mode = mode;
    cfg.prior.rho = rho;
    cfg.seed = seed;
    let start = Instant::now();
    let mut t = Trainer::<f32>::new(cfg, &d.samples, &d.specs).unwrap();
    t.train(&[]).unwrap();
    let (psnr, _) = evaluate(&t.derainer, &d.validation).unwrap();
    println!("    run {} rho {rho} seed {seed}: held-out psnr {psnr:.3} dB [{:.0} s]", mode.name(), start.elapsed().as_secs_f64());
    psnr
}

fn median3(mut v: [f64; 3]) -> f64 {
    v.sort_by(f64::total_cmp);
    v[1]
}

// ---------------------------------------------------------------------------
// Criterion 7: protocol invariants.

fn tiny_setup(mode: Mode) -> (TrainConfig, Vec<ClipSample>, Vec<vderain::video::BatchSpec>) {
    let data = desk_data(&DeskSpec { labeled: 4, unlabeled: 2, validation: 0, frames: 4, size: 16, seed: 3 }).unwrap();
    let mut cfg = TrainConfig::desk_scale();
    cfg.mode = mode;
    cfg.dataset.patch_size = 16;
    cfg.dataset.chunk_len = 4;
    cfg.derainer.width = 4;
    cfg.derainer.blocks = 1;
    cfg.generator.emission.channels = 4;
    cfg.generator.emission.stages = 2;
    cfg.langevin.steps = 2;
    let (samples, specs) = build_dataset(&data.labeled, &data.unlabeled, &cfg.dataset).unwrap();
    (cfg, samples, specs)
}

fn generator_state(t: &Trainer<f32>) -> Vec<(Vec<ArrayD<f32>>, Vec<Vec<f32>>)> {
    t.registry
        .batches
        .iter()
        .map(|b| {
            (
                b.generator.named_tensors().into_iter().map(|(_, v)| v.to_owned()).collect(),
                b.chains.iter().map(|c| c.latents.iter().copied().collect()).collect(),
            )
        })
        .collect()
}

fn criterion_7() -> Outcome {
    let mut notes = Vec::new();

    // Pretrain contract over the default five pretrain epochs.
    let (cfg, samples, specs) = tiny_setup(Mode::SemiSupervised);
    let mut t = Trainer::<f32>::new(TrainConfig { epochs: 6, pretrain_epochs: 5, ..cfg.clone() }, &samples, &specs).unwrap();
    let before = generator_state(&t);
    for _ in 0..5 {
        t.run_epoch(&[]).unwrap();
    }
    let pretrain = generator_state(&t) == before;
    t.run_epoch(&[]).unwrap();
    let moved = generator_state(&t).iter().zip(&before).all(|(a, b)| a.0 != b.0 && a.1 != b.1);
    notes.push(format!("pretrain unchanged {pretrain}, moves afterwards {moved}"));

    // Isolation: each batch update changes only its own generator.
    let mut isolated = true;
    for j in 0..t.registry.batches.len() {
        let b = generator_state(&t);
        t.train_batch(j, t.epoch + 1).unwrap();
        let a = generator_state(&t);
        isolated &= (0..a.len()).all(|k| (a[k] == b[k]) == (k != j));
    }
    notes.push(format!("isolation {isolated}"));

    // Logged rates over 31 epochs: epoch 31 is exactly half of epoch 30.
    let (cfg1, samples1, specs1) = tiny_setup(Mode::Baseline1);
    let mut t1 = Trainer::<f32>::new(TrainConfig { epochs: 31, pretrain_epochs: 5, ..cfg1 }, &samples1, &specs1).unwrap();
    t1.train(&[]).unwrap();
    let at = |e: usize| t1.log.iter().find(|r| r.epoch == e).unwrap().clone();
    let (r30, r31) = (at(30), at(31));
    let halving = r31.lr_derainer == r30.lr_derainer / 2.0
        && r31.lr_transition == r30.lr_transition / 2.0
        && r31.lr_emission == r30.lr_emission / 2.0
        && r30.lr_derainer == 2e-4;
    notes.push(format!("halving {halving}"));

    // Resume at epoch 10 and continue to 12 against an uninterrupted run to 12.
    let run_cfg = TrainConfig { epochs: 12, pretrain_epochs: 5, ..cfg };
    let mut full = Trainer::<f32>::new(run_cfg.clone(), &samples, &specs).unwrap();
    let mut part = Trainer::<f32>::new(run_cfg, &samples, &specs).unwrap();
    for _ in 0..10 {
        part.run_epoch(&[]).unwrap();
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("epoch10.zip");
    save_checkpoint(&path, &Checkpoint::from_trainer(&part)).unwrap();
    let mut resumed = load_checkpoint::<f32>(&path).unwrap().into_trainer(&samples).unwrap();
    resumed.train(&[]).unwrap();
    full.train(&[]).unwrap();
    let last = |t: &Trainer<f32>| t.log.iter().filter(|r| r.epoch == 12).map(|r| r.mean_loss).collect::<Vec<_>>();
    let resume = last(&resumed) == last(&full) && resumed.derainer == full.derainer;
    notes.push(format!("resume {resume} (epoch-12 losses {:?})", last(&full)));

    Outcome::new(pretrain && moved && isolated && halving && resume, notes.join("; "))
}

// ---------------------------------------------------------------------------
// Criterion 8: metrics.

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let x = VideoClip::new(Array4::from_shape_fn((3, 3, 24, 24), |_| rng.random::<f32>())).unwrap();
    let ssim = ssim_luminance(&x, &x).unwrap();
    let ramp = VideoClip::new(Array4::from_shape_fn((2, 1, 16, 16), |(_, _, i, j)| 0.1 + 0.02 * (i + j) as f32)).unwrap();
    let shifted = VideoClip::new(ramp.data().mapv(|v| v + 0.1)).unwrap();
    let psnr = psnr_luminance(&ramp, &shifted).unwrap();
    let colours = [[1.0f32, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 1.0, 1.0]];
    let mut luma = Vec::new();
    for c in colours {
        let clip = VideoClip::new(Array4::from_shape_fn((1, 3, 2, 2), |(_, k, _, _)| c[k])).unwrap();
        luma.push(rgb_to_luminance(&clip).unwrap().data()[[0, 0, 1, 1]] as f64);
    }
    let want = [0.299, 0.587, 0.114, 1.0];
    let bt601 = luma.iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-6);
    Outcome::new(
        (ssim - 1.0).abs() < 1e-12 && format!("{psnr:.2}") == "20.00" && bt601,
        format!("ssim(x,x) {ssim:.12}, psnr of 0.1 offset {psnr:.4} dB, luminance of R,G,B,white {luma:.4?}"),
    )
}

// ---------------------------------------------------------------------------

fn main() {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let wanted = |k: u32| selected.is_empty() || selected.contains(&k);
    let mut results: Vec<(u32, &str, Outcome, f64)> = Vec::new();
    let mut record = |k: u32, name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        if !wanted(k) {
            return;
        }
        let start = Instant::now();
        let o = f();
        let secs = start.elapsed().as_secs_f64();
        println!("criterion {k} ({name}): {} - {} [{secs:.1} s]", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((k, name, o, secs));
    };

    record(8, "metric correctness", &mut criterion_8);
    record(1, "gradient suite", &mut criterion_1);
    record(2, "Langevin posterior oracle", &mut criterion_2);
    record(7, "protocol invariants", &mut criterion_7);
    record(3, "generator mimicry", &mut criterion_3);

    let needs_desk = [4, 5, 6].iter().any(|&k| wanted(k));
    if needs_desk {
        let d = desk();
        println!("    desk data: {} training clips, {} batches, rainy held-out psnr {:.3} dB", d.samples.len(), d.specs.len(), d.rainy_psnr);
        let mut semi = None;
        let mut semi_at = |d: &Desk| *semi.get_or_insert_with(|| desk_run(d, Mode::SemiSupervised, 0.5, 0));
        record(4, "desk-scale EM", &mut || {
            let p = semi_at(&d);
            let gain = p - d.rainy_psnr;
            Outcome::new(gain >= 3.0, format!("held-out psnr {p:.3} dB vs rainy {:.3} dB, gain {gain:.3} dB (>= 3)", d.rainy_psnr))
        });
        record(5, "smoothness weight trend", &mut || {
            let p0 = desk_run(&d, Mode::SemiSupervised, 0.0, 0);
            let p05 = semi_at(&d);
            let p2 = desk_run(&d, Mode::SemiSupervised, 2.0, 0);
            Outcome::new(
                p0 >= p05 && p05 >= p2,
                format!("held-out psnr at rho 0 / 0.5 / 2: {p0:.3} / {p05:.3} / {p2:.3} dB (non-increasing)"),
            )
        });
        record(6, "baseline ordering", &mut || {
            let b1 = median3([0, 1, 2].map(|s| desk_run(&d, Mode::Baseline1, 0.5, s)));
            let b2 = median3([0, 1, 2].map(|s| desk_run(&d, Mode::Baseline2, 0.5, s)));
            Outcome::new(b2 >= b1, format!("median held-out psnr baseline1 {b1:.3} dB, baseline2 {b2:.3} dB (baseline2 >= baseline1)"))
        });
    }

    results.sort_by_key(|r| r.0);
    println!("\nacceptance summary");
    for (k, name, o, secs) in &results {
        println!("  {k}. {name}: {} [{secs:.1} s]", if o.pass { "PASS" } else { "FAIL" });
    }
    if results.iter().any(|r| !r.2.pass) {
        std::process::exit(1);
    }
}
