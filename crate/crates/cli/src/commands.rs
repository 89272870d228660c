//! Command implementations. Every command writes only under its output path.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use ndarray::{s, Array4};
use serde::Serialize;
use vderain::nn::derainer_forward;
use vderain::training::em::log_to_csv;
use vderain::training::{fit_generator, load_checkpoint, save_checkpoint, Checkpoint, Trainer};
use vderain::video::demo::{desk_data, DeskSpec};
use vderain::video::ops::{chunk_video_keep_tail, concat_frames};
use vderain::video::{
    build_dataset, composite_rainy, load_frames_dir, procedural_rain, psnr_luminance, read_tensor_container,
    save_frames_dir, ssim_luminance, write_tensor_container, ClipId, ClipSample, LabeledSource, RainRecipe, VideoClip,
};

use crate::config::{load_config, ConfigFile};

pub const LOG_NAME: &str = "log.csv";
pub const FINAL_CHECKPOINT: &str = "final.zip";

fn is_container(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "tnsr")
}

/// Reads a `.tnsr` container or a directory of PNG frames.
pub fn read_clip(path: &Path) -> Result<VideoClip> {
    if is_container(path) {
        read_tensor_container(path).with_context(|| format!("reading {}", path.display()))
    } else {
        load_frames_dir(path).with_context(|| format!("reading frames from {}", path.display()))
    }
}

pub fn write_clip(path: &Path, clip: &VideoClip) -> Result<()> {
    if is_container(path) {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        write_tensor_container(path, clip).with_context(|| format!("writing {}", path.display()))
    } else {
        save_frames_dir(path, clip).with_context(|| format!("writing frames to {}", path.display()))
    }
}

fn source_name(dir: &Path) -> String {
    dir.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| dir.display().to_string())
}

fn labeled_source(dir: &Path) -> Result<LabeledSource> {
    let rainy = read_clip(&dir.join("rainy"))?;
    let clean = read_clip(&dir.join("clean"))?;
    ensure!(rainy.dim() == clean.dim(), "{}: rainy {:?} and clean {:?} differ", dir.display(), rainy.dim(), clean.dim());
    Ok(LabeledSource::labeled(source_name(dir), rainy, clean))
}

fn unlabeled_source(dir: &Path) -> Result<LabeledSource> {
    let sub = dir.join("rainy");
    let clip = if sub.is_dir() { read_clip(&sub)? } else { read_clip(dir)? };
    Ok(LabeledSource::unlabeled(source_name(dir), clip))
}

/// Whole validation clips, cropped at the top-left to a multiple of `factor`.
fn validation_samples(dirs: &[PathBuf], factor: usize) -> Result<Vec<ClipSample>> {
    dirs.iter()
        .map(|d| {
            let src = labeled_source(d)?;
            let crop = |c: &VideoClip| -> Result<VideoClip> {
                let (_, _, h, w) = c.dim();
                let (h, w) = (h / factor * factor, w / factor * factor);
                ensure!(h > 0 && w > 0, "{} is smaller than the shuffle factor", d.display());
                Ok(VideoClip::new(c.data().slice(s![.., .., ..h, ..w]).to_owned())?)
            };
            let clean = crop(src.clean.as_ref().expect("labeled"))?;
            Ok(ClipSample::labeled(ClipId::new(format!("validation/{}", src.name)), crop(&src.rainy)?, clean)?)
        })
        .collect()
}

pub fn cmd_train(config: Option<&Path>, overrides: &[String], resume: Option<&Path>) -> Result<()> {
    let cfg = load_config(config, overrides)?;
    let out = cfg.output_dir()?.to_path_buf();
    if cfg.data.labeled.is_empty() {
        bail!("missing required path data.labeled");
    }
    let labeled = cfg.data.labeled.iter().map(|d| labeled_source(d)).collect::<Result<Vec<_>>>()?;
    let unlabeled = cfg.data.unlabeled.iter().map(|d| unlabeled_source(d)).collect::<Result<Vec<_>>>()?;
    let validation = validation_samples(&cfg.data.validation, cfg.train.derainer.shuffle)?;
    let (samples, specs) = build_dataset(&labeled, &unlabeled, &cfg.train.dataset).context("building the dataset")?;

    let mut trainer = match resume {
        Some(p) => {
            let mut ck = load_checkpoint::<f32>(p).with_context(|| format!("loading checkpoint {}", p.display()))?;
            ck.config.epochs = cfg.train.epochs;
            ck.into_trainer(&samples).context("resuming from checkpoint")?
        }
        None => Trainer::<f32>::new(cfg.train.clone(), &samples, &specs).context("setting up training")?,
    };
    eprintln!(
        "training {} batches ({} samples) in {} mode for {} epochs",
        trainer.registry.batches.len(),
        samples.len(),
        trainer.config.mode.name(),
        trainer.config.epochs
    );
    while trainer.epoch < trainer.config.epochs {
        trainer.run_epoch(&validation).context("training")?;
        let rows: Vec<_> = trainer.log.iter().filter(|r| r.epoch == trainer.epoch).collect();
        for r in &rows {
            eprintln!(
                "epoch {:>3} {:<9} loss {:.5e} val psnr {}",
                r.epoch,
                r.batch_kind,
                r.mean_loss,
                r.val_psnr.map(|p| format!("{p:.3}")).unwrap_or_else(|| "-".into())
            );
        }
        fs::write(out.join(LOG_NAME), log_to_csv(&trainer.log))?;
        if cfg.checkpoint_every > 0 && trainer.epoch % cfg.checkpoint_every == 0 {
            let p = out.join(format!("checkpoint_epoch{:03}.zip", trainer.epoch));
            save_checkpoint(&p, &Checkpoint::from_trainer(&trainer)).with_context(|| format!("saving {}", p.display()))?;
        }
    }
    fs::write(out.join(LOG_NAME), log_to_csv(&trainer.log))?;
    let p = out.join(FINAL_CHECKPOINT);
    save_checkpoint(&p, &Checkpoint::from_trainer(&trainer)).with_context(|| format!("saving {}", p.display()))?;
    eprintln!("wrote {}", p.display());
    Ok(())
}

/// Pads height and width up to a multiple of `factor` by repeating the last row and column.
fn pad_to_multiple(clip: &VideoClip, factor: usize) -> Result<VideoClip> {
    let (n, c, h, w) = clip.dim();
    let (ph, pw) = (h.div_ceil(factor) * factor, w.div_ceil(factor) * factor);
    if (ph, pw) == (h, w) {
        return Ok(clip.clone());
    }
    let d = clip.data();
    Ok(VideoClip::new(Array4::from_shape_fn((n, c, ph, pw), |(t, k, i, j)| d[[t, k, i.min(h - 1), j.min(w - 1)]]))?)
}

pub fn cmd_derain(checkpoint: &Path, input: &Path, output: &Path) -> Result<()> {
    let ck = load_checkpoint::<f32>(checkpoint).with_context(|| format!("loading checkpoint {}", checkpoint.display()))?;
    let clip = read_clip(input)?;
    let cfg = &ck.config;
    ensure!(
        clip.channels() == cfg.derainer.channels,
        "input has {} channels, the derainer expects {}",
        clip.channels(),
        cfg.derainer.channels
    );
    let (_, _, h, w) = clip.dim();
    let padded = pad_to_multiple(&clip, cfg.derainer.shuffle)?;
    let mut parts = Vec::new();
    for chunk in chunk_video_keep_tail(&padded, cfg.dataset.chunk_len)? {
        let out = derainer_forward(&chunk, &ck.derainer).context("running the derainer")?;
        parts.push(VideoClip::new(out.data().slice(s![.., .., ..h, ..w]).to_owned())?);
    }
    let result = concat_frames(&parts)?;
    write_clip(output, &result)?;
    eprintln!("derained {} frames into {}", result.frames(), output.display());
    Ok(())
}

#[derive(Serialize)]
struct Score {
    clip: String,
    psnr: f64,
    ssim: f64,
}

pub fn cmd_evaluate(pairs: &[(PathBuf, PathBuf)], output: &Path) -> Result<()> {
    ensure!(!pairs.is_empty(), "evaluate needs at least one --pair RESULT CLEAN");
    let mut scores = Vec::new();
    for (result, clean) in pairs {
        let a = read_clip(result)?;
        let b = read_clip(clean)?;
        let ctx = || format!("comparing {} with {}", result.display(), clean.display());
        scores.push(Score {
            clip: result.display().to_string(),
            psnr: psnr_luminance(&a, &b).with_context(ctx)?,
            ssim: ssim_luminance(&a, &b).with_context(ctx)?,
        });
    }
    let n = scores.len() as f64;
    let mean = Score {
        clip: "mean".into(),
        psnr: scores.iter().map(|s| s.psnr).sum::<f64>() / n,
        ssim: scores.iter().map(|s| s.ssim).sum::<f64>() / n,
    };
    let mut csv = String::from("clip,psnr,ssim\n");
    for s in scores.iter().chain(std::iter::once(&mean)) {
        csv.push_str(&format!("{},{:.6},{:.6}\n", s.clip.replace(',', "_"), s.psnr, s.ssim));
    }
    if let Some(parent) = output.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(output, csv).with_context(|| format!("writing {}", output.display()))?;
    println!("mean psnr {:.4} dB, mean ssim {:.4}", mean.psnr, mean.ssim);
    Ok(())
}

pub struct SimulateArgs<'a> {
    pub recipe: Option<&'a Path>,
    pub seed: Option<u64>,
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    pub clean: Option<&'a Path>,
    pub output: &'a Path,
}

pub fn cmd_simulate_rain(a: &SimulateArgs<'_>) -> Result<()> {
    let mut recipe = match a.recipe {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading recipe {}", p.display()))?;
            serde_json::from_str::<RainRecipe>(&text).with_context(|| format!("parsing recipe {}", p.display()))?
        }
        None => RainRecipe::default(),
    };
    if let Some(seed) = a.seed {
        recipe.seed = seed;
    }
    let clean = a.clean.map(read_clip).transpose()?;
    let (n, h, w) = match &clean {
        Some(c) => (c.frames(), c.height(), c.width()),
        None => (a.frames, a.height, a.width),
    };
    let rain = procedural_rain(&recipe, n, h, w).context("synthesising rain")?;
    fs::create_dir_all(a.output)?;
    write_clip(&a.output.join("rain"), &rain)?;
    write_clip(&a.output.join("rain.tnsr"), &rain)?;
    fs::write(a.output.join("recipe.json"), serde_json::to_string_pretty(&recipe)?)?;
    if let Some(c) = clean {
        let rainy = composite_rainy(&c, &rain)?;
        write_clip(&a.output.join("rainy"), &rainy)?;
        write_clip(&a.output.join("rainy.tnsr"), &rainy)?;
    }
    eprintln!("wrote {n} frames of rain to {}", a.output.display());
    Ok(())
}

pub fn cmd_fit_generator(input: &Path, config: Option<&Path>, overrides: &[String]) -> Result<()> {
    let cfg: ConfigFile = load_config(config, overrides)?;
    let out = cfg.output_dir()?.to_path_buf();
    let rain = read_clip(input)?;
    let start = Instant::now();
    let fit = fit_generator::<f32>(&rain, &cfg.fit).context("fitting the generator")?;
    let psnr = psnr_luminance(&fit.reconstruction, &rain)?;
    write_clip(&out.join("reconstruction"), &fit.reconstruction)?;
    write_clip(&out.join("reconstruction.tnsr"), &fit.reconstruction)?;
    let mut csv = String::from("iteration,loss\n");
    for (i, l) in fit.losses.iter().enumerate() {
        csv.push_str(&format!("{},{:.9e}\n", i + 1, l));
    }
    fs::write(out.join("losses.csv"), csv)?;
    let summary = serde_json::json!({
        "iterations": fit.losses.len(),
        "psnr": psnr,
        "final_loss": fit.losses.last(),
        "wall_seconds": start.elapsed().as_secs_f64(),
    });
    fs::write(out.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    println!("reconstruction psnr {psnr:.3} dB after {} iterations", fit.losses.len());
    Ok(())
}

/// Writes a desk-scale dataset and a matching config file under `output`.
pub fn cmd_demo_data(spec: &DeskSpec, output: &Path) -> Result<PathBuf> {
    let data = desk_data(spec).context("synthesising the demo dataset")?;
    let mut paths = (Vec::new(), Vec::new(), Vec::new());
    for (kind, sources, list) in [
        ("labeled", &data.labeled, &mut paths.0),
        ("unlabeled", &data.unlabeled, &mut paths.1),
        ("validation", &data.validation, &mut paths.2),
    ] {
        for s in sources {
            let dir = output.join(kind).join(&s.name);
            write_clip(&dir.join("rainy"), &s.rainy)?;
            if let Some(c) = &s.clean {
                write_clip(&dir.join("clean"), c)?;
            }
            list.push(dir);
        }
    }
    let mut cfg = ConfigFile::default();
    cfg.train = vderain::training::TrainConfig::desk_scale();
    cfg.train.seed = spec.seed;
    cfg.train.dataset.patch_size = spec.size.min(cfg.train.dataset.patch_size);
    cfg.train.dataset.chunk_len = spec.frames.min(cfg.train.dataset.chunk_len);
    cfg.data.labeled = paths.0;
    cfg.data.unlabeled = paths.1;
    cfg.data.validation = paths.2;
    cfg.data.output = Some(output.join("run"));
    let path = output.join("config.json");
    fs::write(&path, serde_json::to_string_pretty(&cfg)?)?;
    eprintln!("wrote demo dataset and {}", path.display());
    Ok(path)
}
