//! Fixed training samples and their partition into persistent mini-batches.
//!
//! Crops are drawn once here and never re-drawn: every latent chain and every
//! per-batch generator downstream is tied to the exact pixels of its clip.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ops::{chunk_video, crop_fixed_patch};
use super::{ClipId, ClipSample, VideoClip, VideoError};

/// A source video; `clean` is present for labeled sources.
#[derive(Clone, Debug)]
pub struct LabeledSource {
    pub name: String,
    pub rainy: VideoClip,
    pub clean: Option<VideoClip>,
}

impl LabeledSource {
    pub fn labeled(name: impl Into<String>, rainy: VideoClip, clean: VideoClip) -> Self {
        Self { name: name.into(), rainy, clean: Some(clean) }
    }

    pub fn unlabeled(name: impl Into<String>, rainy: VideoClip) -> Self {
        Self { name: name.into(), rainy, clean: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub patch_size: usize,
    pub chunk_len: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self { patch_size: 64, chunk_len: 20, batch_size: 12, seed: 0 }
    }
}

/// Membership of one persistent mini-batch; `index` is the 1-based batch number j.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchSpec {
    pub index: usize,
    pub labeled: bool,
    pub members: Vec<usize>,
}

fn cut_samples(
    sources: &[LabeledSource],
    kind: &str,
    cfg: &DatasetConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<ClipSample>, VideoError> {
    let mut out = Vec::new();
    for src in sources {
        let (_, _, h, w) = src.rainy.dim();
        if cfg.patch_size > h || cfg.patch_size > w {
            return Err(VideoError::OutOfBounds(format!(
                "patch {} larger than source '{}' ({h}x{w})",
                cfg.patch_size, src.name
            )));
        }
        if let Some(clean) = &src.clean {
            if clean.dim() != src.rainy.dim() {
                return Err(VideoError::Shape(format!("source '{}': rainy and clean differ", src.name)));
            }
        }
        let rainy_chunks = chunk_video(&src.rainy, cfg.chunk_len)?;
        let clean_chunks = match &src.clean {
            Some(c) => Some(chunk_video(c, cfg.chunk_len)?),
            None => None,
        };
        for (k, rainy) in rainy_chunks.iter().enumerate() {
            let top = rng.random_range(0..=h - cfg.patch_size);
            let left = rng.random_range(0..=w - cfg.patch_size);
            let id = ClipId::new(format!("{kind}/{}/c{k:03}", src.name));
            let rainy = crop_fixed_patch(rainy, top, left, cfg.patch_size)?;
            let sample = match &clean_chunks {
                Some(cc) => ClipSample::labeled(id, rainy, crop_fixed_patch(&cc[k], top, left, cfg.patch_size)?)?,
                None => ClipSample::unlabeled(id, rainy),
            };
            out.push(sample);
        }
    }
    Ok(out)
}

/// Cuts sources into fixed clips and partitions them into `B_l` labeled then
/// `B_u` unlabeled mini-batches. Samples that do not fill a batch are dropped.
pub fn build_dataset(
    labeled: &[LabeledSource],
    unlabeled: &[LabeledSource],
    cfg: &DatasetConfig,
) -> Result<(Vec<ClipSample>, Vec<BatchSpec>), VideoError> {
    if cfg.batch_size == 0 || cfg.patch_size == 0 {
        return Err(VideoError::Invalid("batch size and patch size must be positive".into()));
    }
    if labeled.iter().any(|s| s.clean.is_none()) {
        return Err(VideoError::Invalid("labeled sources need clean ground truth".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut lab = cut_samples(labeled, "labeled", cfg, &mut rng)?;
    let unl_sources: Vec<LabeledSource> =
        unlabeled.iter().map(|s| LabeledSource::unlabeled(s.name.clone(), s.rainy.clone())).collect();
    let mut unl = cut_samples(&unl_sources, "unlabeled", cfg, &mut rng)?;

    if lab.len() < cfg.batch_size {
        return Err(VideoError::InsufficientData(format!(
            "{} labeled clips cannot fill one batch of {}",
            lab.len(),
            cfg.batch_size
        )));
    }
    if !unl.is_empty() && unl.len() < cfg.batch_size {
        return Err(VideoError::InsufficientData(format!(
            "{} unlabeled clips cannot fill one batch of {}",
            unl.len(),
            cfg.batch_size
        )));
    }
    lab.shuffle(&mut rng);
    unl.shuffle(&mut rng);
    lab.truncate(lab.len() / cfg.batch_size * cfg.batch_size);
    unl.truncate(unl.len() / cfg.batch_size * cfg.batch_size);

    let mut samples = lab;
    let n_lab = samples.len();
    samples.extend(unl);
    let batches = (0..samples.len() / cfg.batch_size)
        .map(|b| BatchSpec {
            index: b + 1,
            labeled: b * cfg.batch_size < n_lab,
            members: (b * cfg.batch_size..(b + 1) * cfg.batch_size).collect(),
        })
        .collect();
    Ok((samples, batches))
}
