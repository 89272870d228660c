//! Checkpoint archives: a zip holding `manifest.json` plus one tensor container
//! per named array. Round trips are bitwise exact.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{ArrayD, Dimension, IxDyn};
use serde::{Deserialize, Serialize};
use zip::write::SimpleFileOptions;
use zip::{CompressionMethod, ZipArchive, ZipWriter};

use super::config::TrainConfig;
use super::em::{LogRow, Trainer};
use super::optim::AdamState;
use super::registry::{generator_adam_states, BatchRegistry, BatchState};
use super::TrainError;
use crate::inference::LatentChain;
use crate::nn::{shapes, DerainerParams, GeneratorConfig, GeneratorParams, Latents, ParamSet, Real};
use crate::video::container::{decode, encode, DType, TensorData};
use crate::video::{BatchSpec, ClipId, ClipSample};

pub const MANIFEST: &str = "manifest.json";
pub const FORMAT: &str = "vderain-checkpoint";
pub const FORMAT_VERSION: u32 = 1;

/// Everything needed to resume training or run inference.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint<F> {
    pub config: TrainConfig,
    /// Completed epochs.
    pub epoch: usize,
    pub derainer: DerainerParams<F>,
    pub derainer_adam: AdamState<F>,
    pub registry: BatchRegistry<F>,
    pub log: Vec<LogRow>,
}

impl<F: Real> Checkpoint<F> {
    pub fn from_trainer(t: &Trainer<F>) -> Self {
        Self {
            config: t.config.clone(),
            epoch: t.epoch,
            derainer: t.derainer.clone(),
            derainer_adam: t.derainer_adam.clone(),
            registry: t.registry.clone(),
            log: t.log.clone(),
        }
    }

    pub fn into_trainer(self, samples: &[ClipSample]) -> Result<Trainer<F>, TrainError> {
        Trainer::from_parts(self.config, self.derainer, self.derainer_adam, self.registry, self.epoch, self.log, samples)
    }

    /// A derainer-only checkpoint with no generators.
    pub fn derainer_only(config: TrainConfig, derainer: DerainerParams<F>) -> Self {
        let derainer_adam = AdamState::new(&shapes(&derainer));
        Self { config, epoch: 0, derainer, derainer_adam, registry: BatchRegistry { batches: Vec::new() }, log: Vec::new() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Entry {
    name: String,
    file: String,
    dims: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BatchManifest {
    spec: BatchSpec,
    clip_ids: Vec<ClipId>,
    generator: GeneratorConfig,
    transition_adam_step: u64,
    emission_adam_step: u64,
}

/// Latent noise streams are derived from (seed, clip id, epoch), so the seed
/// and the epoch counter are the whole RNG state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RngState {
    seed: u64,
    next_epoch: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    format: String,
    version: u32,
    dtype: String,
    epoch: usize,
    rng: RngState,
    config: TrainConfig,
    derainer_adam_step: u64,
    batches: Vec<BatchManifest>,
    log: Vec<LogRow>,
    entries: Vec<Entry>,
}

fn dtype_name(d: DType) -> &'static str {
    match d {
        DType::F32 => "f32",
        DType::F64 => "f64",
    }
}

fn to_tensor<F: Real>(a: &ArrayD<F>) -> TensorData {
    match F::DTYPE {
        DType::F32 => TensorData::F32(a.mapv(|v| v.as_f64() as f32)),
        DType::F64 => TensorData::F64(a.mapv(|v| v.as_f64())),
    }
}

fn from_tensor<F: Real>(t: TensorData) -> ArrayD<F> {
    match t {
        TensorData::F32(a) => a.mapv(|v| F::lit(v as f64)),
        TensorData::F64(a) => a.mapv(F::lit),
    }
}

/// Flattens a checkpoint into named arrays, in a fixed order.
fn named_arrays<F: Real>(ck: &Checkpoint<F>) -> Vec<(String, ArrayD<F>)> {
    let mut out = Vec::new();
    let params = |prefix: &str, p: Vec<(String, ndarray::ArrayViewD<'_, F>)>, out: &mut Vec<(String, ArrayD<F>)>| {
        for (n, t) in p {
            out.push((format!("{prefix}/{n}"), t.to_owned()));
        }
    };
    let adam = |prefix: &str, s: &AdamState<F>, out: &mut Vec<(String, ArrayD<F>)>| {
        for (i, (m, v)) in s.m.iter().zip(&s.v).enumerate() {
            out.push((format!("{prefix}/m{i}"), m.clone()));
            out.push((format!("{prefix}/v{i}"), v.clone()));
        }
    };
    params("derainer", ck.derainer.named_tensors(), &mut out);
    adam("derainer_adam", &ck.derainer_adam, &mut out);
    for (j, b) in ck.registry.batches.iter().enumerate() {
        let p = format!("batch{j}");
        params(&format!("{p}/generator"), b.generator.named_tensors(), &mut out);
        adam(&format!("{p}/adam_transition"), &b.transition_adam, &mut out);
        adam(&format!("{p}/adam_emission"), &b.emission_adam, &mut out);
        for (k, c) in b.chains.iter().enumerate() {
            let l = &c.latents;
            out.push((format!("{p}/chain{k}/s0"), l.s0.clone().into_dyn()));
            out.push((format!("{p}/chain{k}/z"), l.z.clone().into_dyn()));
            out.push((format!("{p}/chain{k}/m"), l.m.clone().into_dyn()));
        }
    }
    out
}

pub fn save_checkpoint<F: Real>(path: impl AsRef<Path>, ck: &Checkpoint<F>) -> Result<(), TrainError> {
    let arrays = named_arrays(ck);
    let entries: Vec<Entry> = arrays
        .iter()
        .enumerate()
        .map(|(i, (name, a))| Entry { name: name.clone(), file: format!("tensors/{i:05}.tnsr"), dims: a.shape().to_vec() })
        .collect();
    let manifest = Manifest {
        format: FORMAT.into(),
        version: FORMAT_VERSION,
        dtype: dtype_name(F::DTYPE).into(),
        epoch: ck.epoch,
        rng: RngState { seed: ck.config.seed, next_epoch: ck.epoch + 1 },
        config: ck.config.clone(),
        derainer_adam_step: ck.derainer_adam.step,
        batches: ck
            .registry
            .batches
            .iter()
            .map(|b| BatchManifest {
                spec: b.spec.clone(),
                clip_ids: b.chains.iter().map(|c| c.clip_id.clone()).collect(),
                generator: b.generator.config.clone(),
                transition_adam_step: b.transition_adam.step,
                emission_adam_step: b.emission_adam.step,
            })
            .collect(),
        log: ck.log.clone(),
        entries,
    };
    let file = File::create(path.as_ref())?;
    let mut zip = ZipWriter::new(BufWriter::new(file));
    let opts = SimpleFileOptions::default().compression_method(CompressionMethod::Deflated);
    let zerr = |e: zip::result::ZipError| TrainError::Checkpoint(e.to_string());
    zip.start_file(MANIFEST, opts).map_err(zerr)?;
    let json = serde_json::to_vec_pretty(&manifest).map_err(|e| TrainError::Checkpoint(e.to_string()))?;
    zip.write_all(&json)?;
    for ((_, a), e) in arrays.iter().zip(&manifest.entries) {
        zip.start_file(e.file.as_str(), opts).map_err(zerr)?;
        let mut buf = Vec::new();
        encode(&mut buf, &to_tensor(a))?;
        zip.write_all(&buf)?;
    }
    zip.finish().map_err(zerr)?.flush()?;
    Ok(())
}

struct Store {
    arrays: BTreeMap<String, TensorData>,
}

impl Store {
    fn take<F: Real>(&mut self, name: &str, want: &[usize]) -> Result<ArrayD<F>, TrainError> {
        let t = self
            .arrays
            .remove(name)
            .ok_or_else(|| TrainError::Checkpoint(format!("no entry named {name}")))?;
        if t.shape() != want {
            return Err(TrainError::Checkpoint(format!("{name}: stored shape {:?}, expected {want:?}", t.shape())));
        }
        Ok(from_tensor(t))
    }

    fn fill<F: Real, P: ParamSet<F>>(&mut self, prefix: &str, p: &mut P) -> Result<(), TrainError> {
        let wanted: Vec<(String, IxDyn)> = p.named_tensors().into_iter().map(|(n, t)| (n, t.raw_dim())).collect();
        let mut values = Vec::with_capacity(wanted.len());
        for (n, dim) in wanted {
            values.push(self.take::<F>(&format!("{prefix}/{n}"), dim.slice())?);
        }
        p.assign(&values).map_err(TrainError::Checkpoint)
    }

    fn adam<F: Real>(&mut self, prefix: &str, shapes: &[IxDyn], step: u64) -> Result<AdamState<F>, TrainError> {
        let mut s = AdamState::new(shapes);
        s.step = step;
        for (i, d) in shapes.iter().enumerate() {
            s.m[i] = self.take(&format!("{prefix}/m{i}"), d.slice())?;
            s.v[i] = self.take(&format!("{prefix}/v{i}"), d.slice())?;
        }
        Ok(s)
    }
}

pub fn load_checkpoint<F: Real>(path: impl AsRef<Path>) -> Result<Checkpoint<F>, TrainError> {
    let path = path.as_ref();
    let file = File::open(path)?;
    let zerr = |e: zip::result::ZipError| TrainError::Checkpoint(format!("{}: {e}", path.display()));
    let mut zip = ZipArchive::new(BufReader::new(file)).map_err(zerr)?;
    let manifest: Manifest = {
        let mut s = String::new();
        zip.by_name(MANIFEST).map_err(zerr)?.read_to_string(&mut s)?;
        serde_json::from_str(&s).map_err(|e| TrainError::Checkpoint(format!("manifest: {e}")))?
    };
    if manifest.format != FORMAT || manifest.version != FORMAT_VERSION {
        return Err(TrainError::Checkpoint(format!(
            "unsupported archive {} v{}",
            manifest.format, manifest.version
        )));
    }
    if manifest.dtype != dtype_name(F::DTYPE) {
        return Err(TrainError::Checkpoint(format!(
            "archive holds {} tensors, loader expects {}",
            manifest.dtype,
            dtype_name(F::DTYPE)
        )));
    }
    let mut store = Store { arrays: BTreeMap::new() };
    for e in &manifest.entries {
        let mut f = zip
            .by_name(&e.file)
            .map_err(|err| TrainError::Checkpoint(format!("entry {} ({}): {err}", e.name, e.file)))?;
        let t = decode(&mut f)?;
        if t.shape() != e.dims.as_slice() {
            return Err(TrainError::Checkpoint(format!(
                "{}: manifest lists {:?}, tensor holds {:?}",
                e.name,
                e.dims,
                t.shape()
            )));
        }
        if store.arrays.insert(e.name.clone(), t).is_some() {
            return Err(TrainError::Checkpoint(format!("duplicate entry {}", e.name)));
        }
    }

    let config = manifest.config;
    let mut derainer = DerainerParams::<F>::zeros(&config.derainer)?;
    store.fill("derainer", &mut derainer)?;
    let derainer_adam = store.adam("derainer_adam", &shapes(&derainer), manifest.derainer_adam_step)?;
    let mut batches = Vec::with_capacity(manifest.batches.len());
    for (j, bm) in manifest.batches.into_iter().enumerate() {
        let p = format!("batch{j}");
        if bm.clip_ids.len() != bm.spec.members.len() {
            return Err(TrainError::Checkpoint(format!("{p}: member and chain counts differ")));
        }
        let mut generator = GeneratorParams::<F>::zeros(&bm.generator)?;
        store.fill(&format!("{p}/generator"), &mut generator)?;
        let (t0, e0) = generator_adam_states::<F>(&generator);
        let ts: Vec<IxDyn> = t0.m.iter().map(|a| a.raw_dim()).collect();
        let es: Vec<IxDyn> = e0.m.iter().map(|a| a.raw_dim()).collect();
        let transition_adam = store.adam(&format!("{p}/adam_transition"), &ts, bm.transition_adam_step)?;
        let emission_adam = store.adam(&format!("{p}/adam_emission"), &es, bm.emission_adam_step)?;
        let tc = &bm.generator.transition;
        let mut chains = Vec::with_capacity(bm.clip_ids.len());
        for (k, id) in bm.clip_ids.into_iter().enumerate() {
            let frames = store
                .arrays
                .get(&format!("{p}/chain{k}/z"))
                .map(|t| t.shape().first().copied().unwrap_or(0))
                .ok_or_else(|| TrainError::Checkpoint(format!("no entry named {p}/chain{k}/z")))?;
            let dim = |v: &[usize]| v.to_vec();
            let s0 = store.take::<F>(&format!("{p}/chain{k}/s0"), &dim(&[tc.state_dim]))?;
            let z = store.take::<F>(&format!("{p}/chain{k}/z"), &dim(&[frames, tc.noise_dim]))?;
            let m = store.take::<F>(&format!("{p}/chain{k}/m"), &dim(&[tc.appearance_dim]))?;
            let into = |e: ndarray::ShapeError| TrainError::Checkpoint(e.to_string());
            let latents = Latents {
                s0: s0.into_dimensionality().map_err(into)?,
                z: z.into_dimensionality().map_err(into)?,
                m: m.into_dimensionality().map_err(into)?,
            };
            chains.push(LatentChain { clip_id: id, latents });
        }
        batches.push(BatchState { spec: bm.spec, generator, transition_adam, emission_adam, chains });
    }
    if let Some(extra) = store.arrays.keys().next() {
        return Err(TrainError::Checkpoint(format!("unexpected entry {extra}")));
    }
    Ok(Checkpoint {
        config,
        epoch: manifest.epoch,
        derainer,
        derainer_adam,
        registry: BatchRegistry { batches },
        log: manifest.log,
    })
}
