//! Layered configuration: built-in defaults, then a JSON file, then
//! `--set dotted.key=value` overrides. Unknown keys are rejected.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use vderain::training::{FitConfig, TrainConfig};

pub const SCHEMA_VERSION: u32 = 1;
pub const RESOLVED_NAME: &str = "config.resolved.json";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataPaths {
    /// Directories holding `rainy/` and `clean/` frame folders.
    pub labeled: Vec<PathBuf>,
    /// Frame directories, or directories holding a `rainy/` folder.
    pub unlabeled: Vec<PathBuf>,
    /// Same layout as `labeled`; scored every epoch when present.
    pub validation: Vec<PathBuf>,
    pub output: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub schema_version: u32,
    pub data: DataPaths,
    pub train: TrainConfig,
    pub fit: FitConfig,
    /// Save an intermediate checkpoint every this many epochs; 0 keeps only the final one.
    pub checkpoint_every: usize,
}

impl Default for ConfigFile {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            data: DataPaths::default(),
            train: TrainConfig::default(),
            fit: FitConfig::default(),
            checkpoint_every: 0,
        }
    }
}

impl ConfigFile {
    pub fn output_dir(&self) -> Result<&Path> {
        self.data.output.as_deref().context("missing required path data.output (set it or pass --output)")
    }
}

/// Recursively overlays `top` onto `base`; objects merge, everything else replaces.
fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Parses `a.b.c=value`; the value is read as JSON and falls back to a plain string.
pub fn parse_override(s: &str) -> Result<(Vec<String>, Value)> {
    let (key, raw) = s.split_once('=').with_context(|| format!("override '{s}' is not key=value"))?;
    let path: Vec<String> = key.trim().split('.').map(str::to_owned).collect();
    if path.iter().any(String::is_empty) {
        bail!("override '{s}' has an empty key segment");
    }
    let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_owned()));
    Ok((path, value))
}

fn set_path(root: &mut Value, path: &[String], value: Value) -> Result<()> {
    let mut node = root;
    for (i, seg) in path.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .with_context(|| format!("cannot set '{}': '{}' is not an object", path.join("."), path[..i].join(".")))?;
        if i + 1 == path.len() {
            obj.insert(seg.clone(), value);
            return Ok(());
        }
        node = obj.entry(seg.clone()).or_insert_with(|| Value::Object(Map::new()));
    }
    unreachable!("override paths are non-empty")
}

/// Resolves a configuration without touching the filesystem beyond reading `path`.
pub fn resolve(path: Option<&Path>, overrides: &[String]) -> Result<ConfigFile> {
    let mut value = serde_json::to_value(ConfigFile::default()).expect("defaults serialize");
    if let Some(p) = path {
        let text = fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
        let file: Value = serde_json::from_str(&text).with_context(|| format!("parsing config {}", p.display()))?;
        if !file.is_object() {
            bail!("config {} must hold a JSON object", p.display());
        }
        merge(&mut value, file);
    }
    for o in overrides {
        let (key, v) = parse_override(o)?;
        set_path(&mut value, &key, v)?;
    }
    let cfg: ConfigFile = serde_path_to_error::deserialize(value).map_err(|e| {
        let at = e.path().to_string();
        anyhow::anyhow!("invalid configuration at '{at}': {}", e.into_inner())
    })?;
    if cfg.schema_version != SCHEMA_VERSION {
        bail!("schema_version {} is not supported (expected {SCHEMA_VERSION})", cfg.schema_version);
    }
    cfg.train.validate().context("invalid training configuration")?;
    Ok(cfg)
}

/// Resolves, requires an output directory, and writes the resolved form there.
pub fn load_config(path: Option<&Path>, overrides: &[String]) -> Result<ConfigFile> {
    let cfg = resolve(path, overrides)?;
    let out = cfg.output_dir()?;
    fs::create_dir_all(out).with_context(|| format!("creating output directory {}", out.display()))?;
    let echo = out.join(RESOLVED_NAME);
    fs::write(&echo, serde_json::to_string_pretty(&cfg)?).with_context(|| format!("writing {}", echo.display()))?;
    Ok(cfg)
}
