//! Desk-scale synthetic datasets: procedural rain composited over camera pans.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{composite_rainy, procedural_rain, scene::scene_pan, LabeledSource, RainRecipe, VideoError};

#[derive(Clone, Debug, PartialEq)]
pub struct DeskSpec {
    pub labeled: usize,
    pub unlabeled: usize,
    pub validation: usize,
    pub frames: usize,
    pub size: usize,
    pub seed: u64,
}

impl Default for DeskSpec {
    fn default() -> Self {
        Self { labeled: 6, unlabeled: 2, validation: 2, frames: 20, size: 64, seed: 0 }
    }
}

#[derive(Clone, Debug)]
pub struct DeskData {
    pub labeled: Vec<LabeledSource>,
    pub unlabeled: Vec<LabeledSource>,
    /// Labeled pairs disjoint from the training material.
    pub validation: Vec<LabeledSource>,
}

/// A rain recipe drawn around the defaults: direction within 25 degrees of
/// vertical, speed 3 to 9, density 1.5 to 4.5.
pub fn random_recipe(seed: u64) -> RainRecipe {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7261_696e_7265_6369);
    RainRecipe {
        angle_deg: rng.random_range(-25.0..25.0),
        speed: rng.random_range(3.0..9.0),
        density: rng.random_range(1.5..4.5),
        length: rng.random_range(6.0..14.0),
        width: rng.random_range(0.8..1.8),
        intensity: rng.random_range(0.35..0.7),
        jitter_deg: rng.random_range(0.0..3.0),
        seed,
    }
}

/// One rainy/clean pair; the scene and the rain draw from separate seeds.
pub fn desk_pair(name: &str, seed: u64, frames: usize, size: usize) -> Result<LabeledSource, VideoError> {
    let clean = scene_pan(seed, frames, size, size)?;
    let rain = procedural_rain(&random_recipe(seed.wrapping_mul(0x9e37_79b9).wrapping_add(1)), frames, size, size)?;
    let rainy = composite_rainy(&clean, &rain)?;
    Ok(LabeledSource::labeled(name, rainy, clean))
}

pub fn desk_data(spec: &DeskSpec) -> Result<DeskData, VideoError> {
    let base = spec.seed.wrapping_mul(1000);
    let make = |kind: &str, offset: u64, count: usize| -> Result<Vec<LabeledSource>, VideoError> {
        (0..count).map(|k| desk_pair(&format!("{kind}{k:02}"), base + offset + k as u64, spec.frames, spec.size)).collect()
    };
    let labeled = make("lab", 0, spec.labeled)?;
    let unlabeled = make("unl", 100, spec.unlabeled)?
        .into_iter()
        .map(|s| LabeledSource::unlabeled(s.name, s.rainy))
        .collect();
    let validation = make("val", 200, spec.validation)?;
    Ok(DeskData { labeled, unlabeled, validation })
}
