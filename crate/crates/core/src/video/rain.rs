//! Procedural rain layers.
//!
//! Streaks live on a field that extends past every frame edge by a margin
//! larger than one streak plus one frame of travel, so streaks wrap around
//! invisibly. Each streak is drawn as the motion-blurred trail it leaves during
//! one frame: a segment of `length + speed` pixels ending at its current
//! position, anti-aliased to the requested width.

use ndarray::Array4;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{VideoClip, VideoError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RainRecipe {
    /// Fall direction in degrees from vertical; positive leans toward +x.
    pub angle_deg: f64,
    /// Pixels travelled per frame.
    pub speed: f64,
    /// Streaks per thousand pixels of frame area.
    pub density: f64,
    pub length: f64,
    pub width: f64,
    /// Peak streak brightness; individual streaks draw from [intensity/2, intensity].
    pub intensity: f64,
    /// Standard deviation in degrees of the per-frame direction noise.
    pub jitter_deg: f64,
    pub seed: u64,
}

impl Default for RainRecipe {
    fn default() -> Self {
        Self {
            angle_deg: 10.0,
            speed: 6.0,
            density: 3.0,
            length: 10.0,
            width: 1.2,
            intensity: 0.55,
            jitter_deg: 2.0,
            seed: 0,
        }
    }
}

impl RainRecipe {
    pub fn validate(&self) -> Result<(), VideoError> {
        let bad = |what: &str| Err(VideoError::Invalid(format!("rain recipe: {what}")));
        if !(self.density > 0.0 && self.density.is_finite()) {
            return bad("density must be positive");
        }
        if !(self.intensity > 0.0 && self.intensity <= 1.0) {
            return bad("intensity must lie in (0, 1]");
        }
        if !(self.length >= 1.0 && self.length.is_finite()) {
            return bad("length must be at least 1");
        }
        if !(self.width > 0.0 && self.width.is_finite()) {
            return bad("width must be positive");
        }
        if !(self.speed >= 0.0 && self.speed.is_finite()) {
            return bad("speed must be non-negative");
        }
        if !(self.angle_deg.abs() < 80.0) {
            return bad("angle must lie within 80 degrees of vertical");
        }
        if !(self.jitter_deg >= 0.0 && self.jitter_deg.is_finite()) {
            return bad("jitter must be non-negative");
        }
        Ok(())
    }
}

struct Streak {
    x: f64,
    y: f64,
    brightness: f64,
}

/// Wraps `v` into `[lo, lo + period)`.
fn wrap(v: f64, lo: f64, period: f64) -> f64 {
    lo + (v - lo).rem_euclid(period)
}

pub fn procedural_rain(recipe: &RainRecipe, n: usize, h: usize, w: usize) -> Result<VideoClip, VideoError> {
    if n == 0 || h == 0 || w == 0 {
        return Err(VideoError::Invalid(format!("rain dimensions must be positive, got {n}x{h}x{w}")));
    }
    recipe.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(recipe.seed);

    let trail = recipe.length + recipe.speed;
    let margin = (trail + recipe.width + 2.0).ceil();
    let (x0, y0) = (-margin, -margin);
    let (fw, fh) = (w as f64 + 2.0 * margin, h as f64 + 2.0 * margin);
    let count = (recipe.density * fw * fh / 1000.0).round() as usize;

    let mut streaks: Vec<Streak> = (0..count)
        .map(|_| Streak {
            x: x0 + rng.random::<f64>() * fw,
            y: y0 + rng.random::<f64>() * fh,
            brightness: recipe.intensity * (0.5 + 0.5 * rng.random::<f64>()),
        })
        .collect();

    let half = recipe.width / 2.0 + 0.5;
    let mut data = Array4::<f32>::zeros((n, 1, h, w));
    for t in 0..n {
        let jitter: f64 = rng.sample(StandardNormal);
        let theta = (recipe.angle_deg + recipe.jitter_deg * jitter).to_radians();
        let (dx, dy) = (theta.sin(), theta.cos());
        if t > 0 {
            for s in &mut streaks {
                s.x = wrap(s.x + recipe.speed * dx, x0, fw);
                s.y = wrap(s.y + recipe.speed * dy, y0, fh);
            }
        }
        let mut frame = data.slice_mut(ndarray::s![t, 0, .., ..]);
        for s in &streaks {
            // Segment from the tail (a) to the head (b).
            let (bx, by) = (s.x, s.y);
            let (ax, ay) = (bx - trail * dx, by - trail * dy);
            let xmin = (ax.min(bx) - half).floor().max(0.0) as i64;
            let xmax = (ax.max(bx) + half).ceil().min(w as f64 - 1.0) as i64;
            let ymin = (ay.min(by) - half).floor().max(0.0) as i64;
            let ymax = (ay.max(by) + half).ceil().min(h as f64 - 1.0) as i64;
            if xmin > xmax || ymin > ymax {
                continue;
            }
            for py in ymin..=ymax {
                for px in xmin..=xmax {
                    let (cx, cy) = (px as f64 + 0.5, py as f64 + 0.5);
                    // Project onto the segment direction (unit vector (dx, dy)).
                    let along = ((cx - ax) * dx + (cy - ay) * dy).clamp(0.0, trail);
                    let (qx, qy) = (ax + along * dx, ay + along * dy);
                    let dist = ((cx - qx).powi(2) + (cy - qy).powi(2)).sqrt();
                    let cover = (half - dist).clamp(0.0, 1.0);
                    if cover > 0.0 {
                        let v = &mut frame[[py as usize, px as usize]];
                        *v = (*v as f64 + s.brightness * cover).min(1.0) as f32;
                    }
                }
            }
        }
    }
    VideoClip::new(data)
}

/// Mean absolute difference between consecutive frames.
pub fn mean_abs_frame_diff(clip: &VideoClip) -> f64 {
    let n = clip.frames();
    if n < 2 {
        return 0.0;
    }
    let d = clip.data();
    let mut total = 0.0;
    for t in 1..n {
        let a = d.index_axis(ndarray::Axis(0), t - 1);
        let b = d.index_axis(ndarray::Axis(0), t);
        total += a.iter().zip(b.iter()).map(|(p, q)| (p - q).abs() as f64).sum::<f64>() / a.len() as f64;
    }
    total / (n - 1) as f64
}
