//! Synthetic "natural image" backgrounds and camera pans over them.
//!
//! Used to build clean videos for labeled training pairs without downloading
//! footage: layered value noise shaded through a random palette, with a few
//! hard-edged occluders, viewed through a window that drifts over time.

use ndarray::{Array3, Array4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{VideoClip, VideoError};

fn smoothstep(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

/// Lattice value noise with smooth interpolation; `cell` is the lattice spacing in pixels.
fn value_noise(rng: &mut ChaCha8Rng, h: usize, w: usize, cell: f64) -> Vec<f64> {
    let gh = (h as f64 / cell).ceil() as usize + 2;
    let gw = (w as f64 / cell).ceil() as usize + 2;
    let lattice: Vec<f64> = (0..gh * gw).map(|_| rng.random::<f64>()).collect();
    let mut out = vec![0.0; h * w];
    for y in 0..h {
        let fy = y as f64 / cell;
        let (iy, ty) = (fy.floor() as usize, smoothstep(fy.fract()));
        for x in 0..w {
            let fx = x as f64 / cell;
            let (ix, tx) = (fx.floor() as usize, smoothstep(fx.fract()));
            let at = |a: usize, b: usize| lattice[a * gw + b];
            let top = at(iy, ix) * (1.0 - tx) + at(iy, ix + 1) * tx;
            let bottom = at(iy + 1, ix) * (1.0 - tx) + at(iy + 1, ix + 1) * tx;
            out[y * w + x] = top * (1.0 - ty) + bottom * ty;
        }
    }
    out
}

/// Renders a colour still of size `h` x `w`, layout (3, h, w).
pub fn render_scene(seed: u64, h: usize, w: usize) -> Array3<f32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut field = vec![0.0; h * w];
    let mut amp = 1.0;
    let mut norm = 0.0;
    let mut cell = (h.max(w) as f64 / 3.0).max(4.0);
    while cell >= 1.5 {
        for (f, v) in field.iter_mut().zip(value_noise(&mut rng, h, w, cell)) {
            *f += amp * v;
        }
        norm += amp;
        amp *= 0.55;
        cell /= 2.0;
    }
    field.iter_mut().for_each(|v| *v /= norm);

    let palette: Vec<[f64; 3]> = (0..3)
        .map(|_| [rng.random_range(0.1..0.9), rng.random_range(0.1..0.9), rng.random_range(0.1..0.9)])
        .collect();
    let shade = |t: f64| -> [f64; 3] {
        let t = t.clamp(0.0, 1.0) * 2.0;
        let (lo, hi, f) = if t < 1.0 { (palette[0], palette[1], t) } else { (palette[1], palette[2], t - 1.0) };
        [lo[0] + (hi[0] - lo[0]) * f, lo[1] + (hi[1] - lo[1]) * f, lo[2] + (hi[2] - lo[2]) * f]
    };
    // Stretch the noise contrast: averaged octaves cluster around 0.5.
    let mut img = Array3::<f32>::zeros((3, h, w));
    for y in 0..h {
        for x in 0..w {
            let c = shade(0.5 + 2.2 * (field[y * w + x] - 0.5));
            for ch in 0..3 {
                img[[ch, y, x]] = c[ch] as f32;
            }
        }
    }

    let occluders = rng.random_range(3..8);
    for _ in 0..occluders {
        let color = [rng.random_range(0.05..0.95), rng.random_range(0.05..0.95), rng.random_range(0.05..0.95)];
        let cy = rng.random_range(0.0..h as f64);
        let cx = rng.random_range(0.0..w as f64);
        let ry = rng.random_range(0.05..0.25) * h as f64;
        let rx = rng.random_range(0.05..0.25) * w as f64;
        let round = rng.random_bool(0.5);
        for y in 0..h {
            for x in 0..w {
                let (u, v) = ((y as f64 - cy) / ry, (x as f64 - cx) / rx);
                let inside = if round { u * u + v * v <= 1.0 } else { u.abs() <= 1.0 && v.abs() <= 1.0 };
                if inside {
                    let tex = 0.85 + 0.3 * (field[y * w + x] - 0.5);
                    for ch in 0..3 {
                        img[[ch, y, x]] = (color[ch] * tex).clamp(0.0, 1.0) as f32;
                    }
                }
            }
        }
    }
    img
}

/// Bilinear sample with edge clamping.
fn sample(img: &Array3<f32>, ch: usize, y: f64, x: f64) -> f32 {
    let (_, h, w) = img.dim();
    let y = y.clamp(0.0, (h - 1) as f64);
    let x = x.clamp(0.0, (w - 1) as f64);
    let (y0, x0) = (y.floor() as usize, x.floor() as usize);
    let (y1, x1) = ((y0 + 1).min(h - 1), (x0 + 1).min(w - 1));
    let (fy, fx) = ((y - y0 as f64) as f32, (x - x0 as f64) as f32);
    let top = img[[ch, y0, x0]] * (1.0 - fx) + img[[ch, y0, x1]] * fx;
    let bottom = img[[ch, y1, x0]] * (1.0 - fx) + img[[ch, y1, x1]] * fx;
    top * (1.0 - fy) + bottom * fy
}

/// A camera pan over a still image: frame `t` views the window whose top-left
/// corner is `start + t * velocity`, velocity given as (dy, dx) pixels per frame.
pub fn pan_clip(
    img: &Array3<f32>,
    frames: usize,
    h: usize,
    w: usize,
    start: (f64, f64),
    velocity: (f64, f64),
) -> Result<VideoClip, VideoError> {
    let (_, ih, iw) = img.dim();
    let end = (start.0 + velocity.0 * (frames.max(1) - 1) as f64, start.1 + velocity.1 * (frames.max(1) - 1) as f64);
    let fits = |p: (f64, f64)| p.0 >= 0.0 && p.1 >= 0.0 && p.0 + h as f64 <= ih as f64 && p.1 + w as f64 <= iw as f64;
    if frames == 0 || !fits(start) || !fits(end) {
        return Err(VideoError::OutOfBounds(format!(
            "pan of {frames} frames from {start:?} at {velocity:?} leaves the {ih}x{iw} image"
        )));
    }
    let data = Array4::from_shape_fn((frames, 3, h, w), |(t, ch, y, x)| {
        let oy = start.0 + velocity.0 * t as f64;
        let ox = start.1 + velocity.1 * t as f64;
        sample(img, ch, oy + y as f64, ox + x as f64).clamp(0.0, 1.0)
    });
    VideoClip::new(data)
}

/// A panning clip over a freshly rendered scene; the pan speed is drawn from
/// [0.3, 1.5] pixels per frame in a random direction.
pub fn scene_pan(seed: u64, frames: usize, h: usize, w: usize) -> Result<VideoClip, VideoError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5ce7_e5ce_7e5c_e7e5);
    let speed = rng.random_range(0.3..1.5);
    let angle = rng.random_range(0.0..std::f64::consts::TAU);
    let (vy, vx) = (speed * angle.sin(), speed * angle.cos());
    let travel = speed * frames as f64;
    let pad = travel.ceil() as usize + 2;
    let img = render_scene(seed, h + 2 * pad, w + 2 * pad);
    let start = (pad as f64 - vy * frames as f64 / 2.0, pad as f64 - vx * frames as f64 / 2.0);
    pan_clip(&img, frames, h, w, start, (vy, vx))
}
