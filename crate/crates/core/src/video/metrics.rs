//! Luminance PSNR and SSIM.
//!
//! Three-channel inputs are reduced to BT.601 luminance first; single-channel
//! inputs are used as they are. Pixel range is [0, 1].

use ndarray::{Array2, ArrayView2};

use super::ops::luminance_plane;
use super::{VideoClip, VideoError};

/// Reported PSNR when the two clips are identical.
pub const PSNR_CAP_DB: f64 = 100.0;

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_C1: f64 = 0.01 * 0.01;
const SSIM_C2: f64 = 0.03 * 0.03;

fn check_shapes(a: &VideoClip, b: &VideoClip) -> Result<(), VideoError> {
    if a.dim() != b.dim() {
        return Err(VideoError::Shape(format!("cannot compare {:?} with {:?}", a.dim(), b.dim())));
    }
    Ok(())
}

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse <= 0.0 {
        PSNR_CAP_DB
    } else {
        (10.0 * (1.0 / mse).log10()).min(PSNR_CAP_DB)
    }
}

pub fn psnr_luminance(a: &VideoClip, b: &VideoClip) -> Result<f64, VideoError> {
    check_shapes(a, b)?;
    let (ya, yb) = (luminance_plane(a)?, luminance_plane(b)?);
    let n = ya.data().len() as f64;
    let mse = ya
        .data()
        .iter()
        .zip(yb.data().iter())
        .map(|(&p, &q)| {
            let d = p as f64 - q as f64;
            d * d
        })
        .sum::<f64>()
        / n;
    Ok(psnr_from_mse(mse))
}

/// Normalised 1-D Gaussian taps.
pub fn gaussian_taps(size: usize, sigma: f64) -> Vec<f64> {
    let c = (size as f64 - 1.0) / 2.0;
    let raw: Vec<f64> = (0..size)
        .map(|i| (-(i as f64 - c).powi(2) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

/// Separable "valid" filtering of a plane.
fn filter_valid(plane: &Array2<f64>, taps: &[f64]) -> Array2<f64> {
    let k = taps.len();
    let (h, w) = plane.dim();
    let (oh, ow) = (h + 1 - k, w + 1 - k);
    let rows = Array2::from_shape_fn((h, ow), |(i, j)| (0..k).map(|d| taps[d] * plane[[i, j + d]]).sum::<f64>());
    Array2::from_shape_fn((oh, ow), |(i, j)| (0..k).map(|d| taps[d] * rows[[i + d, j]]).sum())
}

/// Mean SSIM of one pair of planes.
pub fn ssim_plane(a: ArrayView2<'_, f32>, b: ArrayView2<'_, f32>) -> f64 {
    let (h, w) = a.dim();
    // Frames narrower than the standard window fall back to the largest odd window that fits.
    let mut size = SSIM_WINDOW.min(h).min(w);
    if size % 2 == 0 {
        size -= 1;
    }
    let taps = gaussian_taps(size, SSIM_SIGMA);
    let x = a.mapv(|v| v as f64);
    let y = b.mapv(|v| v as f64);
    let mu_x = filter_valid(&x, &taps);
    let mu_y = filter_valid(&y, &taps);
    let xx = filter_valid(&(&x * &x), &taps);
    let yy = filter_valid(&(&y * &y), &taps);
    let xy = filter_valid(&(&x * &y), &taps);
    let mut total = 0.0;
    for (((&mx, &my), (&sxx, &syy)), &sxy) in mu_x
        .iter()
        .zip(mu_y.iter())
        .zip(xx.iter().zip(yy.iter()))
        .zip(xy.iter())
    {
        let vx = sxx - mx * mx;
        let vy = syy - my * my;
        let cov = sxy - mx * my;
        total += ((2.0 * mx * my + SSIM_C1) * (2.0 * cov + SSIM_C2))
            / ((mx * mx + my * my + SSIM_C1) * (vx + vy + SSIM_C2));
    }
    total / mu_x.len() as f64
}

/// Per-frame luminance SSIM averaged over frames.
pub fn ssim_luminance(a: &VideoClip, b: &VideoClip) -> Result<f64, VideoError> {
    check_shapes(a, b)?;
    let (ya, yb) = (luminance_plane(a)?, luminance_plane(b)?);
    let n = ya.frames();
    let total: f64 = (0..n)
        .map(|t| {
            ssim_plane(
                ya.data().slice(ndarray::s![t, 0, .., ..]),
                yb.data().slice(ndarray::s![t, 0, .., ..]),
            )
        })
        .sum();
    Ok(total / n as f64)
}
