//! Directories of 8-bit PNG frames named `frame_%05d.png`.

use std::fs;
use std::path::{Path, PathBuf};

use image::{DynamicImage, GrayImage, RgbImage};
use ndarray::Array4;

use super::{VideoClip, VideoError};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> VideoError + '_ {
    move |source| VideoError::Io { path: path.to_path_buf(), source }
}

/// PNG files of a directory in lexicographic order.
pub fn list_frames(dir: &Path) -> Result<Vec<PathBuf>, VideoError> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        let is_png = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("png"));
        if is_png && path.is_file() {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

pub fn load_frames_dir(dir: impl AsRef<Path>) -> Result<VideoClip, VideoError> {
    let dir = dir.as_ref();
    let files = list_frames(dir)?;
    if files.is_empty() {
        return Err(VideoError::EmptyDirectory(dir.to_path_buf()));
    }
    let mut shape: Option<(usize, usize, usize)> = None;
    let mut planes: Vec<Vec<u8>> = Vec::with_capacity(files.len());
    for path in &files {
        let img = image::open(path)
            .map_err(|e| VideoError::Frame { path: path.clone(), reason: e.to_string() })?;
        let (w, h) = (img.width(), img.height());
        let (c, bytes) = match img {
            DynamicImage::ImageLuma8(g) => (1, g.into_raw()),
            DynamicImage::ImageLumaA8(_) => (1, img.to_luma8().into_raw()),
            DynamicImage::ImageRgb8(rgb) => (3, rgb.into_raw()),
            DynamicImage::ImageRgba8(_) => (3, img.to_rgb8().into_raw()),
            other => {
                return Err(VideoError::Frame {
                    path: path.clone(),
                    reason: format!("unsupported pixel format {:?}", other.color()),
                })
            }
        };
        let this = (c, h as usize, w as usize);
        match shape {
            None => shape = Some(this),
            Some(s) if s != this => {
                return Err(VideoError::Frame {
                    path: path.clone(),
                    reason: format!("frame is {this:?} (channels, height, width), expected {s:?}"),
                })
            }
            _ => {}
        }
        planes.push(bytes);
    }
    let (c, h, w) = shape.expect("at least one frame");
    let mut data = Array4::<f32>::zeros((files.len(), c, h, w));
    for (t, bytes) in planes.iter().enumerate() {
        for y in 0..h {
            for x in 0..w {
                for ch in 0..c {
                    data[[t, ch, y, x]] = bytes[(y * w + x) * c + ch] as f32 / 255.0;
                }
            }
        }
    }
    VideoClip::new(data)
}

fn quantize(v: f32) -> u8 {
    (v * 255.0).round().clamp(0.0, 255.0) as u8
}

pub fn frame_file_name(index: usize) -> String {
    format!("frame_{index:05}.png")
}

pub fn save_frames_dir(dir: impl AsRef<Path>, clip: &VideoClip) -> Result<(), VideoError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let (n, c, h, w) = clip.dim();
    let data = clip.data();
    for t in 0..n {
        let path = dir.join(frame_file_name(t));
        let result = if c == 1 {
            GrayImage::from_fn(w as u32, h as u32, |x, y| {
                image::Luma([quantize(data[[t, 0, y as usize, x as usize]])])
            })
            .save(&path)
        } else {
            RgbImage::from_fn(w as u32, h as u32, |x, y| {
                let (x, y) = (x as usize, y as usize);
                image::Rgb([
                    quantize(data[[t, 0, y, x]]),
                    quantize(data[[t, 1, y, x]]),
                    quantize(data[[t, 2, y, x]]),
                ])
            })
            .save(&path)
        };
        result.map_err(|e| VideoError::Frame { path, reason: e.to_string() })?;
    }
    Ok(())
}
