use ndarray::{s, Array4, Axis};

use super::{VideoClip, VideoError};

/// BT.601 luma weights.
pub const LUMA_WEIGHTS: [f32; 3] = [0.299, 0.587, 0.114];

pub fn rgb_to_luminance(clip: &VideoClip) -> Result<VideoClip, VideoError> {
    if clip.channels() != 3 {
        return Err(VideoError::Shape(format!(
            "luminance conversion needs 3 channels, got {}",
            clip.channels()
        )));
    }
    let (n, _, h, w) = clip.dim();
    let d = clip.data();
    let [wr, wg, wb] = LUMA_WEIGHTS;
    let y = Array4::from_shape_fn((n, 1, h, w), |(t, _, i, j)| {
        (wr * d[[t, 0, i, j]] + wg * d[[t, 1, i, j]] + wb * d[[t, 2, i, j]]).clamp(0.0, 1.0)
    });
    VideoClip::new(y)
}

/// The luminance plane of a clip: converted when RGB, unchanged when already single-channel.
pub fn luminance_plane(clip: &VideoClip) -> Result<VideoClip, VideoError> {
    match clip.channels() {
        1 => Ok(clip.clone()),
        _ => rgb_to_luminance(clip),
    }
}

pub fn crop_fixed_patch(clip: &VideoClip, top: usize, left: usize, size: usize) -> Result<VideoClip, VideoError> {
    let (_, _, h, w) = clip.dim();
    if size == 0 || top + size > h || left + size > w {
        return Err(VideoError::OutOfBounds(format!(
            "{size}x{size} window at ({top}, {left}) in a {h}x{w} frame"
        )));
    }
    VideoClip::new(clip.data().slice(s![.., .., top..top + size, left..left + size]).to_owned())
}

/// Splits into consecutive non-overlapping chunks; a shorter tail is dropped.
pub fn chunk_video(clip: &VideoClip, chunk_len: usize) -> Result<Vec<VideoClip>, VideoError> {
    if chunk_len == 0 {
        return Err(VideoError::Invalid("chunk length must be at least 1".into()));
    }
    let count = clip.frames() / chunk_len;
    (0..count)
        .map(|k| {
            let start = k * chunk_len;
            VideoClip::new(clip.data().slice(s![start..start + chunk_len, .., .., ..]).to_owned())
        })
        .collect()
}

/// Like [`chunk_video`] but keeps the shorter tail chunk; used for inference.
pub fn chunk_video_keep_tail(clip: &VideoClip, chunk_len: usize) -> Result<Vec<VideoClip>, VideoError> {
    if chunk_len == 0 {
        return Err(VideoError::Invalid("chunk length must be at least 1".into()));
    }
    let n = clip.frames();
    (0..n)
        .step_by(chunk_len)
        .map(|start| {
            let end = (start + chunk_len).min(n);
            VideoClip::new(clip.data().slice(s![start..end, .., .., ..]).to_owned())
        })
        .collect()
}

/// Concatenates clips along the frame axis.
pub fn concat_frames(clips: &[VideoClip]) -> Result<VideoClip, VideoError> {
    let views: Vec<_> = clips.iter().map(|c| c.data().view()).collect();
    let data = ndarray::concatenate(Axis(0), &views).map_err(|e| VideoError::Shape(e.to_string()))?;
    VideoClip::new(data)
}

/// Additive rain model `Y = clamp(X + R, 0, 1)`; single-channel rain broadcasts over colour.
pub fn composite_rainy(clean: &VideoClip, rain: &VideoClip) -> Result<VideoClip, VideoError> {
    let (n, c, h, w) = clean.dim();
    let (rn, rc, rh, rw) = rain.dim();
    if (rn, rh, rw) != (n, h, w) || (rc != c && rc != 1) {
        return Err(VideoError::Shape(format!(
            "rain {:?} does not broadcast over clean {:?}",
            rain.dim(),
            clean.dim()
        )));
    }
    let r = rain.data();
    let x = clean.data();
    let y = Array4::from_shape_fn((n, c, h, w), |(t, ch, i, j)| {
        let rv = r[[t, if rc == 1 { 0 } else { ch }, i, j]];
        (x[[t, ch, i, j]] + rv).clamp(0.0, 1.0)
    });
    VideoClip::new(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, c: usize, h: usize, w: usize, seed: u64) -> VideoClip {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        VideoClip::new(Array4::from_shape_fn((n, c, h, w), |_| rng.random::<f32>())).unwrap()
    }

    #[test]
    fn luminance_weight_readoff() {
        let white = VideoClip::new(Array4::ones((2, 3, 2, 2))).unwrap();
        assert!(rgb_to_luminance(&white).unwrap().data().iter().all(|&v| (v - 1.0).abs() < 1e-6));
        let mut red = Array4::zeros((1, 3, 1, 1));
        red[[0, 0, 0, 0]] = 1.0;
        let y = rgb_to_luminance(&VideoClip::new(red).unwrap()).unwrap();
        assert_eq!(y.data()[[0, 0, 0, 0]], 0.299);
    }

    #[test]
    fn luminance_matches_scalar_recomputation() {
        let clip = random(2, 3, 5, 6, 11);
        let y = rgb_to_luminance(&clip).unwrap();
        for t in 0..2 {
            for i in 0..5 {
                for j in 0..6 {
                    let px = |ch| clip.data()[[t, ch, i, j]];
                    let expect = 0.299f32 * px(0) + 0.587 * px(1) + 0.114 * px(2);
                    assert_eq!(y.data()[[t, 0, i, j]], expect);
                }
            }
        }
    }

    #[test]
    fn luminance_requires_rgb() {
        assert!(rgb_to_luminance(&VideoClip::zeros(1, 1, 2, 2)).is_err());
    }

    #[test]
    fn chunking_drops_tail() {
        let clip = random(50, 1, 4, 4, 1);
        let chunks = chunk_video(&clip, 20).unwrap();
        assert_eq!(chunks.len(), 2);
        assert!(chunks.iter().all(|c| c.frames() == 20));
        assert_eq!(chunks[1].data().slice(s![0, .., .., ..]), clip.data().slice(s![20, .., .., ..]));
        let singles = chunk_video(&random(3, 1, 2, 2, 2), 1).unwrap();
        assert_eq!(singles.len(), 3);
        assert!(chunk_video(&clip, 0).is_err());
        let with_tail = chunk_video_keep_tail(&clip, 20).unwrap();
        assert_eq!(with_tail.iter().map(|c| c.frames()).collect::<Vec<_>>(), vec![20, 20, 10]);
        assert_eq!(concat_frames(&with_tail).unwrap(), clip);
    }

    #[test]
    fn crop_identity_and_bounds() {
        let clip = random(2, 3, 8, 8, 4);
        assert_eq!(crop_fixed_patch(&clip, 0, 0, 8).unwrap(), clip);
        let c = crop_fixed_patch(&clip, 2, 3, 4).unwrap();
        assert_eq!(c.data()[[1, 2, 0, 0]], clip.data()[[1, 2, 2, 3]]);
        assert!(crop_fixed_patch(&clip, 5, 0, 4).is_err());
    }

    #[test]
    fn composite_semantics() {
        let x = random(2, 3, 4, 4, 5);
        let zero = VideoClip::zeros(2, 1, 4, 4);
        assert_eq!(composite_rainy(&x, &zero).unwrap(), x);

        let x = VideoClip::new(Array4::from_elem((1, 1, 2, 2), 0.9)).unwrap();
        let r = VideoClip::new(Array4::from_elem((1, 1, 2, 2), 0.3)).unwrap();
        assert!(composite_rainy(&x, &r).unwrap().data().iter().all(|&v| v == 1.0));

        let x = random(2, 3, 4, 4, 6);
        let r = random(2, 1, 4, 4, 7);
        let y = composite_rainy(&x, &r).unwrap();
        for ((t, ch, i, j), &yv) in y.data().indexed_iter() {
            let (xv, rv) = (x.data()[[t, ch, i, j]], r.data()[[t, 0, i, j]]);
            if xv + rv <= 1.0 {
                assert_eq!(yv, xv + rv);
            } else {
                assert_eq!(yv, 1.0);
            }
        }
        assert!(composite_rainy(&x, &random(2, 1, 4, 5, 8)).is_err());
    }
}
