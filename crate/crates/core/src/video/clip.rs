use std::fmt;

use ndarray::{Array4, ArrayView4};
use serde::{Deserialize, Serialize};

use super::VideoError;
use crate::nn::Real;

/// A frame sequence with layout (frames, channels, height, width) and values in [0, 1].
#[derive(Clone, Debug, PartialEq)]
pub struct VideoClip {
    data: Array4<f32>,
}

impl VideoClip {
    pub fn new(data: Array4<f32>) -> Result<Self, VideoError> {
        let (n, c, h, w) = data.dim();
        if n == 0 || h == 0 || w == 0 {
            return Err(VideoError::Shape(format!("empty clip {:?}", data.dim())));
        }
        if c != 1 && c != 3 {
            return Err(VideoError::Shape(format!("clips carry 1 or 3 channels, got {c}")));
        }
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(VideoError::Range(*v as f64));
        }
        Ok(Self { data })
    }

    /// Builds a clip from network output, clamping into [0, 1].
    pub fn from_real<F: Real>(data: ArrayView4<'_, F>) -> Result<Self, VideoError> {
        if data.iter().any(|v| !v.is_finite()) {
            return Err(VideoError::NonFinite);
        }
        Self::new(data.mapv(|v| v.as_f64().clamp(0.0, 1.0) as f32))
    }

    pub fn zeros(frames: usize, channels: usize, height: usize, width: usize) -> Self {
        Self::new(Array4::zeros((frames, channels, height, width))).expect("valid dims")
    }

    pub fn frames(&self) -> usize {
        self.data.dim().0
    }

    pub fn channels(&self) -> usize {
        self.data.dim().1
    }

    pub fn height(&self) -> usize {
        self.data.dim().2
    }

    pub fn width(&self) -> usize {
        self.data.dim().3
    }

    pub fn dim(&self) -> (usize, usize, usize, usize) {
        self.data.dim()
    }

    pub fn data(&self) -> &Array4<f32> {
        &self.data
    }

    pub fn into_data(self) -> Array4<f32> {
        self.data
    }

    pub fn to_real<F: Real>(&self) -> Array4<F> {
        self.data.mapv(|v| F::lit(v as f64))
    }
}

/// Stable identifier of one training clip, e.g. `labeled/0003/c001`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ClipId(pub String);

impl ClipId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    /// FNV-1a hash of the identifier; stable across platforms and releases.
    pub fn stable_hash(&self) -> u64 {
        self.0.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
            (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
        })
    }
}

impl fmt::Display for ClipId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One training example: a rainy clip with optional ground truth.
#[derive(Clone, Debug, PartialEq)]
pub struct ClipSample {
    pub clip_id: ClipId,
    pub rainy: VideoClip,
    pub clean: Option<VideoClip>,
}

impl ClipSample {
    pub fn labeled(clip_id: ClipId, rainy: VideoClip, clean: VideoClip) -> Result<Self, VideoError> {
        if rainy.dim() != clean.dim() {
            return Err(VideoError::Shape(format!(
                "rainy {:?} and clean {:?} differ",
                rainy.dim(),
                clean.dim()
            )));
        }
        Ok(Self { clip_id, rainy, clean: Some(clean) })
    }

    pub fn unlabeled(clip_id: ClipId, rainy: VideoClip) -> Self {
        Self { clip_id, rainy, clean: None }
    }

    pub fn is_labeled(&self) -> bool {
        self.clean.is_some()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_and_bad_channels() {
        assert!(VideoClip::new(Array4::from_elem((1, 1, 2, 2), 1.5)).is_err());
        assert!(VideoClip::new(Array4::from_elem((1, 1, 2, 2), f32::NAN)).is_err());
        assert!(VideoClip::new(Array4::zeros((1, 2, 2, 2))).is_err());
        assert!(VideoClip::new(Array4::zeros((0, 1, 2, 2))).is_err());
    }

    #[test]
    fn from_real_clamps() {
        let a = Array4::from_shape_vec((1, 1, 1, 3), vec![-0.5f64, 0.25, 2.0]).unwrap();
        let c = VideoClip::from_real(a.view()).unwrap();
        assert_eq!(c.data().as_slice().unwrap(), &[0.0, 0.25, 1.0]);
    }

    #[test]
    fn labeled_sample_requires_matching_shapes() {
        let a = VideoClip::zeros(2, 3, 4, 4);
        let b = VideoClip::zeros(2, 3, 4, 8);
        assert!(ClipSample::labeled(ClipId::new("x"), a.clone(), b).is_err());
        let s = ClipSample::labeled(ClipId::new("x"), a.clone(), a).unwrap();
        assert!(s.is_labeled());
    }

    #[test]
    fn clip_id_hash_is_stable() {
        assert_eq!(ClipId::new("").stable_hash(), 0xcbf2_9ce4_8422_2325);
        assert_eq!(ClipId::new("a").stable_hash(), 0xaf63_dc4c_8601_ec8c);
    }
}
