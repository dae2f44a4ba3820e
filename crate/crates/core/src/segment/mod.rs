//! Per-object binary masks for detected ROIs.
//!
//! External segmenters hand over probability maps that are thresholded here.
//! Without one, [`fallback_segment`] thresholds the ROI with Otsu's method and
//! keeps the bright side, since foreign objects are radio-opaque.

mod components;
mod otsu;

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imaging::{binarize, read_probability_map, BinaryMask, GrayImage, ImagingError, ProbabilityMap, MASK_ON};
use crate::Scalar;

pub use components::{components, largest_component, Component};
pub use otsu::{histogram, otsu_threshold};

#[derive(Debug, Error)]
pub enum SegmentError {
    #[error("ROI {0}x{1} is smaller than 4x4")]
    RoiTooSmall(usize, usize),
    #[error("binarize threshold {0} outside (0, 1)")]
    InvalidThreshold(f64),
    #[error(transparent)]
    Imaging(#[from] ImagingError),
}

pub type Result<T> = std::result::Result<T, SegmentError>;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmentConfig {
    pub binarize_threshold: f64,
    pub keep_largest_component_only: bool,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        Self { binarize_threshold: 0.5, keep_largest_component_only: true }
    }
}

impl SegmentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.binarize_threshold > 0.0 && self.binarize_threshold < 1.0) {
            return Err(SegmentError::InvalidThreshold(self.binarize_threshold));
        }
        Ok(())
    }
}

/// Loads an 8/16-bit grayscale probability map.
pub fn load_probability_map<F: Scalar>(path: impl AsRef<Path>) -> Result<ProbabilityMap<F>> {
    Ok(read_probability_map(path)?)
}

/// Thresholds an external probability map into a mask.
pub fn segment_probability_map<F: Scalar>(prob: &ProbabilityMap<F>, cfg: &SegmentConfig) -> Result<BinaryMask> {
    cfg.validate()?;
    let mask = binarize(prob, F::of(cfg.binarize_threshold))?;
    Ok(if cfg.keep_largest_component_only { largest_component(&mask) } else { mask })
}

/// Classical fallback: Otsu threshold, strictly-brighter pixels positive.
pub fn fallback_segment(roi: &GrayImage, cfg: &SegmentConfig) -> Result<BinaryMask> {
    let (w, h) = roi.dims();
    if w < 4 || h < 4 {
        return Err(SegmentError::RoiTooSmall(w, h));
    }
    let Some(t) = otsu_threshold(&histogram(roi.data())) else {
        return Ok(BinaryMask::empty(w, h)?);
    };
    let data = roi.data().iter().map(|&v| if v > t { MASK_ON } else { 0 }).collect();
    let mask = BinaryMask::new(w, h, data)?;
    Ok(if cfg.keep_largest_component_only { largest_component(&mask) } else { mask })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_roi_is_empty() {
        let roi = GrayImage::filled(8, 8, 77).unwrap();
        assert!(fallback_segment(&roi, &SegmentConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn bimodal_keeps_bright_half() {
        let roi = GrayImage::from_fn(8, 8, |x, _| if x < 4 { 40 } else { 200 }).unwrap();
        let m = fallback_segment(&roi, &SegmentConfig::default()).unwrap();
        for y in 0..8 {
            for x in 0..8 {
                assert_eq!(m.is_on(x, y), x >= 4);
            }
        }
    }

    #[test]
    fn blob_beats_speck() {
        let roi = GrayImage::from_fn(16, 16, |x, y| {
            if (2..8).contains(&x) && (2..8).contains(&y) || (x == 13 && y == 13) {
                220
            } else {
                30
            }
        })
        .unwrap();
        let m = fallback_segment(&roi, &SegmentConfig::default()).unwrap();
        assert_eq!(m.count_on(), 36);
        assert!(!m.is_on(13, 13));
        let both = fallback_segment(&roi, &SegmentConfig { keep_largest_component_only: false, ..Default::default() })
            .unwrap();
        assert_eq!(both.count_on(), 37);
    }

    #[test]
    fn tiny_roi_rejected() {
        let roi = GrayImage::filled(3, 8, 1).unwrap();
        assert!(matches!(fallback_segment(&roi, &SegmentConfig::default()), Err(SegmentError::RoiTooSmall(3, 8))));
    }

    #[test]
    fn probability_masks_nest() {
        let data: Vec<f64> = (0..100).map(|i| (i as f64 * 0.37).fract()).collect();
        let map = ProbabilityMap::new(10, 10, data).unwrap();
        let loose = SegmentConfig { binarize_threshold: 0.5, keep_largest_component_only: false };
        let tight = SegmentConfig { binarize_threshold: 0.6, keep_largest_component_only: false };
        let a = segment_probability_map(&map, &loose).unwrap();
        let b = segment_probability_map(&map, &tight).unwrap();
        assert!((0..100).all(|i| !b.is_on_idx(i) || a.is_on_idx(i)));
        assert!(b.count_on() < a.count_on());
    }
}
