//! Foreign-object candidates: external detector output or a built-in
//! circular Hough transform for button-like objects.

mod file;
mod hough;
mod nms;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imaging::BoundingBox;

pub use file::{detections_to_json, load_detections, parse_detections, DetectionsByImage};
pub use hough::{cht_circles, cht_detect, ChtConfig, Circle};
pub use nms::filter_and_nms;

pub const DEFAULT_CLASS: &str = "foreign_object";

#[derive(Debug, Error)]
pub enum DetectError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed detection file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid detection: {0}")]
    Value(String),
    #[error("image {width}x{height} is smaller than {needed}x{needed} required by max radius")]
    ImageTooSmall { width: usize, height: usize, needed: usize },
    #[error("invalid config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, DetectError>;

/// One foreign-object candidate.
#[derive(Clone, Debug, PartialEq)]
pub struct Detection {
    pub bbox: BoundingBox,
    pub confidence: f64,
    pub class_label: String,
}

impl Detection {
    pub fn new(bbox: BoundingBox, confidence: f64) -> Result<Self> {
        Self::with_class(bbox, confidence, DEFAULT_CLASS)
    }

    pub fn with_class(bbox: BoundingBox, confidence: f64, class_label: impl Into<String>) -> Result<Self> {
        if !(0.0..=1.0).contains(&confidence) {
            return Err(DetectError::Value(format!("confidence {confidence} outside [0, 1]")));
        }
        if bbox.w == 0 || bbox.h == 0 {
            return Err(DetectError::Value(format!("non-positive box size {}x{}", bbox.w, bbox.h)));
        }
        Ok(Self { bbox, confidence, class_label: class_label.into() })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectionFilterConfig {
    pub confidence_threshold: f64,
    pub nms_iou_threshold: f64,
}

impl Default for DetectionFilterConfig {
    fn default() -> Self {
        Self { confidence_threshold: 0.30, nms_iou_threshold: 0.60 }
    }
}

impl DetectionFilterConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("confidence_threshold", self.confidence_threshold), ("nms_iou_threshold", self.nms_iou_threshold)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(DetectError::Config(format!("{name} {v} outside (0, 1)")));
            }
        }
        Ok(())
    }
}
