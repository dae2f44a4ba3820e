//! JSON adapter for external detector output.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DetectError, Detection, Result, DEFAULT_CLASS};
use crate::imaging::BoundingBox;

/// Detections grouped per image, in file order.
pub type DetectionsByImage = Vec<(String, Vec<Detection>)>;

#[derive(Serialize, Deserialize)]
struct ImageRecord {
    image_id: String,
    detections: Vec<DetectionRecord>,
}

fn full_confidence() -> f64 {
    1.0
}

fn default_class() -> String {
    DEFAULT_CLASS.to_string()
}

#[derive(Serialize, Deserialize)]
struct DetectionRecord {
    #[serde(rename = "box")]
    bbox: [i64; 4],
    /// Ground-truth files may omit it.
    #[serde(default = "full_confidence")]
    confidence: f64,
    #[serde(rename = "class", default = "default_class")]
    class: String,
}

fn to_detection(r: DetectionRecord) -> Result<Detection> {
    let [x, y, w, h] = r.bbox;
    if x < 0 || y < 0 {
        return Err(DetectError::Value(format!("negative box origin ({x}, {y})")));
    }
    if w <= 0 || h <= 0 {
        return Err(DetectError::Value(format!("non-positive box size {w}x{h}")));
    }
    Detection::with_class(BoundingBox::new(x as usize, y as usize, w as usize, h as usize), r.confidence, r.class)
}

pub fn parse_detections(json: &str) -> Result<DetectionsByImage> {
    let records: Vec<ImageRecord> = serde_json::from_str(json)?;
    records
        .into_iter()
        .map(|rec| {
            let dets = rec.detections.into_iter().map(to_detection).collect::<Result<Vec<_>>>()?;
            Ok((rec.image_id, dets))
        })
        .collect()
}

pub fn load_detections(path: impl AsRef<Path>) -> Result<DetectionsByImage> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|source| DetectError::Io { path: path.display().to_string(), source })?;
    parse_detections(&text)
}

pub fn detections_to_json(by_image: &[(String, Vec<Detection>)]) -> String {
    let records: Vec<ImageRecord> = by_image
        .iter()
        .map(|(id, dets)| ImageRecord {
            image_id: id.clone(),
            detections: dets
                .iter()
                .map(|d| DetectionRecord {
                    bbox: [d.bbox.x as i64, d.bbox.y as i64, d.bbox.w as i64, d.bbox.h as i64],
                    confidence: d.confidence,
                    class: d.class_label.clone(),
                })
                .collect(),
        })
        .collect();
    serde_json::to_string_pretty(&records).expect("detections serialise")
}
