//! Annotation quality control: criteria checks on polygon annotations and the
//! two-reviewer acceptance workflow.

mod criteria;
mod review;

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imaging::{BoundingBox, ImagingError};

pub use criteria::{shape_warnings, validate_record, CriteriaViolation, ShapeWarning, ViolationKind, MIN_VERTICES};
pub use review::{review_transition, ReviewEvent, ReviewState, ReviewStatus, ReviewedImage, Transition, REQUIRED_APPROVALS};

#[derive(Debug, Error)]
pub enum AnnotateError {
    #[error("records describe different images: {0:?} vs {1:?}")]
    ImageIdMismatch(String, String),
    #[error("both records come from reviewer {0:?}")]
    SameReviewer(String),
    #[error("event {event} is not allowed in state {status:?}")]
    IllegalTransition { status: ReviewStatus, event: String },
    #[error("reviewer {0:?} has already approved")]
    DuplicateApprover(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Imaging(#[from] ImagingError),
}

pub type Result<T> = std::result::Result<T, AnnotateError>;

/// One annotated object: a free-form polygon and the box it belongs to.
/// Vertices are kept raw so that under-specified polygons can be reported
/// rather than rejected at load time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedObject {
    pub polygon: Vec<[f64; 2]>,
    #[serde(rename = "box", with = "box_array")]
    pub bbox: BoundingBox,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub image_id: String,
    pub reviewer_id: String,
    pub objects: Vec<AnnotatedObject>,
}

mod box_array {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    use crate::imaging::BoundingBox;

    pub fn serialize<S: Serializer>(b: &BoundingBox, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq([b.x, b.y, b.w, b.h])
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BoundingBox, D::Error> {
        let [x, y, w, h] = <[i64; 4]>::deserialize(d)?;
        if x < 0 || y < 0 || w <= 0 || h <= 0 {
            return Err(D::Error::custom(format!("invalid box [{x}, {y}, {w}, {h}]")));
        }
        Ok(BoundingBox::new(x as usize, y as usize, w as usize, h as usize))
    }
}

pub fn parse_records(json: &str) -> Result<Vec<AnnotationRecord>> {
    Ok(serde_json::from_str(json)?)
}

pub fn load_records(path: impl AsRef<Path>) -> Result<Vec<AnnotationRecord>> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|source| AnnotateError::Io { path: path.display().to_string(), source })?;
    parse_records(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_json_round_trip() {
        let json = r#"[{"image_id": "p1", "reviewer_id": "r1",
            "objects": [{"polygon": [[1, 1], [3, 1], [3, 3]], "box": [0, 0, 4, 4]}]}]"#;
        let recs = parse_records(json).unwrap();
        assert_eq!(recs[0].objects[0].bbox, BoundingBox::new(0, 0, 4, 4));
        let again = parse_records(&serde_json::to_string(&recs).unwrap()).unwrap();
        assert_eq!(recs, again);
    }

    #[test]
    fn negative_box_rejected() {
        let json = r#"[{"image_id": "p1", "reviewer_id": "r1",
            "objects": [{"polygon": [], "box": [-1, 0, 4, 4]}]}]"#;
        assert!(matches!(parse_records(json), Err(AnnotateError::Parse(_))));
    }
}
