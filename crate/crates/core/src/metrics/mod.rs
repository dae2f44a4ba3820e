//! Scores for every stage: mask overlap, object counting error, averaged
//! Dice, detection precision/recall/F1/AP and inpainting completeness.
//!
//! Per-sample partial results ([`DetectionCounts`], [`DiceSum`]) merge
//! associatively, so batches may be scored in parallel and combined.

mod completeness;
mod counting;
mod detection;
mod overlap;

use thiserror::Error;

pub use completeness::{completeness_report, CompletenessReport};
pub use counting::{avg_dice, mdoc, pair_objects, CountPair, DiceSum, ObjectMaskPair};
pub use detection::{
    average_precision, average_precision_50, box_center_in_mask, evaluate_detections, match_detections, ApResult,
    DetectionCounts, DetectionEvalResult,
};
pub use overlap::{overlap_metrics, OverlapScores};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("mask dimensions differ: {0:?} vs {1:?}")]
    DimensionMismatch((usize, usize), (usize, usize)),
    #[error("total ground-truth object count is zero")]
    ZeroGroundTruth,
    #[error("no objects to average over")]
    NoObjects,
    #[error("empty input")]
    EmptyInput,
}

pub type Result<T> = std::result::Result<T, MetricsError>;
