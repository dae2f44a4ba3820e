//! Batch orchestration: configuration, dataset manifests and splits, the
//! per-image stage sequence and run reports.
//!
//! Each image runs normalize, resize, detect, filter/NMS, then crop, segment
//! and dilate per kept detection, and finally inpaints all objects. Images
//! are independent; a failing image is reported with the failing stage and
//! the batch carries on unless strict mode is set.

mod config;
mod manifest;
mod report;
mod run;
mod split;

use thiserror::Error;

pub use config::{DetectStageConfig, DetectorSource, EvaluationConfig, PipelineConfig, SegmentStageConfig, SegmenterSource};
pub use manifest::{DatasetManifest, Label, ManifestRow};
pub use report::{emit_report, DetectionSummary, ReportMetrics, RunReport, Timing};
pub use run::{run_batch, run_pipeline, BatchResult, ImageEntry, Pipeline, Stage, StageError, StageTimings};
pub use split::{split_dataset, SplitError, SplitRequest, SplitSize, UNASSIGNED};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Split(#[from] SplitError),
}

pub type Result<T> = std::result::Result<T, PipelineError>;
