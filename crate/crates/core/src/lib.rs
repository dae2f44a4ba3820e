//! Foreign-object removal for photographed chest radiographs.
//!
//! The crate is organised by pipeline stage:
//!
//! * [`imaging`] – pixel data model, pre-processing, ROI crop/merge, rasterisation.
//! * [`detect`] – detection file adapter with confidence filtering / NMS, plus
//!   a circular Hough transform detector for button-like objects.
//! * [`segment`] – probability-map adapter and an Otsu + largest-component fallback.
//! * [`inpaint`] – fast-marching distance field and weighted-sum inpainting.
//! * [`metrics`] – overlap scores, counting error, averaged Dice, detection
//!   precision/recall/AP and completeness accounting.
//! * [`annotate`] – annotation criteria checks and the two-reviewer workflow.
//! * [`pipeline`] – configuration, manifests, dataset splitting, batch runs and reports.
//!
//! Numerical code is generic over [`Scalar`] (`f32` / `f64`). The aliases below
//! pin the double-precision instantiations used by the pipeline.

pub mod annotate;
pub mod detect;
pub mod imaging;
pub mod inpaint;
pub mod metrics;
pub mod pipeline;
mod scalar;
pub mod segment;
pub mod synthetic;

pub use scalar::{quantize, Scalar};

pub use annotate::{AnnotationRecord, CriteriaViolation, ReviewState};
pub use detect::{ChtConfig, Detection, DetectionFilterConfig};
pub use imaging::{BinaryMask, BoundingBox, GrayImage, Polygon, PreprocessConfig};
pub use inpaint::InpaintConfig;
pub use metrics::{CompletenessReport, CountPair};
pub use pipeline::{PipelineConfig, RunReport};
pub use segment::SegmentConfig;

pub type ProbabilityMap = imaging::ProbabilityMap<f64>;
pub type ProbabilityMap32 = imaging::ProbabilityMap<f32>;
pub type DistanceField = inpaint::DistanceField<f64>;
pub type DistanceField32 = inpaint::DistanceField<f32>;
pub type OverlapScores = metrics::OverlapScores<f64>;
pub type OverlapScores32 = metrics::OverlapScores<f32>;
pub type DetectionEvalResult = metrics::DetectionEvalResult<f64>;
pub type DetectionEvalResult32 = metrics::DetectionEvalResult<f32>;
