use std::collections::HashMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use super::config::PipelineConfig;
use super::run::{BatchResult, ImageEntry, StageTimings};
use super::{PipelineError, Result};
use crate::detect::{load_detections, Detection};
use crate::imaging::BoundingBox;
use crate::metrics::{average_precision, mdoc, CompletenessReport, CountPair, DetectionCounts};

/// Detection scores against configured ground truth.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DetectionSummary {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub map50: Option<f64>,
    pub mdoc: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportMetrics {
    pub images_total: usize,
    pub images_failed: usize,
    pub detections_kept: usize,
    pub objects_segmented: usize,
    pub completeness: CompletenessReport,
    pub detection: Option<DetectionSummary>,
}

/// Everything that varies between identical runs lives here.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Timing {
    pub timestamp_unix: u64,
    pub stage_seconds: StageTimings,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub images: Vec<ImageEntry>,
    /// `None` for a run without images.
    pub metrics: Option<ReportMetrics>,
    pub config: PipelineConfig,
    pub aborted: bool,
    pub timing: Timing,
}

fn score_detections(entries: &[ImageEntry], gt: &HashMap<String, Vec<BoundingBox>>, iou: f64) -> DetectionSummary {
    let mut counts = DetectionCounts::default();
    let mut ranked: Vec<(Detection, &str)> = Vec::new();
    let mut truth: Vec<(BoundingBox, &str)> = Vec::new();
    let mut pairs = Vec::new();
    for e in entries.iter().filter(|e| e.error.is_none()) {
        let gts = gt.get(&e.image_id).map(Vec::as_slice).unwrap_or_default();
        let preds: Vec<Detection> = e
            .boxes
            .iter()
            .zip(&e.confidences)
            .filter_map(|(b, c)| Detection::new(*b, *c).ok())
            .collect();
        let r = crate::metrics::evaluate_detections::<f64>(&preds, gts, iou);
        counts = counts.merge(DetectionCounts { tp: r.tp, fp: r.fp, fn_: r.fn_ });
        pairs.push(CountPair::new(gts.len(), preds.len()));
        ranked.extend(preds.into_iter().map(|d| (d, e.image_id.as_str())));
        truth.extend(gts.iter().map(|b| (*b, e.image_id.as_str())));
    }
    let r = counts.to_result::<f64>();
    let ap = average_precision(&ranked, &truth, iou);
    DetectionSummary {
        tp: r.tp,
        fp: r.fp,
        fn_: r.fn_,
        precision: r.precision,
        recall: r.recall,
        f1: r.f1,
        map50: (!ap.no_ground_truth).then_some(ap.ap),
        mdoc: mdoc::<f64>(&pairs).ok(),
    }
}

impl RunReport {
    /// Aggregates a finished batch. Ground-truth boxes named in the config
    /// are loaded and scored here.
    pub fn build(batch: &BatchResult, cfg: &PipelineConfig) -> Result<Self> {
        let entries = &batch.entries;
        let metrics = if entries.is_empty() {
            None
        } else {
            let flags: Vec<(&str, bool)> = entries.iter().map(|e| (e.image_id.as_str(), e.inpainted)).collect();
            let completeness = crate::metrics::completeness_report(&flags).expect("non-empty");
            let detection = match &cfg.evaluation.ground_truth_detections {
                None => None,
                Some(path) => {
                    let gt: HashMap<String, Vec<BoundingBox>> = load_detections(path)
                        .map_err(|e| PipelineError::Config(format!("ground truth: {e}")))?
                        .into_iter()
                        .map(|(id, dets)| (id, dets.into_iter().map(|d| d.bbox).collect()))
                        .collect();
                    Some(score_detections(entries, &gt, cfg.evaluation.iou_threshold))
                }
            };
            Some(ReportMetrics {
                images_total: entries.len(),
                images_failed: entries.iter().filter(|e| e.error.is_some()).count(),
                detections_kept: entries.iter().map(|e| e.detections_kept).sum(),
                objects_segmented: entries.iter().map(|e| e.objects_segmented).sum(),
                completeness,
                detection,
            })
        };
        let timestamp_unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        Ok(Self {
            images: entries.clone(),
            metrics,
            config: cfg.clone(),
            aborted: batch.aborted,
            timing: Timing { timestamp_unix, stage_seconds: batch.timings.clone() },
        })
    }

    /// Pretty JSON with object keys sorted at every level.
    pub fn to_json(&self) -> String {
        // serde_json's Value map is ordered by key
        let value = serde_json::to_value(self).expect("report is serializable");
        serde_json::to_string_pretty(&value).expect("value is serializable")
    }
}

/// Builds the report for `batch` and writes it to `path`.
pub fn emit_report(batch: &BatchResult, cfg: &PipelineConfig, path: impl AsRef<Path>) -> Result<RunReport> {
    let report = RunReport::build(batch, cfg)?;
    let path = path.as_ref();
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|source| PipelineError::Io { path: parent.display().to_string(), source })?;
    }
    std::fs::write(path, report.to_json() + "\n")
        .map_err(|source| PipelineError::Io { path: path.display().to_string(), source })?;
    Ok(report)
}
