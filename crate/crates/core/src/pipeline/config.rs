use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{PipelineError, Result};
use crate::detect::{ChtConfig, DetectionFilterConfig};
use crate::imaging::PreprocessConfig;
use crate::inpaint::InpaintConfig;
use crate::segment::SegmentConfig;

/// Where detections come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DetectorSource {
    /// Built-in circular Hough transform.
    Cht(ChtConfig),
    /// Detector output in the detections JSON format, keyed by image id.
    File { path: PathBuf },
}

impl Default for DetectorSource {
    fn default() -> Self {
        Self::Cht(ChtConfig::default())
    }
}

/// Where object masks come from.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SegmenterSource {
    /// Otsu threshold on the ROI.
    #[default]
    Fallback,
    /// Probability maps named `<image_id>__obj<k>.png`, one per kept
    /// detection in confidence order, sized to the ROI.
    File { dir: PathBuf },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectStageConfig {
    #[serde(flatten)]
    pub filter: DetectionFilterConfig,
    pub source: DetectorSource,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmentStageConfig {
    #[serde(flatten)]
    pub params: SegmentConfig,
    pub source: SegmenterSource,
}

/// Optional ground truth scored into the run report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvaluationConfig {
    /// Ground-truth boxes in the detections JSON format, in preprocessed
    /// (resized) coordinates.
    pub ground_truth_detections: Option<PathBuf>,
    pub iou_threshold: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub preprocess: PreprocessConfig,
    pub detect: DetectStageConfig,
    pub segment: SegmentStageConfig,
    pub inpaint: InpaintConfig,
    pub evaluation: EvaluationConfig,
    /// Inpainted images are written here as `<image_id>.png` when set.
    pub output_dir: Option<PathBuf>,
    pub report_path: Option<PathBuf>,
    /// Pixels added on every side of a detection box to form its ROI, so
    /// the segmenter sees background around the object.
    pub roi_margin: usize,
    /// Square dilation radius applied to each object mask before inpainting.
    pub mask_dilation: usize,
    /// Abort the batch on the first per-image failure.
    pub strict: bool,
    /// Worker threads; 0 picks the number of cores.
    pub workers: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            preprocess: PreprocessConfig::default(),
            detect: DetectStageConfig::default(),
            segment: SegmentStageConfig::default(),
            inpaint: InpaintConfig::default(),
            evaluation: EvaluationConfig::default(),
            output_dir: None,
            report_path: None,
            roi_margin: 4,
            mask_dilation: 1,
            strict: false,
            workers: 0,
        }
    }
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self { ground_truth_detections: None, iou_threshold: 0.5 }
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Parameter checks. Referenced input files are not checked here: a
    /// missing detections file fails each image's detect stage instead.
    pub fn validate(&self) -> Result<()> {
        let cfg = |e: &dyn std::fmt::Display| PipelineError::Config(e.to_string());
        self.preprocess.validate().map_err(|e| cfg(&e))?;
        self.detect.filter.validate().map_err(|e| cfg(&e))?;
        if let DetectorSource::Cht(cht) = &self.detect.source {
            cht.validate().map_err(|e| cfg(&e))?;
        }
        self.segment.params.validate().map_err(|e| cfg(&e))?;
        self.inpaint.validate().map_err(|e| cfg(&e))?;
        let t = self.evaluation.iou_threshold;
        if !(t > 0.0 && t < 1.0) {
            return Err(PipelineError::Config(format!("evaluation iou_threshold {t} outside (0, 1)")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_json_gives_defaults() {
        let cfg = PipelineConfig::from_json("{}").unwrap();
        assert_eq!(cfg, PipelineConfig::default());
        assert_eq!(cfg.detect.filter.confidence_threshold, 0.30);
        assert_eq!(cfg.inpaint.radius, 5);
    }

    #[test]
    fn nested_sources() {
        let cfg = PipelineConfig::from_json(
            r#"{"detect": {"confidence_threshold": 0.4, "source": {"kind": "file", "path": "d.json"}},
                "segment": {"binarize_threshold": 0.6, "source": {"kind": "file", "dir": "maps"}},
                "inpaint": {"radius_t": 3}}"#,
        )
        .unwrap();
        assert_eq!(cfg.detect.filter.confidence_threshold, 0.4);
        assert_eq!(cfg.detect.source, DetectorSource::File { path: "d.json".into() });
        assert_eq!(cfg.segment.source, SegmenterSource::File { dir: "maps".into() });
        assert_eq!(cfg.inpaint.radius, 3);
        let cht = PipelineConfig::from_json(r#"{"detect": {"source": {"kind": "cht", "max_radius": 20}}}"#).unwrap();
        assert!(matches!(cht.detect.source, DetectorSource::Cht(ChtConfig { max_radius: 20, min_radius: 5, .. })));
    }

    #[test]
    fn invalid_values_are_config_errors() {
        for bad in [
            r#"{"detect": {"confidence_threshold": 1.5}}"#,
            r#"{"segment": {"binarize_threshold": 0}}"#,
            r#"{"preprocess": {"target_width": 4}}"#,
            r#"{"inpaint": {"radius": 0}}"#,
            r#"{"detect": {"source": {"kind": "yolo"}}}"#,
        ] {
            assert!(matches!(PipelineConfig::from_json(bad), Err(PipelineError::Config(_))), "{bad}");
        }
    }
}
