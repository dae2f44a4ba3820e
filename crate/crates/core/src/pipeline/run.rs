use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{DetectorSource, PipelineConfig, SegmenterSource};
use super::manifest::DatasetManifest;
use super::{PipelineError, Result};
use crate::detect::{cht_detect, filter_and_nms, load_detections, Detection};
use crate::imaging::{crop_roi, normalize_minmax, read_gray, resize, write_gray, BinaryMask, BoundingBox, GrayImage};
use crate::inpaint::inpaint_objects;
use crate::segment::{fallback_segment, load_probability_map, segment_probability_map};
use crate::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Load,
    Normalize,
    Resize,
    Detect,
    Filter,
    Crop,
    Segment,
    Dilate,
    Inpaint,
    Write,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Load => "load",
            Stage::Normalize => "normalize",
            Stage::Resize => "resize",
            Stage::Detect => "detect",
            Stage::Filter => "filter",
            Stage::Crop => "crop",
            Stage::Segment => "segment",
            Stage::Dilate => "dilate",
            Stage::Inpaint => "inpaint",
            Stage::Write => "write",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A per-image failure, tagged with the stage that raised it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StageError {
    pub stage: Stage,
    pub message: String,
}

impl StageError {
    fn at(stage: Stage) -> impl Fn(&dyn fmt::Display) -> StageError {
        move |e| StageError { stage, message: e.to_string() }
    }
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.stage, self.message)
    }
}

impl std::error::Error for StageError {}

/// Outcome of one image.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ImageEntry {
    pub image_id: String,
    pub detections_raw: usize,
    pub detections_kept: usize,
    pub objects_segmented: usize,
    /// No error and every kept detection produced a non-empty mask.
    pub inpainted: bool,
    /// Kept detections in processing order (preprocessed coordinates).
    pub boxes: Vec<BoundingBox>,
    pub confidences: Vec<f64>,
    /// ROI of each kept detection: its box grown by the ROI margin.
    pub rois: Vec<BoundingBox>,
    pub error: Option<StageError>,
}

impl ImageEntry {
    fn new(image_id: &str) -> Self {
        Self {
            image_id: image_id.to_string(),
            detections_raw: 0,
            detections_kept: 0,
            objects_segmented: 0,
            inpainted: false,
            boxes: Vec::new(),
            confidences: Vec::new(),
            rois: Vec::new(),
            error: None,
        }
    }
}

/// Accumulated wall-clock seconds per stage; merges by addition.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct StageTimings(pub BTreeMap<Stage, f64>);

impl StageTimings {
    fn add(&mut self, stage: Stage, since: Instant) {
        *self.0.entry(stage).or_default() += since.elapsed().as_secs_f64();
    }

    pub fn merge(mut self, other: &StageTimings) -> Self {
        for (s, t) in &other.0 {
            *self.0.entry(*s).or_default() += t;
        }
        self
    }
}

/// Inputs shared by every image of a run: the validated config plus
/// detections read from file, if that is the detector source.
pub struct Pipeline {
    cfg: PipelineConfig,
    file_detections: Option<std::result::Result<HashMap<String, Vec<Detection>>, String>>,
}

impl Pipeline {
    /// Validates the config. A detections file that cannot be read is not a
    /// config error: every image then fails its detect stage.
    pub fn new(cfg: PipelineConfig) -> Result<Self> {
        cfg.validate()?;
        let file_detections = match &cfg.detect.source {
            DetectorSource::File { path } => Some(
                load_detections(path)
                    .map(|by_image| {
                        let mut map: HashMap<String, Vec<Detection>> = HashMap::new();
                        for (id, dets) in by_image {
                            map.entry(id).or_default().extend(dets);
                        }
                        map
                    })
                    .map_err(|e| e.to_string()),
            ),
            DetectorSource::Cht(_) => None,
        };
        Ok(Self { cfg, file_detections })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    fn detect(&self, image_id: &str, img: &GrayImage) -> std::result::Result<Vec<Detection>, StageError> {
        match (&self.cfg.detect.source, &self.file_detections) {
            (DetectorSource::Cht(cht), _) => cht_detect(img, cht).map_err(|e| StageError::at(Stage::Detect)(&e)),
            (DetectorSource::File { .. }, Some(Ok(map))) => {
                let dets = map.get(image_id).cloned().unwrap_or_default();
                let (w, h) = img.dims();
                if let Some(d) = dets.iter().find(|d| !d.bbox.fits_within(w, h)) {
                    return Err(StageError {
                        stage: Stage::Detect,
                        message: format!("box {:?} outside {w}x{h} image", d.bbox),
                    });
                }
                Ok(dets)
            }
            (DetectorSource::File { .. }, Some(Err(msg))) => {
                Err(StageError { stage: Stage::Detect, message: msg.clone() })
            }
            (DetectorSource::File { .. }, None) => unreachable!("file detections loaded in Pipeline::new"),
        }
    }

    fn segment(&self, image_id: &str, k: usize, roi: &GrayImage) -> std::result::Result<BinaryMask, StageError> {
        let params = &self.cfg.segment.params;
        let err = StageError::at(Stage::Segment);
        match &self.cfg.segment.source {
            SegmenterSource::Fallback => fallback_segment(roi, params).map_err(|e| err(&e)),
            SegmenterSource::File { dir } => {
                let path = dir.join(format!("{image_id}__obj{k}.png"));
                let prob = load_probability_map::<f64>(&path).map_err(|e| err(&e))?;
                if prob.dims() != roi.dims() {
                    return Err(StageError {
                        stage: Stage::Segment,
                        message: format!(
                            "{}: probability map is {:?}, ROI is {:?}",
                            path.display(),
                            prob.dims(),
                            roi.dims()
                        ),
                    });
                }
                segment_probability_map(&prob, params).map_err(|e| err(&e))
            }
        }
    }

    /// Preprocesses one image and removes its detected objects.
    ///
    /// On a per-image failure the entry carries the stage-tagged error and
    /// the returned image is `None`.
    pub fn run_image<F: Scalar>(&self, image_id: &str, raw: &GrayImage) -> (Option<GrayImage>, ImageEntry, StageTimings) {
        let mut entry = ImageEntry::new(image_id);
        let mut timings = StageTimings::default();
        match self.run_stages::<F>(image_id, raw, &mut entry, &mut timings) {
            Ok(img) => {
                entry.inpainted = entry.objects_segmented == entry.detections_kept;
                (Some(img), entry, timings)
            }
            Err(e) => {
                entry.error = Some(e);
                (None, entry, timings)
            }
        }
    }

    fn run_stages<F: Scalar>(
        &self,
        image_id: &str,
        raw: &GrayImage,
        entry: &mut ImageEntry,
        timings: &mut StageTimings,
    ) -> std::result::Result<GrayImage, StageError> {
        let cfg = &self.cfg;
        let t = Instant::now();
        let normalized = normalize_minmax(raw);
        timings.add(Stage::Normalize, t);

        let t = Instant::now();
        let img = resize(&normalized, &cfg.preprocess);
        timings.add(Stage::Resize, t);

        let t = Instant::now();
        let raw_dets = self.detect(image_id, &img)?;
        timings.add(Stage::Detect, t);
        entry.detections_raw = raw_dets.len();

        let t = Instant::now();
        let kept = filter_and_nms(&raw_dets, &cfg.detect.filter);
        timings.add(Stage::Filter, t);
        entry.detections_kept = kept.len();
        entry.boxes = kept.iter().map(|d| d.bbox).collect();
        entry.confidences = kept.iter().map(|d| d.confidence).collect();
        if kept.is_empty() {
            return Ok(img);
        }

        let (w, h) = img.dims();
        let mut objects = Vec::with_capacity(kept.len());
        for (k, det) in kept.iter().enumerate() {
            let t = Instant::now();
            let roi_box = det.bbox.expanded(cfg.roi_margin, w, h);
            let roi = crop_roi(&img, &roi_box).map_err(|e| StageError::at(Stage::Crop)(&e))?;
            timings.add(Stage::Crop, t);
            entry.rois.push(roi_box);

            let t = Instant::now();
            let mask = self.segment(image_id, k, &roi)?;
            timings.add(Stage::Segment, t);

            let t = Instant::now();
            let mask = mask.dilate(cfg.mask_dilation);
            timings.add(Stage::Dilate, t);
            if !mask.is_empty() {
                entry.objects_segmented += 1;
                objects.push((roi_box, mask));
            }
        }

        let t = Instant::now();
        let out = inpaint_objects::<F>(&img, &objects, &cfg.inpaint).map_err(|e| StageError::at(Stage::Inpaint)(&e))?;
        timings.add(Stage::Inpaint, t);
        Ok(out)
    }
}

/// Convenience wrapper: one image through a fresh [`Pipeline`].
pub fn run_pipeline<F: Scalar>(
    image_id: &str,
    image: &GrayImage,
    cfg: &PipelineConfig,
) -> Result<(Option<GrayImage>, ImageEntry)> {
    let p = Pipeline::new(cfg.clone())?;
    let (img, entry, _) = p.run_image::<F>(image_id, image);
    Ok((img, entry))
}

/// Every image of a batch, sorted by image id, plus summed stage timings.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchResult {
    pub entries: Vec<ImageEntry>,
    pub timings: StageTimings,
    /// Set when strict mode stopped the batch early.
    pub aborted: bool,
}

impl BatchResult {
    pub fn failures(&self) -> impl Iterator<Item = &ImageEntry> {
        self.entries.iter().filter(|e| e.error.is_some())
    }
}

fn output_path(dir: &Path, image_id: &str) -> PathBuf {
    dir.join(format!("{image_id}.png"))
}

/// Runs every manifest image on a worker pool. Outputs go to
/// `cfg.output_dir` when set. In strict mode the first failure stops work on
/// images not yet started; their entries are omitted.
pub fn run_batch<F: Scalar>(pipeline: &Pipeline, manifest: &DatasetManifest) -> Result<BatchResult> {
    let cfg = pipeline.config();
    if let Some(dir) = &cfg.output_dir {
        std::fs::create_dir_all(dir).map_err(|source| PipelineError::Io { path: dir.display().to_string(), source })?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| PipelineError::Config(format!("worker pool: {e}")))?;
    let stop = AtomicBool::new(false);
    let results: Vec<Option<(ImageEntry, StageTimings)>> = pool.install(|| {
        manifest
            .rows
            .par_iter()
            .map(|row| {
                if cfg.strict && stop.load(Ordering::SeqCst) {
                    return None;
                }
                let t = Instant::now();
                let loaded = read_gray(&row.path);
                let mut timings = StageTimings::default();
                timings.add(Stage::Load, t);
                let (entry, more) = match loaded {
                    Err(e) => {
                        let mut entry = ImageEntry::new(&row.image_id);
                        entry.error = Some(StageError::at(Stage::Load)(&e));
                        (entry, StageTimings::default())
                    }
                    Ok(raw) => {
                        let (out, mut entry, more) = pipeline.run_image::<F>(&row.image_id, &raw);
                        if let (Some(out), Some(dir)) = (out, &cfg.output_dir) {
                            let t = Instant::now();
                            if let Err(e) = write_gray(&out, output_path(dir, &row.image_id)) {
                                entry.error = Some(StageError::at(Stage::Write)(&e));
                                entry.inpainted = false;
                            }
                            timings.add(Stage::Write, t);
                        }
                        (entry, more)
                    }
                };
                if let Some(e) = &entry.error {
                    log::warn!("{}: {e}", entry.image_id);
                    stop.store(true, Ordering::SeqCst);
                }
                Some((entry, timings.merge(&more)))
            })
            .collect()
    });
    let aborted = cfg.strict && results.iter().any(|r| r.is_none());
    let mut timings = StageTimings::default();
    let mut entries = Vec::with_capacity(results.len());
    for (entry, t) in results.into_iter().flatten() {
        timings = timings.merge(&t);
        entries.push(entry);
    }
    entries.sort_by(|a, b| a.image_id.cmp(&b.image_id));
    Ok(BatchResult { entries, timings, aborted })
}
