//! `foc`: command-line front end for foreign-object removal.
//!
//! Exit codes: 0 on success, 1 on processing failures, 2 on bad
//! configuration or unreadable inputs named on the command line.

mod eval;

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use foc_core::annotate::{load_records, shape_warnings, validate_record, AnnotationRecord};
use foc_core::detect::{cht_detect, detections_to_json, filter_and_nms, load_detections, Detection};
use foc_core::imaging::{crop_mask, normalize_minmax, read_gray, read_mask, resize, write_gray, write_mask};
use foc_core::inpaint::inpaint_objects;
use foc_core::pipeline::{
    emit_report, run_batch, split_dataset, DatasetManifest, DetectorSource, Pipeline, PipelineConfig, SplitRequest,
};
use foc_core::segment::{fallback_segment, load_probability_map, segment_probability_map};
use foc_core::{InpaintConfig, SegmentConfig};
use serde_json::json;

#[derive(Parser)]
#[command(name = "foc", version, about = "Detect, segment and inpaint foreign objects in chest radiograph photos")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect objects in every image of a directory.
    Detect {
        #[arg(long)]
        input: PathBuf,
        /// Pipeline config; its preprocess and detect sections are used.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Use boxes from this detection file instead of the Hough detector.
        #[arg(long)]
        detections: Option<PathBuf>,
        /// Detection JSON output; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Segment ROI crops into object masks.
    Segment {
        #[arg(long)]
        rois: PathBuf,
        /// Probability maps named like the ROI files; Otsu fallback when omitted.
        #[arg(long)]
        probmaps: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Inpaint one image given full-frame object masks.
    Inpaint {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        masks: PathBuf,
        #[arg(long, default_value_t = 5)]
        radius: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score predictions against ground truth.
    Eval {
        kind: EvalKind,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        iou: f64,
        /// Drop boxes whose centre falls outside this mask (detection only).
        #[arg(long)]
        lung_mask: Option<PathBuf>,
    },
    /// Annotation checks.
    Annotate {
        #[command(subcommand)]
        action: AnnotateAction,
    },
    /// Batch runs.
    Pipeline {
        #[command(subcommand)]
        action: PipelineAction,
    },
    /// Dataset manifest tools.
    Dataset {
        #[command(subcommand)]
        action: DatasetAction,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum EvalKind {
    Detection,
    Segmentation,
    Inpainting,
}

#[derive(Subcommand)]
enum AnnotateAction {
    /// Check two reviewers' annotation files against the criteria.
    Validate {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        lung_mask: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum PipelineAction {
    Run {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum DatasetAction {
    Split {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        fractions: Vec<f64>,
        /// CSV whose `image_id` column (or first column) lists ids to leave out.
        #[arg(long)]
        exclude: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Allowed gap between a split's class shares and the pool's.
        #[arg(long, default_value_t = 0.05)]
        tolerance: f64,
        /// Manifest CSV with the split column filled; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Marks errors that map to exit code 2.
#[derive(Debug)]
struct ConfigError(String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config_err(e: impl fmt::Display) -> anyhow::Error {
    ConfigError(e.to_string()).into()
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig> {
    match path {
        Some(p) => PipelineConfig::load(p).map_err(config_err),
        None => Ok(PipelineConfig::default()),
    }
}

/// Image files of a directory sorted by name, paired with their stems.
fn list_images(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let entries = fs::read_dir(dir).map_err(|e| config_err(format!("{}: {e}", dir.display())))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry?.path();
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        if matches!(ext.as_deref(), Some("png" | "pgm" | "pnm")) {
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
            out.push((stem, path));
        }
    }
    out.sort();
    Ok(out)
}

fn write_text(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn detect(input: &Path, config: Option<&Path>, detections: Option<&Path>, out: Option<&Path>) -> Result<ExitCode> {
    let cfg = load_config(config)?;
    let from_file = match detections {
        Some(p) => Some(load_detections(p).map_err(config_err)?),
        None => None,
    };
    let cht = match &cfg.detect.source {
        DetectorSource::Cht(c) => *c,
        DetectorSource::File { .. } => Default::default(),
    };
    let mut results = Vec::new();
    let mut failed = false;
    for (id, path) in list_images(input)? {
        let img = match read_gray(&path) {
            Ok(img) => resize(&normalize_minmax(&img), &cfg.preprocess),
            Err(e) => {
                log::error!("{id}: {e}");
                failed = true;
                continue;
            }
        };
        let raw: Vec<Detection> = match &from_file {
            Some(by_image) => by_image.iter().filter(|(i, _)| *i == id).flat_map(|(_, d)| d.clone()).collect(),
            None => match cht_detect(&img, &cht) {
                Ok(d) => d,
                Err(e) => {
                    log::error!("{id}: {e}");
                    failed = true;
                    continue;
                }
            },
        };
        let kept = filter_and_nms(&raw, &cfg.detect.filter);
        log::info!("{id}: {} detections, {} kept", raw.len(), kept.len());
        results.push((id, kept));
    }
    write_text(out, &detections_to_json(&results))?;
    Ok(if failed { ExitCode::from(1) } else { ExitCode::SUCCESS })
}

fn segment(rois: &Path, probmaps: Option<&Path>, out: &Path) -> Result<ExitCode> {
    let cfg = SegmentConfig::default();
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut failed = false;
    for (id, path) in list_images(rois)? {
        let mask = match probmaps {
            Some(dir) => load_probability_map::<f64>(dir.join(format!("{id}.png")))
                .map_err(anyhow::Error::from)
                .and_then(|p| {
                    let roi = read_gray(&path)?;
                    if p.dims() != roi.dims() {
                        bail!("probability map is {:?}, ROI is {:?}", p.dims(), roi.dims());
                    }
                    Ok(segment_probability_map(&p, &cfg)?)
                }),
            None => read_gray(&path).map_err(anyhow::Error::from).and_then(|roi| Ok(fallback_segment(&roi, &cfg)?)),
        };
        match mask.and_then(|m| Ok(write_mask(&m, out.join(format!("{id}.png")))?)) {
            Ok(()) => log::info!("{id}: segmented"),
            Err(e) => {
                log::error!("{id}: {e:#}");
                failed = true;
            }
        }
    }
    Ok(if failed { ExitCode::from(1) } else { ExitCode::SUCCESS })
}

fn inpaint(image: &Path, masks: &Path, radius: usize, out: &Path) -> Result<ExitCode> {
    let cfg = InpaintConfig { radius };
    cfg.validate().map_err(config_err)?;
    let img = read_gray(image).map_err(config_err)?;
    let mut objects = Vec::new();
    for (id, path) in list_images(masks)? {
        let mask = read_mask(&path)?;
        if mask.dims() != img.dims() {
            bail!("mask {id} is {:?}, image is {:?}", mask.dims(), img.dims());
        }
        if let Some(b) = mask.bounding_box() {
            objects.push((b, crop_mask(&mask, &b)?));
        }
    }
    let filled = inpaint_objects::<f64>(&img, &objects, &cfg)?;
    write_gray(&filled, out)?;
    log::info!("inpainted {} objects", objects.len());
    Ok(ExitCode::SUCCESS)
}

fn annotate_validate(a: &Path, b: &Path, lung_mask: Option<&Path>) -> Result<ExitCode> {
    let first = load_records(a).map_err(config_err)?;
    let second = load_records(b).map_err(config_err)?;
    let lung = match lung_mask {
        Some(p) => Some(read_mask(p).map_err(config_err)?),
        None => None,
    };
    let mut ids: Vec<&str> = first.iter().chain(&second).map(|r| r.image_id.as_str()).collect();
    ids.sort_unstable();
    ids.dedup();
    let find = |records: &'_ [AnnotationRecord], id: &str| records.iter().find(|r| r.image_id == id).cloned();
    let mut images = Vec::new();
    let mut violations_total = 0;
    for id in ids {
        let (ra, rb) = (find(&first, id), find(&second, id));
        let entry = match (&ra, &rb) {
            (Some(ra), rb) => {
                let v = validate_record(ra, rb.as_ref(), lung.as_ref())?;
                let missing = rb.is_none().then_some("second reviewer has no record");
                violations_total += v.len() + usize::from(missing.is_some());
                json!({"image_id": id, "violations": v, "shape_warnings": shape_warnings(ra), "missing": missing})
            }
            (None, Some(rb)) => {
                let v = validate_record(rb, None, lung.as_ref())?;
                violations_total += v.len() + 1;
                json!({"image_id": id, "violations": v, "shape_warnings": shape_warnings(rb),
                       "missing": "first reviewer has no record"})
            }
            (None, None) => unreachable!("id came from one of the files"),
        };
        images.push(entry);
    }
    println!("{}", serde_json::to_string_pretty(&json!({ "images": images }))?);
    Ok(if violations_total > 0 { ExitCode::from(1) } else { ExitCode::SUCCESS })
}

fn pipeline_run(manifest: &Path, config: Option<&Path>, out: &Path) -> Result<ExitCode> {
    let mut cfg = load_config(config)?;
    cfg.output_dir = Some(out.to_path_buf());
    let report_path = cfg.report_path.clone().unwrap_or_else(|| out.join("report.json"));
    let manifest = DatasetManifest::load(manifest).map_err(config_err)?;
    let pipeline = Pipeline::new(cfg.clone()).map_err(config_err)?;
    let batch = run_batch::<f64>(&pipeline, &manifest)?;
    let report = emit_report(&batch, &cfg, &report_path)?;
    let failures = batch.failures().count();
    if let Some(m) = &report.metrics {
        log::info!(
            "{} images, {} failed, completeness {}%",
            m.images_total,
            m.images_failed,
            m.completeness.percentage
        );
    }
    Ok(if cfg.strict && failures > 0 { ExitCode::from(1) } else { ExitCode::SUCCESS })
}

fn read_exclusion(path: &Path) -> Result<HashSet<String>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    let column = reader.headers()?.iter().position(|h| h.trim() == "image_id").unwrap_or(0);
    let mut ids = HashSet::new();
    for record in reader.records() {
        let record = record.map_err(config_err)?;
        if let Some(id) = record.get(column) {
            ids.insert(id.trim().to_string());
        }
    }
    Ok(ids)
}

fn dataset_split(
    manifest: &Path,
    fractions: &[f64],
    exclude: Option<&Path>,
    seed: u64,
    tolerance: f64,
    out: Option<&Path>,
) -> Result<ExitCode> {
    let manifest = DatasetManifest::load(manifest).map_err(config_err)?;
    let exclusion = match exclude {
        Some(p) => read_exclusion(p)?,
        None => HashSet::new(),
    };
    let request = SplitRequest::from_fractions(fractions, tolerance, seed);
    let split = split_dataset(&manifest, &request, &exclusion).map_err(config_err)?;
    write_text(out, split.to_csv()?.trim_end())?;
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Detect { input, config, detections, out } => {
            detect(&input, config.as_deref(), detections.as_deref(), out.as_deref())
        }
        Command::Segment { rois, probmaps, out } => segment(&rois, probmaps.as_deref(), &out),
        Command::Inpaint { image, masks, radius, out } => inpaint(&image, &masks, radius, &out),
        Command::Eval { kind, pred, gt, out, iou, lung_mask } => {
            let report = match kind {
                EvalKind::Detection => {
                    let gt = gt.ok_or_else(|| config_err("--gt is required for detection"))?;
                    eval::detection(&pred, &gt, iou, lung_mask.as_deref())?
                }
                EvalKind::Segmentation => {
                    let gt = gt.ok_or_else(|| config_err("--gt is required for segmentation"))?;
                    eval::segmentation(&pred, &gt)?
                }
                EvalKind::Inpainting => eval::inpainting(&pred)?,
            };
            let text = serde_json::to_string_pretty(&report)?;
            fs::write(&out, text).with_context(|| format!("writing {}", out.display()))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Annotate { action: AnnotateAction::Validate { a, b, lung_mask } } => {
            annotate_validate(&a, &b, lung_mask.as_deref())
        }
        Command::Pipeline { action: PipelineAction::Run { manifest, config, out } } => {
            pipeline_run(&manifest, config.as_deref(), &out)
        }
        Command::Dataset { action: DatasetAction::Split { manifest, fractions, exclude, seed, tolerance, out } } => {
            dataset_split(&manifest, &fractions, exclude.as_deref(), seed, tolerance, out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<ConfigError>() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
