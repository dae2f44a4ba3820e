//! `foc eval` reports. Fractions are rounded to 6 decimal places.

use std::collections::BTreeSet;
use std::path::Path;

use anyhow::{bail, Context, Result};
use foc_core::detect::{load_detections, Detection, DetectionsByImage};
use foc_core::imaging::{read_mask, BinaryMask, BoundingBox};
use foc_core::metrics::{
    average_precision, avg_dice, box_center_in_mask, completeness_report, evaluate_detections, mdoc, overlap_metrics,
    pair_objects, CountPair, DetectionCounts, OverlapScores,
};
use foc_core::segment::components;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::{config_err, list_images};

fn round6(v: f64) -> f64 {
    (v * 1e6).round() / 1e6
}

fn opt6(v: Option<f64>) -> Value {
    v.map_or(Value::Null, |v| json!(round6(v)))
}

fn boxes_for<'a>(by_image: &'a DetectionsByImage, id: &'a str) -> impl Iterator<Item = &'a Detection> {
    by_image.iter().filter(move |(i, _)| i == id).flat_map(|(_, d)| d)
}

pub fn detection(pred: &Path, gt: &Path, iou: f64, lung_mask: Option<&Path>) -> Result<Value> {
    if !(0.0..=1.0).contains(&iou) {
        return Err(config_err(format!("IoU threshold {iou} outside [0, 1]")));
    }
    let preds = load_detections(pred).map_err(config_err)?;
    let gts = load_detections(gt).map_err(config_err)?;
    let lung = match lung_mask {
        Some(p) => Some(read_mask(p).map_err(config_err)?),
        None => None,
    };
    let inside = |b: &BoundingBox| lung.as_ref().is_none_or(|m| box_center_in_mask(b, m));
    let ids: BTreeSet<&str> = preds.iter().chain(&gts).map(|(id, _)| id.as_str()).collect();

    let mut counts = DetectionCounts::default();
    let mut pairs = Vec::new();
    let mut ranked: Vec<(Detection, &str)> = Vec::new();
    let mut truth: Vec<(BoundingBox, &str)> = Vec::new();
    for id in ids {
        let p: Vec<Detection> = boxes_for(&preds, id).filter(|d| inside(&d.bbox)).cloned().collect();
        let g: Vec<BoundingBox> = boxes_for(&gts, id).map(|d| d.bbox).filter(|b| inside(b)).collect();
        let r = evaluate_detections::<f64>(&p, &g, iou);
        counts = counts.merge(DetectionCounts { tp: r.tp, fp: r.fp, fn_: r.fn_ });
        pairs.push(CountPair::new(g.len(), p.len()));
        truth.extend(g.iter().map(|b| (*b, id)));
        ranked.extend(p.into_iter().map(|d| (d, id)));
    }
    let r = counts.to_result::<f64>();
    let ap = average_precision(&ranked, &truth, iou);
    Ok(json!({
        "tp": r.tp,
        "fp": r.fp,
        "fn": r.fn_,
        "precision": round6(r.precision),
        "recall": round6(r.recall),
        "f1": round6(r.f1),
        "map50": opt6((!ap.no_ground_truth).then_some(ap.ap)),
        "mdoc": opt6(mdoc::<f64>(&pairs).ok()),
    }))
}

/// Splits a mask into one mask per 8-connected component.
fn objects(mask: &BinaryMask) -> Vec<BinaryMask> {
    let (w, h) = mask.dims();
    components(mask)
        .into_iter()
        .map(|c| {
            let mut m = BinaryMask::empty(w, h).expect("non-zero dims");
            for idx in c.pixels {
                m.set(idx % w, idx / w, true);
            }
            m
        })
        .collect()
}

/// Pairs masks by file name. A ground-truth mask without a prediction is
/// scored against an empty mask; predictions without ground truth are ignored.
pub fn segmentation(pred: &Path, gt: &Path) -> Result<Value> {
    let gt_files = list_images(gt)?;
    if gt_files.is_empty() {
        return Err(config_err(format!("{}: no ground-truth masks", gt.display())));
    }
    let mut sums = (0.0, 0.0, 0.0);
    let mut samples = Vec::new();
    let mut pairs = Vec::new();
    for (id, path) in &gt_files {
        let g = read_mask(path)?;
        let pred_path = pred.join(path.file_name().expect("listed file"));
        let p = if pred_path.exists() { read_mask(&pred_path)? } else { BinaryMask::empty(g.width(), g.height())? };
        if p.dims() != g.dims() {
            bail!("{id}: prediction is {:?}, ground truth is {:?}", p.dims(), g.dims());
        }
        let s: OverlapScores<f64> = overlap_metrics(&g, &p)?;
        sums = (sums.0 + s.dice, sums.1 + s.iou, sums.2 + s.pixel_accuracy);
        let (go, po) = (objects(&g), objects(&p));
        pairs.push(CountPair::new(go.len(), po.len()));
        samples.push(pair_objects(&go, &po).with_context(|| id.clone())?);
    }
    let n = gt_files.len() as f64;
    Ok(json!({
        "images": gt_files.len(),
        "dice": round6(sums.0 / n),
        "iou": round6(sums.1 / n),
        "pixel_accuracy": round6(sums.2 / n),
        "avg_dice": opt6(avg_dice::<f64>(&samples).ok()),
        "mdoc": opt6(mdoc::<f64>(&pairs).ok()),
    }))
}

#[derive(Deserialize)]
struct FlagRow {
    image_id: String,
    fully_inpainted: String,
}

fn parse_flag(s: &str) -> Result<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => bail!("not a flag: {other:?}"),
    }
}

/// Completeness from per-image flags: a CSV with `image_id,fully_inpainted`
/// columns, or a pipeline run report (its `inpainted` flags).
pub fn inpainting(pred: &Path) -> Result<Value> {
    let is_json = pred.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let flags: Vec<(String, bool)> = if is_json {
        let text = std::fs::read_to_string(pred).map_err(|e| config_err(format!("{}: {e}", pred.display())))?;
        let report: Value = serde_json::from_str(&text).map_err(config_err)?;
        let Some(images) = report["images"].as_array() else {
            return Err(config_err("run report has no images array"));
        };
        images
            .iter()
            .map(|e| (e["image_id"].as_str().unwrap_or_default().to_string(), e["inpainted"].as_bool() == Some(true)))
            .collect()
    } else {
        let mut reader = csv::Reader::from_path(pred).map_err(|e| config_err(format!("{}: {e}", pred.display())))?;
        let mut flags = Vec::new();
        for row in reader.deserialize::<FlagRow>() {
            let row = row.map_err(config_err)?;
            flags.push((row.image_id, parse_flag(&row.fully_inpainted).map_err(config_err)?));
        }
        flags
    };
    let r = completeness_report(&flags).map_err(config_err)?;
    Ok(json!({
        "total_images": r.total_images,
        "completely_inpainted": r.completely_inpainted,
        "percentage": r.percentage,
        "completeness": round6(r.fraction()),
    }))
}
