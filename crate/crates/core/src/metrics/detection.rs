use serde::Serialize;

use crate::detect::Detection;
use crate::imaging::{BinaryMask, BoundingBox};
use crate::Scalar;

/// Raw match counts; merges associatively, so per-image partials can be
/// accumulated in any grouping.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct DetectionCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl DetectionCounts {
    pub fn merge(self, other: Self) -> Self {
        Self { tp: self.tp + other.tp, fp: self.fp + other.fp, fn_: self.fn_ + other.fn_ }
    }

    pub fn to_result<F: Scalar>(self) -> DetectionEvalResult<F> {
        let ratio = |num: usize, den: usize| if den == 0 { F::zero() } else { F::of_usize(num) / F::of_usize(den) };
        let precision = ratio(self.tp, self.tp + self.fp);
        let recall = ratio(self.tp, self.tp + self.fn_);
        let f1 = if precision + recall == F::zero() {
            F::zero()
        } else {
            F::of(2.0) * precision * recall / (precision + recall)
        };
        DetectionEvalResult { tp: self.tp, fp: self.fp, fn_: self.fn_, precision, recall, f1, map50: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DetectionEvalResult<F: Scalar> {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: F,
    pub recall: F,
    pub f1: F,
    pub map50: Option<F>,
}

fn ranked(preds: &[&Detection]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| preds[b].confidence.total_cmp(&preds[a].confidence));
    order
}

/// Greedy matching in descending confidence (stable for equal confidence).
/// Each prediction takes the unmatched ground truth with the highest IoU at or
/// above `iou_threshold`, the lower index on ties. Returns the matched
/// ground-truth index per prediction, in input order.
pub fn match_detections(preds: &[Detection], gts: &[BoundingBox], iou_threshold: f64) -> Vec<Option<usize>> {
    let refs: Vec<&Detection> = preds.iter().collect();
    match_refs(&refs, gts, iou_threshold)
}

fn match_refs(preds: &[&Detection], gts: &[BoundingBox], iou_threshold: f64) -> Vec<Option<usize>> {
    let mut taken = vec![false; gts.len()];
    let mut matched = vec![None; preds.len()];
    for p in ranked(preds) {
        let mut best: Option<(usize, f64)> = None;
        for (g, gt) in gts.iter().enumerate() {
            if taken[g] {
                continue;
            }
            let iou = preds[p].bbox.iou(gt);
            if iou >= iou_threshold && best.is_none_or(|(_, b)| iou > b) {
                best = Some((g, iou));
            }
        }
        if let Some((g, _)) = best {
            taken[g] = true;
            matched[p] = Some(g);
        }
    }
    matched
}

/// Precision/recall/F1 for one image (no AP).
pub fn evaluate_detections<F: Scalar>(
    preds: &[Detection],
    gts: &[BoundingBox],
    iou_threshold: f64,
) -> DetectionEvalResult<F> {
    let tp = match_detections(preds, gts, iou_threshold).iter().flatten().count();
    DetectionCounts { tp, fp: preds.len() - tp, fn_: gts.len() - tp }.to_result()
}

/// AP value plus a flag set when there was no ground truth to recall.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ApResult {
    pub ap: f64,
    pub no_ground_truth: bool,
}

/// All-point average precision at IoU `iou_threshold` over a multi-image set.
pub fn average_precision<I: AsRef<str>, J: AsRef<str>>(
    preds: &[(Detection, I)],
    gts: &[(BoundingBox, J)],
    iou_threshold: f64,
) -> ApResult {
    if gts.is_empty() {
        return ApResult { ap: 0.0, no_ground_truth: true };
    }
    let mut ids: Vec<&str> = preds.iter().map(|(_, id)| id.as_ref()).collect();
    ids.extend(gts.iter().map(|(_, id)| id.as_ref()));
    ids.sort_unstable();
    ids.dedup();

    let mut is_tp = vec![false; preds.len()];
    for id in ids {
        let idx: Vec<usize> = (0..preds.len()).filter(|&i| preds[i].1.as_ref() == id).collect();
        let image_preds: Vec<&Detection> = idx.iter().map(|&i| &preds[i].0).collect();
        let image_gts: Vec<BoundingBox> = gts.iter().filter(|(_, g)| g.as_ref() == id).map(|(b, _)| *b).collect();
        for (k, m) in match_refs(&image_preds, &image_gts, iou_threshold).into_iter().enumerate() {
            is_tp[idx[k]] = m.is_some();
        }
    }

    let all: Vec<&Detection> = preds.iter().map(|(d, _)| d).collect();
    let mut points: Vec<(f64, f64)> = Vec::with_capacity(preds.len());
    let (mut tp, mut fp) = (0usize, 0usize);
    for i in ranked(&all) {
        if is_tp[i] {
            tp += 1;
        } else {
            fp += 1;
        }
        points.push((tp as f64 / gts.len() as f64, tp as f64 / (tp + fp) as f64));
    }
    // precision envelope from the right
    for k in (0..points.len().saturating_sub(1)).rev() {
        points[k].1 = points[k].1.max(points[k + 1].1);
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (recall, precision) in points {
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    ApResult { ap, no_ground_truth: false }
}

/// [`average_precision`] at the 0.5 IoU threshold.
pub fn average_precision_50<I: AsRef<str>, J: AsRef<str>>(preds: &[(Detection, I)], gts: &[(BoundingBox, J)]) -> ApResult {
    average_precision(preds, gts, 0.5)
}

/// Whether the pixel under the box centre is positive in `mask`.
pub fn box_center_in_mask(bbox: &BoundingBox, mask: &BinaryMask) -> bool {
    let (cx, cy) = bbox.center();
    let (x, y) = (cx.floor() as usize, cy.floor() as usize);
    x < mask.width() && y < mask.height() && mask.is_on(x, y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn det(x: usize, y: usize, w: usize, h: usize, c: f64) -> Detection {
        Detection::new(BoundingBox::new(x, y, w, h), c).unwrap()
    }

    #[test]
    fn perfect_predictions() {
        let gts = [BoundingBox::new(0, 0, 10, 10), BoundingBox::new(20, 20, 5, 5)];
        let preds: Vec<Detection> = gts.iter().map(|b| Detection::new(*b, 0.9).unwrap()).collect();
        let r: DetectionEvalResult<f64> = evaluate_detections(&preds, &gts, 0.5);
        assert_eq!((r.precision, r.recall, r.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn below_threshold_is_miss() {
        // 10x10 boxes overlapping in a 10x4 strip: 40 / 160 = 0.25
        let r: DetectionEvalResult<f64> =
            evaluate_detections(&[det(0, 6, 10, 10, 0.9)], &[BoundingBox::new(0, 0, 10, 10)], 0.5);
        assert_eq!((r.tp, r.fp, r.fn_), (0, 1, 1));
        assert_eq!((r.precision, r.recall, r.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn f1_formula() {
        let f1 = |p: f64, r: f64| 2.0 * p * r / (p + r);
        assert!((f1(0.76, 0.70) - 0.7288).abs() < 1e-4);
        let r: DetectionEvalResult<f64> = DetectionCounts { tp: 76, fp: 24, fn_: 0 }.to_result();
        assert!((r.precision - 0.76).abs() < 1e-12);
    }

    #[test]
    fn higher_confidence_wins_the_match() {
        let gts = [BoundingBox::new(0, 0, 10, 10)];
        let preds = [det(1, 0, 10, 10, 0.4), det(0, 1, 10, 10, 0.8)];
        assert_eq!(match_detections(&preds, &gts, 0.5), vec![None, Some(0)]);
    }

    #[test]
    fn ap_cases() {
        let gt = [(BoundingBox::new(0, 0, 10, 10), "a")];
        let hit = det(0, 0, 10, 10, 0.5);
        assert_eq!(average_precision_50(&[(hit.clone(), "a")], &gt).ap, 1.0);
        let miss = det(40, 40, 10, 10, 0.9);
        assert_eq!(average_precision_50(&[(miss, "a"), (hit, "a")], &gt).ap, 0.5);
        let none: [(Detection, &str); 0] = [];
        assert_eq!(average_precision_50(&none, &gt).ap, 0.0);
        let flagged = average_precision_50(&none, &[] as &[(BoundingBox, &str)]);
        assert!(flagged.no_ground_truth);
    }

    #[test]
    fn counts_merge() {
        let a = DetectionCounts { tp: 1, fp: 2, fn_: 3 };
        let b = DetectionCounts { tp: 4, fp: 0, fn_: 1 };
        assert_eq!(a.merge(b), DetectionCounts { tp: 5, fp: 2, fn_: 4 });
        assert_eq!(a.merge(DetectionCounts::default()), a);
    }

    #[test]
    fn center_filter() {
        let lung = BinaryMask::from_fn(20, 20, |x, _| x < 10).unwrap();
        assert!(box_center_in_mask(&BoundingBox::new(0, 0, 6, 6), &lung));
        assert!(!box_center_in_mask(&BoundingBox::new(10, 0, 6, 6), &lung));
    }
}
