use super::{Detection, DetectionFilterConfig};

/// Drops low-confidence boxes, then greedy non-maximum suppression.
/// Survivors come out in descending confidence; equal confidences keep input order.
pub fn filter_and_nms(dets: &[Detection], cfg: &DetectionFilterConfig) -> Vec<Detection> {
    let mut ranked: Vec<&Detection> = dets.iter().filter(|d| d.confidence >= cfg.confidence_threshold).collect();
    ranked.sort_by(|a, b| b.confidence.total_cmp(&a.confidence));
    let mut kept: Vec<Detection> = Vec::new();
    for d in ranked {
        if kept.iter().all(|k| k.bbox.iou(&d.bbox) <= cfg.nms_iou_threshold) {
            kept.push(d.clone());
        }
    }
    kept
}
