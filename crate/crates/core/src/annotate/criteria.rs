use std::f64::consts::PI;

use serde::Serialize;

use super::{AnnotateError, AnnotatedObject, AnnotationRecord, Result};
use crate::imaging::{rasterize_polygon, BinaryMask, Polygon};

/// Fewest polygon vertices an object outline may have.
pub const MIN_VERTICES: usize = 6;

/// Declaration order is the report order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum ViolationKind {
    MinVertices,
    OutsideBox,
    OffCenter,
    OutsideLungRegion,
    CountMismatch,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriteriaViolation {
    pub kind: ViolationKind,
    pub object_index: Option<usize>,
    pub detail: String,
}

impl CriteriaViolation {
    fn object(kind: ViolationKind, idx: usize, detail: String) -> Self {
        Self { kind, object_index: Some(idx), detail }
    }
}

fn vertex_mean(verts: &[[f64; 2]]) -> (f64, f64) {
    let n = verts.len().max(1) as f64;
    let (sx, sy) = verts.iter().fold((0.0, 0.0), |(sx, sy), v| (sx + v[0], sy + v[1]));
    (sx / n, sy / n)
}

fn as_polygon(obj: &AnnotatedObject) -> Option<Polygon> {
    Polygon::new(obj.polygon.iter().map(|v| (v[0], v[1])).collect()).ok()
}

fn touches_lung(obj: &AnnotatedObject, poly: Option<&Polygon>, lung: &BinaryMask) -> bool {
    let (w, h) = lung.dims();
    if let Some(mask) = poly.and_then(|p| rasterize_polygon(p, w, h).ok()) {
        if (0..w * h).any(|i| mask.is_on_idx(i) && lung.is_on_idx(i)) {
            return true;
        }
    }
    // outlines thinner than a pixel cover no pixel centre; test their vertices
    obj.polygon.iter().any(|v| {
        v[0] >= 0.0 && v[1] >= 0.0 && (v[0] as usize) < w && (v[1] as usize) < h && lung.is_on(v[0] as usize, v[1] as usize)
    })
}

fn check_object(idx: usize, obj: &AnnotatedObject, lung: Option<&BinaryMask>, out: &mut Vec<CriteriaViolation>) {
    let b = obj.bbox;
    let n = obj.polygon.len();
    if n < MIN_VERTICES {
        out.push(CriteriaViolation::object(
            ViolationKind::MinVertices,
            idx,
            format!("{n} vertices, at least {MIN_VERTICES} required"),
        ));
    }
    let (x0, y0, x1, y1) = (b.x as f64, b.y as f64, b.right() as f64, b.bottom() as f64);
    if let Some(v) = obj.polygon.iter().find(|v| v[0] < x0 || v[0] > x1 || v[1] < y0 || v[1] > y1) {
        out.push(CriteriaViolation::object(
            ViolationKind::OutsideBox,
            idx,
            format!("vertex ({}, {}) outside box [{x0}, {x1}]x[{y0}, {y1}]", v[0], v[1]),
        ));
    }
    let poly = as_polygon(obj);
    let (cx, cy) = poly.as_ref().map_or_else(|| vertex_mean(&obj.polygon), Polygon::centroid);
    let (qw, qh) = (b.w as f64 / 4.0, b.h as f64 / 4.0);
    if n > 0 && !(cx >= x0 + qw && cx <= x1 - qw && cy >= y0 + qh && cy <= y1 - qh) {
        out.push(CriteriaViolation::object(
            ViolationKind::OffCenter,
            idx,
            format!("centroid ({cx:.2}, {cy:.2}) outside central window [{}, {}]x[{}, {}]", x0 + qw, x1 - qw, y0 + qh, y1 - qh),
        ));
    }
    if let Some(lung) = lung {
        if !touches_lung(obj, poly.as_ref(), lung) {
            out.push(CriteriaViolation::object(
                ViolationKind::OutsideLungRegion,
                idx,
                "polygon does not overlap the lung mask".into(),
            ));
        }
    }
}

/// Checks `a` (and the partner annotation `b`, if given) against the
/// annotation criteria. The lung check runs only when a mask is supplied.
/// Violations come sorted by kind, then object index (record `a` first).
pub fn validate_record(
    a: &AnnotationRecord,
    b: Option<&AnnotationRecord>,
    lung_mask: Option<&BinaryMask>,
) -> Result<Vec<CriteriaViolation>> {
    let mut out = Vec::new();
    for (i, obj) in a.objects.iter().enumerate() {
        check_object(i, obj, lung_mask, &mut out);
    }
    if let Some(b) = b {
        if b.image_id != a.image_id {
            return Err(AnnotateError::ImageIdMismatch(a.image_id.clone(), b.image_id.clone()));
        }
        if b.reviewer_id == a.reviewer_id {
            return Err(AnnotateError::SameReviewer(a.reviewer_id.clone()));
        }
        for (i, obj) in b.objects.iter().enumerate() {
            let mut partner = Vec::new();
            check_object(i, obj, lung_mask, &mut partner);
            for v in &mut partner {
                v.detail = format!("{}: {}", b.reviewer_id, v.detail);
            }
            out.extend(partner);
        }
        if a.objects.len() != b.objects.len() {
            out.push(CriteriaViolation {
                kind: ViolationKind::CountMismatch,
                object_index: None,
                detail: format!(
                    "{} annotated {} objects, {} annotated {}",
                    a.reviewer_id,
                    a.objects.len(),
                    b.reviewer_id,
                    b.objects.len()
                ),
            });
        }
    }
    // stable, so record a precedes record b within equal keys
    out.sort_by_key(|v| (v.kind, v.object_index));
    Ok(out)
}

/// Shape is judged by a person; this only attaches a roundness figure
/// (`4*pi*area / perimeter^2`, 1 for a disc) to every object for the reviewer.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShapeWarning {
    pub object_index: usize,
    pub circularity: Option<f64>,
    pub message: String,
}

pub fn shape_warnings(record: &AnnotationRecord) -> Vec<ShapeWarning> {
    record
        .objects
        .iter()
        .enumerate()
        .map(|(i, obj)| {
            let circularity = as_polygon(obj).and_then(|p| {
                let v = p.vertices();
                let perimeter: f64 =
                    (0..v.len()).map(|k| (v[(k + 1) % v.len()].0 - v[k].0).hypot(v[(k + 1) % v.len()].1 - v[k].1)).sum();
                (perimeter > 0.0).then(|| 4.0 * PI * p.signed_area().abs() / (perimeter * perimeter))
            });
            ShapeWarning {
                object_index: i,
                circularity,
                message: "shape (sickle, round or earbud-like) needs manual confirmation".into(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::BoundingBox;

    /// Regular n-gon of radius `r` centred in a 20x20 box at the origin.
    fn ngon(n: usize, r: f64) -> AnnotatedObject {
        let polygon = (0..n)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / n as f64;
                [10.0 + r * t.cos(), 10.0 + r * t.sin()]
            })
            .collect();
        AnnotatedObject { polygon, bbox: BoundingBox::new(0, 0, 20, 20) }
    }

    fn record(reviewer: &str, objects: Vec<AnnotatedObject>) -> AnnotationRecord {
        AnnotationRecord { image_id: "img".into(), reviewer_id: reviewer.into(), objects }
    }

    fn kinds(v: &[CriteriaViolation]) -> Vec<ViolationKind> {
        v.iter().map(|x| x.kind).collect()
    }

    #[test]
    fn compliant_record() {
        let lung = BinaryMask::from_fn(20, 20, |_, _| true).unwrap();
        let a = record("r1", vec![ngon(6, 5.0)]);
        let b = record("r2", vec![ngon(8, 5.0)]);
        assert!(validate_record(&a, Some(&b), Some(&lung)).unwrap().is_empty());
    }

    #[test]
    fn five_vertices() {
        let a = record("r1", vec![ngon(5, 5.0)]);
        assert_eq!(kinds(&validate_record(&a, None, None).unwrap()), [ViolationKind::MinVertices]);
    }

    #[test]
    fn count_mismatch_is_symmetric() {
        let a = record("r1", vec![ngon(6, 4.0); 3]);
        let b = record("r2", vec![ngon(6, 4.0); 2]);
        assert_eq!(kinds(&validate_record(&a, Some(&b), None).unwrap()), [ViolationKind::CountMismatch]);
        assert_eq!(kinds(&validate_record(&b, Some(&a), None).unwrap()), [ViolationKind::CountMismatch]);
    }

    #[test]
    fn outside_and_off_centre() {
        let mut obj = ngon(6, 5.0);
        obj.polygon[0] = [25.0, 10.0];
        let v = validate_record(&record("r1", vec![obj]), None, None).unwrap();
        assert_eq!(kinds(&v), [ViolationKind::OutsideBox]);

        let shifted = AnnotatedObject { bbox: BoundingBox::new(6, 6, 20, 20), ..ngon(6, 3.0) };
        let v = validate_record(&record("r1", vec![shifted]), None, None).unwrap();
        assert_eq!(kinds(&v), [ViolationKind::OffCenter]);
    }

    #[test]
    fn lung_region() {
        let lung = BinaryMask::from_fn(40, 40, |x, _| x >= 30).unwrap();
        let a = record("r1", vec![ngon(6, 5.0), ngon(7, 5.0)]);
        let v = validate_record(&a, None, Some(&lung)).unwrap();
        assert_eq!(kinds(&v), [ViolationKind::OutsideLungRegion; 2]);
        assert_eq!(v[1].object_index, Some(1));
        assert!(validate_record(&a, None, None).unwrap().is_empty());
    }

    #[test]
    fn partner_checks() {
        let a = record("r1", vec![]);
        let mut other = record("r1", vec![]);
        assert!(matches!(validate_record(&a, Some(&other), None), Err(AnnotateError::SameReviewer(_))));
        other.reviewer_id = "r2".into();
        other.image_id = "else".into();
        assert!(matches!(validate_record(&a, Some(&other), None), Err(AnnotateError::ImageIdMismatch(..))));
    }

    #[test]
    fn sorted_by_kind_then_index() {
        let mut far = ngon(4, 5.0);
        far.polygon[0] = [30.0, 10.0];
        let a = record("r1", vec![ngon(6, 5.0), far, ngon(3, 5.0)]);
        let v = validate_record(&a, None, None).unwrap();
        let keys: Vec<_> = v.iter().map(|x| (x.kind, x.object_index)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        assert_eq!(keys[0], (ViolationKind::MinVertices, Some(1)));
    }

    #[test]
    fn circularity_of_disc_like_outline() {
        let w = shape_warnings(&record("r1", vec![ngon(64, 5.0), ngon(4, 5.0)]));
        assert!(w[0].circularity.unwrap() > 0.99);
        assert!((w[1].circularity.unwrap() - PI / 4.0).abs() < 1e-9);
    }
}
