use super::{fmm_distance, DistanceField, InpaintConfig, InpaintError, Result};
use crate::imaging::{crop_roi, merge_roi, BinaryMask, BoundingBox, GrayImage};
use crate::{quantize, Scalar};

/// Floor on the directional weight so the total weight never vanishes.
const DIR_EPS: f64 = 1e-6;

/// Gradient of the valued pixels at `idx`: central differences where both
/// taps are valued, one-sided where only one is, 0 otherwise.
fn valued_gradient<F: Scalar>(values: &[F], valued: &[bool], w: usize, h: usize, idx: usize) -> (F, F) {
    let (x, y) = (idx % w, idx / w);
    let axis = |lo: Option<usize>, hi: Option<usize>| {
        let lo = lo.filter(|&i| valued[i]);
        let hi = hi.filter(|&i| valued[i]);
        match (lo, hi) {
            (Some(a), Some(b)) => (values[b] - values[a]) * F::of(0.5),
            (Some(a), None) => values[idx] - values[a],
            (None, Some(b)) => values[b] - values[idx],
            (None, None) => F::zero(),
        }
    };
    let gx = axis((x > 0).then(|| idx - 1), (x + 1 < w).then(|| idx + 1));
    let gy = axis((y > 0).then(|| idx - w), (y + 1 < h).then(|| idx + w));
    (gx, gy)
}

/// Unit gradient of the arrival-time field at (x, y), zero where flat.
fn front_normal<F: Scalar>(field: &DistanceField<F>, x: usize, y: usize) -> (F, F) {
    let (w, h) = (field.width(), field.height());
    let at = |xx: usize, yy: usize| {
        let t = field.get(xx, yy);
        t.is_finite().then_some(t)
    };
    let centre = field.get(x, y);
    let diff = |lo: Option<F>, hi: Option<F>| match (lo, hi) {
        (Some(a), Some(b)) => (b - a) * F::of(0.5),
        (Some(a), None) => centre - a,
        (None, Some(b)) => b - centre,
        (None, None) => F::zero(),
    };
    let gx = diff(if x > 0 { at(x - 1, y) } else { None }, if x + 1 < w { at(x + 1, y) } else { None });
    let gy = diff(if y > 0 { at(x, y - 1) } else { None }, if y + 1 < h { at(x, y + 1) } else { None });
    let norm = (gx * gx + gy * gy).sqrt();
    if norm > F::zero() {
        (gx / norm, gy / norm)
    } else {
        (F::zero(), F::zero())
    }
}

/// Fills the positive pixels of `mask` in fast-marching order. Each pixel is
/// the normalised weighted sum, over already-valued pixels within
/// `cfg.radius`, of the neighbour value extrapolated along its gradient.
/// Weights combine direction to the front normal, inverse squared distance
/// and arrival-time similarity. Unmasked pixels are copied through.
pub fn telea_inpaint<F: Scalar>(img: &GrayImage, mask: &BinaryMask, cfg: &InpaintConfig) -> Result<GrayImage> {
    cfg.validate()?;
    if img.dims() != mask.dims() {
        return Err(InpaintError::DimensionMismatch { image: img.dims(), mask: mask.dims() });
    }
    if mask.is_empty() {
        return Ok(img.clone());
    }
    if mask.count_on() == mask.data().len() {
        return Err(InpaintError::NoKnownNeighbors);
    }
    let field: DistanceField<F> = fmm_distance(mask)?;
    let (w, h) = img.dims();
    let mut values: Vec<F> = img.data().iter().map(|&v| F::of(f64::from(v))).collect();
    let mut valued: Vec<bool> = (0..w * h).map(|i| !mask.is_on_idx(i)).collect();

    let r = cfg.radius as isize;
    let r2 = (cfg.radius * cfg.radius) as isize;
    let eps = F::of(DIR_EPS);
    let mut samples: Vec<(F, F)> = Vec::with_capacity(((2 * r + 1) * (2 * r + 1)) as usize);

    for &idx in field.freeze_order() {
        let (px, py) = ((idx % w) as isize, (idx / w) as isize);
        let (nx, ny) = front_normal(&field, px as usize, py as usize);
        let tp = field.distances()[idx];
        samples.clear();
        let (mut lo, mut hi) = (F::infinity(), F::neg_infinity());
        for qy in (py - r).max(0)..=(py + r).min(h as isize - 1) {
            for qx in (px - r).max(0)..=(px + r).min(w as isize - 1) {
                let (dx, dy) = (px - qx, py - qy);
                let d2 = dx * dx + dy * dy;
                if d2 == 0 || d2 > r2 {
                    continue;
                }
                let qidx = qy as usize * w + qx as usize;
                if !valued[qidx] {
                    continue;
                }
                let (fdx, fdy) = (F::of(dx as f64), F::of(dy as f64));
                let len2 = F::of(d2 as f64);
                let len = len2.sqrt();
                let dir = ((fdx * nx + fdy * ny) / len).max(eps);
                let dst = F::one() / len2;
                let lev = F::one() / (F::one() + (tp - field.distances()[qidx]).abs());
                let (gx, gy) = valued_gradient(&values, &valued, w, h, qidx);
                let v = values[qidx];
                lo = lo.min(v);
                hi = hi.max(v);
                samples.push((dir * dst * lev, v + gx * fdx + gy * fdy));
            }
        }
        if samples.is_empty() {
            // unreachable for a frozen pixel: it was reached from a valued 4-neighbour
            return Err(InpaintError::NoKnownNeighbors);
        }
        let (num, den) = samples.iter().fold((F::zero(), F::zero()), |(num, den), &(wt, s)| {
            (num + wt * s.max(lo).min(hi), den + wt)
        });
        values[idx] = num / den;
        valued[idx] = true;
    }

    let data = img
        .data()
        .iter()
        .enumerate()
        .map(|(i, &orig)| if mask.is_on_idx(i) { quantize(values[i]) } else { orig })
        .collect();
    Ok(GrayImage::new(w, h, data)?)
}

/// Inpaints each `(box, mask)` object in order. Each box, grown by the inpaint
/// radius and clamped to the frame, is inpainted in isolation and then merged
/// back. Masks are in box coordinates.
pub fn inpaint_objects<F: Scalar>(
    img: &GrayImage,
    objects: &[(BoundingBox, BinaryMask)],
    cfg: &InpaintConfig,
) -> Result<GrayImage> {
    cfg.validate()?;
    let (w, h) = img.dims();
    let mut out = img.clone();
    for (bbox, mask) in objects {
        if mask.dims() != (bbox.w, bbox.h) {
            return Err(InpaintError::DimensionMismatch { image: (bbox.w, bbox.h), mask: mask.dims() });
        }
        if !bbox.fits_within(w, h) {
            return Err(crate::imaging::ImagingError::OutOfBounds { bbox: *bbox, width: w, height: h }.into());
        }
        if mask.is_empty() {
            continue;
        }
        let grown = bbox.expanded(cfg.radius, w, h);
        let roi = crop_roi(&out, &grown)?;
        let roi_mask = mask.placed(grown.w, grown.h, bbox.x - grown.x, bbox.y - grown.y)?;
        let filled = telea_inpaint::<F>(&roi, &roi_mask, cfg)?;
        out = merge_roi(&out, &filled, &grown)?;
    }
    Ok(out)
}
