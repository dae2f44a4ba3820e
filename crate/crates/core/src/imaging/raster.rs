use super::{BinaryMask, ImagingError, Polygon, ProbabilityMap, Result, MASK_OFF, MASK_ON};
use crate::Scalar;

/// Fills every pixel whose centre lies inside `poly` under the even-odd rule.
/// Parts of the polygon outside the `width`x`height` frame are clipped.
pub fn rasterize_polygon(poly: &Polygon, width: usize, height: usize) -> Result<BinaryMask> {
    let verts = poly.vertices();
    if verts.len() < 3 {
        return Err(ImagingError::DegeneratePolygon(verts.len()));
    }
    let mut data = vec![MASK_OFF; width.checked_mul(height).ok_or(ImagingError::InvalidDimensions(width, height))?];
    let mut crossings = Vec::with_capacity(verts.len());
    for row in 0..height {
        let py = row as f64 + 0.5;
        crossings.clear();
        for (i, &(xi, yi)) in verts.iter().enumerate() {
            let (xj, yj) = verts[(i + 1) % verts.len()];
            // half-open in y so shared vertices are counted once
            if (yi > py) != (yj > py) {
                crossings.push(xi + (py - yi) * (xj - xi) / (yj - yi));
            }
        }
        if crossings.is_empty() {
            continue;
        }
        crossings.sort_by(|a, b| a.total_cmp(b));
        let mut passed = 0;
        for col in 0..width {
            let px = col as f64 + 0.5;
            while passed < crossings.len() && crossings[passed] <= px {
                passed += 1;
            }
            // inside iff an odd number of crossings lie strictly to the right
            if (crossings.len() - passed) % 2 == 1 {
                data[row * width + col] = MASK_ON;
            }
        }
    }
    BinaryMask::new(width, height, data)
}

/// Marks pixels with probability `>= threshold` as positive.
pub fn binarize<F: Scalar>(prob: &ProbabilityMap<F>, threshold: F) -> Result<BinaryMask> {
    if !(threshold > F::zero() && threshold < F::one()) {
        return Err(ImagingError::ValueOutOfRange(format!("threshold {threshold} outside (0, 1)")));
    }
    let data = prob
        .data()
        .iter()
        .map(|&v| if v >= threshold { MASK_ON } else { MASK_OFF })
        .collect();
    BinaryMask::new(prob.width(), prob.height(), data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independent per-pixel crossing-number test.
    fn center_inside(verts: &[(f64, f64)], px: f64, py: f64) -> bool {
        let mut inside = false;
        let mut j = verts.len() - 1;
        for i in 0..verts.len() {
            let (xi, yi) = verts[i];
            let (xj, yj) = verts[j];
            if ((yi > py) != (yj > py)) && (px < (xj - xi) * (py - yi) / (yj - yi) + xi) {
                inside = !inside;
            }
            j = i;
        }
        inside
    }

    fn oracle(verts: &[(f64, f64)], w: usize, h: usize) -> Vec<bool> {
        (0..h)
            .flat_map(|y| (0..w).map(move |x| (x, y)))
            .map(|(x, y)| center_inside(verts, x as f64 + 0.5, y as f64 + 0.5))
            .collect()
    }

    #[test]
    fn square_covers_four_pixels() {
        let sq = Polygon::new(vec![(0.0, 0.0), (0.0, 2.0), (2.0, 2.0), (2.0, 0.0)]).unwrap();
        let m = rasterize_polygon(&sq, 4, 4).unwrap();
        let on: Vec<(usize, usize)> =
            (0..4).flat_map(|y| (0..4).map(move |x| (x, y))).filter(|&(x, y)| m.is_on(x, y)).collect();
        assert_eq!(on, vec![(0, 0), (1, 0), (0, 1), (1, 1)]);
        let expect = oracle(sq.vertices(), 4, 4);
        assert_eq!(m.count_on(), expect.iter().filter(|&&b| b).count());
    }

    #[test]
    fn triangle_matches_center_test() {
        let tri = Polygon::new(vec![(0.0, 0.0), (4.0, 0.0), (0.0, 4.0)]).unwrap();
        let m = rasterize_polygon(&tri, 4, 4).unwrap();
        let expect = oracle(tri.vertices(), 4, 4);
        assert_eq!(m.count_on(), expect.iter().filter(|&&b| b).count());
        // centres (x+0.5, y+0.5) inside iff x + y < 3: 3 + 2 + 1 pixels
        assert_eq!(m.count_on(), 6);
    }

    #[test]
    fn binarize_rules() {
        let half = ProbabilityMap::new(2, 2, vec![0.5f64; 4]).unwrap();
        assert_eq!(binarize(&half, 0.5).unwrap().count_on(), 4);
        let zeros = ProbabilityMap::new(2, 1, vec![0.0f32; 2]).unwrap();
        assert!(binarize(&zeros, 0.5).unwrap().is_empty());
        let split = ProbabilityMap::new(2, 1, vec![0.3f64, 0.7]).unwrap();
        assert_eq!(binarize(&split, 0.5).unwrap().data(), &[0, 255]);
        assert!(matches!(binarize(&split, 1.0), Err(ImagingError::ValueOutOfRange(_))));
        assert!(matches!(binarize(&split, 0.0), Err(ImagingError::ValueOutOfRange(_))));
    }

    fn polygon_strategy() -> impl Strategy<Value = Vec<(f64, f64)>> {
        proptest::collection::vec((-4.0f64..36.0, -4.0f64..36.0), 3..=12)
    }

    proptest! {
        #[test]
        fn rasterizer_agrees_with_oracle(verts in polygon_strategy()) {
            let poly = match Polygon::new(verts) {
                Ok(p) => p,
                Err(_) => return Ok(()),
            };
            let m = rasterize_polygon(&poly, 32, 32).unwrap();
            let expect = oracle(poly.vertices(), 32, 32);
            for (idx, &inside) in expect.iter().enumerate() {
                prop_assert_eq!(m.is_on_idx(idx), inside, "pixel {}", idx);
            }
        }

        #[test]
        fn binarize_count_monotone(
            data in proptest::collection::vec(0.0f64..=1.0, 1..50), t1 in 0.01f64..0.99, t2 in 0.01f64..0.99
        ) {
            let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            let map = ProbabilityMap::new(data.len(), 1, data).unwrap();
            let a = binarize(&map, lo).unwrap();
            let b = binarize(&map, hi).unwrap();
            prop_assert!(b.count_on() <= a.count_on());
            for i in 0..a.data().len() {
                prop_assert!(!b.is_on_idx(i) || a.is_on_idx(i));
            }
        }
    }
}
