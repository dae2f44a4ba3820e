use serde::Serialize;

use super::{MetricsError, Result};
use crate::imaging::BinaryMask;
use crate::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OverlapScores<F: Scalar> {
    pub dice: F,
    pub iou: F,
    pub pixel_accuracy: F,
}

/// Dice / IoU / pixel accuracy of two masks. Two empty masks agree perfectly
/// (Dice = IoU = 1).
pub fn overlap_metrics<F: Scalar>(a: &BinaryMask, b: &BinaryMask) -> Result<OverlapScores<F>> {
    if a.dims() != b.dims() {
        return Err(MetricsError::DimensionMismatch(a.dims(), b.dims()));
    }
    let (mut inter, mut on_a, mut on_b, mut agree) = (0usize, 0usize, 0usize, 0usize);
    for (&pa, &pb) in a.data().iter().zip(b.data()) {
        let (x, y) = (pa != 0, pb != 0);
        inter += usize::from(x && y);
        on_a += usize::from(x);
        on_b += usize::from(y);
        agree += usize::from(x == y);
    }
    let union = on_a + on_b - inter;
    let (dice, iou) = if union == 0 {
        (F::one(), F::one())
    } else {
        (
            F::of_usize(2 * inter) / F::of_usize(on_a + on_b),
            F::of_usize(inter) / F::of_usize(union),
        )
    };
    Ok(OverlapScores { dice, iou, pixel_accuracy: F::of_usize(agree) / F::of_usize(a.data().len()) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask(on: &[usize]) -> BinaryMask {
        BinaryMask::from_fn(4, 4, |x, y| on.contains(&(y * 4 + x))).unwrap()
    }

    #[test]
    fn identical() {
        let m = mask(&[1, 2, 5]);
        let s: OverlapScores<f64> = overlap_metrics(&m, &m).unwrap();
        assert_eq!((s.dice, s.iou, s.pixel_accuracy), (1.0, 1.0, 1.0));
    }

    #[test]
    fn disjoint_quarters() {
        let s: OverlapScores<f64> = overlap_metrics(&mask(&[0, 1, 2, 3]), &mask(&[4, 5, 6, 7])).unwrap();
        assert_eq!((s.dice, s.iou, s.pixel_accuracy), (0.0, 0.0, 0.5));
    }

    #[test]
    fn half_overlap() {
        let s: OverlapScores<f64> = overlap_metrics(&mask(&[0, 1, 2, 3]), &mask(&[2, 3, 4, 5])).unwrap();
        assert_eq!(s.dice, 0.5);
        assert!((s.iou - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn both_empty_and_mismatch() {
        let s: OverlapScores<f32> = overlap_metrics(&mask(&[]), &mask(&[])).unwrap();
        assert_eq!((s.dice, s.iou, s.pixel_accuracy), (1.0, 1.0, 1.0));
        let other = BinaryMask::empty(2, 2).unwrap();
        assert!(overlap_metrics::<f64>(&mask(&[]), &other).is_err());
    }
}
