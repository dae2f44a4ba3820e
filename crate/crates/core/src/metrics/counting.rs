use serde::{Deserialize, Serialize};

use super::{overlap_metrics, MetricsError, Result};
use crate::imaging::BinaryMask;
use crate::Scalar;

/// Ground-truth and predicted object counts for one sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountPair {
    pub ground_truth: usize,
    pub predicted: usize,
}

impl CountPair {
    pub fn new(ground_truth: usize, predicted: usize) -> Self {
        Self { ground_truth, predicted }
    }
}

/// Mean difference in object counting: `sum(C - C_hat) / sum(C)`.
/// Negative when objects are over-detected.
pub fn mdoc<F: Scalar>(pairs: &[CountPair]) -> Result<F> {
    let total: usize = pairs.iter().map(|p| p.ground_truth).sum();
    if total == 0 {
        return Err(MetricsError::ZeroGroundTruth);
    }
    let diff: i128 = pairs.iter().map(|p| p.ground_truth as i128 - p.predicted as i128).sum();
    Ok(F::of(diff as f64) / F::of_usize(total))
}

/// Ground-truth / predicted masks of one object, in full-image coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct ObjectMaskPair {
    pub ground_truth: BinaryMask,
    pub predicted: BinaryMask,
}

impl ObjectMaskPair {
    pub fn new(ground_truth: BinaryMask, predicted: BinaryMask) -> Result<Self> {
        if ground_truth.dims() != predicted.dims() {
            return Err(MetricsError::DimensionMismatch(ground_truth.dims(), predicted.dims()));
        }
        Ok(Self { ground_truth, predicted })
    }

    pub fn dice<F: Scalar>(&self) -> F {
        overlap_metrics::<F>(&self.ground_truth, &self.predicted).map(|s| s.dice).unwrap_or_else(|_| F::zero())
    }
}

/// Greedy maximum-Dice pairing within one sample. The highest-Dice pair is
/// taken first (ties: lower ground-truth index, then lower prediction
/// index); only pairs with positive Dice are matched. Every unmatched object
/// on either side is paired with an empty mask, contributing Dice 0.
pub fn pair_objects(ground_truth: &[BinaryMask], predicted: &[BinaryMask]) -> Result<Vec<ObjectMaskPair>> {
    let mut edges: Vec<(f64, usize, usize)> = Vec::new();
    for (i, g) in ground_truth.iter().enumerate() {
        for (j, p) in predicted.iter().enumerate() {
            let d = overlap_metrics::<f64>(g, p)?.dice;
            if d > 0.0 {
                edges.push((d, i, j));
            }
        }
    }
    edges.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut gt_used = vec![false; ground_truth.len()];
    let mut pred_used = vec![false; predicted.len()];
    let mut pairs = Vec::new();
    for (_, i, j) in edges {
        if gt_used[i] || pred_used[j] {
            continue;
        }
        gt_used[i] = true;
        pred_used[j] = true;
        pairs.push(ObjectMaskPair::new(ground_truth[i].clone(), predicted[j].clone())?);
    }
    for (g, _) in ground_truth.iter().zip(&gt_used).filter(|(_, used)| !**used) {
        let (w, h) = g.dims();
        pairs.push(ObjectMaskPair::new(g.clone(), BinaryMask::empty(w, h).expect("non-zero dims"))?);
    }
    for (p, _) in predicted.iter().zip(&pred_used).filter(|(_, used)| !**used) {
        let (w, h) = p.dims();
        pairs.push(ObjectMaskPair::new(BinaryMask::empty(w, h).expect("non-zero dims"), p.clone())?);
    }
    Ok(pairs)
}

/// Running Dice total; merges associatively.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DiceSum<F: Scalar> {
    pub sum: F,
    pub count: usize,
}

impl<F: Scalar> DiceSum<F> {
    pub fn add(&mut self, dice: F) {
        self.sum = self.sum + dice;
        self.count += 1;
    }

    pub fn merge(self, other: Self) -> Self {
        Self { sum: self.sum + other.sum, count: self.count + other.count }
    }

    pub fn mean(&self) -> Result<F> {
        if self.count == 0 {
            return Err(MetricsError::NoObjects);
        }
        Ok(self.sum / F::of_usize(self.count))
    }
}

/// Dice averaged over every paired object of every sample.
pub fn avg_dice<F: Scalar>(samples: &[Vec<ObjectMaskPair>]) -> Result<F> {
    samples
        .iter()
        .flatten()
        .fold(DiceSum::default(), |mut acc, pair| {
            acc.add(pair.dice::<F>());
            acc
        })
        .mean()
}
