//! Seeded, class-stratified dataset splitting with an exclusion set.

use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::manifest::{DatasetManifest, Label, ManifestRow};

/// Tag given to eligible rows left over when splits are sized by count.
pub const UNASSIGNED: &str = "unassigned";

#[derive(Debug, Error, PartialEq)]
pub enum SplitError {
    #[error("invalid split request: {0}")]
    InvalidRequest(String),
    #[error("splits need {requested} images of class {class} but the pool has {available}")]
    InsufficientPool { class: String, requested: usize, available: usize },
    #[error("split {split}: class {class} share {share:.4} deviates from pool share {pool_share:.4} by more than {tolerance}")]
    InfeasibleBalance { split: String, class: String, share: f64, pool_share: f64, tolerance: f64 },
}

/// Size of one split: a fraction of the pool, an absolute image count
/// (apportioned to the pool's class ratio) or explicit per-class counts.
#[derive(Clone, Debug, PartialEq)]
pub enum SplitSize {
    Fraction(f64),
    Count(usize),
    PerClass(BTreeMap<Label, usize>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SplitRequest {
    pub splits: Vec<(String, SplitSize)>,
    /// Largest allowed gap between a class's share in any split and its
    /// share in the pool.
    pub balance_tolerance: f64,
    pub seed: u64,
}

impl SplitRequest {
    /// Fractions named `train`/`test` (two) or `train`/`val`/`test` (three);
    /// other lengths get `split<k>` names.
    pub fn from_fractions(fractions: &[f64], balance_tolerance: f64, seed: u64) -> Self {
        let names: Vec<String> = match fractions.len() {
            1 => vec!["train".into()],
            2 => vec!["train".into(), "test".into()],
            3 => vec!["train".into(), "val".into(), "test".into()],
            n => (0..n).map(|k| format!("split{k}")).collect(),
        };
        Self {
            splits: names.into_iter().zip(fractions.iter().map(|&f| SplitSize::Fraction(f))).collect(),
            balance_tolerance,
            seed,
        }
    }
}

/// Distributes `total` over `weights` by largest remainder (ties: earlier first).
fn apportion(total: usize, weights: &[f64]) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    let exact: Vec<f64> = weights.iter().map(|w| total as f64 * w / sum).collect();
    let mut out: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
    let missing = total - out.iter().sum::<usize>();
    for &k in order.iter().take(missing) {
        out[k] += 1;
    }
    out
}

/// Assigns split tags to every eligible row. Excluded rows are dropped from
/// the result; rows not needed by count-sized splits are tagged
/// [`UNASSIGNED`]. Input row order does not affect the assignment.
pub fn split_dataset(
    manifest: &DatasetManifest,
    request: &SplitRequest,
    exclusion: &HashSet<String>,
) -> Result<DatasetManifest, SplitError> {
    let SplitRequest { splits, balance_tolerance, seed } = request;
    if splits.is_empty() {
        return Err(SplitError::InvalidRequest("no splits requested".into()));
    }
    let fractions: Vec<f64> = splits.iter().filter_map(|(_, s)| if let SplitSize::Fraction(f) = s { Some(*f) } else { None }).collect();
    let by_fraction = fractions.len() == splits.len();
    if !by_fraction && !fractions.is_empty() {
        return Err(SplitError::InvalidRequest("cannot mix fractions and counts".into()));
    }
    if by_fraction
        && (fractions.iter().any(|f| f.is_nan() || *f < 0.0) || (fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9)
    {
        return Err(SplitError::InvalidRequest(format!("fractions {fractions:?} must be non-negative and sum to 1")));
    }
    let names: HashSet<&str> = splits.iter().map(|(n, _)| n.as_str()).collect();
    if names.len() != splits.len() || names.contains(UNASSIGNED) {
        return Err(SplitError::InvalidRequest("split names must be distinct and not \"unassigned\"".into()));
    }

    let mut pool: Vec<&ManifestRow> = manifest.rows.iter().filter(|r| !exclusion.contains(&r.image_id)).collect();
    pool.sort_by(|a, b| a.image_id.cmp(&b.image_id));
    let mut classes: BTreeMap<Label, Vec<&ManifestRow>> = BTreeMap::new();
    for r in &pool {
        classes.entry(r.label).or_default().push(r);
    }
    let n = pool.len();

    // per split, per class quota
    let quotas: Vec<Vec<usize>> = if by_fraction {
        let per_class: Vec<Vec<usize>> = classes.values().map(|rows| apportion(rows.len(), &fractions)).collect();
        (0..splits.len()).map(|s| per_class.iter().map(|q| q[s]).collect()).collect()
    } else {
        let class_sizes: Vec<f64> = classes.values().map(|r| r.len() as f64).collect();
        let mut requested = 0;
        let mut quotas = Vec::with_capacity(splits.len());
        for (_, size) in splits {
            match size {
                SplitSize::Count(c) => {
                    requested += c;
                    quotas.push(if n == 0 { Vec::new() } else { apportion(*c, &class_sizes) });
                }
                SplitSize::PerClass(per) => {
                    if let Some((label, &c)) = per.iter().find(|(l, c)| **c > 0 && !classes.contains_key(l)) {
                        return Err(SplitError::InsufficientPool { class: label.to_string(), requested: c, available: 0 });
                    }
                    requested += per.values().sum::<usize>();
                    quotas.push(classes.keys().map(|l| per.get(l).copied().unwrap_or(0)).collect());
                }
                SplitSize::Fraction(_) => unreachable!("mixed sizes rejected above"),
            }
        }
        if requested > n {
            return Err(SplitError::InsufficientPool { class: "all".into(), requested, available: n });
        }
        for (k, (label, rows)) in classes.iter().enumerate() {
            let need: usize = quotas.iter().map(|q| q[k]).sum();
            if need > rows.len() {
                return Err(SplitError::InsufficientPool { class: label.to_string(), requested: need, available: rows.len() });
            }
        }
        quotas
    };

    for (s, (name, _)) in splits.iter().enumerate() {
        let total: usize = quotas[s].iter().sum();
        if total == 0 {
            continue;
        }
        for (k, (label, rows)) in classes.iter().enumerate() {
            let share = quotas[s][k] as f64 / total as f64;
            let pool_share = rows.len() as f64 / n as f64;
            if (share - pool_share).abs() > *balance_tolerance + 1e-12 {
                return Err(SplitError::InfeasibleBalance {
                    split: name.clone(),
                    class: label.to_string(),
                    share,
                    pool_share,
                    tolerance: *balance_tolerance,
                });
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(*seed);
    let mut out = Vec::with_capacity(n);
    for (k, rows) in classes.values().enumerate() {
        let mut shuffled = rows.clone();
        shuffled.shuffle(&mut rng);
        let mut it = shuffled.into_iter();
        for (s, (name, _)) in splits.iter().enumerate() {
            for r in it.by_ref().take(quotas[s][k]) {
                out.push(ManifestRow { split: Some(name.clone()), ..(*r).clone() });
            }
        }
        out.extend(it.map(|r| ManifestRow { split: Some(UNASSIGNED.into()), ..r.clone() }));
    }
    out.sort_by(|a, b| a.image_id.cmp(&b.image_id));
    Ok(DatasetManifest { rows: out })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest(normal: usize, abnormal: usize) -> DatasetManifest {
        let rows = (0..normal + abnormal)
            .map(|i| ManifestRow {
                image_id: format!("img{i:04}"),
                path: format!("img{i:04}.png").into(),
                label: if i < normal { Label::Normal } else { Label::Abnormal },
                split: None,
            })
            .collect();
        DatasetManifest::new(rows).unwrap()
    }

    fn count(m: &DatasetManifest, split: &str, label: Label) -> usize {
        m.rows.iter().filter(|r| r.split.as_deref() == Some(split) && r.label == label).count()
    }

    #[test]
    fn apportion_sums() {
        assert_eq!(apportion(10, &[0.7, 0.3]), vec![7, 3]);
        assert_eq!(apportion(5, &[1.0, 1.0, 1.0]), vec![2, 2, 1]);
        assert_eq!(apportion(0, &[0.5, 0.5]), vec![0, 0]);
    }

    #[test]
    fn single_fraction_takes_all_and_ignores_row_order() {
        let m = manifest(6, 4);
        let req = SplitRequest::from_fractions(&[1.0], 0.1, 3);
        let a = split_dataset(&m, &req, &HashSet::new()).unwrap();
        assert!(a.rows.iter().all(|r| r.split.as_deref() == Some("train")));
        let mut reversed = m.clone();
        reversed.rows.reverse();
        assert_eq!(split_dataset(&reversed, &req, &HashSet::new()).unwrap(), a);
    }

    #[test]
    fn stratified_and_seeded() {
        let m = manifest(50, 50);
        let req = SplitRequest::from_fractions(&[0.7, 0.3], 0.05, 17);
        let a = split_dataset(&m, &req, &HashSet::new()).unwrap();
        assert_eq!(count(&a, "train", Label::Normal), 35);
        assert_eq!(count(&a, "test", Label::Abnormal), 15);
        assert_eq!(a, split_dataset(&m, &req, &HashSet::new()).unwrap());
        let other = split_dataset(&m, &SplitRequest { seed: 18, ..req }, &HashSet::new()).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn exclusion_and_pool_limits() {
        let m = manifest(10, 10);
        let excluded: HashSet<String> = ["img0000", "img0015"].iter().map(|s| s.to_string()).collect();
        let req = SplitRequest::from_fractions(&[0.5, 0.5], 0.2, 1);
        let out = split_dataset(&m, &req, &excluded).unwrap();
        assert_eq!(out.rows.len(), 18);
        assert!(out.rows.iter().all(|r| !excluded.contains(&r.image_id)));

        let too_big = SplitRequest {
            splits: vec![("train".into(), SplitSize::Count(10)), ("test".into(), SplitSize::Count(15))],
            balance_tolerance: 0.1,
            seed: 1,
        };
        assert!(matches!(split_dataset(&m, &too_big, &HashSet::new()), Err(SplitError::InsufficientPool { .. })));
    }

    #[test]
    fn counts_leave_rest_unassigned() {
        let m = manifest(10, 10);
        let req = SplitRequest {
            splits: vec![("train".into(), SplitSize::Count(8)), ("test".into(), SplitSize::Count(4))],
            balance_tolerance: 0.1,
            seed: 9,
        };
        let out = split_dataset(&m, &req, &HashSet::new()).unwrap();
        assert_eq!(count(&out, "train", Label::Normal) + count(&out, "train", Label::Abnormal), 8);
        assert_eq!(out.rows.iter().filter(|r| r.split.as_deref() == Some(UNASSIGNED)).count(), 8);
    }

    #[test]
    fn imbalance_detected() {
        // a 1:9 pool split into three singletons cannot keep the minority share
        let m = manifest(1, 9);
        let req = SplitRequest {
            splits: (0..3).map(|k| (format!("s{k}"), SplitSize::Count(1))).collect(),
            balance_tolerance: 0.05,
            seed: 0,
        };
        assert!(matches!(split_dataset(&m, &req, &HashSet::new()), Err(SplitError::InfeasibleBalance { .. })));
    }

    #[test]
    fn bad_fractions() {
        let m = manifest(2, 2);
        let req = SplitRequest::from_fractions(&[0.5, 0.4], 0.1, 0);
        assert!(matches!(split_dataset(&m, &req, &HashSet::new()), Err(SplitError::InvalidRequest(_))));
    }
}
