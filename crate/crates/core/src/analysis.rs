//! Hash-collision statistics for folded fingerprints and regression metrics.
//!
//! A pairwise collision is an unordered pair of distinct identifiers, taken
//! from the union of two fingerprints' supports, that fold to the same slot.

use std::collections::HashMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::fingerprints::{fold, SparseFingerprint};
use crate::kernel::{dense_parts, sparse_parts};
use crate::rng::ExperimentRng;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least two values, got {0}")]
    TooShort(usize),
    #[error("true values are constant; R² is undefined")]
    ConstantTarget,
    #[error("no molecule pairs")]
    NoPairs,
    #[error("fold dimension must be positive")]
    ZeroDim,
    #[error("need at least two molecules to sample pairs, got {0}")]
    TooFewMolecules(usize),
}

/// Colliding identifier pairs in the union of `a` and `b` at fold `dim`.
pub fn pairwise_collisions(a: &SparseFingerprint, b: &SparseFingerprint, dim: usize) -> u64 {
    assert!(dim > 0, "fold dimension must be positive");
    let mut slots: HashMap<u64, u64> = HashMap::new();
    let (ea, eb) = (a.entries(), b.entries());
    let (mut i, mut j) = (0, 0);
    // Merge the sorted supports so shared identifiers count once.
    while i < ea.len() || j < eb.len() {
        let id = match (ea.get(i), eb.get(j)) {
            (Some(&(x, _)), Some(&(y, _))) if x == y => {
                i += 1;
                j += 1;
                x
            }
            (Some(&(x, _)), Some(&(y, _))) if x < y => {
                i += 1;
                x
            }
            (Some(&(x, _)), None) => {
                i += 1;
                x
            }
            (_, Some(&(y, _))) => {
                j += 1;
                y
            }
            (None, None) => unreachable!(),
        };
        *slots.entry(id % dim as u64).or_insert(0) += 1;
    }
    slots.values().map(|&c| c * (c - 1) / 2).sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionReport {
    pub dim: usize,
    pub mean_pairwise_collisions: f64,
    pub mean_exact_tanimoto: f64,
    pub mean_folded_tanimoto: f64,
    pub mean_overestimation: f64,
    pub pair_count: usize,
}

/// One pair at one fold dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairRecord {
    pub pair: usize,
    pub dim: usize,
    pub collisions: u64,
    pub exact_tanimoto: f64,
    pub folded_tanimoto: f64,
}

/// Per-pair statistics for every pair and dim, pair-major.
pub fn pair_records(
    pairs: &[(&SparseFingerprint, &SparseFingerprint)],
    dims: &[usize],
) -> Result<Vec<PairRecord>, AnalysisError> {
    if dims.contains(&0) {
        return Err(AnalysisError::ZeroDim);
    }
    let nested: Vec<Vec<PairRecord>> = pairs
        .par_iter()
        .enumerate()
        .map(|(p, &(a, b))| {
            let exact = sparse_parts(a, b).value::<f64>();
            dims.iter()
                .map(|&dim| PairRecord {
                    pair: p,
                    dim,
                    collisions: pairwise_collisions(a, b, dim),
                    exact_tanimoto: exact,
                    folded_tanimoto: dense_parts(&fold(a, dim), &fold(b, dim))
                        .expect("same dim")
                        .value::<f64>(),
                })
                .collect()
        })
        .collect();
    Ok(nested.into_iter().flatten().collect())
}

/// Averages collisions, exact and folded Tanimoto, and their difference over
/// all pairs, one report per entry of `dims`.
pub fn collision_study(
    pairs: &[(&SparseFingerprint, &SparseFingerprint)],
    dims: &[usize],
) -> Result<Vec<CollisionReport>, AnalysisError> {
    if pairs.is_empty() {
        return Err(AnalysisError::NoPairs);
    }
    Ok(summarize(&pair_records(pairs, dims)?, dims, pairs.len()))
}

/// Folds per-pair records (as produced by [`pair_records`]) into reports.
pub fn summarize(records: &[PairRecord], dims: &[usize], pair_count: usize) -> Vec<CollisionReport> {
    let n = pair_count as f64;
    dims.iter()
        .enumerate()
        .map(|(k, &dim)| {
            let rows = records.iter().skip(k).step_by(dims.len());
            let (mut coll, mut exact, mut folded, mut over) = (0.0, 0.0, 0.0, 0.0);
            for r in rows {
                coll += r.collisions as f64;
                exact += r.exact_tanimoto;
                folded += r.folded_tanimoto;
                over += r.folded_tanimoto - r.exact_tanimoto;
            }
            CollisionReport {
                dim,
                mean_pairwise_collisions: coll / n,
                mean_exact_tanimoto: exact / n,
                mean_folded_tanimoto: folded / n,
                mean_overestimation: over / n,
                pair_count,
            }
        })
        .collect()
}

/// `count` ordered pairs `(i, j)` of distinct molecule indices in `0..n`,
/// each drawn uniformly and independently.
pub fn sample_pairs(n: usize, count: usize, rng: &mut ExperimentRng) -> Result<Vec<(usize, usize)>, AnalysisError> {
    if n < 2 {
        return Err(AnalysisError::TooFewMolecules(n));
    }
    Ok((0..count)
        .map(|_| {
            let i = rng.below(n as u64) as usize;
            let mut j = rng.below(n as u64 - 1) as usize;
            if j >= i {
                j += 1;
            }
            (i, j)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionMetrics {
    pub r2: f64,
    pub mse: f64,
    pub mae: f64,
}

/// R² (about the mean of `y_true`, population convention), MSE and MAE.
pub fn regression_metrics(y_true: &[f64], y_pred: &[f64]) -> Result<RegressionMetrics, AnalysisError> {
    if y_true.len() != y_pred.len() {
        return Err(AnalysisError::LengthMismatch(y_true.len(), y_pred.len()));
    }
    let n = y_true.len();
    if n < 2 {
        return Err(AnalysisError::TooShort(n));
    }
    let nf = n as f64;
    let mean = y_true.iter().sum::<f64>() / nf;
    let ss_tot: f64 = y_true.iter().map(|&t| (t - mean) * (t - mean)).sum();
    if ss_tot == 0.0 {
        return Err(AnalysisError::ConstantTarget);
    }
    let (mut ss_res, mut abs) = (0.0, 0.0);
    for (&t, &p) in y_true.iter().zip(y_pred) {
        ss_res += (t - p) * (t - p);
        abs += (t - p).abs();
    }
    Ok(RegressionMetrics {
        r2: 1.0 - ss_res / ss_tot,
        mse: ss_res / nf,
        mae: abs / nf,
    })
}

/// Mean and sample standard deviation (zero for a single value).
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(ids: &[u64]) -> SparseFingerprint {
        SparseFingerprint::from_counts(ids.iter().map(|&i| (i, 1)))
    }

    #[test]
    fn collision_examples() {
        assert_eq!(pairwise_collisions(&ids(&[5, 70]), &ids(&[37]), 32), 1);
        assert_eq!(pairwise_collisions(&ids(&[9]), &ids(&[9]), 32), 0);
        assert_eq!(pairwise_collisions(&ids(&[0, 32]), &ids(&[64]), 32), 3);
        assert_eq!(pairwise_collisions(&ids(&[0, 32]), &ids(&[0, 32, 64]), 32), 3);
        assert_eq!(pairwise_collisions(&ids(&[]), &ids(&[]), 8), 0);
    }

    #[test]
    fn identical_pairs_report() {
        let a = ids(&[1, 2, 3, 1000]);
        let reports = collision_study(&[(&a, &a), (&a, &a)], &[4, 512]).unwrap();
        for r in reports {
            assert_eq!(r.mean_exact_tanimoto, 1.0);
            assert_eq!(r.mean_folded_tanimoto, 1.0);
            assert_eq!(r.mean_overestimation, 0.0);
            assert_eq!(r.pair_count, 2);
        }
    }

    #[test]
    fn report_fields_are_consistent() {
        let fps: Vec<SparseFingerprint> = (0..20u64)
            .map(|i| SparseFingerprint::from_counts((0..8).map(|k| (i * 7919 + k * 104_729 + (k * i) % 13, 1 + (k % 3) as u32))))
            .collect();
        let mut rng = ExperimentRng::new(11);
        let pairs: Vec<_> = sample_pairs(fps.len(), 50, &mut rng)
            .unwrap()
            .into_iter()
            .map(|(i, j)| (&fps[i], &fps[j]))
            .collect();
        let reports = collision_study(&pairs, &[16, 32, 64]).unwrap();
        assert_eq!(reports[0].mean_exact_tanimoto, reports[2].mean_exact_tanimoto);
        for r in &reports {
            assert!((r.mean_overestimation - (r.mean_folded_tanimoto - r.mean_exact_tanimoto)).abs() < 1e-12);
            assert!(r.mean_overestimation >= 0.0);
        }
        assert!(reports[0].mean_pairwise_collisions >= reports[1].mean_pairwise_collisions);
        assert!(reports[1].mean_pairwise_collisions >= reports[2].mean_pairwise_collisions);
    }

    #[test]
    fn study_rejects_bad_input() {
        let a = ids(&[1]);
        assert_eq!(collision_study(&[], &[8]), Err(AnalysisError::NoPairs));
        assert_eq!(collision_study(&[(&a, &a)], &[0]), Err(AnalysisError::ZeroDim));
    }

    #[test]
    fn pairs_are_distinct_and_reproducible() {
        let a = sample_pairs(5, 200, &mut ExperimentRng::new(3)).unwrap();
        assert_eq!(a, sample_pairs(5, 200, &mut ExperimentRng::new(3)).unwrap());
        assert!(a.iter().all(|&(i, j)| i != j && i < 5 && j < 5));
        assert!(sample_pairs(1, 1, &mut ExperimentRng::new(3)).is_err());
    }

    #[test]
    fn metrics_examples() {
        let m = regression_metrics(&[0.0, 1.0, 2.0], &[0.0, 1.0, 1.0]).unwrap();
        assert!((m.mse - 1.0 / 3.0).abs() < 1e-15);
        assert!((m.mae - 1.0 / 3.0).abs() < 1e-15);
        assert!((m.r2 - 0.5).abs() < 1e-15);
        let y = [1.5, -2.0, 0.25, 4.0];
        let m = regression_metrics(&y, &y).unwrap();
        assert_eq!((m.r2, m.mse, m.mae), (1.0, 0.0, 0.0));
        let mean = y.iter().sum::<f64>() / 4.0;
        assert!(regression_metrics(&y, &[mean; 4]).unwrap().r2.abs() < 1e-15);
    }

    #[test]
    fn metrics_errors() {
        assert_eq!(regression_metrics(&[1.0, 2.0], &[1.0]), Err(AnalysisError::LengthMismatch(2, 1)));
        assert_eq!(regression_metrics(&[1.0], &[1.0]), Err(AnalysisError::TooShort(1)));
        assert_eq!(regression_metrics(&[3.0, 3.0], &[1.0, 2.0]), Err(AnalysisError::ConstantTarget));
    }

    #[test]
    fn r2_identity_with_population_variance() {
        let y = [0.3, 1.7, -0.4, 2.2, 0.9];
        let p = [0.1, 1.5, 0.0, 2.0, 1.4];
        let m = regression_metrics(&y, &p).unwrap();
        let mean = y.iter().sum::<f64>() / 5.0;
        let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 5.0;
        assert!((m.r2 - (1.0 - m.mse / var)).abs() < 1e-12);
    }

    #[test]
    fn mean_sd_basic() {
        assert_eq!(mean_sd(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_sd(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 2f64.sqrt()).abs() < 1e-15);
    }
}
