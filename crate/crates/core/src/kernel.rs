//! Tanimoto similarity on count fingerprints and covariance assembly
//! `k(x, x') = a² T(x, x') + σₙ² δ(x, x')`.
//!
//! Both Tanimoto sums are accumulated in exact integer arithmetic and divided
//! once in floating point. For sparse pairs the max-sum follows from the
//! identity `Σ max = Σ a + Σ b − Σ min`, with `Σ min` taken over a sorted
//! merge of the two identifier lists.

use rayon::prelude::*;
use thiserror::Error;

use crate::fingerprints::{DenseFingerprint, Fingerprint, FingerprintKind, SparseFingerprint};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KernelError {
    #[error("dense fingerprint dimensions differ ({0} vs {1})")]
    DimMismatch(usize, usize),
    #[error("fingerprint encodings differ ({0} vs {1})")]
    EncodingMismatch(FingerprintKind, FingerprintKind),
    #[error("same-set covariance needs equally sized inputs ({0} vs {1})")]
    SameSetSize(usize, usize),
}

/// The two integer sums of a Tanimoto evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TanimotoParts {
    pub min_sum: u64,
    pub max_sum: u64,
}

impl TanimotoParts {
    /// `min_sum / max_sum`, or 0 when both fingerprints are empty.
    pub fn value<T: Scalar>(self) -> T {
        if self.max_sum == 0 {
            return T::zero();
        }
        T::from_u64(self.min_sum).unwrap() / T::from_u64(self.max_sum).unwrap()
    }
}

pub fn sparse_parts(a: &SparseFingerprint, b: &SparseFingerprint) -> TanimotoParts {
    let (x, y) = (a.entries(), b.entries());
    let (mut i, mut j) = (0, 0);
    let mut min_sum = 0u64;
    while i < x.len() && j < y.len() {
        match x[i].0.cmp(&y[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                min_sum += u64::from(x[i].1.min(y[j].1));
                i += 1;
                j += 1;
            }
        }
    }
    TanimotoParts {
        min_sum,
        max_sum: a.total() + b.total() - min_sum,
    }
}

pub fn dense_parts(a: &DenseFingerprint, b: &DenseFingerprint) -> Result<TanimotoParts, KernelError> {
    if a.dim() != b.dim() {
        return Err(KernelError::DimMismatch(a.dim(), b.dim()));
    }
    let min_sum: u64 = a
        .counts()
        .iter()
        .zip(b.counts())
        .map(|(&p, &q)| u64::from(p.min(q)))
        .sum();
    Ok(TanimotoParts {
        min_sum,
        max_sum: a.total() + b.total() - min_sum,
    })
}

pub fn tanimoto_parts(a: &Fingerprint, b: &Fingerprint) -> Result<TanimotoParts, KernelError> {
    match (a, b) {
        (Fingerprint::Sparse(x), Fingerprint::Sparse(y)) => Ok(sparse_parts(x, y)),
        (Fingerprint::Dense(x), Fingerprint::Dense(y)) => dense_parts(x, y),
        _ => Err(KernelError::EncodingMismatch(a.kind(), b.kind())),
    }
}

/// Count Tanimoto similarity `Σ min / Σ max`, in `[0, 1]`.
pub fn tanimoto<T: Scalar>(a: &Fingerprint, b: &Fingerprint) -> Result<T, KernelError> {
    tanimoto_parts(a, b).map(TanimotoParts::value)
}

/// Fails unless every fingerprint shares one encoding; returns it.
pub fn common_kind(fps: &[Fingerprint]) -> Result<Option<FingerprintKind>, KernelError> {
    let Some(first) = fps.first() else {
        return Ok(None);
    };
    let kind = first.kind();
    for fp in &fps[1..] {
        check_compatible(kind, fp.kind())?;
    }
    Ok(Some(kind))
}

pub(crate) fn check_compatible(a: FingerprintKind, b: FingerprintKind) -> Result<(), KernelError> {
    match (a, b) {
        (FingerprintKind::Sparse, FingerprintKind::Sparse) => Ok(()),
        (FingerprintKind::Dense(d), FingerprintKind::Dense(e)) if d == e => Ok(()),
        (FingerprintKind::Dense(d), FingerprintKind::Dense(e)) => Err(KernelError::DimMismatch(d, e)),
        _ => Err(KernelError::EncodingMismatch(a, b)),
    }
}

/// Raw Tanimoto matrix between two fingerprint sets. Rows are evaluated in
/// parallel; every entry is computed independently, so the result does not
/// depend on the thread count.
pub fn tanimoto_matrix<T: Scalar>(xs: &[Fingerprint], ys: &[Fingerprint]) -> Result<Matrix<T>, KernelError> {
    let kx = common_kind(xs)?;
    let ky = common_kind(ys)?;
    if let (Some(a), Some(b)) = (kx, ky) {
        check_compatible(a, b)?;
    }
    let rows: Vec<Vec<T>> = xs
        .par_iter()
        .map(|x| ys.iter().map(|y| tanimoto(x, y).expect("kinds checked")).collect())
        .collect();
    Ok(Matrix::from_row_major(xs.len(), ys.len(), rows.into_iter().flatten().collect())
        .expect("row lengths match"))
}

/// Symmetric Tanimoto Gram matrix of one set; each off-diagonal pair is
/// evaluated once and mirrored.
pub fn tanimoto_gram<T: Scalar>(xs: &[Fingerprint]) -> Result<Matrix<T>, KernelError> {
    common_kind(xs)?;
    let n = xs.len();
    let upper: Vec<Vec<T>> = (0..n)
        .into_par_iter()
        .map(|i| (i..n).map(|j| tanimoto(&xs[i], &xs[j]).expect("kinds checked")).collect())
        .collect();
    let mut m = Matrix::zeros(n, n);
    for (i, row) in upper.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            m[(i, i + off)] = v;
            m[(i + off, i)] = v;
        }
    }
    Ok(m)
}

/// Hyperparameters of the Tanimoto covariance plus the constant mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpHyperparams<T> {
    /// Signal amplitude `a²`.
    pub amplitude_sq: T,
    /// Observation noise variance `σₙ²`.
    pub noise_sq: T,
    /// Constant mean `c`.
    pub mean_const: T,
}

impl<T: Scalar> GpHyperparams<T> {
    pub fn new(amplitude_sq: T, noise_sq: T, mean_const: T) -> Self {
        Self {
            amplitude_sq,
            noise_sq,
            mean_const,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.amplitude_sq > T::zero()
            && self.amplitude_sq.is_finite()
            && self.noise_sq >= T::zero()
            && self.noise_sq.is_finite()
            && self.mean_const.is_finite()
    }
}

/// Scales a raw Tanimoto matrix: `a² T`, plus `σₙ²` on the diagonal when
/// `same_set` (the Kronecker delta applies only to a set against itself).
pub fn covariance_from_tanimoto<T: Scalar>(raw: &Matrix<T>, h: &GpHyperparams<T>, same_set: bool) -> Matrix<T> {
    let mut k = raw.scaled(h.amplitude_sq);
    if same_set {
        k.add_diagonal(h.noise_sq);
    }
    k
}

/// Covariance matrix between `xs` and `ys`.
pub fn covariance<T: Scalar>(
    xs: &[Fingerprint],
    ys: &[Fingerprint],
    h: &GpHyperparams<T>,
    same_set: bool,
) -> Result<Matrix<T>, KernelError> {
    if same_set && xs.len() != ys.len() {
        return Err(KernelError::SameSetSize(xs.len(), ys.len()));
    }
    let raw = if same_set && std::ptr::eq(xs, ys) {
        tanimoto_gram(xs)?
    } else {
        tanimoto_matrix(xs, ys)?
    };
    Ok(covariance_from_tanimoto(&raw, h, same_set))
}
