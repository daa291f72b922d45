//! Exact Gaussian-process regression with the Tanimoto covariance.
//!
//! The model only ever sees fingerprints through their Tanimoto matrix, so
//! variable-length exact fingerprints and fixed-length vectors share one code
//! path. Hyperparameters enter as scalars on top of the raw Tanimoto Gram
//! `T`: `K = a² T + σₙ² I`.

mod optimize;

use rayon::prelude::*;
use thiserror::Error;

use crate::fingerprints::{Fingerprint, FingerprintKind};
use crate::kernel::{self, GpHyperparams, KernelError};
use crate::linalg::{dot, Cholesky, LinalgError, Matrix};
use crate::scalar::Scalar;

pub use optimize::{
    optimize_hyperparams, optimize_hyperparams_with_gram, OptimizationReport, OptimizerConfig,
    SpectralObjective,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GpError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("need at least {needed} targets, got {got}")]
    TooFewTargets { needed: usize, got: usize },
    #[error("targets have zero variance")]
    DegenerateTargets,
    #[error("{fps} fingerprints but {targets} targets")]
    LengthMismatch { fps: usize, targets: usize },
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparams(String),
    #[error("non-finite target value at index {0}")]
    NonFiniteTarget(usize),
    #[error("covariance factorization failed after jitter escalation (final jitter {jitter:e})")]
    Factorization { jitter: f64 },
    #[error("non-finite marginal likelihood at iteration {iteration} (log a² = {log_amplitude_sq}, log σₙ² = {log_noise_sq}, c = {mean_const})")]
    NonFiniteObjective {
        iteration: usize,
        log_amplitude_sq: f64,
        log_noise_sq: f64,
        mean_const: f64,
    },
}

/// Relative jitter base: `1e-10 · trace(K) / n`.
pub const JITTER_RELATIVE: f64 = 1e-10;
/// Number of jitter attempts, each 10× the previous.
pub const JITTER_RETRIES: usize = 3;

/// Population mean and variance.
pub fn mean_and_variance<T: Scalar>(y: &[T]) -> (T, T) {
    let n = T::from_usize_lossy(y.len());
    let mean = y.iter().copied().sum::<T>() / n;
    let var = y.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / n;
    (mean, var)
}

/// Fixed-setting hyperparameters: amplitude = population variance of the
/// targets, noise = 0.01 × amplitude, constant mean = target mean.
pub fn default_hyperparams<T: Scalar>(y: &[T]) -> Result<GpHyperparams<T>, GpError> {
    if y.len() < 2 {
        return Err(GpError::TooFewTargets {
            needed: 2,
            got: y.len(),
        });
    }
    check_finite(y)?;
    let (mean, var) = mean_and_variance(y);
    if !(var > T::zero()) {
        return Err(GpError::DegenerateTargets);
    }
    Ok(GpHyperparams::new(var, var * T::c(0.01), mean))
}

fn check_finite<T: Scalar>(y: &[T]) -> Result<(), GpError> {
    match y.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(GpError::NonFiniteTarget(i)),
        None => Ok(()),
    }
}

fn check_inputs<T: Scalar>(n_fps: usize, y: &[T], h: &GpHyperparams<T>) -> Result<(), GpError> {
    if n_fps != y.len() {
        return Err(GpError::LengthMismatch {
            fps: n_fps,
            targets: y.len(),
        });
    }
    if y.is_empty() {
        return Err(GpError::TooFewTargets { needed: 1, got: 0 });
    }
    check_finite(y)?;
    if !h.is_valid() {
        return Err(GpError::InvalidHyperparams(format!("{h:?}")));
    }
    Ok(())
}

/// Cholesky factor of `k`, retrying with diagonal jitter when the plain
/// factorization fails. Returns the factor and the jitter actually added.
pub fn factor_with_jitter<T: Scalar>(k: &Matrix<T>) -> Result<(Cholesky<T>, T), GpError> {
    if let Ok(chol) = Cholesky::factor(k) {
        return Ok((chol, T::zero()));
    }
    let n = T::from_usize_lossy(k.rows().max(1));
    let base = T::c(JITTER_RELATIVE) * (k.trace() / n).abs().max(T::min_positive_value());
    let mut jitter = base;
    for attempt in 0..JITTER_RETRIES {
        if attempt > 0 {
            jitter = jitter * T::c(10.0);
        }
        let mut kj = k.clone();
        kj.add_diagonal(jitter);
        if let Ok(chol) = Cholesky::factor(&kj) {
            return Ok((chol, jitter));
        }
    }
    Err(GpError::Factorization { jitter: jitter.f64() })
}

/// Posterior at a batch of query points.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction<T> {
    pub means: Vec<T>,
    pub variances: Vec<T>,
}

/// A fitted GP. Immutable; safe to share across threads for prediction.
#[derive(Debug, Clone)]
pub struct GpModel<T> {
    train_fps: Vec<Fingerprint>,
    train_targets: Vec<T>,
    hyper: GpHyperparams<T>,
    kind: Option<FingerprintKind>,
    chol: Cholesky<T>,
    weights: Vec<T>,
    jitter: T,
}

impl<T: Scalar> GpModel<T> {
    /// Fits on `fps` and `y` with fixed hyperparameters.
    pub fn fit(fps: Vec<Fingerprint>, y: Vec<T>, h: GpHyperparams<T>) -> Result<Self, GpError> {
        check_inputs(fps.len(), &y, &h)?;
        let gram = kernel::tanimoto_gram(&fps)?;
        Self::fit_with_gram(fps, &gram, y, h)
    }

    /// Fits using a precomputed raw Tanimoto Gram of `fps`.
    pub fn fit_with_gram(
        fps: Vec<Fingerprint>,
        gram: &Matrix<T>,
        y: Vec<T>,
        h: GpHyperparams<T>,
    ) -> Result<Self, GpError> {
        check_inputs(fps.len(), &y, &h)?;
        if gram.rows() != fps.len() || gram.cols() != fps.len() {
            return Err(LinalgError::Dimension {
                expected: fps.len(),
                got: gram.rows(),
            }
            .into());
        }
        let kind = kernel::common_kind(&fps)?;
        let k = kernel::covariance_from_tanimoto(gram, &h, true);
        let (chol, jitter) = factor_with_jitter(&k)?;
        let centered: Vec<T> = y.iter().map(|&v| v - h.mean_const).collect();
        let weights = chol.solve(&centered);
        Ok(Self {
            train_fps: fps,
            train_targets: y,
            hyper: h,
            kind,
            chol,
            weights,
            jitter,
        })
    }

    pub fn hyperparams(&self) -> &GpHyperparams<T> {
        &self.hyper
    }

    pub fn train_fps(&self) -> &[Fingerprint] {
        &self.train_fps
    }

    pub fn train_targets(&self) -> &[T] {
        &self.train_targets
    }

    pub fn len(&self) -> usize {
        self.train_targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.train_targets.is_empty()
    }

    /// `α = K⁻¹ (y − c)`.
    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn cholesky(&self) -> &Cholesky<T> {
        &self.chol
    }

    /// Diagonal jitter added during factorization (zero if none was needed).
    pub fn jitter(&self) -> T {
        self.jitter
    }

    /// Posterior mean `c + k*ᵀ α` and latent variance `a² k(x*, x*) − vᵀv`
    /// with `v = L⁻¹ k*`, clamped at zero. `observation_noise` adds `σₙ²`.
    pub fn predict(&self, query: &[Fingerprint], observation_noise: bool) -> Result<Prediction<T>, GpError> {
        if let (Some(train), Some(q)) = (self.kind, kernel::common_kind(query)?) {
            kernel::check_compatible(train, q)?;
        }
        let h = self.hyper;
        let rows: Vec<(T, T)> = query
            .par_iter()
            .map(|x| {
                let kstar: Vec<T> = self
                    .train_fps
                    .iter()
                    .map(|t| h.amplitude_sq * kernel::tanimoto::<T>(x, t).expect("kinds checked"))
                    .collect();
                let prior = h.amplitude_sq * kernel::tanimoto::<T>(x, x).expect("same fingerprint");
                self.posterior_from_cross(&kstar, prior, observation_noise)
            })
            .collect();
        let (means, variances) = rows.into_iter().unzip();
        Ok(Prediction { means, variances })
    }

    /// Posterior from a precomputed cross-covariance `k*` (already scaled by
    /// `a²`) and prior variance at the query.
    pub fn posterior_from_cross(&self, kstar: &[T], prior_variance: T, observation_noise: bool) -> (T, T) {
        let mean = self.hyper.mean_const + dot(kstar, &self.weights);
        let v = self.chol.solve_lower(kstar);
        let mut var = (prior_variance - dot(&v, &v)).max(T::zero());
        if observation_noise {
            var = var + self.hyper.noise_sq;
        }
        (mean, var)
    }
}

/// `−½ rᵀK⁻¹r − ½ log det K − (n/2) log 2π` with `r = y − c`.
pub fn log_marginal_likelihood<T: Scalar>(
    fps: &[Fingerprint],
    y: &[T],
    h: &GpHyperparams<T>,
) -> Result<T, GpError> {
    check_inputs(fps.len(), y, h)?;
    let gram = kernel::tanimoto_gram(fps)?;
    log_marginal_likelihood_with_gram(&gram, y, h)
}

pub fn log_marginal_likelihood_with_gram<T: Scalar>(
    gram: &Matrix<T>,
    y: &[T],
    h: &GpHyperparams<T>,
) -> Result<T, GpError> {
    check_inputs(gram.rows(), y, h)?;
    let k = kernel::covariance_from_tanimoto(gram, h, true);
    let (chol, _) = factor_with_jitter(&k)?;
    let r: Vec<T> = y.iter().map(|&v| v - h.mean_const).collect();
    let beta = chol.solve_lower(&r);
    let half = T::c(0.5);
    let n = T::from_usize_lossy(y.len());
    let two_pi = T::c(std::f64::consts::TAU);
    Ok(-half * dot(&beta, &beta) - half * chol.log_det() - half * n * two_pi.ln())
}

/// Gradient of the MLL with respect to `(log a², log σₙ², c)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MllGradient<T> {
    pub log_amplitude_sq: T,
    pub log_noise_sq: T,
    pub mean_const: T,
}

impl<T: Scalar> MllGradient<T> {
    pub fn as_array(&self) -> [T; 3] {
        [self.log_amplitude_sq, self.log_noise_sq, self.mean_const]
    }

    pub fn norm(&self) -> T {
        self.as_array().iter().map(|&g| g * g).sum::<T>().sqrt()
    }
}

pub fn mll_gradient<T: Scalar>(
    fps: &[Fingerprint],
    y: &[T],
    h: &GpHyperparams<T>,
) -> Result<MllGradient<T>, GpError> {
    check_inputs(fps.len(), y, h)?;
    let gram = kernel::tanimoto_gram(fps)?;
    mll_gradient_with_gram(&gram, y, h)
}

/// `∂MLL/∂θ = ½ tr((ααᵀ − K⁻¹) ∂K/∂θ)` with `∂K/∂log a² = a² T` and
/// `∂K/∂log σₙ² = σₙ² I`; `∂MLL/∂c = Σ α`.
pub fn mll_gradient_with_gram<T: Scalar>(
    gram: &Matrix<T>,
    y: &[T],
    h: &GpHyperparams<T>,
) -> Result<MllGradient<T>, GpError> {
    check_inputs(gram.rows(), y, h)?;
    let n = y.len();
    let k = kernel::covariance_from_tanimoto(gram, h, true);
    let (chol, _) = factor_with_jitter(&k)?;
    let r: Vec<T> = y.iter().map(|&v| v - h.mean_const).collect();
    let alpha = chol.solve(&r);
    let kinv = chol.inverse();
    let half = T::c(0.5);
    let mut amp = T::zero();
    let mut noise = T::zero();
    for i in 0..n {
        let ki = kinv.row(i);
        let ti = gram.row(i);
        let mut row = T::zero();
        for j in 0..n {
            row = row + (alpha[i] * alpha[j] - ki[j]) * ti[j];
        }
        amp = amp + row;
        noise = noise + alpha[i] * alpha[i] - ki[i];
    }
    Ok(MllGradient {
        log_amplitude_sq: half * h.amplitude_sq * amp,
        log_noise_sq: half * h.noise_sq * noise,
        mean_const: alpha.iter().copied().sum(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fingerprints::SparseFingerprint;

    fn sp(pairs: &[(u64, u32)]) -> Fingerprint {
        Fingerprint::Sparse(SparseFingerprint::from_counts(pairs.iter().copied()))
    }

    #[test]
    fn default_hyperparams_examples() {
        let h = default_hyperparams(&[0.0, 2.0]).unwrap();
        assert_eq!((h.amplitude_sq, h.noise_sq, h.mean_const), (1.0, 0.01, 1.0));
        let h = default_hyperparams(&[-1.0, 0.0, 1.0]).unwrap();
        assert_eq!(h.mean_const, 0.0);
        assert_eq!(default_hyperparams(&[3.0, 3.0, 3.0]), Err(GpError::DegenerateTargets));
        assert_eq!(
            default_hyperparams(&[3.0]),
            Err(GpError::TooFewTargets { needed: 2, got: 1 })
        );
        assert_eq!(
            default_hyperparams(&[1.0, f64::NAN]),
            Err(GpError::NonFiniteTarget(1))
        );
    }

    #[test]
    fn single_point_fit() {
        let h = GpHyperparams::new(1.0, 0.0, 0.25);
        let m = GpModel::fit(vec![sp(&[(1, 1)])], vec![2.0], h).unwrap();
        assert_eq!(m.weights(), &[1.75]);
        assert_eq!(m.cholesky().get(0, 0), 1.0);
        assert_eq!(m.jitter(), 0.0);
    }

    #[test]
    fn duplicate_molecule_with_noise_fits() {
        let a = sp(&[(1, 2), (5, 1)]);
        let h = GpHyperparams::new(1.0, 0.01, 0.0);
        let m = GpModel::fit(vec![a.clone(), a], vec![1.0, 1.2], h).unwrap();
        assert_eq!(m.jitter(), 0.0);
    }

    #[test]
    fn singular_gram_gets_jitter() {
        let a = sp(&[(1, 2), (5, 1)]);
        let h = GpHyperparams::new(1.0, 0.0, 0.0);
        let m = GpModel::fit(vec![a.clone(), a], vec![1.0, 1.0], h).unwrap();
        assert!(m.jitter() > 0.0);
        assert!(m.jitter() <= 1e-8);
    }

    #[test]
    fn factorization_failure_reports_final_jitter() {
        // Strongly indefinite: no small jitter can repair it.
        let k = Matrix::from_row_major(2, 2, vec![1.0, 3.0, 3.0, 1.0]).unwrap();
        match factor_with_jitter(&k) {
            Err(GpError::Factorization { jitter }) => {
                assert!((jitter - 1e-8).abs() < 1e-20, "{jitter}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_similarity_query_recovers_prior() {
        let h = GpHyperparams::new(2.0f64, 0.1, 0.5);
        let m = GpModel::fit(vec![sp(&[(1, 1)]), sp(&[(2, 1)])], vec![1.0, -1.0], h).unwrap();
        let p = m.predict(&[sp(&[(99, 3)])], false).unwrap();
        assert_eq!(p.means, vec![0.5]);
        assert_eq!(p.variances, vec![2.0]);
        let p = m.predict(&[sp(&[(99, 3)])], true).unwrap();
        assert!((p.variances[0] - 2.1).abs() < 1e-15);
    }

    #[test]
    fn interpolates_at_tiny_noise() {
        let xs = vec![sp(&[(1, 1), (2, 1)]), sp(&[(2, 1), (3, 2)]), sp(&[(4, 1)])];
        let y = vec![0.3f64, -1.0, 2.0];
        let h = GpHyperparams::new(1.0, 1e-10, 0.0);
        let m = GpModel::fit(xs.clone(), y.clone(), h).unwrap();
        let p = m.predict(&xs, false).unwrap();
        for (mu, t) in p.means.iter().zip(&y) {
            assert!((mu - t).abs() < 1e-6);
        }
        assert!(p.variances.iter().all(|&v| v <= 1e-6));
    }

    #[test]
    fn predict_rejects_encoding_mismatch() {
        let h = GpHyperparams::new(1.0, 0.1, 0.0);
        let m = GpModel::fit(vec![sp(&[(1, 1)]), sp(&[(2, 1)])], vec![1.0, 0.0], h).unwrap();
        let dense = Fingerprint::Dense(crate::fingerprints::fold(&SparseFingerprint::default(), 8));
        assert!(matches!(
            m.predict(&[dense], false),
            Err(GpError::Kernel(KernelError::EncodingMismatch(..)))
        ));
    }

    #[test]
    fn mll_single_point() {
        let h = GpHyperparams::new(1.0, 0.0, 0.7);
        let mll = log_marginal_likelihood(&[sp(&[(1, 1)])], &[0.7], &h).unwrap();
        assert!((mll + 0.5 * std::f64::consts::TAU.ln()).abs() < 1e-15);
    }

    #[test]
    fn mll_standard_normal_for_identity_covariance() {
        let xs: Vec<Fingerprint> = (0..5).map(|i| sp(&[(i, 1)])).collect();
        let h = GpHyperparams::new(0.75, 0.25, 1.0);
        let mll = log_marginal_likelihood(&xs, &[1.0; 5], &h).unwrap();
        assert!((mll + 2.5 * std::f64::consts::TAU.ln()).abs() < 1e-14);
    }

    #[test]
    fn input_validation() {
        let h = GpHyperparams::new(1.0, 0.1, 0.0);
        assert!(matches!(
            GpModel::fit(vec![sp(&[(1, 1)])], vec![1.0, 2.0], h),
            Err(GpError::LengthMismatch { fps: 1, targets: 2 })
        ));
        assert!(matches!(
            GpModel::fit(vec![], Vec::<f64>::new(), h),
            Err(GpError::TooFewTargets { .. })
        ));
        let bad = GpHyperparams::new(-1.0, 0.1, 0.0);
        assert!(matches!(
            GpModel::fit(vec![sp(&[(1, 1)])], vec![1.0], bad),
            Err(GpError::InvalidHyperparams(_))
        ));
    }

    #[test]
    fn mean_gradient_vanishes_at_gls_mean() {
        let xs = vec![sp(&[(1, 1), (2, 1)]), sp(&[(2, 1), (3, 2)]), sp(&[(4, 1)]), sp(&[(1, 3)])];
        let y = [0.3, -1.0, 2.0, 0.9];
        let gram = kernel::tanimoto_gram::<f64>(&xs).unwrap();
        let mut h = GpHyperparams::new(1.3, 0.2, 0.0);
        let k = kernel::covariance_from_tanimoto(&gram, &h, true);
        let chol = Cholesky::factor(&k).unwrap();
        let kinv_y = chol.solve(&y);
        let kinv_1 = chol.solve(&[1.0; 4]);
        h.mean_const = kinv_y.iter().sum::<f64>() / kinv_1.iter().sum::<f64>();
        let g = mll_gradient_with_gram(&gram, &y, &h).unwrap();
        assert!(g.mean_const.abs() < 1e-8, "{}", g.mean_const);
    }

    #[test]
    fn noise_gradient_negative_when_noise_dominates() {
        // Targets lie exactly in the span of a well-conditioned Gram; a huge
        // noise variance should be pushed down.
        let xs = vec![sp(&[(1, 1)]), sp(&[(2, 1)]), sp(&[(1, 1), (2, 1)])];
        let gram = kernel::tanimoto_gram::<f64>(&xs).unwrap();
        let weights = [0.4, -0.2, 0.1];
        let y = gram.mul_vec(&weights);
        let h = GpHyperparams::new(1.0, 100.0, 0.0);
        let g = mll_gradient_with_gram(&gram, &y, &h).unwrap();
        assert!(g.log_noise_sq < 0.0, "{}", g.log_noise_sq);
    }

    #[test]
    fn single_precision_fit_predict() {
        let xs = vec![sp(&[(1, 1), (2, 1)]), sp(&[(2, 1), (3, 2)]), sp(&[(4, 1)])];
        let h = GpHyperparams::new(1.0f32, 0.01, 0.0);
        let m = GpModel::fit(xs.clone(), vec![0.3f32, -1.0, 2.0], h).unwrap();
        let p = m.predict(&xs, false).unwrap();
        assert!((p.means[2] - 2.0).abs() < 0.05);
    }
}
