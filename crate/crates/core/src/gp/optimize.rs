//! Type-II maximum likelihood for `(a², σₙ², c)` with Adam in log space.
//!
//! The Tanimoto Gram does not depend on the hyperparameters, so it is
//! eigendecomposed once (`T = Q Λ Qᵀ`). Every subsequent evaluation of the
//! marginal likelihood and its gradient is then O(n):
//! with `d_i = a² λ_i + σₙ²` and `e = Qᵀ(y − c 1)`,
//! `MLL = −½ Σ e_i²/d_i − ½ Σ log d_i − (n/2) log 2π`.

use super::{check_inputs, mean_and_variance, GpError};
use crate::fingerprints::Fingerprint;
use crate::kernel::{self, GpHyperparams};
use crate::linalg::{Matrix, SymmetricEigen};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub max_iterations: usize,
    /// Stop once the gradient norm falls below this.
    pub grad_tolerance: f64,
    /// Noise variance is kept at or above `noise_floor · var(y)`.
    pub noise_floor: f64,
    /// Whether the constant mean is optimized or held at its initial value.
    pub optimize_mean: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            max_iterations: 10_000,
            grad_tolerance: 1e-3,
            noise_floor: 1e-4,
            optimize_mean: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizationReport<T> {
    pub iterations: usize,
    pub initial_mll: T,
    pub final_mll: T,
    pub final_grad_norm: T,
    pub converged: bool,
    /// The optimized point scored below the starting point, so the starting
    /// hyperparameters were returned instead.
    pub reverted_to_initial: bool,
}

/// Marginal likelihood in the eigenbasis of a fixed Tanimoto Gram.
#[derive(Debug, Clone)]
pub struct SpectralObjective<T> {
    eigenvalues: Vec<T>,
    rotated_targets: Vec<T>,
    rotated_ones: Vec<T>,
}

impl<T: Scalar> SpectralObjective<T> {
    pub fn new(gram: &Matrix<T>, y: &[T]) -> Result<Self, GpError> {
        let eig = SymmetricEigen::new(&gram.symmetrized())?;
        let n = y.len();
        let q = &eig.vectors;
        let mut rotated_targets = vec![T::zero(); n];
        let mut rotated_ones = vec![T::zero(); n];
        for j in 0..n {
            let row = q.row(j);
            for i in 0..n {
                rotated_targets[i] = rotated_targets[i] + row[i] * y[j];
                rotated_ones[i] = rotated_ones[i] + row[i];
            }
        }
        // The Gram is positive semidefinite; round-off can leave tiny
        // negative eigenvalues.
        let eigenvalues = eig.values.into_iter().map(|l| l.max(T::zero())).collect();
        Ok(Self {
            eigenvalues,
            rotated_targets,
            rotated_ones,
        })
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &[T] {
        &self.eigenvalues
    }

    /// MLL and its gradient in `(log a², log σₙ², c)`.
    pub fn evaluate(&self, h: &GpHyperparams<T>) -> (T, [T; 3]) {
        let half = T::c(0.5);
        let mut quad = T::zero();
        let mut logdet = T::zero();
        let mut g = [T::zero(); 3];
        for i in 0..self.eigenvalues.len() {
            let scaled = h.amplitude_sq * self.eigenvalues[i];
            let d = scaled + h.noise_sq;
            let e = self.rotated_targets[i] - h.mean_const * self.rotated_ones[i];
            let e_over_d = e / d;
            quad = quad + e * e_over_d;
            logdet = logdet + d.ln();
            let w = e_over_d * e_over_d - d.recip();
            g[0] = g[0] + w * scaled;
            g[1] = g[1] + w;
            g[2] = g[2] + e_over_d * self.rotated_ones[i];
        }
        let n = T::from_usize_lossy(self.eigenvalues.len());
        let mll = -half * quad - half * logdet - half * n * T::c(std::f64::consts::TAU).ln();
        g[0] = half * g[0];
        g[1] = half * g[1] * h.noise_sq;
        (mll, g)
    }
}

pub fn optimize_hyperparams<T: Scalar>(
    fps: &[Fingerprint],
    y: &[T],
    init: GpHyperparams<T>,
    config: &OptimizerConfig,
) -> Result<(GpHyperparams<T>, OptimizationReport<T>), GpError> {
    check_inputs(fps.len(), y, &init)?;
    let gram = kernel::tanimoto_gram(fps)?;
    optimize_hyperparams_with_gram(&gram, y, init, config)
}

/// Maximizes the marginal likelihood from `init`. The noise variance never
/// drops below `config.noise_floor · var(y)`, including in the returned
/// starting point when the optimizer fails to improve on it.
pub fn optimize_hyperparams_with_gram<T: Scalar>(
    gram: &Matrix<T>,
    y: &[T],
    init: GpHyperparams<T>,
    config: &OptimizerConfig,
) -> Result<(GpHyperparams<T>, OptimizationReport<T>), GpError> {
    check_inputs(gram.rows(), y, &init)?;
    let (_, var) = mean_and_variance(y);
    if !(var > T::zero()) {
        return Err(GpError::DegenerateTargets);
    }
    let floor = T::c(config.noise_floor) * var;
    let clamp = |h: GpHyperparams<T>| GpHyperparams::new(h.amplitude_sq, h.noise_sq.max(floor), h.mean_const);
    let init = clamp(init);
    let objective = SpectralObjective::new(gram, y)?;

    let lr = T::c(config.learning_rate);
    let (b1, b2, eps) = (T::c(config.beta1), T::c(config.beta2), T::c(config.epsilon));
    let mut theta = [init.amplitude_sq.ln(), init.noise_sq.ln(), init.mean_const];
    let log_floor = floor.ln();
    let mut m = [T::zero(); 3];
    let mut v = [T::zero(); 3];
    let mut b1_pow = T::one();
    let mut b2_pow = T::one();
    let to_hyper = |t: &[T; 3]| {
        let noise = if t[1] <= log_floor { floor } else { t[1].exp() };
        clamp(GpHyperparams::new(t[0].exp(), noise, t[2]))
    };

    let masked = |mut g: [T; 3]| {
        if !config.optimize_mean {
            g[2] = T::zero();
        }
        g
    };
    let norm = |g: &[T; 3]| g.iter().map(|&x| x * x).sum::<T>().sqrt();
    let check = |iteration: usize, t: &[T; 3], mll: T, g: &[T; 3]| {
        if mll.is_finite() && g.iter().all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(GpError::NonFiniteObjective {
                iteration,
                log_amplitude_sq: t[0].f64(),
                log_noise_sq: t[1].f64(),
                mean_const: t[2].f64(),
            })
        }
    };

    let (initial_mll, g0) = objective.evaluate(&init);
    check(0, &theta, initial_mll, &g0)?;

    let mut iterations = 0;
    let mut converged = false;
    let (mut mll, mut grad) = (initial_mll, masked(g0));
    while iterations < config.max_iterations {
        if norm(&grad) < T::c(config.grad_tolerance) {
            converged = true;
            break;
        }
        iterations += 1;
        b1_pow = b1_pow * b1;
        b2_pow = b2_pow * b2;
        for k in 0..3 {
            m[k] = b1 * m[k] + (T::one() - b1) * grad[k];
            v[k] = b2 * v[k] + (T::one() - b2) * grad[k] * grad[k];
            let m_hat = m[k] / (T::one() - b1_pow);
            let v_hat = v[k] / (T::one() - b2_pow);
            // Ascent: the objective is maximized.
            theta[k] = theta[k] + lr * m_hat / (v_hat.sqrt() + eps);
        }
        theta[1] = theta[1].max(log_floor);
        let (f, g) = objective.evaluate(&to_hyper(&theta));
        check(iterations, &theta, f, &g)?;
        mll = f;
        grad = masked(g);
    }
    if !converged && norm(&grad) < T::c(config.grad_tolerance) {
        converged = true;
    }

    let found = to_hyper(&theta);
    let reverted = mll < initial_mll;
    let report = OptimizationReport {
        iterations,
        initial_mll,
        final_mll: if reverted { initial_mll } else { mll },
        final_grad_norm: norm(&grad),
        converged,
        reverted_to_initial: reverted,
    };
    Ok((if reverted { init } else { found }, report))
}
