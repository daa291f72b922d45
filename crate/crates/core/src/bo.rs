//! Pool-based Bayesian optimization with expected improvement.
//!
//! The candidate pool is fixed and every objective value is known up front;
//! acquiring a candidate reveals its value. The surrogate is a Tanimoto GP
//! with fixed hyperparameters whose posterior over the whole pool is updated
//! in O(n · pool) per observation by extending the Cholesky factor instead
//! of refitting.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::data::{self, DataError};
use crate::fingerprints::Fingerprint;
use crate::gp::{self, GpError, OptimizerConfig};
use crate::kernel::{self, GpHyperparams, KernelError};
use crate::linalg::{dot, Cholesky, LinalgError, Matrix};
use crate::rng::ExperimentRng;
use crate::scalar::Scalar;

const PARALLEL_CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Direction {
    #[default]
    Minimize,
    Maximize,
}

impl Direction {
    /// Amount by which `value` beats `best` (negative if it is worse).
    pub fn improvement<T: Scalar>(self, value: T, best: T) -> T {
        match self {
            Direction::Minimize => best - value,
            Direction::Maximize => value - best,
        }
    }

    pub fn is_better<T: Scalar>(self, a: T, b: T) -> bool {
        self.improvement(a, b) > T::zero()
    }

    /// Ordering that puts worse values first.
    pub fn worst_first<T: Scalar>(self, a: T, b: T) -> Ordering {
        let ord = a.partial_cmp(&b).unwrap_or(Ordering::Equal);
        match self {
            Direction::Minimize => ord.reverse(),
            Direction::Maximize => ord,
        }
    }

    /// Best and worst of `values`, or `None` if empty.
    pub fn extremes<T: Scalar>(self, values: &[T]) -> Option<(T, T)> {
        let (&first, rest) = values.split_first()?;
        Some(rest.iter().fold((first, first), |(best, worst), &v| {
            (
                if self.is_better(v, best) { v } else { best },
                if self.is_better(worst, v) { v } else { worst },
            )
        }))
    }
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "min" | "minimize" => Ok(Direction::Minimize),
            "max" | "maximize" => Ok(Direction::Maximize),
            other => Err(format!("unknown direction {other:?} (expected min or max)")),
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Minimize => "min",
            Direction::Maximize => "max",
        })
    }
}

#[derive(Debug, Error)]
pub enum BoError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Gp(#[from] GpError),
    #[error("negative predictive variance {0}")]
    NegativeVariance(f64),
    #[error("non-finite expected improvement for candidate {index} at iteration {iteration}")]
    NonFiniteEi { iteration: usize, index: usize },
    #[error("posterior update failed when observing candidate {index}: {source}")]
    Update { index: usize, source: LinalgError },
    #[error("pool values are all equal; best-observed AUC is undefined")]
    DegenerateRange,
    #[error("candidate pool exhausted")]
    PoolExhausted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoConfig {
    pub init_size: usize,
    pub budget: usize,
    /// Initial observations are drawn from this worst fraction of the pool.
    pub init_percentile: f64,
    pub direction: Direction,
    /// Re-optimize hyperparameters on the observed data after every
    /// acquisition. Expensive; off by default.
    pub refit_hyperparams: bool,
    pub seed: u64,
}

impl Default for BoConfig {
    fn default() -> Self {
        Self {
            init_size: 1000,
            budget: 1000,
            init_percentile: 0.8,
            direction: Direction::Minimize,
            refit_hyperparams: false,
            seed: 0,
        }
    }
}

fn standard_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn standard_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Closed-form expected improvement over `best`. With `σ = √variance` and
/// `δ` the improvement of `mean` over `best`, `EI = δ Φ(δ/σ) + σ φ(δ/σ)`;
/// at `σ = 0` it is `max(δ, 0)`.
pub fn expected_improvement<T: Scalar>(mean: T, variance: T, best: T, direction: Direction) -> Result<T, BoError> {
    let var = variance.f64();
    if var.is_nan() || var < 0.0 {
        return Err(BoError::NegativeVariance(var));
    }
    let delta = direction.improvement(mean, best).f64();
    if var == 0.0 {
        return Ok(T::c(delta.max(0.0)));
    }
    let sigma = var.sqrt();
    let z = delta / sigma;
    let ei = delta * standard_normal_cdf(z) + sigma * standard_normal_pdf(z);
    Ok(T::c(ei.max(0.0)))
}

/// Normalized best-so-far curve averaged over iterations: each value maps to
/// `(v − pool_worst) / (pool_best − pool_worst)`, so 1 is the pool optimum.
pub fn auc_best_observed<T: Scalar>(best_curve: &[T], pool_best: T, pool_worst: T) -> Result<T, BoError> {
    let range = pool_best - pool_worst;
    if range == T::zero() || !range.is_finite() {
        return Err(BoError::DegenerateRange);
    }
    if best_curve.is_empty() {
        return Err(BoError::InvalidConfig("empty best-so-far curve".into()));
    }
    let total: T = best_curve
        .iter()
        .map(|&v| ((v - pool_worst) / range).max(T::zero()).min(T::one()))
        .sum();
    Ok(total / T::from_usize_lossy(best_curve.len()))
}

/// GP posterior over a fixed candidate pool, updated one observation at a
/// time.
///
/// Keeps `V = L⁻¹ K(obs, pool)` and `β = L⁻¹ (y − c)`. Observing a new point
/// appends one row to `L`, `V` and `β`, after which
/// `mean_j += V[new, j] β_new` and `var_j −= V[new, j]²`.
#[derive(Debug, Clone)]
pub struct IncrementalPosterior<T> {
    hyper: GpHyperparams<T>,
    chol: Cholesky<T>,
    observed: Vec<usize>,
    beta: Vec<T>,
    v_rows: Vec<Vec<T>>,
    means: Vec<T>,
    variances: Vec<T>,
}

impl<T: Scalar> IncrementalPosterior<T> {
    /// `self_similarity[j]` is the raw Tanimoto of candidate `j` with itself
    /// (1, or 0 for an empty fingerprint).
    pub fn new(self_similarity: &[T], hyper: GpHyperparams<T>) -> Self {
        Self {
            hyper,
            chol: Cholesky::empty(),
            observed: Vec::new(),
            beta: Vec::new(),
            v_rows: Vec::new(),
            means: vec![hyper.mean_const; self_similarity.len()],
            variances: self_similarity.iter().map(|&s| hyper.amplitude_sq * s).collect(),
        }
    }

    pub fn pool_size(&self) -> usize {
        self.means.len()
    }

    pub fn observed(&self) -> &[usize] {
        &self.observed
    }

    pub fn hyperparams(&self) -> &GpHyperparams<T> {
        &self.hyper
    }

    pub fn mean(&self, j: usize) -> T {
        self.means[j]
    }

    /// Latent posterior variance, clamped at zero.
    pub fn variance(&self, j: usize) -> T {
        self.variances[j].max(T::zero())
    }

    pub fn means(&self) -> &[T] {
        &self.means
    }

    /// Conditions on candidate `index` having value `value`. `tanimoto_row`
    /// holds the raw Tanimoto of that candidate against the whole pool.
    pub fn observe(&mut self, index: usize, value: T, tanimoto_row: &[T]) -> Result<(), LinalgError> {
        let pool = self.pool_size();
        if tanimoto_row.len() != pool {
            return Err(LinalgError::Dimension {
                expected: pool,
                got: tanimoto_row.len(),
            });
        }
        let h = self.hyper;
        let k_obs: Vec<T> = self.observed.iter().map(|&o| h.amplitude_sq * tanimoto_row[o]).collect();
        self.chol
            .append(&k_obs, h.amplitude_sq * tanimoto_row[index] + h.noise_sq)?;
        let m = self.observed.len();
        let l = self.chol.row(m);
        let d = l[m];
        let beta_new = (value - h.mean_const - dot(&l[..m], &self.beta)) / d;

        let mut v_new: Vec<T> = tanimoto_row.iter().map(|&t| h.amplitude_sq * t).collect();
        let rows = &self.v_rows;
        v_new
            .par_chunks_mut(PARALLEL_CHUNK)
            .enumerate()
            .for_each(|(chunk, out)| {
                let start = chunk * PARALLEL_CHUNK;
                let len = out.len();
                for (i, row) in rows.iter().enumerate() {
                    let li = l[i];
                    for (o, &r) in out.iter_mut().zip(&row[start..start + len]) {
                        *o = *o - li * r;
                    }
                }
                for o in out.iter_mut() {
                    *o = *o / d;
                }
            });
        for ((mean, var), &v) in self.means.iter_mut().zip(self.variances.iter_mut()).zip(&v_new) {
            *mean = *mean + v * beta_new;
            *var = *var - v * v;
        }
        self.observed.push(index);
        self.beta.push(beta_new);
        self.v_rows.push(v_new);
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Acquisition<T> {
    /// 1-based iteration number.
    pub iteration: usize,
    pub pool_index: usize,
    pub value: T,
    pub expected_improvement: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoTrajectory<T> {
    /// Pool indices of the initial observations, in sampled order.
    pub initial: Vec<usize>,
    pub acquired: Vec<Acquisition<T>>,
    /// Best observed value after each iteration.
    pub best_curve: Vec<T>,
    pub auc: T,
    /// Hyperparameters in effect at the end of the run.
    pub hyperparams: GpHyperparams<T>,
    pub pool_best: T,
    pub pool_worst: T,
}

fn tanimoto_row<T: Scalar>(pool: &[Fingerprint], index: usize) -> Vec<T> {
    let x = &pool[index];
    pool.par_iter()
        .map(|y| kernel::tanimoto::<T>(x, y).expect("pool encodings checked"))
        .collect()
}

fn validate<T: Scalar>(pool: &[Fingerprint], values: &[T], cfg: &BoConfig) -> Result<(), BoError> {
    if pool.len() != values.len() {
        return Err(BoError::InvalidConfig(format!(
            "{} fingerprints but {} values",
            pool.len(),
            values.len()
        )));
    }
    if cfg.init_size == 0 || cfg.budget == 0 {
        return Err(BoError::InvalidConfig("init_size and budget must be positive".into()));
    }
    if cfg.init_size + cfg.budget > pool.len() {
        return Err(BoError::InvalidConfig(format!(
            "init_size {} + budget {} exceeds pool size {}",
            cfg.init_size,
            cfg.budget,
            pool.len()
        )));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(DataError::NonFiniteValue(i).into());
    }
    kernel::common_kind(pool)?;
    Ok(())
}

/// Pool indices of the initial observations [`run_bo`] uses for `cfg`:
/// `cfg.init_size` draws, seeded by `cfg.seed`, from the worst
/// `cfg.init_percentile` of `values`.
pub fn initial_design<T: Scalar>(values: &[T], cfg: &BoConfig) -> Result<Vec<usize>, BoError> {
    let mut rng = ExperimentRng::new(cfg.seed);
    let eligible = data::bottom_fraction(values, cfg.init_percentile, cfg.direction)?;
    Ok(data::subsample_with(&eligible, cfg.init_size, &mut rng)?)
}

/// Runs one BO trajectory over `pool`.
///
/// `cfg.init_size` initial observations are drawn uniformly (seeded) from
/// the worst `init_percentile` of the pool. Each of `cfg.budget` iterations
/// scores every unobserved candidate by EI against the best observed value
/// and acquires the maximizer, lowest pool index on ties. With
/// `hyper = None` the hyperparameters follow the fixed setting computed from
/// the initial observations.
pub fn run_bo<T: Scalar>(
    pool: &[Fingerprint],
    values: &[T],
    cfg: &BoConfig,
    hyper: Option<GpHyperparams<T>>,
) -> Result<BoTrajectory<T>, BoError> {
    validate(pool, values, cfg)?;
    let direction = cfg.direction;
    let (pool_best, pool_worst) = direction.extremes(values).ok_or(BoError::PoolExhausted)?;
    if pool_best == pool_worst {
        return Err(BoError::DegenerateRange);
    }

    let initial = initial_design(values, cfg)?;
    let init_values: Vec<T> = initial.iter().map(|&i| values[i]).collect();
    let hyper = match hyper {
        Some(h) => h,
        None => gp::default_hyperparams(&init_values)?,
    };
    if !hyper.is_valid() {
        return Err(GpError::InvalidHyperparams(format!("{hyper:?}")).into());
    }

    let self_similarity: Vec<T> = pool
        .par_iter()
        .map(|x| kernel::tanimoto::<T>(x, x).expect("same fingerprint"))
        .collect();
    let mut posterior = IncrementalPosterior::new(&self_similarity, hyper);
    let mut observed = vec![false; pool.len()];
    // Raw Tanimoto rows of observed points, kept only for refits.
    let mut cached_rows: Vec<Vec<T>> = Vec::new();
    let observe = |posterior: &mut IncrementalPosterior<T>, index: usize, rows: &mut Vec<Vec<T>>| {
        let row = tanimoto_row::<T>(pool, index);
        posterior
            .observe(index, values[index], &row)
            .map_err(|source| BoError::Update { index, source })?;
        if cfg.refit_hyperparams {
            rows.push(row);
        }
        Ok::<(), BoError>(())
    };
    for &i in &initial {
        observe(&mut posterior, i, &mut cached_rows)?;
        observed[i] = true;
    }
    let mut best = init_values
        .iter()
        .copied()
        .reduce(|a, b| if direction.is_better(b, a) { b } else { a })
        .expect("init_size > 0");

    let mut acquired = Vec::with_capacity(cfg.budget);
    let mut best_curve = Vec::with_capacity(cfg.budget);
    for iteration in 1..=cfg.budget {
        let scores: Vec<T> = (0..pool.len())
            .into_par_iter()
            .map(|j| {
                if observed[j] {
                    return T::neg_infinity();
                }
                expected_improvement(posterior.mean(j), posterior.variance(j), best, direction)
                    .unwrap_or(T::nan())
            })
            .collect();
        let mut choice: Option<(usize, T)> = None;
        for (j, &s) in scores.iter().enumerate() {
            if observed[j] {
                continue;
            }
            if !s.is_finite() {
                return Err(BoError::NonFiniteEi { iteration, index: j });
            }
            if choice.is_none_or(|(_, b)| s > b) {
                choice = Some((j, s));
            }
        }
        let (index, ei) = choice.ok_or(BoError::PoolExhausted)?;
        observe(&mut posterior, index, &mut cached_rows)?;
        observed[index] = true;
        let value = values[index];
        if direction.is_better(value, best) {
            best = value;
        }
        acquired.push(Acquisition {
            iteration,
            pool_index: index,
            value,
            expected_improvement: ei,
        });
        best_curve.push(best);

        if cfg.refit_hyperparams && iteration < cfg.budget {
            posterior = refit(pool, values, posterior, &cached_rows)?;
        }
    }

    let auc = auc_best_observed(&best_curve, pool_best, pool_worst)?;
    Ok(BoTrajectory {
        initial,
        acquired,
        best_curve,
        auc,
        hyperparams: *posterior.hyperparams(),
        pool_best,
        pool_worst,
    })
}

/// Re-optimizes hyperparameters on the observed points and rebuilds the
/// posterior from the cached Tanimoto rows.
fn refit<T: Scalar>(
    pool: &[Fingerprint],
    values: &[T],
    posterior: IncrementalPosterior<T>,
    rows: &[Vec<T>],
) -> Result<IncrementalPosterior<T>, BoError> {
    let obs = posterior.observed().to_vec();
    let y: Vec<T> = obs.iter().map(|&i| values[i]).collect();
    let gram = Matrix::from_fn(obs.len(), obs.len(), |a, b| rows[a][obs[b]]);
    let (h, _) = match gp::optimize_hyperparams_with_gram(&gram, &y, *posterior.hyperparams(), &OptimizerConfig::default()) {
        Ok(found) => found,
        // Too few distinct values to fit; keep the current setting.
        Err(GpError::DegenerateTargets) => return Ok(posterior),
        Err(e) => return Err(e.into()),
    };
    let self_similarity: Vec<T> = pool
        .par_iter()
        .map(|x| kernel::tanimoto::<T>(x, x).expect("same fingerprint"))
        .collect();
    let mut rebuilt = IncrementalPosterior::new(&self_similarity, h);
    for (&i, row) in obs.iter().zip(rows) {
        rebuilt
            .observe(i, values[i], row)
            .map_err(|source| BoError::Update { index: i, source })?;
    }
    Ok(rebuilt)
}
