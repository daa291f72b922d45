//! Exact, hash-folded and Sort&Slice molecular count fingerprints, a
//! Tanimoto-kernel Gaussian process, and a pool-based Bayesian optimization
//! loop.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! at the crate root fix it to `f64`, which every experiment uses.

pub mod analysis;
pub mod bo;
pub mod data;
pub mod fingerprints;
pub mod gp;
pub mod hash;
pub mod kernel;
pub mod linalg;
pub mod rng;
pub mod scalar;
pub mod smiles;

pub use fingerprints::{
    fold, morgan_sparse, sortslice_encode, sortslice_fit, DenseFingerprint, Encoding, Fingerprint,
    SortSliceVocabulary, SparseFingerprint,
};
pub use analysis::{collision_study, pairwise_collisions, regression_metrics, CollisionReport, RegressionMetrics};
pub use bo::{auc_best_observed, expected_improvement, run_bo, BoConfig, Direction};
pub use data::{apply_split, bottom_fraction, load_dataset, load_molecules, subsample, Dataset, MoleculeTable};
pub use gp::{default_hyperparams, optimize_hyperparams, OptimizerConfig};
pub use kernel::{covariance, tanimoto, GpHyperparams};
pub use scalar::Scalar;
pub use smiles::{parse_smiles, MolGraph};

pub type Hyperparams = kernel::GpHyperparams<f64>;
pub type Hyperparams32 = kernel::GpHyperparams<f32>;
pub type GpModel = gp::GpModel<f64>;
pub type GpModel32 = gp::GpModel<f32>;
pub type BoTrajectory = bo::BoTrajectory<f64>;
pub type KernelMatrix = linalg::Matrix<f64>;
pub type KernelMatrix32 = linalg::Matrix<f32>;

