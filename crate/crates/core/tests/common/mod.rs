//! Fixture access and an independent dense-algebra GP reference built on
//! nalgebra, shared by the integration tests and the acceptance suite.

#![allow(dead_code)]

use std::path::PathBuf;

use exactfp::data::{read_dataset, Dataset};
use exactfp::linalg::Matrix;
use exactfp::{morgan_sparse, Fingerprint, GpHyperparams, SparseFingerprint};
use nalgebra::{DMatrix, DVector};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub struct Corpus {
    pub dataset: Dataset,
    pub fps: Vec<SparseFingerprint>,
}

impl Corpus {
    pub fn values(&self) -> Vec<f64> {
        self.dataset.values()
    }

    pub fn sparse(&self, idx: &[usize]) -> Vec<Fingerprint> {
        idx.iter().map(|&i| Fingerprint::Sparse(self.fps[i].clone())).collect()
    }
}

/// The bundled 5,000-molecule corpus with radius-2 exact fingerprints.
pub fn corpus() -> Corpus {
    let file = std::fs::File::open(fixture_path("synthetic_5000.tsv")).expect("bundled fixture");
    let dataset = read_dataset(file, "target").expect("fixture parses");
    assert!(dataset.warnings.is_empty(), "{:?}", dataset.warnings.first());
    let fps = dataset
        .records
        .iter()
        .map(|r| morgan_sparse(&r.mol, 2).expect("radius in range"))
        .collect();
    Corpus { dataset, fps }
}

pub fn to_dmatrix(m: &Matrix<f64>) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

fn dense_k(t: &DMatrix<f64>, h: &GpHyperparams<f64>) -> DMatrix<f64> {
    t * h.amplitude_sq + DMatrix::identity(t.nrows(), t.ncols()) * h.noise_sq
}

/// `log N(y; c, a² T + σ² I)` via nalgebra's inverse and determinant.
pub fn dense_mll(t: &DMatrix<f64>, y: &[f64], h: &GpHyperparams<f64>) -> f64 {
    let k = dense_k(t, h);
    let r = DVector::from_iterator(y.len(), y.iter().map(|v| v - h.mean_const));
    let kinv = k.clone().try_inverse().expect("invertible");
    let quad = (r.transpose() * &kinv * &r)[(0, 0)];
    let n = y.len() as f64;
    -0.5 * quad - 0.5 * k.determinant().ln() - 0.5 * n * (2.0 * std::f64::consts::PI).ln()
}

/// Gradient in `(log a², log σ², c)` from the dense trace formula.
pub fn dense_gradient(t: &DMatrix<f64>, y: &[f64], h: &GpHyperparams<f64>) -> [f64; 3] {
    let k = dense_k(t, h);
    let kinv = k.try_inverse().expect("invertible");
    let r = DVector::from_iterator(y.len(), y.iter().map(|v| v - h.mean_const));
    let alpha = &kinv * r;
    let inner = &alpha * alpha.transpose() - &kinv;
    let da = 0.5 * (&inner * (t * h.amplitude_sq)).trace();
    let ds = 0.5 * inner.trace() * h.noise_sq;
    [da, ds, alpha.sum()]
}

/// Posterior mean and latent variance at queries from raw Tanimoto blocks.
pub fn dense_posterior(
    t_train: &DMatrix<f64>,
    t_cross: &DMatrix<f64>,
    t_self: &[f64],
    y: &[f64],
    h: &GpHyperparams<f64>,
) -> (Vec<f64>, Vec<f64>) {
    let kinv = dense_k(t_train, h).try_inverse().expect("invertible");
    let r = DVector::from_iterator(y.len(), y.iter().map(|v| v - h.mean_const));
    let kstar = t_cross * h.amplitude_sq;
    let means = (&kstar * (&kinv * r)).add_scalar(h.mean_const);
    let reduce = &kstar * &kinv * kstar.transpose();
    let vars = (0..t_self.len())
        .map(|i| h.amplitude_sq * t_self[i] - reduce[(i, i)])
        .collect();
    (means.iter().copied().collect(), vars)
}
