//! Small dense linear algebra over [`Scalar`]: row-major matrices, Cholesky
//! factorization with row-append updates, and a symmetric eigensolver
//! (Householder tridiagonalization followed by implicit QL).

use std::ops::{Index, IndexMut};

use rayon::prelude::*;
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("eigenvalue iteration did not converge")]
    NoConvergence,
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn<F: FnMut(usize, usize) -> T>(rows: usize, cols: usize, mut f: F) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::Dimension {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn trace(&self) -> T {
        self.diagonal().into_iter().sum()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] = out[(i, j)] + a * other[(k, j)];
                }
            }
        }
        out
    }

    /// Adds `value` to every diagonal entry.
    pub fn add_diagonal(&mut self, value: T) {
        for i in 0..self.rows.min(self.cols) {
            self[(i, i)] = self[(i, i)] + value;
        }
    }

    pub fn scaled(&self, factor: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * factor).collect(),
        }
    }

    /// `(A + Aᵀ) / 2`.
    pub fn symmetrized(&self) -> Self {
        let half = T::c(0.5);
        Self::from_fn(self.rows, self.cols, |i, j| (self[(i, j)] + self[(j, i)]) * half)
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|&x| x * x).sum::<T>().sqrt()
    }

    pub fn map<U: Scalar, F: Fn(T) -> U>(&self, f: F) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Sequential left-to-right dot product over the shorter length.
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut acc = [T::zero(); 4];
    let n = a.len().min(b.len());
    let chunks = n / 4;
    for c in 0..chunks {
        let k = c * 4;
        acc[0] = acc[0] + a[k] * b[k];
        acc[1] = acc[1] + a[k + 1] * b[k + 1];
        acc[2] = acc[2] + a[k + 2] * b[k + 2];
        acc[3] = acc[3] + a[k + 3] * b[k + 3];
    }
    let mut tail = T::zero();
    for k in chunks * 4..n {
        tail = tail + a[k] * b[k];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

const PARALLEL_MIN_ROWS: usize = 256;

/// Lower-triangular factor `L` with `A = L Lᵀ`.
///
/// Rows are stored packed: row `i` holds `L[i][0..=i]`, so the factor can be
/// extended by one row without copying.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky<T> {
    rows: Vec<Vec<T>>,
}

impl<T: Scalar> Cholesky<T> {
    /// Factorizes a symmetric positive definite matrix. Only the lower
    /// triangle of `a` is read.
    pub fn factor(a: &Matrix<T>) -> Result<Self, LinalgError> {
        if !a.is_square() {
            return Err(LinalgError::Dimension {
                expected: a.rows(),
                got: a.cols(),
            });
        }
        let n = a.rows();
        let mut rows: Vec<Vec<T>> = (0..n).map(|i| a.row(i)[..=i].to_vec()).collect();
        for j in 0..n {
            let (_, rest) = rows.split_at_mut(j);
            let (row_j, below) = rest.split_first_mut().expect("row j exists");
            let s = row_j[j] - dot(&row_j[..j], &row_j[..j]);
            if !(s > T::zero()) || !s.is_finite() {
                return Err(LinalgError::NotPositiveDefinite {
                    pivot: j,
                    value: s.f64(),
                });
            }
            let d = s.sqrt();
            row_j[j] = d;
            let pivot_row: &[T] = &row_j[..j];
            let update = |row_i: &mut Vec<T>| {
                row_i[j] = (row_i[j] - dot(&row_i[..j], pivot_row)) / d;
            };
            if below.len() >= PARALLEL_MIN_ROWS {
                below.par_iter_mut().for_each(update);
            } else {
                below.iter_mut().for_each(update);
            }
        }
        Ok(Self { rows })
    }

    /// Factor of the 0×0 matrix, to be grown with [`Cholesky::append`].
    pub fn empty() -> Self {
        Self { rows: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    /// Entry `L[i][j]` (zero above the diagonal).
    pub fn get(&self, i: usize, j: usize) -> T {
        if j > i {
            T::zero()
        } else {
            self.rows[i][j]
        }
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.rows[i]
    }

    pub fn to_matrix(&self) -> Matrix<T> {
        let n = self.dim();
        Matrix::from_fn(n, n, |i, j| self.get(i, j))
    }

    /// Solves `L x = b`.
    pub fn solve_lower(&self, b: &[T]) -> Vec<T> {
        assert_eq!(b.len(), self.dim());
        let mut x: Vec<T> = Vec::with_capacity(b.len());
        for (i, row) in self.rows.iter().enumerate() {
            let v = (b[i] - dot(&row[..i], &x)) / row[i];
            x.push(v);
        }
        x
    }

    /// Solves `Lᵀ x = b`.
    pub fn solve_upper(&self, b: &[T]) -> Vec<T> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut x = b.to_vec();
        for i in (0..n).rev() {
            x[i] = x[i] / self.rows[i][i];
            let xi = x[i];
            for (k, &l) in self.rows[i][..i].iter().enumerate() {
                x[k] = x[k] - l * xi;
            }
        }
        x
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        self.solve_upper(&self.solve_lower(b))
    }

    /// `log det A = 2 Σ log L_ii`.
    pub fn log_det(&self) -> T {
        let two = T::c(2.0);
        self.rows.iter().enumerate().map(|(i, r)| r[i].ln()).sum::<T>() * two
    }

    /// `A⁻¹`, column by column.
    pub fn inverse(&self) -> Matrix<T> {
        let n = self.dim();
        let cols: Vec<Vec<T>> = (0..n)
            .into_par_iter()
            .map(|j| {
                let mut e = vec![T::zero(); n];
                e[j] = T::one();
                self.solve(&e)
            })
            .collect();
        Matrix::from_fn(n, n, |i, j| cols[j][i])
    }

    /// Extends the factor of `A` to the factor of `[[A, k], [kᵀ, diag]]`.
    pub fn append(&mut self, k: &[T], diag: T) -> Result<(), LinalgError> {
        let l = self.solve_lower(k);
        let s = diag - dot(&l, &l);
        if !(s > T::zero()) || !s.is_finite() {
            return Err(LinalgError::NotPositiveDefinite {
                pivot: self.dim(),
                value: s.f64(),
            });
        }
        let mut row = l;
        row.push(s.sqrt());
        self.rows.push(row);
        Ok(())
    }
}

/// Eigen-decomposition of a symmetric matrix: `A = V diag(values) Vᵀ`,
/// eigenvalues ascending, eigenvectors in the columns of `vectors`.
#[derive(Debug, Clone)]
pub struct SymmetricEigen<T> {
    pub values: Vec<T>,
    pub vectors: Matrix<T>,
}

impl<T: Scalar> SymmetricEigen<T> {
    /// Reads the full matrix; callers symmetrize first if needed.
    pub fn new(a: &Matrix<T>) -> Result<Self, LinalgError> {
        if !a.is_square() {
            return Err(LinalgError::Dimension {
                expected: a.rows(),
                got: a.cols(),
            });
        }
        let n = a.rows();
        // Work on column-major copies of rows so that v[j] is column j.
        let mut v: Vec<Vec<T>> = (0..n).map(|i| a.row(i).to_vec()).collect();
        let mut d = vec![T::zero(); n];
        let mut e = vec![T::zero(); n];
        if n == 0 {
            return Ok(Self {
                values: d,
                vectors: Matrix::zeros(0, 0),
            });
        }
        tred2(&mut v, &mut d, &mut e);
        tql2(&mut v, &mut d, &mut e)?;
        let vectors = Matrix::from_fn(n, n, |i, j| v[i][j]);
        Ok(Self { values: d, vectors })
    }
}

// Householder reduction to tridiagonal form (EISPACK tred2, after the JAMA
// public-domain port). `v` is indexed v[row][col].
#[allow(clippy::needless_range_loop)]
fn tred2<T: Scalar>(v: &mut [Vec<T>], d: &mut [T], e: &mut [T]) {
    let n = d.len();
    let zero = T::zero();
    d[..n].copy_from_slice(&v[n - 1][..n]);
    for i in (1..n).rev() {
        let mut scale = zero;
        let mut h = zero;
        for k in 0..i {
            scale = scale + d[k].abs();
        }
        if scale == zero {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[i - 1][j];
                v[i][j] = zero;
                v[j][i] = zero;
            }
        } else {
            for k in 0..i {
                d[k] = d[k] / scale;
                h = h + d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > zero {
                g = -g;
            }
            e[i] = scale * g;
            h = h - f * g;
            d[i - 1] = f - g;
            for j in 0..i {
                e[j] = zero;
            }
            for j in 0..i {
                f = d[j];
                v[j][i] = f;
                g = e[j] + v[j][j] * f;
                for k in (j + 1)..i {
                    g = g + v[k][j] * d[k];
                    e[k] = e[k] + v[k][j] * f;
                }
                e[j] = g;
            }
            f = zero;
            for j in 0..i {
                e[j] = e[j] / h;
                f = f + e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] = e[j] - hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[k][j] = v[k][j] - (f * e[k] + g * d[k]);
                }
                d[j] = v[i - 1][j];
                v[i][j] = zero;
            }
        }
        d[i] = h;
    }
    for i in 0..n - 1 {
        v[n - 1][i] = v[i][i];
        v[i][i] = T::one();
        let h = d[i + 1];
        if h != zero {
            for k in 0..=i {
                d[k] = v[k][i + 1] / h;
            }
            for j in 0..=i {
                let mut g = zero;
                for k in 0..=i {
                    g = g + v[k][i + 1] * v[k][j];
                }
                for k in 0..=i {
                    v[k][j] = v[k][j] - g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[k][i + 1] = zero;
        }
    }
    for j in 0..n {
        d[j] = v[n - 1][j];
        v[n - 1][j] = zero;
    }
    v[n - 1][n - 1] = T::one();
    e[0] = zero;
}

// Implicit QL iterations on the tridiagonal form (EISPACK tql2).
#[allow(clippy::needless_range_loop)]
fn tql2<T: Scalar>(v: &mut [Vec<T>], d: &mut [T], e: &mut [T]) -> Result<(), LinalgError> {
    let n = d.len();
    let zero = T::zero();
    let one = T::one();
    let two = T::c(2.0);
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = zero;

    let mut f = zero;
    let mut tst1 = zero;
    let eps = T::epsilon();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m == n {
            m = n - 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 100 {
                    return Err(LinalgError::NoConvergence);
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(one);
                if p < zero {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for i in (l + 2)..n {
                    d[i] = d[i] - h;
                }
                f = f + h;

                p = d[m];
                let mut c = one;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = zero;
                let mut s2 = zero;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        h = v[k][i + 1];
                        v[k][i + 1] = s * v[k][i] + c * h;
                        v[k][i] = c * v[k][i] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] = d[l] + f;
        e[l] = zero;
    }

    // Sort eigenvalues ascending with their vectors.
    for i in 0..n.saturating_sub(1) {
        let mut k = i;
        let mut p = d[i];
        for j in (i + 1)..n {
            if d[j] < p {
                k = j;
                p = d[j];
            }
        }
        if k != i {
            d[k] = d[i];
            d[i] = p;
            for row in v.iter_mut() {
                row.swap(i, k);
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd(n: usize, seed: u64) -> Matrix<f64> {
        let mut rng = crate::rng::ExperimentRng::new(seed);
        let b = Matrix::from_fn(n, n, |_, _| rng.standard_normal());
        let mut a = b.matmul(&b.transpose());
        a.add_diagonal(n as f64 * 0.1);
        a
    }

    #[test]
    fn cholesky_reconstructs() {
        for n in [1, 2, 5, 40, 300] {
            let a = spd(n, n as u64);
            let chol = Cholesky::factor(&a).unwrap();
            let l = chol.to_matrix();
            let back = l.matmul(&l.transpose());
            let err = Matrix::from_fn(n, n, |i, j| back[(i, j)] - a[(i, j)]).frobenius_norm();
            assert!(err / a.frobenius_norm() < 1e-12, "n={n} err={err}");
        }
    }

    #[test]
    fn cholesky_solves_and_inverts() {
        let a = spd(12, 9);
        let chol = Cholesky::factor(&a).unwrap();
        let b: Vec<f64> = (0..12).map(|i| i as f64 - 3.0).collect();
        let x = chol.solve(&b);
        let ax = a.mul_vec(&x);
        for (u, v) in ax.iter().zip(&b) {
            assert!((u - v).abs() < 1e-10);
        }
        let inv = chol.inverse();
        let eye = a.matmul(&inv);
        for i in 0..12 {
            for j in 0..12 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((eye[(i, j)] - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn log_det_of_diagonal() {
        let mut a = Matrix::<f64>::identity(3);
        a[(0, 0)] = 2.0;
        a[(1, 1)] = 3.0;
        a[(2, 2)] = 5.0;
        let ld = Cholesky::factor(&a).unwrap().log_det();
        assert!((ld - 30f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn rejects_indefinite() {
        let a = Matrix::from_row_major(2, 2, vec![1.0, 2.0, 2.0, 1.0]).unwrap();
        assert!(matches!(
            Cholesky::factor(&a),
            Err(LinalgError::NotPositiveDefinite { pivot: 1, .. })
        ));
        let z = Matrix::<f64>::zeros(2, 2);
        assert!(Cholesky::factor(&z).is_err());
    }

    #[test]
    fn append_matches_full_factor() {
        let a = spd(10, 4);
        let full = Cholesky::factor(&a).unwrap();
        let head = Matrix::from_fn(6, 6, |i, j| a[(i, j)]);
        let mut inc = Cholesky::factor(&head).unwrap();
        for m in 6..10 {
            let k: Vec<f64> = (0..m).map(|j| a[(m, j)]).collect();
            inc.append(&k, a[(m, m)]).unwrap();
        }
        for i in 0..10 {
            for j in 0..=i {
                assert!((inc.get(i, j) - full.get(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn eigen_reconstructs() {
        for n in [1, 2, 3, 17, 60] {
            let a = spd(n, 100 + n as u64);
            let eig = SymmetricEigen::new(&a).unwrap();
            assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
            let v = &eig.vectors;
            let scaled = Matrix::from_fn(n, n, |i, j| v[(i, j)] * eig.values[j]);
            let back = scaled.matmul(&v.transpose());
            let err = Matrix::from_fn(n, n, |i, j| back[(i, j)] - a[(i, j)]).frobenius_norm();
            assert!(err / a.frobenius_norm() < 1e-12, "n={n}");
            let vtv = v.transpose().matmul(v);
            for i in 0..n {
                for j in 0..n {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((vtv[(i, j)] - want).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn eigen_handles_rank_deficient() {
        let a = Matrix::from_fn(4, 4, |_, _| 1.0f64);
        let eig = SymmetricEigen::new(&a).unwrap();
        assert!((eig.values[3] - 4.0).abs() < 1e-12);
        assert!(eig.values[..3].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn works_in_single_precision() {
        let a = spd(8, 2).map(|x| x as f32);
        let chol = Cholesky::factor(&a).unwrap();
        let x = chol.solve(&[1.0f32; 8]);
        let ax = a.mul_vec(&x);
        assert!(ax.iter().all(|v| (v - 1.0).abs() < 1e-3));
    }
}
