//! Small dense linear algebra: a row-major matrix, Cholesky, Householder QR
//! least squares and a pivoted Gaussian solver for KKT systems.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Matrix::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeError(alloc::format!(
                "{} values cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix from row slices; all rows must share one length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::ShapeError("ragged rows".into()));
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix { rows: rows.len(), cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, values: &[f64]) {
        for (i, &v) in values.iter().enumerate() {
            self[(i, j)] = v;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn trace(&self) -> f64 {
        self.diagonal().iter().sum()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::ShapeError(alloc::format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let dst = out.row_mut(i);
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if self.cols != v.len() {
            return Err(Error::ShapeError(alloc::format!(
                "cannot multiply {}x{} by vector of length {}",
                self.rows, self.cols, v.len()
            )));
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), v)).collect())
    }

    /// xᵀ A x for square `self`.
    pub fn quadratic_form(&self, x: &[f64]) -> Result<f64> {
        let ax = self.matvec(x)?;
        Ok(dot(x, &ax))
    }

    pub fn scaled(&self, factor: f64) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v * factor).collect() }
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Matrix, f: impl Fn(f64, f64) -> f64) -> Result<Matrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::ShapeError(alloc::format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Matrix { rows: self.rows, cols: self.cols, data })
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|v| v * v).sum())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        let scale = self.max_abs().max(1.0);
        for i in 0..self.rows {
            for j in 0..i {
                if (self[(i, j)] - self[(j, i)]).abs() > tol * scale {
                    return false;
                }
            }
        }
        true
    }

    /// Replaces the matrix with (A + Aᵀ)/2.
    pub fn symmetrize(&mut self) {
        for i in 0..self.rows {
            for j in 0..i {
                let v = 0.5 * (self[(i, j)] + self[(j, i)]);
                self[(i, j)] = v;
                self[(j, i)] = v;
            }
        }
    }

    pub fn is_diagonal(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| (0..self.cols).all(|j| i == j || self[(i, j)] == 0.0))
    }

    /// Principal submatrix on `idx` (rows and columns).
    pub fn principal_submatrix(&self, idx: &[usize]) -> Matrix {
        Matrix::from_fn(idx.len(), idx.len(), |i, j| self[(idx[i], idx[j])])
    }

    /// Rows selected by `idx`, in that order (duplicates allowed).
    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix { rows: idx.len(), cols: self.cols, data }
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Lower Cholesky factor `L` with `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: Matrix,
}

impl Cholesky {
    /// Fails with `SingularCovariance` unless `a` is symmetric positive definite.
    pub fn new(a: &Matrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::ShapeError("Cholesky needs a square matrix".into()));
        }
        let n = a.rows();
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::SingularCovariance);
            }
            let d = libm::sqrt(d);
            l[(j, j)] = d;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / d;
            }
        }
        Ok(Cholesky { l })
    }

    pub fn factor(&self) -> &Matrix {
        &self.l
    }

    pub fn into_factor(self) -> Matrix {
        self.l
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    /// Solves A x = b.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let y = forward_substitute(&self.l, b);
        back_substitute_transposed(&self.l, &y)
    }

    /// A⁻¹ B column by column.
    pub fn solve_matrix(&self, b: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(b.rows(), b.cols());
        for j in 0..b.cols() {
            let x = self.solve(&b.column(j));
            out.set_column(j, &x);
        }
        out
    }

    pub fn log_det(&self) -> f64 {
        2.0 * self.l.diagonal().iter().map(|d| libm::log(*d)).sum::<f64>()
    }
}

/// Solves L y = b for lower-triangular L.
pub fn forward_substitute(l: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = l.rows();
    let mut y = vec![0.0; n];
    for i in 0..n {
        let s = b[i] - dot(&l.row(i)[..i], &y[..i]);
        y[i] = s / l[(i, i)];
    }
    y
}

/// Solves Lᵀ x = y for lower-triangular L.
pub fn back_substitute_transposed(l: &Matrix, y: &[f64]) -> Vec<f64> {
    let n = l.rows();
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

/// Inverse of a lower-triangular matrix (itself lower triangular).
pub fn lower_triangular_inverse(l: &Matrix) -> Result<Matrix> {
    let n = l.rows();
    let mut inv = Matrix::zeros(n, n);
    for i in 0..n {
        if l[(i, i)] == 0.0 {
            return Err(Error::SingularCovariance);
        }
        inv[(i, i)] = 1.0 / l[(i, i)];
        for j in 0..i {
            let mut s = 0.0;
            for k in j..i {
                s += l[(i, k)] * inv[(k, j)];
            }
            inv[(i, j)] = -s / l[(i, i)];
        }
    }
    Ok(inv)
}

/// Numerical rank of a symmetric positive semidefinite matrix by
/// diagonal-pivoted Cholesky.
pub fn psd_rank(a: &Matrix, rel_tol: f64) -> usize {
    let n = a.rows();
    let mut work = a.clone();
    let scale = (0..n).fold(0.0f64, |m, i| m.max(a[(i, i)]));
    if scale <= 0.0 {
        return 0;
    }
    let tol = rel_tol * scale * n as f64;
    let mut perm: Vec<usize> = (0..n).collect();
    let mut rank = 0;
    for k in 0..n {
        let (p, &best) = perm[k..]
            .iter()
            .enumerate()
            .max_by(|x, y| work[(*x.1, *x.1)].total_cmp(&work[(*y.1, *y.1)]))
            .unwrap();
        let pivot = work[(best, best)];
        if pivot <= tol {
            break;
        }
        perm.swap(k, k + p);
        let piv = perm[k];
        rank += 1;
        let d = libm::sqrt(pivot);
        let col: Vec<f64> = perm[k + 1..].iter().map(|&i| work[(i, piv)] / d).collect();
        for (a_idx, &i) in perm[k + 1..].iter().enumerate() {
            for (b_idx, &j) in perm[k + 1..].iter().enumerate() {
                work[(i, j)] -= col[a_idx] * col[b_idx];
            }
        }
    }
    rank
}

/// Householder QR of a tall design matrix, reusable across right-hand sides.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    qr: Matrix,
    tau: Vec<f64>,
    rdiag: Vec<f64>,
}

impl LeastSquares {
    /// Factorizes `x` (n×p, n ≥ p). Fails with `SingularDesign` when a column
    /// is numerically dependent on the preceding ones.
    pub fn new(x: &Matrix) -> Result<Self> {
        let (n, p) = (x.rows(), x.cols());
        if n < p || p == 0 {
            return Err(Error::SingularDesign);
        }
        let mut qr = x.clone();
        let mut tau = vec![0.0; p];
        let mut rdiag = vec![0.0; p];
        let col_norms: Vec<f64> = (0..p)
            .map(|j| libm::sqrt((0..n).map(|i| x[(i, j)] * x[(i, j)]).sum()))
            .collect();
        for k in 0..p {
            let mut norm = 0.0;
            for i in k..n {
                norm += qr[(i, k)] * qr[(i, k)];
            }
            let norm = libm::sqrt(norm);
            if norm <= 1e-12 * col_norms[k].max(f64::MIN_POSITIVE) || col_norms[k] == 0.0 {
                return Err(Error::SingularDesign);
            }
            let alpha = if qr[(k, k)] > 0.0 { -norm } else { norm };
            // v = x - alpha e1, stored in place with v_k implicit
            let v0 = qr[(k, k)] - alpha;
            for i in (k + 1)..n {
                qr[(i, k)] /= v0;
            }
            tau[k] = -v0 / alpha;
            rdiag[k] = alpha;
            for j in (k + 1)..p {
                let mut s = qr[(k, j)];
                for i in (k + 1)..n {
                    s += qr[(i, k)] * qr[(i, j)];
                }
                s *= tau[k];
                qr[(k, j)] -= s;
                for i in (k + 1)..n {
                    let vik = qr[(i, k)];
                    qr[(i, j)] -= s * vik;
                }
            }
        }
        Ok(LeastSquares { qr, tau, rdiag })
    }

    pub fn nobs(&self) -> usize {
        self.qr.rows()
    }

    pub fn ncoef(&self) -> usize {
        self.qr.cols()
    }

    fn apply_qt(&self, b: &mut [f64]) {
        let (n, p) = (self.qr.rows(), self.qr.cols());
        for k in 0..p {
            let mut s = b[k];
            for i in (k + 1)..n {
                s += self.qr[(i, k)] * b[i];
            }
            s *= self.tau[k];
            b[k] -= s;
            for i in (k + 1)..n {
                b[i] -= s * self.qr[(i, k)];
            }
        }
    }

    fn r(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.rdiag[i]
        } else {
            self.qr[(i, j)]
        }
    }

    /// Coefficients minimizing ‖X β − y‖².
    pub fn solve(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.nobs() {
            return Err(Error::ShapeError(alloc::format!(
                "response has {} rows, design has {}",
                y.len(),
                self.nobs()
            )));
        }
        let p = self.ncoef();
        let mut b = y.to_vec();
        self.apply_qt(&mut b);
        let mut beta = vec![0.0; p];
        for i in (0..p).rev() {
            let mut s = b[i];
            for j in (i + 1)..p {
                s -= self.r(i, j) * beta[j];
            }
            beta[i] = s / self.r(i, i);
        }
        Ok(beta)
    }

    /// (XᵀX)⁻¹ = R⁻¹ R⁻ᵀ.
    pub fn xtx_inverse(&self) -> Matrix {
        let p = self.ncoef();
        // R⁻¹ is upper triangular
        let mut rinv = Matrix::zeros(p, p);
        for j in 0..p {
            rinv[(j, j)] = 1.0 / self.r(j, j);
            for i in (0..j).rev() {
                let mut s = 0.0;
                for k in (i + 1)..=j {
                    s += self.r(i, k) * rinv[(k, j)];
                }
                rinv[(i, j)] = -s / self.r(i, i);
            }
        }
        let mut out = Matrix::zeros(p, p);
        for i in 0..p {
            for j in 0..=i {
                let s: f64 = (i.max(j)..p).map(|k| rinv[(i, k)] * rinv[(j, k)]).sum();
                out[(i, j)] = s;
                out[(j, i)] = s;
            }
        }
        out
    }
}

/// Solves a general square system by Gaussian elimination with partial
/// pivoting. Returns `None` when a pivot falls below `rel_tol` times the
/// largest entry.
pub fn solve_general(a: &Matrix, b: &[f64], rel_tol: f64) -> Option<Vec<f64>> {
    let n = a.rows();
    if !a.is_square() || b.len() != n {
        return None;
    }
    let scale = a.max_abs();
    if scale == 0.0 {
        return None;
    }
    let mut m = a.clone();
    let mut rhs = b.to_vec();
    for k in 0..n {
        let (p, pv) = (k..n)
            .map(|i| (i, m[(i, k)].abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))?;
        if pv <= rel_tol * scale {
            return None;
        }
        if p != k {
            for j in 0..n {
                let t = m[(k, j)];
                m[(k, j)] = m[(p, j)];
                m[(p, j)] = t;
            }
            rhs.swap(k, p);
        }
        for i in (k + 1)..n {
            let f = m[(i, k)] / m[(k, k)];
            if f == 0.0 {
                continue;
            }
            for j in k..n {
                m[(i, j)] -= f * m[(k, j)];
            }
            rhs[i] -= f * rhs[k];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = rhs[i];
        for j in (i + 1)..n {
            s -= m[(i, j)] * x[j];
        }
        x[i] = s / m[(i, i)];
    }
    Some(x)
}
