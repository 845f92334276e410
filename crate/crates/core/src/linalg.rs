//! Dense symmetric matrices and a Cholesky solver with ridge fallback.

use crate::error::{Error, Result};

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            assert_eq!(row.len(), n, "matrix must be square");
            data.extend_from_slice(row);
        }
        Self { n, data }
    }

    pub fn from_vec(n: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n * n);
        Self { n, data }
    }

    /// `v v^T`.
    pub fn outer(v: &[f64]) -> Self {
        let n = v.len();
        let mut m = Self::zeros(n);
        m.add_outer(v, 1.0);
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// `self += scale * v v^T`.
    pub fn add_outer(&mut self, v: &[f64], scale: f64) {
        debug_assert_eq!(v.len(), self.n);
        for (i, &vi) in v.iter().enumerate() {
            let row = &mut self.data[i * self.n..(i + 1) * self.n];
            let s = scale * vi;
            for (r, &vj) in row.iter_mut().zip(v) {
                *r += s * vj;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|x| *x *= factor);
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in i + 1..self.n {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        self.data
            .chunks_exact(self.n)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Relative Frobenius distance `||self - other|| / max(||other||, tiny)`.
    pub fn relative_distance(&self, other: &Self) -> f64 {
        let diff: f64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        diff / other.frobenius().max(f64::MIN_POSITIVE)
    }

    /// Smallest eigenvalue by cyclic Jacobi rotation. Test and diagnostic use.
    pub fn min_eigenvalue(&self) -> f64 {
        let n = self.n;
        let mut a = self.data.clone();
        for _sweep in 0..100 {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[i * n + j].powi(2))
                .sum();
            if off <= 1e-30 * self.frobenius().powi(2).max(f64::MIN_POSITIVE) {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a[p * n + q];
                    if apq == 0.0 {
                        continue;
                    }
                    let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[k * n + p];
                        let akq = a[k * n + q];
                        a[k * n + p] = c * akp - s * akq;
                        a[k * n + q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p * n + k];
                        let aqk = a[q * n + k];
                        a[p * n + k] = c * apk - s * aqk;
                        a[q * n + k] = s * apk + c * aqk;
                    }
                }
            }
        }
        (0..n).map(|i| a[i * n + i]).fold(f64::INFINITY, f64::min)
    }
}

impl std::ops::Index<(usize, usize)> for SquareMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for SquareMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// Normwise backward error of `x` as a solution of `(A + ridge I) x = b`:
/// `||(A + ridge I) x - b|| / (||A + ridge I|| ||x|| + ||b||)` in the max norm.
pub fn backward_error(a: &SquareMatrix, ridge: f64, x: &[f64], b: &[f64]) -> f64 {
    let n = a.dim();
    let mut resid: f64 = 0.0;
    let mut a_norm: f64 = 0.0;
    for i in 0..n {
        let row = &a.as_slice()[i * n..(i + 1) * n];
        let ax: f64 = row.iter().zip(x).map(|(u, v)| u * v).sum::<f64>() + ridge * x[i];
        resid = resid.max((ax - b[i]).abs());
        a_norm = a_norm.max(row.iter().map(|u| u.abs()).sum::<f64>() + ridge);
    }
    let x_norm = x.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let b_norm = b.iter().map(|v| v.abs()).fold(0.0, f64::max);
    resid / (a_norm * x_norm + b_norm).max(f64::MIN_POSITIVE)
}

/// Pivots at or below this fraction of the largest diagonal entry count as
/// a failed factorization.
const PIVOT_TOLERANCE: f64 = 1e-12;
const RIDGE_START: f64 = 1e-8;
const RIDGE_ATTEMPTS: usize = 3;

/// Outcome of [`SpdSolver::solve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveInfo {
    /// Ridge added to the diagonal, zero when the plain factorization held.
    pub ridge: f64,
}

impl SolveInfo {
    pub fn regularized(&self) -> bool {
        self.ridge > 0.0
    }
}

/// Reusable Cholesky workspace for one matrix dimension.
///
/// Solving never allocates: the factor lives in an `n x n` buffer sized at
/// construction.
#[derive(Debug, Clone)]
pub struct SpdSolver {
    n: usize,
    factor: Vec<f64>,
}

impl SpdSolver {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            factor: vec![0.0; n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Length of the factor workspace.
    pub fn workspace_len(&self) -> usize {
        self.factor.len()
    }

    /// Solves `A x = b` in place (`x` holds `b` on entry).
    ///
    /// Falls back to `(A + lambda I) x = b` with `lambda = 1e-8 * tr(A) / n`,
    /// growing tenfold for up to three attempts.
    pub fn solve(&mut self, a: &[f64], x: &mut [f64]) -> Result<SolveInfo> {
        let n = self.n;
        if a.len() != n * n {
            return Err(Error::LengthMismatch(a.len(), n * n));
        }
        if x.len() != n {
            return Err(Error::LengthMismatch(x.len(), n));
        }
        if self.factorize(a, 0.0) {
            self.substitute(x);
            return Ok(SolveInfo { ridge: 0.0 });
        }
        let trace: f64 = (0..n).map(|i| a[i * n + i]).sum();
        let mut ridge = RIDGE_START * trace / n as f64;
        if !(ridge > 0.0) || !ridge.is_finite() {
            return Err(Error::Unsolvable);
        }
        for _ in 0..RIDGE_ATTEMPTS {
            if self.factorize(a, ridge) {
                self.substitute(x);
                return Ok(SolveInfo { ridge });
            }
            ridge *= 10.0;
        }
        Err(Error::Unsolvable)
    }

    fn factorize(&mut self, a: &[f64], ridge: f64) -> bool {
        let n = self.n;
        let l = &mut self.factor;
        let max_diag = (0..n).map(|i| a[i * n + i] + ridge).fold(0.0, f64::max);
        if !(max_diag > 0.0) || !max_diag.is_finite() {
            return false;
        }
        let floor = PIVOT_TOLERANCE * max_diag;
        for j in 0..n {
            let mut d = a[j * n + j] + ridge;
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > floor) {
                return false;
            }
            let d = d.sqrt();
            l[j * n + j] = d;
            let inv = 1.0 / d;
            for i in j + 1..n {
                let mut s = a[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s * inv;
            }
        }
        true
    }

    fn substitute(&self, x: &mut [f64]) {
        let n = self.n;
        let l = &self.factor;
        for i in 0..n {
            let row = &l[i * n..i * n + i];
            let s: f64 = row.iter().zip(&x[..i]).map(|(a, b)| a * b).sum();
            x[i] = (x[i] - s) / l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= l[k * n + i] * x[k];
            }
            x[i] = s / l[i * n + i];
        }
    }
}
