//! Small dense matrix helpers for finite-chain diagnostics.
//!
//! Chains handled here have at most a few hundred states, so everything is
//! plain O(m^3) with partial pivoting and no blocking.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> SquareMatrix<T> {
    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidParameter("matrix must be non-empty".into()));
        }
        let mut data = Vec::with_capacity(n * n);
        for r in &rows {
            if r.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "expected {n} columns, found {}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(SquareMatrix { n, data })
    }

    pub fn zeros(n: usize) -> Self {
        SquareMatrix { n, data: vec![T::zero(); n * n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// v * M for a row vector v.
    pub fn left_mul(&self, v: &[T]) -> Vec<T> {
        let n = self.n;
        let mut out = vec![T::zero(); n];
        for (i, &vi) in v.iter().enumerate() {
            if vi == T::zero() {
                continue;
            }
            let row = self.row(i);
            for j in 0..n {
                out[j] += vi * row[j];
            }
        }
        out
    }

    /// M * u for a column vector u.
    pub fn right_mul(&self, u: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(u).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    pub fn matmul(&self, other: &Self) -> Self {
        let n = self.n;
        let mut out = SquareMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == T::zero() {
                    continue;
                }
                for j in 0..n {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, &v| acc.max(v.abs()))
    }

    pub fn scale_in_place(&mut self, s: T) {
        for v in &mut self.data {
            *v *= s;
        }
    }
}

/// Solves A x = b by Gaussian elimination with partial pivoting.
pub fn solve<T: Scalar>(a: &SquareMatrix<T>, b: &[T]) -> Result<Vec<T>> {
    let n = a.n();
    if b.len() != n {
        return Err(Error::DimensionMismatch("rhs length != matrix size".into()));
    }
    let mut m = a.clone();
    let mut x: Vec<T> = b.to_vec();
    for col in 0..n {
        let mut pivot = col;
        let mut best = m.get(col, col).abs();
        for r in (col + 1)..n {
            let v = m.get(r, col).abs();
            if v > best {
                best = v;
                pivot = r;
            }
        }
        if best < T::of(1e-300) {
            return Err(Error::InvalidParameter("singular linear system".into()));
        }
        if pivot != col {
            for j in 0..n {
                let tmp = m.get(col, j);
                m.set(col, j, m.get(pivot, j));
                m.set(pivot, j, tmp);
            }
            x.swap(col, pivot);
        }
        let d = m.get(col, col);
        for r in (col + 1)..n {
            let f = m.get(r, col) / d;
            if f == T::zero() {
                continue;
            }
            for j in col..n {
                let v = m.get(r, j) - f * m.get(col, j);
                m.set(r, j, v);
            }
            x[r] = x[r] - f * x[col];
        }
    }
    for col in (0..n).rev() {
        let mut acc = x[col];
        for j in (col + 1)..n {
            acc -= m.get(col, j) * x[j];
        }
        x[col] = acc / m.get(col, col);
    }
    Ok(x)
}

/// Stationary row vector of a row-stochastic matrix: pi P = pi, sum(pi) = 1.
///
/// Solved as (P^T - I) pi = 0 with the last equation replaced by the
/// normalization constraint.
pub fn stationary_distribution<T: Scalar>(p: &SquareMatrix<T>) -> Result<Vec<T>> {
    let n = p.n();
    let mut a = SquareMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            // (P^T - I)_{ij} = P_{ji} - delta_{ij}
            let v = p.get(j, i) - if i == j { T::one() } else { T::zero() };
            a.set(i, j, v);
        }
    }
    for j in 0..n {
        a.set(n - 1, j, T::one());
    }
    let mut b = vec![T::zero(); n];
    b[n - 1] = T::one();
    let mut pi = solve(&a, &b)?;
    // Clip tiny negative round-off and renormalize.
    let mut total = T::zero();
    for v in &mut pi {
        if *v < T::zero() {
            if *v < -T::of(1e-9) {
                return Err(Error::InvalidParameter(
                    "stationary solve produced a significantly negative entry".into(),
                ));
            }
            *v = T::zero();
        }
        total += *v;
    }
    for v in &mut pi {
        *v /= total;
    }
    Ok(pi)
}

/// Estimates the modulus of the second-largest eigenvalue of a row-stochastic
/// matrix with stationary vector `pi`.
///
/// Deflates the Perron eigenvalue with Q = P - 1 pi^T and applies Gelfand's
/// formula rho(Q) = lim ||Q^k||^{1/k} via repeated squaring up to k = 2^40.
/// The norm-equivalence error shrinks like ln(m)/k, so spectral gaps down to
/// ~1e-11 are resolved.
pub fn second_eigenvalue_modulus<T: Scalar>(p: &SquareMatrix<T>, pi: &[T]) -> T {
    let n = p.n();
    let mut q = SquareMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            q.set(i, j, p.get(i, j) - pi[j]);
        }
    }
    let mut log_scale = T::zero();
    let mut k: u64 = 1;
    for _ in 0..40 {
        let norm = q.max_abs();
        if norm == T::zero() {
            return T::zero();
        }
        q.scale_in_place(T::one() / norm);
        log_scale += norm.ln();
        q = q.matmul(&q);
        log_scale += log_scale; // squaring doubles the accumulated scale
        k *= 2;
    }
    let norm = q.max_abs();
    if norm == T::zero() {
        return T::zero();
    }
    ((log_scale + norm.ln()) / T::of(k as f64)).exp()
}
