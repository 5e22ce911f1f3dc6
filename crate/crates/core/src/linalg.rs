//! Small dense linear algebra: a row-major matrix, Cholesky with jitter
//! escalation and triangular solves. Sizes here are at most a few hundred,
//! so plain loops are enough.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols.max(1)).take(self.rows)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }
}

/// Dot product with four independent accumulators so the loop vectorizes
/// while staying deterministic.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `dot(a, b[k])` for every `k` in one pass over `a`. Each result is
/// bitwise equal to the corresponding [`dot`].
#[inline]
pub(crate) fn dot_many<const K: usize>(a: &[f64], b: [&[f64]; K]) -> [f64; K] {
    let n = a.len();
    let b = b.map(|v| &v[..n]);
    let mut acc = [[0.0f64; 4]; K];
    let full = n - n % 4;
    let mut i = 0;
    while i < full {
        let x = &a[i..i + 4];
        for (acc, bk) in acc.iter_mut().zip(&b) {
            let y = &bk[i..i + 4];
            acc[0] += x[0] * y[0];
            acc[1] += x[1] * y[1];
            acc[2] += x[2] * y[2];
            acc[3] += x[3] * y[3];
        }
        i += 4;
    }
    let mut out = [0.0; K];
    for ((o, acc), bk) in out.iter_mut().zip(&acc).zip(&b) {
        let mut tail = 0.0;
        for j in full..n {
            tail += a[j] * bk[j];
        }
        *o = (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail;
    }
    out
}

/// In-place lower Cholesky factor of a symmetric matrix (only the lower
/// triangle is read). The strict upper triangle is zeroed. Returns `false`
/// when a pivot is not strictly positive.
fn cholesky_in_place(a: &mut Matrix) -> bool {
    let n = a.rows;
    for i in 0..n {
        for j in 0..=i {
            let s = {
                let ri = &a.data[i * n..i * n + j];
                let rj = &a.data[j * n..j * n + j];
                dot(ri, rj)
            };
            let v = a.data[i * n + j] - s;
            if i == j {
                if !(v > 0.0) || !v.is_finite() {
                    return false;
                }
                a.data[i * n + i] = libm::sqrt(v);
            } else {
                a.data[i * n + j] = v / a.data[j * n + j];
            }
        }
        for j in i + 1..n {
            a.data[i * n + j] = 0.0;
        }
    }
    true
}

/// Lower Cholesky factor of `a`, adding diagonal jitter only if the plain
/// factorization fails. Jitter starts at `1e-10 * trace / n` and grows ×10
/// up to `1e-4 * trace / n`. Returns the factor and the jitter used.
pub fn cholesky_with_jitter(a: &Matrix) -> Result<(Matrix, f64)> {
    if a.rows != a.cols {
        return Err(Error::DimensionMismatch {
            expected: a.rows,
            got: a.cols,
        });
    }
    let n = a.rows;
    if n == 0 {
        return Ok((Matrix::zeros(0, 0), 0.0));
    }
    let mut l = a.clone();
    if cholesky_in_place(&mut l) {
        return Ok((l, 0.0));
    }
    let scale = (a.trace() / n as f64).abs().max(f64::MIN_POSITIVE);
    let mut rel = 1e-10;
    while rel <= 1e-4 * (1.0 + 1e-9) {
        let jitter = rel * scale;
        let mut l = a.clone();
        for i in 0..n {
            l.data[i * n + i] += jitter;
        }
        if cholesky_in_place(&mut l) {
            return Ok((l, jitter));
        }
        rel *= 10.0;
    }
    Err(Error::NotPositiveDefinite)
}

/// Solves `L x = b` for lower-triangular `L`.
pub(crate) fn solve_lower(l: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = l.rows;
    let mut x = vec![0.0; n];
    for i in 0..n {
        let s = dot(&l.row(i)[..i], &x[..i]);
        x[i] = (b[i] - s) / l.get(i, i);
    }
    x
}

/// Solves `Lᵀ x = b` for lower-triangular `L`.
pub(crate) fn solve_lower_transpose(l: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = l.rows;
    let mut x = b.to_vec();
    for i in (0..n).rev() {
        x[i] /= l.get(i, i);
        let xi = x[i];
        let row = l.row(i);
        for (xk, lik) in x[..i].iter_mut().zip(&row[..i]) {
            *xk -= lik * xi;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd3() -> Matrix {
        Matrix::from_rows(&[vec![4.0, 2.0, 0.6], vec![2.0, 5.0, 1.0], vec![0.6, 1.0, 3.0]]).unwrap()
    }

    #[test]
    fn cholesky_reconstructs() {
        let a = spd3();
        let (l, jitter) = cholesky_with_jitter(&a).unwrap();
        assert_eq!(jitter, 0.0);
        for i in 0..3 {
            for j in 0..3 {
                let v: f64 = (0..3).map(|k| l.get(i, k) * l.get(j, k)).sum();
                assert!((v - a.get(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn triangular_solves() {
        let a = spd3();
        let (l, _) = cholesky_with_jitter(&a).unwrap();
        let b = [1.0, -2.0, 0.5];
        let x = solve_lower_transpose(&l, &solve_lower(&l, &b));
        for (i, bi) in b.iter().enumerate() {
            let ax: f64 = (0..3).map(|j| a.get(i, j) * x[j]).sum();
            assert!((ax - bi).abs() < 1e-12);
        }
    }

    #[test]
    fn semidefinite_needs_jitter() {
        // rank one
        let a = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let (_, jitter) = cholesky_with_jitter(&a).unwrap();
        assert!(jitter > 0.0);
    }

    #[test]
    fn indefinite_fails() {
        let a = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, -1.0]]).unwrap();
        assert_eq!(cholesky_with_jitter(&a), Err(Error::NotPositiveDefinite));
    }

    #[test]
    fn dot_many_matches_dot() {
        let a: Vec<f64> = (0..11).map(|i| (i as f64 * 0.7).sin()).collect();
        let b: Vec<Vec<f64>> = (0..4)
            .map(|k| (0..11).map(|i| (i as f64 + k as f64).cos()).collect())
            .collect();
        for n in 0..=11 {
            let r = dot_many(&a[..n], [&b[0], &b[1], &b[2], &b[3]]);
            for k in 0..4 {
                assert_eq!(r[k].to_bits(), dot(&a[..n], &b[k][..n]).to_bits());
            }
        }
    }

    #[test]
    fn dot_matches_naive() {
        let a: Vec<f64> = (0..11).map(|i| i as f64 * 0.3).collect();
        let b: Vec<f64> = (0..11).map(|i| 1.0 - i as f64).collect();
        let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert!((dot(&a, &b) - naive).abs() < 1e-12);
    }
}
