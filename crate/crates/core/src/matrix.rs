//! Row-major dense matrices and the small factorizations the crate needs.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::math;

/// A `rows × cols` matrix stored row-major.
///
/// Zero rows or columns are allowed so that rank-0 CP factors
/// (`n × 0`) are representable. Column vectors are matrices with one column.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        let expected = rows.checked_mul(cols).ok_or_else(|| Error::Capacity(format!("{rows}×{cols} matrix")))?;
        if data.len() != expected {
            return Err(Error::Shape(format!("{rows}×{cols} matrix needs {expected} entries, got {}", data.len())));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from equal-length rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::Shape(format!("row {i} has {} entries, expected {cols}", r.len())));
            }
            data.extend_from_slice(r);
        }
        Ok(Self { rows: rows.len(), cols, data })
    }

    pub fn column_vector(values: Vec<f64>) -> Self {
        Self { rows: values.len(), cols: 1, data: values }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}×{} by {}×{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.zip_with(rhs, |a, b| a - b)
    }

    fn zip_with(&self, rhs: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(Error::Shape(format!("{}×{} and {}×{} differ", self.rows, self.cols, rhs.rows, rhs.cols)));
        }
        let data = self.data.iter().zip(&rhs.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { rows: self.rows, cols: self.cols, data })
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v * s).collect() }
    }

    pub fn frobenius_norm(&self) -> f64 {
        math::sqrt(self.data.iter().map(|v| v * v).sum())
    }

    /// Largest `|a_ij - a_ji|`; `None` if not square.
    pub fn max_asymmetry(&self) -> Option<f64> {
        if !self.is_square() {
            return None;
        }
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in 0..i {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        Some(worst)
    }

    /// `(A + Aᵀ) / 2`.
    pub fn symmetrized(&self) -> Result<Self> {
        Ok(self.add(&self.transpose())?.scale(0.5))
    }

    /// Determinant by LU with partial pivoting. Values with magnitude below
    /// `1e-300` are returned as exactly zero.
    pub fn determinant(&self) -> Result<f64> {
        let lu = self.lu()?;
        let mut det = lu.sign;
        for i in 0..self.rows {
            det *= lu.factors[(i, i)];
        }
        Ok(if det.abs() < 1e-300 { 0.0 } else { det })
    }

    /// `(sign, ln|det|)`; sign is 0 for a (numerically) singular matrix.
    pub fn log_abs_determinant(&self) -> Result<(f64, f64)> {
        let lu = self.lu()?;
        let mut sign = lu.sign;
        let mut ln_abs = 0.0;
        for i in 0..self.rows {
            let p = lu.factors[(i, i)];
            if p == 0.0 {
                return Ok((0.0, f64::NEG_INFINITY));
            }
            if p < 0.0 {
                sign = -sign;
            }
            ln_abs += math::ln(p.abs());
        }
        if ln_abs < math::ln(1e-300) {
            return Ok((0.0, f64::NEG_INFINITY));
        }
        Ok((sign, ln_abs))
    }

    fn lu(&self) -> Result<Lu> {
        if !self.is_square() {
            return Err(Error::Shape(format!("determinant of non-square {}×{} matrix", self.rows, self.cols)));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut sign = 1.0;
        for k in 0..n {
            let pivot = (k..n).max_by(|&x, &y| a[(x, k)].abs().total_cmp(&a[(y, k)].abs())).unwrap_or(k);
            if a[(pivot, k)] == 0.0 {
                continue;
            }
            if pivot != k {
                for j in 0..n {
                    a.data.swap(k * n + j, pivot * n + j);
                }
                sign = -sign;
            }
            let p = a[(k, k)];
            for i in k + 1..n {
                let f = a[(i, k)] / p;
                if f == 0.0 {
                    continue;
                }
                a[(i, k)] = f;
                for j in k + 1..n {
                    let v = a[(k, j)];
                    a[(i, j)] -= f * v;
                }
            }
        }
        Ok(Lu { factors: a, sign })
    }

    /// Lower-triangular `L` with `self = L Lᵀ`.
    pub fn cholesky(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::Definiteness(format!("{}×{} matrix is not square", self.rows, self.cols)));
        }
        let n = self.rows;
        let mut l = Self::zeros(n, n);
        for j in 0..n {
            let mut d = self[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            // pivots at rounding level of the diagonal mean numerically singular
            if !d.is_finite() || d <= n as f64 * f64::EPSILON * self[(j, j)].abs() {
                return Err(Error::Definiteness(format!(
                    "leading minor of order {} is not positive (pivot {d:e})",
                    j + 1
                )));
            }
            let d = math::sqrt(d);
            l[(j, j)] = d;
            for i in j + 1..n {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / d;
            }
        }
        Ok(l)
    }

    /// Solves `L x = b` in place for lower-triangular `self`.
    pub fn solve_lower_in_place(&self, b: &mut [f64]) {
        let n = self.rows;
        debug_assert_eq!(b.len(), n);
        for i in 0..n {
            let mut s = b[i];
            for (k, bk) in b.iter().enumerate().take(i) {
                s -= self[(i, k)] * bk;
            }
            b[i] = s / self[(i, i)];
        }
    }

    /// Singular values in descending order, by one-sided Jacobi rotations.
    pub fn singular_values(&self) -> Vec<f64> {
        // Work on columns of the taller orientation.
        let a = if self.rows >= self.cols { self.clone() } else { self.transpose() };
        let (m, n) = (a.rows, a.cols);
        let mut cols: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
        for _sweep in 0..60 {
            let mut rotated = false;
            for p in 0..n {
                for q in p + 1..n {
                    let (alpha, beta, gamma) = (0..m).fold((0.0, 0.0, 0.0), |(al, be, ga), i| {
                        let (x, y) = (cols[p][i], cols[q][i]);
                        (al + x * x, be + y * y, ga + x * y)
                    });
                    if gamma == 0.0 || gamma.abs() <= f64::EPSILON * math::sqrt(alpha * beta) {
                        continue;
                    }
                    rotated = true;
                    let zeta = (beta - alpha) / (2.0 * gamma);
                    let t = zeta.signum() / (zeta.abs() + math::sqrt(1.0 + zeta * zeta));
                    let t = if zeta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / math::sqrt(1.0 + t * t);
                    let s = c * t;
                    let (head, tail) = cols.split_at_mut(q);
                    for (x, y) in head[p].iter_mut().zip(tail[0].iter_mut()) {
                        (*x, *y) = (c * *x - s * *y, s * *x + c * *y);
                    }
                }
            }
            if !rotated {
                break;
            }
        }
        let mut sv: Vec<f64> = cols.iter().map(|c| math::sqrt(c.iter().map(|v| v * v).sum())).collect();
        sv.sort_by(|x, y| y.total_cmp(x));
        sv
    }

    /// Number of singular values above `rel_threshold · σ_max`.
    pub fn numerical_rank(&self, rel_threshold: f64) -> usize {
        let sv = self.singular_values();
        match sv.first() {
            Some(&top) if top > 0.0 => sv.iter().filter(|&&s| s > rel_threshold * top).count(),
            _ => 0,
        }
    }
}

struct Lu {
    factors: DenseMatrix,
    sign: f64,
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> DenseMatrix {
        DenseMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn matmul_and_transpose() {
        let a = m(&[&[1.0, 2.0], &[3.0, 4.0], &[5.0, 6.0]]);
        let b = m(&[&[1.0, 0.0, 2.0], &[0.0, 1.0, 1.0]]);
        assert_eq!(a.matmul(&b).unwrap(), m(&[&[1.0, 2.0, 4.0], &[3.0, 4.0, 10.0], &[5.0, 6.0, 16.0]]));
        assert_eq!(a.transpose().transpose(), a);
        assert!(a.matmul(&a).is_err());
    }

    #[test]
    fn zero_inner_dimension_gives_zeros() {
        let a = DenseMatrix::zeros(3, 0);
        let b = DenseMatrix::zeros(0, 4);
        assert_eq!(a.matmul(&b).unwrap(), DenseMatrix::zeros(3, 4));
    }

    #[test]
    fn determinants() {
        assert_eq!(m(&[&[1.0, 2.0], &[3.0, 4.0]]).determinant().unwrap(), -2.0);
        assert_eq!(DenseMatrix::identity(6).scale(6.0).determinant().unwrap(), 46656.0);
        assert_eq!(m(&[&[1.0, 2.0], &[2.0, 4.0]]).determinant().unwrap(), 0.0);
        assert_eq!(DenseMatrix::identity(2).scale(1e-200).determinant().unwrap(), 0.0);
        assert!(DenseMatrix::zeros(2, 3).determinant().is_err());
        // permutation matrix with one swap
        assert_eq!(m(&[&[0.0, 1.0], &[1.0, 0.0]]).determinant().unwrap(), -1.0);
    }

    #[test]
    fn cholesky_roundtrip() {
        let s = m(&[&[4.0, 2.0, 0.4], &[2.0, 5.0, 1.0], &[0.4, 1.0, 3.0]]);
        let l = s.cholesky().unwrap();
        let back = l.matmul(&l.transpose()).unwrap();
        assert!(back.sub(&s).unwrap().frobenius_norm() < 1e-14);
        assert!(matches!(m(&[&[1.0, 2.0], &[2.0, 1.0]]).cholesky(), Err(Error::Definiteness(_))));
    }

    #[test]
    fn lower_solve() {
        let l = m(&[&[2.0, 0.0], &[1.0, 4.0]]);
        let mut b = [2.0, 9.0];
        l.solve_lower_in_place(&mut b);
        assert_eq!(b, [1.0, 2.0]);
    }

    #[test]
    fn singular_values_of_known_matrices() {
        let d = DenseMatrix::from_diagonal(&[3.0, -1.0, 2.0]);
        let sv = d.singular_values();
        assert!((sv[0] - 3.0).abs() < 1e-14 && (sv[1] - 2.0).abs() < 1e-14 && (sv[2] - 1.0).abs() < 1e-14);
        // [[1,1],[1,1]] has singular values 2, 0
        let sv = m(&[&[1.0, 1.0], &[1.0, 1.0]]).singular_values();
        assert!((sv[0] - 2.0).abs() < 1e-14 && sv[1].abs() < 1e-14);
        assert_eq!(m(&[&[1.0, 1.0], &[1.0, 1.0]]).numerical_rank(1e-8), 1);
        assert_eq!(m(&[&[1.0, 2.0, 3.0]]).numerical_rank(1e-8), 1);
    }
}
