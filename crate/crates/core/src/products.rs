//! Outer, Kronecker and Khatri-Rao products and multilinear operators.
//!
//! With the lexicographic layout these fit together without swapping
//! factors: `vec(a ⊗ b) = kron(a, b)`, and applying `U_1 ⊗ … ⊗ U_N` to a
//! tensor is the same as multiplying `vec(Y)` by `kron(U_1, …, U_N)`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::matrix::DenseMatrix;
use crate::shape::Shape;
use crate::tensor::DenseTensor;

/// Rank-1 tensor with entries `Π_k a^{(k)}_{i_k}`.
pub fn outer(vectors: &[&[f64]]) -> Result<DenseTensor> {
    if vectors.is_empty() {
        return Err(Error::Argument("outer product of no vectors".into()));
    }
    let shape = Shape::new(vectors.iter().map(|v| v.len()).collect::<Vec<_>>())?;
    // Grow the buffer mode by mode; each step is a Kronecker expansion.
    let mut data = vec![1.0];
    for v in vectors {
        data = data.iter().flat_map(|&acc| v.iter().map(move |&x| acc * x)).collect();
    }
    DenseTensor::new(shape, data)
}

/// Kronecker product `A ⊠ B`, block `(i, j)` equal to `a_ij B`.
pub fn kron(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let (p1, q1, p2, q2) = (a.rows(), a.cols(), b.rows(), b.cols());
    let mut out = DenseMatrix::zeros(p1 * p2, q1 * q2);
    for i in 0..p1 {
        for j in 0..q1 {
            let s = a[(i, j)];
            for k in 0..p2 {
                for l in 0..q2 {
                    out[(i * p2 + k, j * q2 + l)] = s * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Left fold of [`kron`]: `kron(kron(M_1, M_2), M_3) …`.
pub fn kron_all<M: core::borrow::Borrow<DenseMatrix>>(factors: &[M]) -> Result<DenseMatrix> {
    let (first, rest) =
        factors.split_first().ok_or_else(|| Error::Argument("Kronecker product of no factors".into()))?;
    Ok(rest.iter().fold(first.borrow().clone(), |acc, m| kron(&acc, m.borrow())))
}

/// Columnwise Kronecker product `A ⊙ B`.
pub fn khatri_rao(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.cols() != b.cols() {
        return Err(Error::Shape(format!(
            "Khatri-Rao product needs equal column counts, got {} and {}",
            a.cols(),
            b.cols()
        )));
    }
    let (p1, p2, r) = (a.rows(), b.rows(), a.cols());
    let mut out = DenseMatrix::zeros(p1 * p2, r);
    for i in 0..p1 {
        for k in 0..p2 {
            for c in 0..r {
                out[(i * p2 + k, c)] = a[(i, c)] * b[(k, c)];
            }
        }
    }
    Ok(out)
}

/// Left fold of [`khatri_rao`].
pub fn khatri_rao_all<M: core::borrow::Borrow<DenseMatrix>>(factors: &[M]) -> Result<DenseMatrix> {
    let (first, rest) =
        factors.split_first().ok_or_else(|| Error::Argument("Khatri-Rao product of no factors".into()))?;
    rest.iter().try_fold(first.borrow().clone(), |acc, m| khatri_rao(&acc, m.borrow()))
}

/// Mode-`k` product `Y •_k U`: contracts the columns of `U` with mode `k`.
///
/// The result has `U.rows()` in place of `n_k`, and
/// `matricize(out, k) = U · matricize(Y, k)`.
pub fn mode_product(y: &DenseTensor, u: &DenseMatrix, k: usize) -> Result<DenseTensor> {
    y.shape().check_mode(k)?;
    let n = y.dims()[k];
    if u.cols() != n {
        return Err(Error::Shape(format!("mode {k} has dimension {n} but the factor is {}×{}", u.rows(), u.cols())));
    }
    let q = u.rows();
    let outer: usize = y.dims()[..k].iter().product();
    let inner: usize = y.dims()[k + 1..].iter().product();
    let mut dims = y.dims().to_vec();
    dims[k] = q;
    let shape = Shape::new(dims)?;
    let src = y.as_slice();
    let mut out = vec![0.0; outer * q * inner];
    for p in 0..outer {
        for i in 0..q {
            let dst = &mut out[(p * q + i) * inner..(p * q + i + 1) * inner];
            for j in 0..n {
                let w = u[(i, j)];
                if w == 0.0 {
                    continue;
                }
                let s = &src[(p * n + j) * inner..(p * n + j + 1) * inner];
                for (d, &v) in dst.iter_mut().zip(s) {
                    *d += w * v;
                }
            }
        }
    }
    DenseTensor::new(shape, out)
}

/// Applies `U_1 ⊗ … ⊗ U_N` to `Y`, i.e. `Y •_1 U_1 … •_N U_N`.
///
/// Mode products commute, so they are applied most-shrinking first
/// (ascending `rows / cols`); the operator is never materialized.
pub fn multilinear_apply<M: core::borrow::Borrow<DenseMatrix>>(factors: &[M], y: &DenseTensor) -> Result<DenseTensor> {
    if factors.len() != y.order() {
        return Err(Error::Shape(format!("{} factors for a tensor of order {}", factors.len(), y.order())));
    }
    for (k, u) in factors.iter().enumerate() {
        let u = u.borrow();
        if u.cols() != y.dims()[k] {
            return Err(Error::Shape(format!(
                "factor {k} is {}×{} but mode {k} has dimension {}",
                u.rows(),
                u.cols(),
                y.dims()[k]
            )));
        }
    }
    let mut modes: Vec<usize> = (0..factors.len()).collect();
    // rows_a/cols_a < rows_b/cols_b  <=>  rows_a·cols_b < rows_b·cols_a
    modes.sort_by(|&a, &b| {
        let (ua, ub) = (factors[a].borrow(), factors[b].borrow());
        (ua.rows() * ub.cols()).cmp(&(ub.rows() * ua.cols()))
    });
    let mut out = y.clone();
    for k in modes {
        out = mode_product(&out, factors[k].borrow(), k)?;
    }
    Ok(out)
}

/// Determinant of `U_1 ⊗ … ⊗ U_N` as sign and log-magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KronDeterminant {
    /// `-1`, `0` or `1`.
    pub sign: f64,
    /// `ln |det|`, `-inf` when the sign is zero.
    pub ln_abs: f64,
    /// The determinant as a float; `±inf` when it overflows.
    pub value: f64,
    /// Set when `value` is not representable as a finite float.
    pub overflow: bool,
}

/// `Π_i det(U_i)^{Π_{j≠i} n_j}` for square factors, computed without
/// forming the Kronecker product.
pub fn kron_determinant<M: core::borrow::Borrow<DenseMatrix>>(factors: &[M]) -> Result<KronDeterminant> {
    if factors.is_empty() {
        return Err(Error::Argument("determinant of no factors".into()));
    }
    let mut dims = Vec::with_capacity(factors.len());
    for (i, u) in factors.iter().enumerate() {
        let u = u.borrow();
        if !u.is_square() {
            return Err(Error::Shape(format!("factor {i} is {}×{}, not square", u.rows(), u.cols())));
        }
        dims.push(u.rows() as u64);
    }
    let total: u64 = dims
        .iter()
        .try_fold(1u64, |acc, &n| acc.checked_mul(n))
        .ok_or_else(|| Error::Capacity("operator dimension overflows u64".into()))?;

    let mut sign = 1.0;
    let mut ln_abs = 0.0;
    let mut direct = 1.0;
    for (u, &n) in factors.iter().zip(&dims) {
        let det = u.borrow().determinant()?;
        let power = total.checked_div(n).unwrap_or(0);
        if det == 0.0 {
            if power > 0 {
                return Ok(KronDeterminant { sign: 0.0, ln_abs: f64::NEG_INFINITY, value: 0.0, overflow: false });
            }
            continue;
        }
        if det < 0.0 && power % 2 == 1 {
            sign = -sign;
        }
        ln_abs += power as f64 * math::ln(det.abs());
        direct *= math::powu(det.abs(), power);
    }
    let max_ln = math::ln(f64::MAX);
    if ln_abs > max_ln {
        return Ok(KronDeterminant { sign, ln_abs, value: sign * f64::INFINITY, overflow: true });
    }
    // Per-factor powers can leave the float range even when the product
    // does not; fall back to the log form then.
    let magnitude = if direct.is_finite() && direct > 0.0 { direct } else { math::exp(ln_abs) };
    Ok(KronDeterminant { sign, ln_abs, value: sign * magnitude, overflow: false })
}

/// Jacobian of `vec(a_1 ⊗ … ⊗ a_N)` with respect to `a_mode`:
/// `kron(a_1, …, a_{mode-1}, I, a_{mode+1}, …, a_N)`.
pub fn cp_jacobian(vectors: &[&[f64]], mode: usize) -> Result<DenseMatrix> {
    if mode >= vectors.len() {
        return Err(Error::Argument(format!("mode {mode} out of range for {} vectors", vectors.len())));
    }
    let factors: Vec<DenseMatrix> = vectors
        .iter()
        .enumerate()
        .map(|(k, v)| if k == mode { DenseMatrix::identity(v.len()) } else { DenseMatrix::column_vector(v.to_vec()) })
        .collect();
    kron_all(&factors)
}

/// Operator `K = A ⊠ I_n + I_m ⊠ Bᵀ` with `vec(AX + XB) = K vec(X)` for
/// `X ∈ R^{m×n}`.
pub fn sylvester_vec_operator(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if !a.is_square() || !b.is_square() {
        return Err(Error::Shape(format!(
            "Sylvester operator needs square inputs, got {}×{} and {}×{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let left = kron(a, &DenseMatrix::identity(b.rows()));
    let right = kron(&DenseMatrix::identity(a.rows()), &b.transpose());
    left.add(&right)
}
