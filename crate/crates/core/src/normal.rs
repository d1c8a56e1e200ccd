//! Separable-covariance Gaussian arrays.
//!
//! `X ~ AN(M, Γ)` with `Γ = Σ_1 ⊠ … ⊠ Σ_N` is the law of `vec(X)` being
//! normal with mean `vec(M)` and covariance `Γ`. Everything here works
//! with the per-mode factors and their Cholesky factors `L_i`; `Γ` itself
//! is only formed by [`SeparableGaussian::vec_law`].
//!
//! Sampling draws standard normals from ChaCha8 seeded with the caller's
//! seed, using the ziggurat sampler of `rand_distr`, and colours them as
//! `M + (⊗ L_i) Z`.

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::math;
use crate::matrix::DenseMatrix;
use crate::products::{kron_all, multilinear_apply};
use crate::tensor::DenseTensor;

/// Relative tolerance for the symmetry check on covariance factors.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Largest element count [`SeparableGaussian::vec_law`] materializes by default.
pub const DEFAULT_VEC_LAW_CAP: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct SeparableGaussian {
    mean: DenseTensor,
    covariances: Vec<DenseMatrix>,
    cholesky: Vec<DenseMatrix>,
}

/// Checks symmetry (relative [`SYMMETRY_TOLERANCE`]) and positive
/// definiteness, returning the Cholesky factor.
pub fn validate_covariance(sigma: &DenseMatrix) -> Result<DenseMatrix> {
    let asym = sigma
        .max_asymmetry()
        .ok_or_else(|| Error::Definiteness(format!("{}×{} covariance is not square", sigma.rows(), sigma.cols())))?;
    let scale = sigma.as_slice().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if asym > SYMMETRY_TOLERANCE * scale {
        return Err(Error::Definiteness(format!("covariance is not symmetric (asymmetry {asym:e})")));
    }
    sigma.cholesky()
}

fn checked_cholesky(index: usize, sigma: &DenseMatrix) -> Result<DenseMatrix> {
    validate_covariance(sigma).map_err(|e| match e {
        Error::Definiteness(msg) => Error::Definiteness(format!("covariance {index}: {msg}")),
        other => other,
    })
}

impl SeparableGaussian {
    /// Validates each `Σ_i` (symmetric, then Cholesky) and caches `L_i`.
    pub fn new(mean: DenseTensor, covariances: Vec<DenseMatrix>) -> Result<Self> {
        if covariances.len() != mean.order() {
            return Err(Error::Shape(format!(
                "{} covariance factors for a mean of order {}",
                covariances.len(),
                mean.order()
            )));
        }
        let mut cholesky = Vec::with_capacity(covariances.len());
        for (i, sigma) in covariances.iter().enumerate() {
            if sigma.rows() != mean.dims()[i] || sigma.cols() != mean.dims()[i] {
                let n = mean.dims()[i];
                if sigma.is_square() {
                    return Err(Error::Shape(format!(
                        "covariance {i} is {}×{}, mode {i} needs {n}×{n}",
                        sigma.rows(),
                        sigma.cols()
                    )));
                }
                return Err(Error::Definiteness(format!("covariance {i} is {}×{}", sigma.rows(), sigma.cols())));
            }
            cholesky.push(checked_cholesky(i, sigma)?);
        }
        Ok(Self { mean, covariances, cholesky })
    }

    pub fn mean(&self) -> &DenseTensor {
        &self.mean
    }

    pub fn covariances(&self) -> &[DenseMatrix] {
        &self.covariances
    }

    /// Lower Cholesky factors `L_i` with `Σ_i = L_i L_iᵀ`.
    pub fn cholesky_factors(&self) -> &[DenseMatrix] {
        &self.cholesky
    }

    pub fn order(&self) -> usize {
        self.mean.order()
    }

    /// `ln|Γ| = Σ_i (Π_{j≠i} n_j) ln|Σ_i|`.
    pub fn log_det_covariance(&self) -> f64 {
        let total = self.mean.shape().len() as f64;
        self.cholesky
            .iter()
            .map(|l| {
                let n = l.rows();
                let ln_det: f64 = (0..n).map(|i| math::ln(l[(i, i)])).sum::<f64>() * 2.0;
                total / n as f64 * ln_det
            })
            .sum()
    }

    /// `(⊗ L_i^{-1})(X - M)` by triangular solves along every mode.
    pub fn whiten(&self, x: &DenseTensor) -> Result<DenseTensor> {
        let mut z = x.sub(&self.mean)?;
        for (mode, l) in self.cholesky.iter().enumerate() {
            z.map_fibers(mode, |fiber| l.solve_lower_in_place(fiber))?;
        }
        Ok(z)
    }

    pub fn log_density(&self, x: &DenseTensor) -> Result<f64> {
        if x.shape() != self.mean.shape() {
            return Err(Error::Shape(format!("sample shape {} vs mean shape {}", x.shape(), self.mean.shape())));
        }
        let z = self.whiten(x)?;
        let quad: f64 = z.as_slice().iter().map(|v| v * v).sum();
        let n = self.mean.shape().len() as f64;
        Ok(-0.5 * quad - 0.5 * self.log_det_covariance() - 0.5 * n * math::LN_2PI)
    }

    /// `count` draws from a ChaCha8 stream seeded with `seed`.
    pub fn sample(&self, seed: u64, count: usize) -> Vec<DenseTensor> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| self.sample_with(&mut rng)).collect()
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R) -> DenseTensor {
        let mut z = DenseTensor::zeros(self.mean.shape().clone());
        for v in z.as_mut_slice() {
            *v = rng.sample(StandardNormal);
        }
        let coloured = multilinear_apply(&self.cholesky, &z).expect("factors match the mean shape");
        coloured.add(&self.mean).expect("same shape")
    }

    /// Matrix normal law of the mode-`mode` unfolding:
    /// `MN(M_(mode), Σ_mode, kron(Σ_j, j ≠ mode))`.
    pub fn unfolding_law(&self, mode: usize) -> Result<MatrixNormalParams> {
        if mode >= self.order() {
            return Err(Error::Argument(format!("mode {mode} out of range for order {}", self.order())));
        }
        let rest: Vec<&DenseMatrix> =
            self.covariances.iter().enumerate().filter(|&(j, _)| j != mode).map(|(_, s)| s).collect();
        let col_cov = if rest.is_empty() { DenseMatrix::identity(1) } else { kron_all(&rest)? };
        MatrixNormalParams::new(self.mean.matricize(mode)?, self.covariances[mode].clone(), col_cov)
    }

    /// `(vec(M), Σ_1 ⊠ … ⊠ Σ_N)` with the covariance formed densely.
    pub fn vec_law(&self) -> Result<(DenseMatrix, DenseMatrix)> {
        self.vec_law_with_cap(DEFAULT_VEC_LAW_CAP)
    }

    pub fn vec_law_with_cap(&self, cap: usize) -> Result<(DenseMatrix, DenseMatrix)> {
        let n = self.mean.shape().len();
        if n > cap {
            return Err(Error::Capacity(format!("vec law of {n} elements exceeds cap {cap}")));
        }
        Ok((self.mean.vec(), kron_all(&self.covariances)?))
    }

    /// Law of `(⊗ W_i) X`: mean `(⊗ W_i) M`, factors `W_i Σ_i W_iᵀ`.
    ///
    /// Each `W_i` must be square and invertible.
    pub fn transform(&self, w: &[DenseMatrix]) -> Result<Self> {
        if w.len() != self.order() {
            return Err(Error::Shape(format!("{} transforms for order {}", w.len(), self.order())));
        }
        let mut covariances = Vec::with_capacity(w.len());
        for (i, (wi, sigma)) in w.iter().zip(&self.covariances).enumerate() {
            if !wi.is_square() {
                return Err(Error::Definiteness(format!(
                    "transform {i} is {}×{}; only square invertible transforms keep the law non-singular",
                    wi.rows(),
                    wi.cols()
                )));
            }
            if wi.cols() != sigma.rows() {
                return Err(Error::Shape(format!(
                    "transform {i} is {}×{} but mode {i} has dimension {}",
                    wi.rows(),
                    wi.cols(),
                    sigma.rows()
                )));
            }
            covariances.push(wi.matmul(sigma)?.matmul(&wi.transpose())?.symmetrized()?);
        }
        let mean = multilinear_apply(w, &self.mean)?;
        Self::new(mean, covariances)
    }
}

/// Parameters of a matrix normal law `MN(M, U, V)`: `vec(X) ~ N(vec(M), U ⊠ V)`
/// under the row-major vectorization.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixNormalParams {
    pub mean: DenseMatrix,
    pub row_covariance: DenseMatrix,
    pub col_covariance: DenseMatrix,
}

impl MatrixNormalParams {
    pub fn new(mean: DenseMatrix, row_covariance: DenseMatrix, col_covariance: DenseMatrix) -> Result<Self> {
        if row_covariance.rows() != mean.rows()
            || row_covariance.cols() != mean.rows()
            || col_covariance.rows() != mean.cols()
            || col_covariance.cols() != mean.cols()
        {
            return Err(Error::Shape(format!(
                "mean {}×{}, row covariance {}×{}, column covariance {}×{}",
                mean.rows(),
                mean.cols(),
                row_covariance.rows(),
                row_covariance.cols(),
                col_covariance.rows(),
                col_covariance.cols()
            )));
        }
        Ok(Self { mean, row_covariance, col_covariance })
    }

    /// `-½ tr[V⁻¹ (X-M)ᵀ U⁻¹ (X-M)] - (np/2) ln 2π - (p/2) ln|U| - (n/2) ln|V|`.
    pub fn log_density(&self, x: &DenseMatrix) -> Result<f64> {
        let d = x.sub(&self.mean)?;
        let (n, p) = (d.rows(), d.cols());
        let lu = checked_cholesky(0, &self.row_covariance)?;
        let lv = checked_cholesky(1, &self.col_covariance)?;
        // W = L_U⁻¹ D column by column, then W L_V⁻ᵀ row by row.
        let mut w = d.transpose();
        for j in 0..p {
            lu.solve_lower_in_place(&mut w.as_mut_slice()[j * n..(j + 1) * n]);
        }
        let mut w = w.transpose();
        for i in 0..n {
            lv.solve_lower_in_place(&mut w.as_mut_slice()[i * p..(i + 1) * p]);
        }
        let quad: f64 = w.as_slice().iter().map(|v| v * v).sum();
        let ln_det = |l: &DenseMatrix| 2.0 * (0..l.rows()).map(|i| math::ln(l[(i, i)])).sum::<f64>();
        let (nf, pf) = (n as f64, p as f64);
        Ok(-0.5 * quad - 0.5 * nf * pf * math::LN_2PI - 0.5 * pf * ln_det(&lu) - 0.5 * nf * ln_det(&lv))
    }
}

/// Dense multivariate normal log-density of `x` under `N(mean, cov)`.
pub fn mvn_log_density(mean: &DenseMatrix, cov: &DenseMatrix, x: &DenseMatrix) -> Result<f64> {
    if mean.cols() != 1 || x.cols() != 1 || mean.rows() != x.rows() || cov.rows() != x.rows() || !cov.is_square() {
        return Err(Error::Shape("mean, covariance and point dimensions disagree".into()));
    }
    let l = checked_cholesky(0, cov)?;
    let mut r = x.sub(mean)?.into_vec();
    l.solve_lower_in_place(&mut r);
    let quad: f64 = r.iter().map(|v| v * v).sum();
    let ln_det = 2.0 * (0..l.rows()).map(|i| math::ln(l[(i, i)])).sum::<f64>();
    Ok(-0.5 * quad - 0.5 * ln_det - 0.5 * x.rows() as f64 * math::LN_2PI)
}
