//! CP and Tucker model containers.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::matrix::DenseMatrix;
use crate::products::{khatri_rao_all, kron_all, multilinear_apply, outer};
use crate::shape::Shape;
use crate::tensor::DenseTensor;

/// Order-`n` tensor of shape `(r, …, r)` with ones on the superdiagonal.
pub fn diagonal_tensor(r: usize, n: usize) -> Result<DenseTensor> {
    if n < 1 {
        return Err(Error::Argument("diagonal tensor needs order ≥ 1".into()));
    }
    let shape = Shape::new(alloc::vec![r; n])?;
    Ok(DenseTensor::from_fn(shape, |idx| if idx.iter().all(|&i| i == idx[0]) { 1.0 } else { 0.0 }))
}

/// Sum of `R` rank-1 terms, stored as factor matrices `A_i = [a_1 … a_R]`.
///
/// `R = 0` is allowed and stands for the zero tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct CpModel {
    factors: Vec<DenseMatrix>,
}

impl CpModel {
    pub fn new(factors: Vec<DenseMatrix>) -> Result<Self> {
        let first = factors.first().ok_or_else(|| Error::Argument("CP model with no factors".into()))?;
        let rank = first.cols();
        for (i, a) in factors.iter().enumerate() {
            if a.cols() != rank {
                return Err(Error::Shape(format!("factor {i} has {} columns, expected rank {rank}", a.cols())));
            }
            if a.rows() == 0 {
                return Err(Error::Shape(format!("factor {i} has no rows")));
            }
        }
        Ok(Self { factors })
    }

    pub fn factors(&self) -> &[DenseMatrix] {
        &self.factors
    }

    pub fn rank(&self) -> usize {
        self.factors[0].cols()
    }

    pub fn order(&self) -> usize {
        self.factors.len()
    }

    pub fn shape(&self) -> Shape {
        Shape::new(self.factors.iter().map(DenseMatrix::rows).collect::<Vec<_>>()).expect("factor rows are positive")
    }

    /// `Σ_r a_r^{(1)} ⊗ … ⊗ a_r^{(N)}`.
    pub fn reconstruct(&self) -> Result<DenseTensor> {
        let mut acc = DenseTensor::zeros(self.shape());
        for r in 0..self.rank() {
            let columns: Vec<Vec<f64>> = self.factors.iter().map(|a| a.column(r)).collect();
            let refs: Vec<&[f64]> = columns.iter().map(Vec::as_slice).collect();
            let term = outer(&refs)?;
            for (d, s) in acc.as_mut_slice().iter_mut().zip(term.as_slice()) {
                *d += s;
            }
        }
        Ok(acc)
    }

    /// `A_mode · (⊙_{j≠mode} A_j)ᵀ`, the Khatri-Rao factors in ascending mode
    /// order.
    pub fn unfolding(&self, mode: usize) -> Result<DenseMatrix> {
        if mode >= self.order() {
            return Err(Error::Argument(format!("mode {mode} out of range for order {}", self.order())));
        }
        let rest: Vec<&DenseMatrix> =
            self.factors.iter().enumerate().filter(|&(j, _)| j != mode).map(|(_, a)| a).collect();
        if rest.is_empty() {
            // order 1: Y_(1) = A_1 · 1
            let ones = DenseMatrix::from_vec(self.rank(), 1, alloc::vec![1.0; self.rank()])?;
            return self.factors[0].matmul(&ones);
        }
        let kr = khatri_rao_all(&rest)?;
        self.factors[mode].matmul(&kr.transpose())
    }

    /// `(⊙_i A_i) · 1`.
    pub fn vec(&self) -> Result<DenseMatrix> {
        let kr = khatri_rao_all(&self.factors)?;
        let ones = DenseMatrix::from_vec(self.rank(), 1, alloc::vec![1.0; self.rank()])?;
        kr.matmul(&ones)
    }

    /// Model with factors `W_i A_i`; its reconstruction equals
    /// `(⊗ W_i)` applied to the reconstruction of `self`.
    pub fn transform(&self, w: &[DenseMatrix]) -> Result<Self> {
        if w.len() != self.order() {
            return Err(Error::Shape(format!("{} transforms for a CP model of order {}", w.len(), self.order())));
        }
        let factors = w
            .iter()
            .zip(&self.factors)
            .enumerate()
            .map(|(i, (wi, ai))| {
                if wi.cols() != ai.rows() {
                    return Err(Error::Shape(format!(
                        "transform {i} is {}×{} but mode {i} has dimension {}",
                        wi.rows(),
                        wi.cols(),
                        ai.rows()
                    )));
                }
                wi.matmul(ai)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(factors)
    }

    /// Rescales every column to unit norm and returns the weights
    /// `λ_r = Π_i ‖a_r^{(i)}‖`. Zero columns keep weight 0 and are left as is.
    pub fn normalized(&self) -> (Self, Vec<f64>) {
        let mut weights = alloc::vec![1.0; self.rank()];
        let mut factors = self.factors.clone();
        for a in &mut factors {
            for (r, w) in weights.iter_mut().enumerate() {
                let norm = math::sqrt((0..a.rows()).map(|i| a[(i, r)] * a[(i, r)]).sum());
                *w *= norm;
                if norm > 0.0 {
                    for i in 0..a.rows() {
                        a[(i, r)] /= norm;
                    }
                }
            }
        }
        (Self { factors }, weights)
    }
}

/// Core tensor `G` of shape `(R_1, …, R_N)` and factors `U_i` (`n_i × R_i`).
#[derive(Debug, Clone, PartialEq)]
pub struct TuckerModel {
    core: DenseTensor,
    factors: Vec<DenseMatrix>,
}

impl TuckerModel {
    pub fn new(core: DenseTensor, factors: Vec<DenseMatrix>) -> Result<Self> {
        if factors.len() != core.order() {
            return Err(Error::Shape(format!("{} factors for a core of order {}", factors.len(), core.order())));
        }
        for (i, u) in factors.iter().enumerate() {
            if u.cols() != core.dims()[i] {
                return Err(Error::Shape(format!(
                    "factor {i} has {} columns, core mode {i} has dimension {}",
                    u.cols(),
                    core.dims()[i]
                )));
            }
            if u.rows() == 0 {
                return Err(Error::Shape(format!("factor {i} has no rows")));
            }
        }
        Ok(Self { core, factors })
    }

    pub fn core(&self) -> &DenseTensor {
        &self.core
    }

    pub fn factors(&self) -> &[DenseMatrix] {
        &self.factors
    }

    pub fn order(&self) -> usize {
        self.factors.len()
    }

    /// `(⊗ U_i) G`.
    pub fn reconstruct(&self) -> Result<DenseTensor> {
        multilinear_apply(&self.factors, &self.core)
    }

    /// `U_mode · G_(mode) · kron(U_jᵀ, j ≠ mode)`.
    pub fn unfolding(&self, mode: usize) -> Result<DenseMatrix> {
        if mode >= self.order() {
            return Err(Error::Argument(format!("mode {mode} out of range for order {}", self.order())));
        }
        let left = self.factors[mode].matmul(&self.core.matricize(mode)?)?;
        let rest: Vec<DenseMatrix> =
            self.factors.iter().enumerate().filter(|&(j, _)| j != mode).map(|(_, u)| u.transpose()).collect();
        if rest.is_empty() {
            return Ok(left);
        }
        left.matmul(&kron_all(&rest)?)
    }
}
