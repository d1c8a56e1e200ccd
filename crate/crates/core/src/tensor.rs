//! The dense tensor type, vectorization and matricization.
//!
//! Storage order is lexicographic, so [`DenseTensor::vec`] is a plain copy
//! of the buffer. The mode-`i` unfolding puts mode `i` on the rows and packs
//! the remaining modes, in ascending order, lexicographically into the
//! columns. [`matricize_oracle`] rebuilds the same matrix the other way
//! round, through a column-major permute-and-reshape.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::matrix::DenseMatrix;
use crate::shape::Shape;

mod oracle;

pub use oracle::matricize_oracle;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    shape: Shape,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn new(shape: Shape, data: Vec<f64>) -> Result<Self> {
        if data.len() != shape.len() {
            return Err(Error::Shape(format!("shape {shape} needs {} entries, got {}", shape.len(), data.len())));
        }
        Ok(Self { shape, data })
    }

    pub fn from_dims(dims: impl Into<Vec<usize>>, data: Vec<f64>) -> Result<Self> {
        Self::new(Shape::new(dims)?, data)
    }

    pub fn zeros(shape: Shape) -> Self {
        let data = vec![0.0; shape.len()];
        Self { shape, data }
    }

    /// Fills the tensor by evaluating `f` at every multi-index.
    pub fn from_fn(shape: Shape, mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let data = shape.indices().map(|idx| f(&idx)).collect();
        Self { shape, data }
    }

    #[inline]
    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    #[inline]
    pub fn dims(&self) -> &[usize] {
        self.shape.dims()
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.shape.order()
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

    pub fn get(&self, index: &[usize]) -> Result<f64> {
        Ok(self.data[self.shape.linear_index(index)?])
    }

    pub fn set(&mut self, index: &[usize], value: f64) -> Result<()> {
        let o = self.shape.linear_index(index)?;
        self.data[o] = value;
        Ok(())
    }

    pub fn frobenius_norm(&self) -> f64 {
        math::sqrt(self.data.iter().map(|v| v * v).sum())
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.check_same_shape(rhs)?;
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect();
        Ok(Self { shape: self.shape.clone(), data })
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.check_same_shape(rhs)?;
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect();
        Ok(Self { shape: self.shape.clone(), data })
    }

    fn check_same_shape(&self, rhs: &Self) -> Result<()> {
        if self.shape != rhs.shape {
            return Err(Error::Shape(format!("{} vs {}", self.shape, rhs.shape)));
        }
        Ok(())
    }

    /// Lexicographic vectorization as a column vector. No permutation takes
    /// place: the buffer already is `vec(Y)`.
    pub fn vec(&self) -> DenseMatrix {
        DenseMatrix::column_vector(self.data.clone())
    }

    /// Inverse of [`DenseTensor::vec`].
    pub fn unvec(values: &[f64], shape: Shape) -> Result<Self> {
        Self::new(shape, values.to_vec())
    }

    /// Mode-`mode` unfolding, an `n_mode × Π_{j≠mode} n_j` matrix.
    pub fn matricize(&self, mode: usize) -> Result<DenseMatrix> {
        self.shape.check_mode(mode)?;
        let n = self.shape.dim(mode);
        let outer: usize = self.dims()[..mode].iter().product();
        let inner: usize = self.dims()[mode + 1..].iter().product();
        let cols = outer * inner;
        let mut out = vec![0.0; self.data.len()];
        // Y[p, r, q] lands at row r, column p·inner + q.
        for p in 0..outer {
            for r in 0..n {
                let src = &self.data[(p * n + r) * inner..(p * n + r + 1) * inner];
                let dst = r * cols + p * inner;
                out[dst..dst + inner].copy_from_slice(src);
            }
        }
        DenseMatrix::from_vec(n, cols, out)
    }

    /// Inverse of [`DenseTensor::matricize`].
    pub fn dematricize(m: &DenseMatrix, mode: usize, shape: Shape) -> Result<Self> {
        shape.check_mode(mode)?;
        let n = shape.dim(mode);
        if m.rows() != n || m.cols() != shape.len_without(mode) {
            return Err(Error::Shape(format!(
                "mode-{mode} unfolding of {shape} is {n}×{}, got {}×{}",
                shape.len_without(mode),
                m.rows(),
                m.cols()
            )));
        }
        let outer: usize = shape.dims()[..mode].iter().product();
        let inner: usize = shape.dims()[mode + 1..].iter().product();
        let cols = outer * inner;
        let src = m.as_slice();
        let mut data = vec![0.0; shape.len()];
        for p in 0..outer {
            for r in 0..n {
                let s = r * cols + p * inner;
                data[(p * n + r) * inner..(p * n + r + 1) * inner].copy_from_slice(&src[s..s + inner]);
            }
        }
        Ok(Self { shape, data })
    }

    /// Reorders modes: output mode `a` is input mode `perm[a]` (0-based).
    pub fn permute_modes(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.order())?;
        let in_strides = self.shape.strides();
        let out_shape = Shape::new(perm.iter().map(|&p| self.shape.dim(p)).collect::<Vec<_>>())?;
        let strides: Vec<usize> = perm.iter().map(|&p| in_strides[p]).collect();
        let data = out_shape
            .indices()
            .map(|idx| self.data[idx.iter().zip(&strides).map(|(i, s)| i * s).sum::<usize>()])
            .collect();
        Ok(Self { shape: out_shape, data })
    }

    /// Replaces every mode-`mode` fiber `x` by `f(x)` in place.
    pub fn map_fibers(&mut self, mode: usize, mut f: impl FnMut(&mut [f64])) -> Result<()> {
        self.shape.check_mode(mode)?;
        let n = self.shape.dim(mode);
        let outer: usize = self.dims()[..mode].iter().product();
        let inner: usize = self.dims()[mode + 1..].iter().product();
        let mut fiber = vec![0.0; n];
        for p in 0..outer {
            for q in 0..inner {
                let base = p * n * inner + q;
                for (r, v) in fiber.iter_mut().enumerate() {
                    *v = self.data[base + r * inner];
                }
                f(&mut fiber);
                for (r, v) in fiber.iter().enumerate() {
                    self.data[base + r * inner] = *v;
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn check_permutation(perm: &[usize], order: usize) -> Result<()> {
    if perm.len() != order {
        return Err(Error::Argument(format!("permutation of length {} for order {order}", perm.len())));
    }
    let mut seen = vec![false; order];
    for &p in perm {
        if p >= order || core::mem::replace(&mut seen[p], true) {
            return Err(Error::Argument(format!("{perm:?} is not a permutation of 0..{order}")));
        }
    }
    Ok(())
}

/// Inverse of a permutation vector.
pub fn invert_permutation(perm: &[usize]) -> Result<Vec<usize>> {
    check_permutation(perm, perm.len())?;
    let mut inv = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    Ok(inv)
}

/// Permutation `p` with `classic[q] = lexicographic[p[q]]`, where `classic`
/// is the column-major (first index fastest) vectorization.
pub fn classic_vec_permutation(shape: &Shape) -> Vec<usize> {
    let dims = shape.dims();
    let strides = shape.strides();
    let mut perm = Vec::with_capacity(shape.len());
    let mut idx = vec![0usize; dims.len()];
    for _ in 0..shape.len() {
        perm.push(idx.iter().zip(&strides).map(|(i, s)| i * s).sum());
        // column-major odometer: first index fastest
        for k in 0..dims.len() {
            idx[k] += 1;
            if idx[k] < dims[k] {
                break;
            }
            idx[k] = 0;
        }
    }
    perm
}

/// Column-major vectorization, the classic convention.
pub fn classic_vec(t: &DenseTensor) -> Vec<f64> {
    classic_vec_permutation(t.shape()).iter().map(|&o| t.as_slice()[o]).collect()
}
