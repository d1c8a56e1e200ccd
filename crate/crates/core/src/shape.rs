//! Shapes and lexicographic index arithmetic.
//!
//! An element at 0-based multi-index `(i_1, …, i_N)` of a tensor with
//! dimensions `(n_1, …, n_N)` lives at flat offset `Σ_k i_k · s_k` with
//! stride `s_k = Π_{l>k} n_l`: the last index varies fastest.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// Dimensions `(n_1, …, n_N)` of a tensor, `N ≥ 1`, every `n_i ≥ 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Shape {
    dims: Vec<usize>,
    len: usize,
}

impl Shape {
    pub fn new(dims: impl Into<Vec<usize>>) -> Result<Self> {
        let dims = dims.into();
        if dims.is_empty() {
            return Err(Error::Shape("a shape needs at least one mode".into()));
        }
        if let Some(mode) = dims.iter().position(|&n| n == 0) {
            return Err(Error::Shape(format!("mode {mode} has dimension 0")));
        }
        let len = dims
            .iter()
            .try_fold(1usize, |acc, &n| acc.checked_mul(n))
            .ok_or_else(|| Error::Capacity(format!("dimensions {dims:?} overflow usize")))?;
        Ok(Self { dims, len })
    }

    #[inline]
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.dims.len()
    }

    /// Number of elements, `Π n_i`.
    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    /// Always false: every dimension is positive.
    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn dim(&self, mode: usize) -> usize {
        self.dims[mode]
    }

    /// Lexicographic strides `s_k = Π_{l>k} n_l`.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.dims.len()];
        for k in (0..self.dims.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.dims[k + 1];
        }
        strides
    }

    pub fn check_mode(&self, mode: usize) -> Result<()> {
        if mode < self.order() {
            Ok(())
        } else {
            Err(Error::Mode { mode, order: self.order() })
        }
    }

    /// Product of all dimensions except `mode`.
    pub fn len_without(&self, mode: usize) -> usize {
        self.len / self.dims[mode]
    }

    /// Flat offset of a multi-index.
    pub fn linear_index(&self, index: &[usize]) -> Result<usize> {
        if index.len() != self.order() {
            return Err(Error::IndexLength { got: index.len(), order: self.order() });
        }
        let mut offset = 0;
        for (mode, (&i, &n)) in index.iter().zip(&self.dims).enumerate() {
            if i >= n {
                return Err(Error::Index { mode, index: i, size: n });
            }
            offset = offset * n + i;
        }
        Ok(offset)
    }

    /// Inverse of [`Shape::linear_index`].
    pub fn multi_index(&self, offset: usize) -> Result<Vec<usize>> {
        if offset >= self.len {
            return Err(Error::Offset { offset, len: self.len });
        }
        let mut index = vec![0; self.order()];
        let mut rest = offset;
        for (slot, &n) in index.iter_mut().zip(&self.dims).rev() {
            *slot = rest % n;
            rest /= n;
        }
        Ok(index)
    }

    /// Iterates every multi-index in lexicographic order.
    pub fn indices(&self) -> Indices<'_> {
        Indices { dims: &self.dims, next: Some(vec![0; self.dims.len()]) }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, n) in self.dims.iter().enumerate() {
            if k > 0 {
                f.write_str("×")?;
            }
            write!(f, "{n}")?;
        }
        Ok(())
    }
}

/// Odometer over multi-indices, last index fastest.
pub struct Indices<'a> {
    dims: &'a [usize],
    next: Option<Vec<usize>>,
}

impl Iterator for Indices<'_> {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        for k in (0..succ.len()).rev() {
            succ[k] += 1;
            if succ[k] < self.dims[k] {
                self.next = Some(succ);
                return Some(current);
            }
            succ[k] = 0;
        }
        Some(current)
    }
}
