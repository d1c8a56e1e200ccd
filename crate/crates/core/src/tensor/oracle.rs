//! Column-major emulation of the permute-then-reshape unfolding recipe.
//!
//! This path shares no index arithmetic with [`DenseTensor::matricize`]: it
//! converts the tensor into a column-major array, permutes it the way
//! `permute` does in column-major array languages, then reads the
//! result as an `n_mode × rest` matrix with first-index-fastest semantics.
//! For order 3 the permutations are `[1,3,2]`, `[2,3,1]` and `[3,2,1]`
//! (1-based); in general the trailing modes come in descending order.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::Result;
use crate::matrix::DenseMatrix;
use crate::tensor::DenseTensor;

/// Array stored first-index-fastest.
struct ColumnMajor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl ColumnMajor {
    fn from_lexicographic(t: &DenseTensor) -> Self {
        let dims = t.dims().to_vec();
        let mut data = vec![0.0; t.as_slice().len()];
        // Walk storage in lexicographic order, tracking the index.
        let mut idx = vec![0usize; dims.len()];
        for &v in t.as_slice() {
            data[Self::offset(&dims, &idx)] = v;
            for k in (0..dims.len()).rev() {
                idx[k] += 1;
                if idx[k] < dims[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
        Self { dims, data }
    }

    fn offset(dims: &[usize], idx: &[usize]) -> usize {
        let mut offset = 0;
        let mut scale = 1;
        for (i, n) in idx.iter().zip(dims) {
            offset += i * scale;
            scale *= n;
        }
        offset
    }

    /// `permute(A, order)` with 0-based `order`.
    fn permute(&self, order: &[usize]) -> Self {
        let dims: Vec<usize> = order.iter().map(|&o| self.dims[o]).collect();
        let mut data = vec![0.0; self.data.len()];
        let mut out_idx = vec![0usize; dims.len()];
        let mut src_idx = vec![0usize; dims.len()];
        for slot in data.iter_mut() {
            for (a, &o) in order.iter().enumerate() {
                src_idx[o] = out_idx[a];
            }
            *slot = self.data[Self::offset(&self.dims, &src_idx)];
            for k in 0..dims.len() {
                out_idx[k] += 1;
                if out_idx[k] < dims[k] {
                    break;
                }
                out_idx[k] = 0;
            }
        }
        Self { dims, data }
    }

    /// `reshape(A, rows, cols)` read back into a row-major matrix.
    fn reshape(&self, rows: usize, cols: usize) -> Result<DenseMatrix> {
        let mut out = DenseMatrix::zeros(rows, cols);
        for c in 0..cols {
            for r in 0..rows {
                out[(r, c)] = self.data[r + rows * c];
            }
        }
        Ok(out)
    }
}

/// Mode-`mode` unfolding via permute (mode first, the rest descending)
/// followed by a column-major reshape.
pub fn matricize_oracle(t: &DenseTensor, mode: usize) -> Result<DenseMatrix> {
    t.shape().check_mode(mode)?;
    let order: Vec<usize> = core::iter::once(mode).chain((0..t.order()).rev().filter(|&m| m != mode)).collect();
    let n = t.dims()[mode];
    ColumnMajor::from_lexicographic(t).permute(&order).reshape(n, t.as_slice().len() / n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn recipe_on_one_to_eight() {
        let t = DenseTensor::from_dims(vec![2, 2, 2], (1..=8).map(f64::from).collect()).unwrap();
        let m = matricize_oracle(&t, 0).unwrap();
        assert_eq!(m.row(0), &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.row(1), &[5.0, 6.0, 7.0, 8.0]);
        assert_eq!(matricize_oracle(&t, 5), Err(Error::Mode { mode: 5, order: 3 }));
    }

    #[test]
    fn order_two_mode_one_is_the_matrix() {
        let t = DenseTensor::from_dims(vec![3, 2], (0..6).map(f64::from).collect()).unwrap();
        assert_eq!(matricize_oracle(&t, 0).unwrap().as_slice(), t.as_slice());
    }

    #[test]
    fn agrees_with_direct_unfolding_on_small_shapes() {
        for dims in [[2, 3, 4], [4, 1, 3], [1, 5, 2], [3, 3, 3]] {
            let t =
                DenseTensor::from_dims(dims.to_vec(), (0..dims.iter().product::<usize>()).map(|v| v as f64).collect())
                    .unwrap();
            for mode in 0..3 {
                assert_eq!(matricize_oracle(&t, mode).unwrap(), t.matricize(mode).unwrap(), "{dims:?} mode {mode}");
            }
        }
    }
}
