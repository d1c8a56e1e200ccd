//! Dense multiway-array algebra built on the lexicographic layout.
//!
//! Tensors are stored with the last index varying fastest, so that
//! `vec(a ⊗ b) = a ⊠ b` holds without any permutation of factors. On top of
//! that layout the crate provides:
//!
//! * [`tensor`]: the [`DenseTensor`] value type, vectorization, mode-`i`
//!   matricization and an independent column-major unfolding oracle;
//! * [`products`]: outer, Kronecker and Khatri-Rao products, mode products,
//!   multilinear operators, the Kronecker determinant rule, the rank-1
//!   Jacobian and the Sylvester operator;
//! * [`models`]: CP and Tucker model containers;
//! * [`normal`]: the separable-covariance (array normal) Gaussian;
//! * [`harness`]: the randomized identity suite.
//!
//! Modes are 0-based throughout the API.
//!
//! The crate is `no_std` and only needs `alloc`.

#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod error;
pub mod harness;
pub mod matrix;
pub mod models;
pub mod normal;
pub mod products;
pub mod shape;
pub mod tensor;

mod math;

pub use error::{Error, Result};
pub use matrix::DenseMatrix;
pub use models::{CpModel, TuckerModel};
pub use normal::{MatrixNormalParams, SeparableGaussian};
pub use shape::Shape;
pub use tensor::DenseTensor;
