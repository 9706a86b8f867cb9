//! Exact rational dense linear algebra.
//!
//! All structural decisions in the pipeline (ranks, pivots, kernels,
//! dependencies) are made here, in exact arithmetic, so that every
//! transformation is reproducible bit for bit.

mod elim;
mod matrix;
mod rational;

pub use elim::{
    determinant, in_row_space, inverse, kernel_basis, rank, row_dependencies, select_independent_rows, sign_normalized,
};
pub use matrix::RMatrix;
pub use rational::{q, qi, ParseRationalError, Rational};
