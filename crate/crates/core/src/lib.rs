//! Recasting of quasipolynomial ODE systems into Lotka-Volterra and
//! unimonomial form by exact matrix transformations, with numeric
//! verification of the recast dynamics.
//!
//! ```
//! use qprecast::{fixtures, reductions::{to_lotka_volterra, EmbedMode}};
//!
//! let morse = fixtures::morse();
//! let report = to_lotka_volterra(&morse, EmbedMode::Full).unwrap();
//! assert!(report.output.b.is_identity());
//! assert_eq!(report.output.composed(), morse.class_invariant());
//! ```

pub mod cli;
pub mod error;
pub mod exactalg;
pub mod fixtures;
pub mod numeric;
pub mod qpmodel;
pub mod random;
pub mod reductions;
pub mod transforms;

pub use error::{Error, Result};
pub use exactalg::{RMatrix, Rational};
pub use qpmodel::QpSystem;
