//! Numerical dynamics of linear operators.
//!
//! Hyperbolicity and generalized hyperbolicity of invertible operators,
//! shadowing of pseudo-orbits with certified constants, expansivity and
//! hypercyclicity diagnostics, and conjugacies for Lipschitz perturbations.
//! Everything runs on small dense matrices or on finitely supported
//! bilateral sequences acted on exactly by weighted shifts.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod expansivity;
pub mod homoclinic;
pub mod hypercyclic;
pub mod linalg;
pub mod linf;
pub mod operators;
pub(crate) mod orbit_window;
pub mod search;
pub mod shadowing;
pub mod splitting;
pub mod stability;
pub mod suites;

pub use error::{Error, Result};
pub use linalg::{DenseMatrix, DenseVector, NormTag, Scalar, SparseBiSeq, Vector};
pub use operators::{LinOp, OpDesc, OpKind, WeightRule};
