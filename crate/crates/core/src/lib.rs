//! Dominated splitting certificates for Jacobi cocycles.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certifier;
pub mod error;
pub mod harness;
pub mod jacobi;
pub mod mat2;
pub mod models;
pub mod sphere;

pub use error::{Error, Result};
pub use jacobi::JacobiOperator;
pub use mat2::{Mat2, MatSequence};
pub use sphere::ProjPoint;
