//! Random-matrix laboratory: ensembles, limiting spectral laws, Gibbs
//! Hamiltonians, eigenvalue flows, local statistics and one-dimensional
//! grid solvers.

// Validation writes `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod density;
pub mod dynamics;
pub mod ensembles;
pub mod error;
pub mod gibbs;
pub mod relaxation1d;
pub mod rng;
pub mod statistics;

pub use error::{Result, RmtError};
