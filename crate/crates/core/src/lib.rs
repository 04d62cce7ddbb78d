//! Nonlocal Dirichlet problems with integrable kernels: discretization,
//! solvers, barrier certification and numerical studies.

// `!(x > 0.0)` guards are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod barriers;
pub mod config;
pub mod error;
pub mod geometry;
pub mod kernel;
pub mod nonlocal_op;
mod quad;
pub mod record;
pub mod solver;
pub mod studies;

pub use error::{Error, Result};
