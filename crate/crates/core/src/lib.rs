//! Two-weight characteristic constants for truncated fractional Riesz
//! transforms on finitely atomic measures, and random dyadic grid experiments.

pub mod cauchy;
pub mod constants;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod geometry;
pub mod haar;
pub mod kernels;
pub mod measures;
pub mod operators;
pub mod quadrature;

pub use error::{Error, Result};
pub use exec::Exec;
