//! Robust evaluation of multiple information sources under unknown
//! correlation: worst-case values over coupling polytopes, Blackwell
//! suprema, canonical and weak decompositions, maxmin strategies, and
//! large-sample dominance analysis.

pub mod asymptotics;
pub mod blackwell;
pub mod cli;
pub mod decompose;
pub mod error;
pub mod linprog;
pub mod model;
pub mod oracle;
pub mod robust;

#[doc(hidden)]
pub mod test_support;

pub use error::{Error, Result};

/// Tolerance for validating user-supplied data (row sums, priors).
pub const INPUT_TOL: f64 = 1e-12;
/// Tolerance for validating computed objects (LP outputs, marginals).
pub const COMPUTED_TOL: f64 = 1e-8;
/// Tolerance for comparing values produced by independent routes.
pub const VALUE_TOL: f64 = 1e-6;
/// Default cap on the product signal space size.
pub const DEFAULT_CELL_CAP: usize = 100_000;
