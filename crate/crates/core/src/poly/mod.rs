//! Exact algebra of generalized monomials `c·z^α·|z|^s` over the Gaussian rationals.
//!
//! Variables are ordered `z = (x₁..xₙ, ξ₁..ξₙ)`; index `i < n` is a position
//! variable and `n + i` its dual frequency variable.

mod bundle;
mod gaussian;

pub use bundle::{DerivKind, GeneralizedMonomial, MonomialKey, TermBundle};
pub use gaussian::{format_rational, int, parse_rational, rat, rational_to_f64, GaussianRational};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyError {
    #[error("negative radial power {power} evaluated at z = 0")]
    RadialSingularity { power: String },
    #[error("evaluation point has {got} coordinates, bundle has {expected} variables")]
    DimensionMismatch { expected: usize, got: usize },
}
