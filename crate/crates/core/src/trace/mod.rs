//! Trace integrals of truncated symbols and the coefficients of their large-μ expansion.

mod expansion;
mod fit;
mod quadrature;
mod sphere;

pub use expansion::{
    component_constant_part, excised_integral, fit_constant_coefficients, log_coefficients, power_coefficients,
    resolvent_trace_expansion, trace_expansion, trace_integral_numeric, trace_integral_uncut, ConstantCoefficient,
    FitSummary, LambdaCoefficient, LogCoefficient, MuSample, PowerCoefficient, Provenance, QuadratureSpec,
    TraceExpansion,
};
pub use fit::{fit_basis, BasisFunction, FitResult};
pub use quadrature::{gauss_legendre, integrate, integrate_half_line, QuadResult, SphereRule, Tolerance};
pub use sphere::{
    monte_carlo_sphere_integral, sphere_area, sphere_integral_bundle, sphere_integral_exact, MonteCarloEstimate,
    SphereConstant,
};

use thiserror::Error;

use crate::calculus::CalculusError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TraceError {
    #[error(transparent)]
    Calculus(#[from] CalculusError),
    #[error("trace integral diverges: order {order} is not below −m = −{m}")]
    Divergent { order: String, m: usize },
    #[error("{stage} did not reach tolerance at μ = {mu} (error estimate {error:.3e} after {intervals} intervals)")]
    QuadratureFailed { stage: String, mu: f64, error: f64, intervals: usize },
    #[error("symbol is singular at the origin; the uncut or excised integral is undefined")]
    SingularAtOrigin,
    #[error("{samples} distinct sample points, at least {required} required")]
    InsufficientSamples { samples: usize, required: usize },
    #[error("fit basis is ill-conditioned (condition number {condition_number:.3e})")]
    IllConditioned { condition_number: f64 },
    #[error("least-squares solve failed: {0}")]
    FitFailed(String),
    #[error("invalid quadrature settings: {0}")]
    InvalidSpec(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
}
