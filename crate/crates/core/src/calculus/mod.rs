//! Truncated parameter-dependent symbols, their composition, resolvent
//! parametrices and coefficients of the expansion at `μ → ∞`.

mod compiled;
mod estimates;
mod leibniz;
mod limits;
mod parametrix;
mod symbol;

pub use compiled::{CompiledBundle, CompiledComponent, CompiledSymbol};
pub use estimates::{check_symbol_estimates, EstimateGrid, EstimateReport, EvaluableSymbol, FnSymbol};
pub use leibniz::{
    add_components, differentiate_component, differentiate_component_multi, leibniz_bundles, leibniz_truncated,
    multi_indices, multiply_component_by_bundle, multiply_components, scale_component, symbol_power,
};
pub use limits::{
    apply_b_matrix, b_matrix, binomial, brace_coefficients, bracket_coefficients, bracket_from_brace,
    coefficient_polynomial, mu_series, MuEntry, MuExpansion,
};
pub use parametrix::{check_ellipticity, parametrix, sphere_sample_points, EllipticityCertificate, SphereSample};
pub use symbol::{
    unit_symbol, CutoffProfile, CutoffSpec, DenominatorBase, EllipticOperator, HomogeneousComponent, SymbolExpansion,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalculusError {
    #[error("invalid operator: {0}")]
    InvalidOperator(String),
    #[error("invalid symbol: {0}")]
    InvalidSymbol(String),
    #[error("invalid cutoff radii: need 0 < inner ({inner}) < outer ({outer})")]
    InvalidCutoff { inner: f64, outer: f64 },
    #[error("operands use different denominator bases")]
    BaseMismatch,
    #[error("operands live in different dimensions ({left} vs {right} variables)")]
    DimensionMismatch { left: usize, right: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("principal symbol value {value:?} at {point:?} lies within tolerance of the closed positive half-line")]
    NotElliptic { point: Vec<f64>, value: (f64, f64) },
}
