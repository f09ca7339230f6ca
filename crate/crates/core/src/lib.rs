//! Resolvent parametrices and resolvent trace asymptotics for Shubin-class
//! operators on `ℝⁿ`, with a spectral oracle for harmonic oscillators.

pub mod calculus;
pub mod numeric;
pub mod oracle;
pub mod poly;
pub mod trace;
