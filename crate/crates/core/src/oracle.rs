//! Spectral ground truth for the harmonic oscillator `A = |x|² − Δ` on `ℝⁿ`,
//! whose eigenvalues `2K + n` have multiplicity `binom(K+n−1, n−1)`.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::numeric::CompensatedSum;
use crate::poly::{format_rational, rational_to_f64};
use crate::trace::TraceExpansion;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("Tr(λ+A)^-N diverges for N = {power} ≤ n = {n}")]
    Divergent { power: u32, n: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("engine expansion has no complete coefficient at λ^{0}")]
    ExponentMismatch(String),
}

/// Default number of explicitly summed energy levels.
pub const EXPLICIT_LEVELS: u64 = 10_000;

/// `binom(K+n−1, n−1)` as a polynomial in `s = λ + 2K + n`, coefficients of `s^i`.
fn multiplicity_in_s(lambda: f64, n: usize) -> Vec<f64> {
    // binom(K+n−1, n−1) = Π_{i=1}^{n−1} (K+i)/i with K = (s − λ − n)/2
    let mut poly = vec![1.0];
    for i in 1..n {
        let c0 = (i as f64 - (lambda + n as f64) / 2.0) / i as f64;
        let c1 = 0.5 / i as f64;
        let mut next = vec![0.0; poly.len() + 1];
        for (k, &p) in poly.iter().enumerate() {
            next[k] += p * c0;
            next[k + 1] += p * c1;
        }
        poly = next;
    }
    poly
}

fn multiplicity(k: u64, n: usize) -> f64 {
    (1..n).fold(1.0, |acc, i| acc * (k as f64 + i as f64) / i as f64)
}

/// Bernoulli numbers `B_0..B_{count−1}` (with `B_1 = −1/2`).
pub fn bernoulli_numbers(count: usize) -> Vec<BigRational> {
    let mut b: Vec<BigRational> = Vec::with_capacity(count);
    for m in 0..count {
        if m == 0 {
            b.push(BigRational::one());
            continue;
        }
        // Σ_{k=0}^{m} binom(m+1, k) B_k = 0
        let mut acc = BigRational::zero();
        let mut binom = BigInt::one();
        for (k, bk) in b.iter().enumerate() {
            acc += bk * BigRational::from_integer(binom.clone());
            binom = binom * BigInt::from(m + 1 - k) / BigInt::from(k + 1);
        }
        b.push(-acc / BigRational::from_integer(BigInt::from(m + 1)));
    }
    b
}

/// `Tr(λ + A)^{−N} = Σ_K mult(K)(λ + 2K + n)^{−N}`: levels `K < levels` summed
/// explicitly, the rest by the Euler–Maclaurin formula with the tail integral
/// and four derivative corrections.
pub fn oscillator_trace_with_levels(lambda: f64, power: u32, n: usize, levels: u64) -> Result<f64, OracleError> {
    if n == 0 {
        return Err(OracleError::InvalidArgument("dimension must be positive".into()));
    }
    if (power as usize) <= n {
        return Err(OracleError::Divergent { power, n });
    }
    if !(lambda >= 0.0) {
        return Err(OracleError::InvalidArgument(format!("λ = {lambda} must be non-negative")));
    }
    let np = power as i32;
    let mut sum = CompensatedSum::new();
    // smallest terms first
    for k in (0..levels).rev() {
        sum.add(multiplicity(k, n) * (lambda + 2.0 * k as f64 + n as f64).powi(-np));
    }
    // f(t) = Σ_i c_i s(t)^{i−N}, s(t) = λ + 2t + n
    let coeffs = multiplicity_in_s(lambda, n);
    let s0 = lambda + 2.0 * levels as f64 + n as f64;
    let bern = bernoulli_numbers(10);
    let mut tail = CompensatedSum::new();
    for (i, &c) in coeffs.iter().enumerate() {
        let p = i as f64 - power as f64;
        // ∫_{K₀}^∞ s^p dt = s₀^{p+1} / (2(−p−1))
        tail.add(c * s0.powf(p + 1.0) / (2.0 * (-p - 1.0)));
        tail.add(c * 0.5 * s0.powf(p));
        // −Σ_k B_{2k}/(2k)! f^{(2k−1)}(K₀), d^r/dt^r s^p = 2^r p(p−1)…(p−r+1) s^{p−r}
        let mut fact = 1.0;
        for k in 1..=4usize {
            let r = 2 * k - 1;
            fact *= (2 * k - 1) as f64 * (2 * k) as f64;
            let falling: f64 = (0..r).map(|q| p - q as f64).product();
            let deriv = 2f64.powi(r as i32) * falling * s0.powf(p - r as f64);
            tail.add(-rational_to_f64(&bern[2 * k]) / fact * c * deriv);
        }
    }
    sum.add(tail.value());
    Ok(sum.value())
}

pub fn oscillator_trace(lambda: f64, power: u32, n: usize) -> Result<f64, OracleError> {
    oscillator_trace_with_levels(lambda, power, n, EXPLICIT_LEVELS)
}

/// Exact `a_0..a_{K−1}` in `Tr(λ + A)^{−N} ~ Σ_k a_k λ^{1−N−k}` for `n = 1`.
///
/// Euler–Maclaurin on `f(t) = (w + 2t)^{−N}`, `w = λ + 1`, gives
/// `Σ_{t≥0} f ~ w^{1−N}/(2(N−1)) + w^{−N}/2 + Σ_{k≥1} B_{2k} 2^{2k−1} (N)_{2k−1}/(2k)! · w^{1−N−2k}`;
/// each `w^{−p}` is re-expanded as `Σ_i binom(−p, i) λ^{−p−i}`.
pub fn oscillator_expansion_reference(power: u32, count: usize) -> Result<Vec<BigRational>, OracleError> {
    if power < 2 {
        return Err(OracleError::Divergent { power, n: 1 });
    }
    let r = |v: i64| BigRational::from_integer(BigInt::from(v));
    let nn = power as i64;
    let bern = bernoulli_numbers(count + 2);
    // e[i] is the coefficient of w^{1−N−i}
    let mut e = vec![BigRational::zero(); count];
    if count > 0 {
        e[0] = BigRational::new(BigInt::one(), BigInt::from(2 * (nn - 1)));
    }
    if count > 1 {
        e[1] = BigRational::new(BigInt::one(), BigInt::from(2));
    }
    let mut k = 1;
    while 2 * k < count {
        let mut rising = BigRational::one();
        for q in 0..(2 * k - 1) as i64 {
            rising *= r(nn + q);
        }
        let mut fact = BigRational::one();
        for q in 1..=(2 * k) as i64 {
            fact *= r(q);
        }
        e[2 * k] = &bern[2 * k] * r(1i64 << (2 * k - 1)) * rising / fact;
        k += 1;
    }
    // w^{1−N−i} = Σ_t binom(1−N−i, t) λ^{1−N−i−t}
    let mut a = vec![BigRational::zero(); count];
    for (i, ei) in e.iter().enumerate() {
        if ei.is_zero() {
            continue;
        }
        let p = r(1 - nn - i as i64);
        let mut binom = BigRational::one();
        for t in 0..(count - i) {
            a[i + t] += ei * &binom;
            binom = binom * (&p - r(t as i64)) / r(t as i64 + 1);
        }
    }
    Ok(a)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleRow {
    pub label: String,
    pub lambda_exponent: String,
    pub engine: Complex64,
    pub oracle: f64,
    pub oracle_exact: String,
    pub abs_error: f64,
    pub rel_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleReport {
    pub rows: Vec<OracleRow>,
    pub pass: bool,
}

impl OracleReport {
    fn from_rows(rows: Vec<OracleRow>) -> Self {
        let pass = rows.iter().all(|r| r.pass);
        Self { rows, pass }
    }
}

/// Row-per-coefficient comparison of `(λ-exponent, engine value)` pairs against exact references.
pub fn compare_coefficients(
    engine: &[(BigRational, Complex64)],
    reference: &[(BigRational, BigRational)],
    tolerances: &[f64],
) -> Result<OracleReport, OracleError> {
    if tolerances.is_empty() {
        return Err(OracleError::InvalidArgument("at least one tolerance required".into()));
    }
    let mut rows = Vec::with_capacity(reference.len());
    for (k, (exp, exact)) in reference.iter().enumerate() {
        let value = engine
            .iter()
            .find(|(e, _)| e == exp)
            .map(|(_, v)| *v)
            .ok_or_else(|| OracleError::ExponentMismatch(format_rational(exp)))?;
        let oracle = rational_to_f64(exact);
        let abs_error = (value - Complex64::new(oracle, 0.0)).norm();
        let tolerance = tolerances[k.min(tolerances.len() - 1)];
        rows.push(OracleRow {
            label: format!("a_{k}"),
            lambda_exponent: format_rational(exp),
            engine: value,
            oracle,
            oracle_exact: format_rational(exact),
            abs_error,
            rel_error: if oracle != 0.0 { abs_error / oracle.abs() } else { abs_error },
            tolerance,
            pass: abs_error <= tolerance,
        });
    }
    Ok(OracleReport::from_rows(rows))
}

/// Compares the engine's λ-view with `a_k λ^{1−N−k}`. `tolerances[k]` applies to
/// row `k` (the last entry repeats). Every reference exponent must be present
/// and complete in the engine expansion.
pub fn compare_expansions(
    engine: &TraceExpansion,
    reference: &[BigRational],
    power: u32,
    tolerances: &[f64],
) -> Result<OracleReport, OracleError> {
    let refs: Vec<(BigRational, BigRational)> = reference
        .iter()
        .enumerate()
        .map(|(k, a)| (BigRational::from_integer(BigInt::from(1 - power as i64 - k as i64)), a.clone()))
        .collect();
    let view: Vec<(BigRational, Complex64)> =
        engine.lambda_view.iter().filter(|c| !c.log && c.complete).map(|c| (c.exponent.clone(), c.value)).collect();
    compare_coefficients(&view, &refs, tolerances)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::rat;
    use std::f64::consts::PI;

    #[test]
    fn trace_values() {
        assert!((oscillator_trace(1.0, 2, 1).unwrap() - PI * PI / 24.0).abs() < 1e-12);
        // (3 + 2K + 1)^{-2} = (K + 2)^{-2} / 4
        assert!((oscillator_trace(3.0, 2, 1).unwrap() - (PI * PI / 6.0 - 1.0) / 4.0).abs() < 1e-12);
        assert!((oscillator_trace(5.0, 2, 1).unwrap() - (PI * PI / 6.0 - 1.25) / 4.0).abs() < 1e-12);
        assert!((oscillator_trace(0.0, 3, 2).unwrap() - PI * PI / 48.0).abs() < 1e-12);
        assert!(matches!(oscillator_trace(1.0, 1, 1), Err(OracleError::Divergent { .. })));
        assert!(matches!(oscillator_trace(1.0, 2, 2), Err(OracleError::Divergent { .. })));
    }

    #[test]
    fn level_cutoff_doubling_is_stable() {
        for (lambda, power, n) in [(1.0, 2, 1), (7.5, 3, 2), (0.0, 4, 3)] {
            let a = oscillator_trace_with_levels(lambda, power, n, 5_000).unwrap();
            let b = oscillator_trace_with_levels(lambda, power, n, 10_000).unwrap();
            assert!((a - b).abs() < 1e-13, "{a} {b}");
        }
    }

    #[test]
    fn bernoulli() {
        let b = bernoulli_numbers(9);
        assert_eq!(b[1], rat(-1, 2));
        assert_eq!(b[2], rat(1, 6));
        assert_eq!(b[4], rat(-1, 30));
        assert_eq!(b[8], rat(-1, 30));
        assert_eq!(b[3], rat(0, 1));
    }

    #[test]
    fn reference_for_squared_resolvent() {
        let a = oscillator_expansion_reference(2, 5).unwrap();
        assert_eq!(a[0], rat(1, 2));
        assert_eq!(a[1], rat(0, 1));
        assert_eq!(a[2], rat(-1, 6));
        assert_eq!(a[3], rat(0, 1));
        assert_eq!(a[4], rat(7, 30));
        for power in 2..7u32 {
            assert_eq!(oscillator_expansion_reference(power, 1).unwrap()[0], rat(1, 2 * (power as i64 - 1)));
        }
    }

    #[test]
    fn comparison_rows() {
        let e = vec![(rat(-1, 1), Complex64::new(0.5, 0.0))];
        let r = vec![(rat(-1, 1), rat(1, 2))];
        let rep = compare_coefficients(&e, &r, &[1e-6]).unwrap();
        assert!(rep.pass);
        assert_eq!(rep.rows[0].abs_error, 0.0);
        let bad = vec![(rat(-1, 1), Complex64::new(0.49, 0.0))];
        assert!(!compare_coefficients(&bad, &r, &[1e-6]).unwrap().pass);
        let missing = vec![(rat(-2, 1), Complex64::new(0.5, 0.0))];
        assert!(matches!(compare_coefficients(&missing, &r, &[1e-6]), Err(OracleError::ExponentMismatch(_))));
    }
}
