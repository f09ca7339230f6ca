//! Coefficients of `Tr a(x,D;μ) ~ Σ_j c_j μ^{d+m−j} + Σ_ℓ (c′_ℓ log μ + c″_ℓ) μ^{d−ν−ℓ}`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};

use super::fit::{fit_basis, BasisFunction, FitResult};
use super::quadrature::{integrate, integrate_half_line, QuadResult, SphereRule, Tolerance};
use super::sphere::sphere_integral_bundle;
use super::TraceError;
use crate::calculus::{
    check_ellipticity, leibniz_truncated, mu_series, parametrix, symbol_power, CompiledBundle, CompiledSymbol,
    CutoffSpec, EllipticOperator, SphereSample, SymbolExpansion,
};
use crate::numeric::{geometric_grid, ComplexSum};
use crate::poly::{format_rational, rational_to_f64, GaussianRational, TermBundle};

/// Numerical settings shared by every stage of the engine.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    /// Points of the angular rule (trapezoid for `m = 2`, Gauss–Legendre per polar angle otherwise).
    pub sphere_order: usize,
    /// Absolute radial tolerance, in units of the natural scale `μ^{d+m}` of the integral.
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
    /// Strictly increasing, `μ ≥ 1`.
    pub mu_grid: Vec<f64>,
    /// Indices `ℓ` of the constant family to fit; defaults to all `ℓ < L` admitted by the pipeline.
    #[serde(default)]
    pub fit_ells: Option<Vec<usize>>,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            sphere_order: 64,
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_intervals: 4000,
            mu_grid: geometric_grid(10.0, 320.0, 16),
            fit_ells: None,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<(), TraceError> {
        let bad = |m: &str| Err(TraceError::InvalidSpec(m.into()));
        if self.sphere_order == 0 {
            return bad("sphere_order must be positive");
        }
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        if self.mu_grid.first().map_or(true, |&m| m < 1.0) {
            return bad("μ-grid must be non-empty with minimum at least 1");
        }
        if self.mu_grid.windows(2).any(|w| w[1] <= w[0]) || self.mu_grid.iter().any(|m| !m.is_finite()) {
            return bad("μ-grid must be finite and strictly increasing");
        }
        Ok(())
    }

    fn tolerance(&self, scale: f64) -> Tolerance {
        Tolerance { abs: self.abs_tol * scale, rel: self.rel_tol, max_intervals: self.max_intervals }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Exact,
    Quadrature,
    Fitted,
}

fn ser_rational<S: Serializer>(r: &BigRational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format_rational(r))
}

fn ser_gaussian<S: Serializer>(g: &GaussianRational, s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeTuple;
    let mut t = s.serialize_tuple(2)?;
    t.serialize_element(&format_rational(&g.re))?;
    t.serialize_element(&format_rational(&g.im))?;
    t.end()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PowerCoefficient {
    pub j: usize,
    #[serde(serialize_with = "ser_rational")]
    pub mu_exponent: BigRational,
    pub value: Complex64,
    pub error: f64,
    pub provenance: Provenance,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LogCoefficient {
    pub ell: usize,
    #[serde(serialize_with = "ser_rational")]
    pub mu_exponent: BigRational,
    #[serde(serialize_with = "ser_gaussian")]
    pub exact: GaussianRational,
    pub value: Complex64,
    pub provenance: Provenance,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstantCoefficient {
    pub ell: usize,
    #[serde(serialize_with = "ser_rational")]
    pub mu_exponent: BigRational,
    /// Fitted coefficient of the cut-off truncated symbol; depends on the cutoff.
    pub value: Complex64,
    /// `(2π)^{−n} Σ_j [∫_{|z|≤r₁} χ q_{j,ℓ} − S_{j,ℓ} r₁^{g+m}/(g+m)]`: the part carried by the components.
    pub component_part: Complex64,
    /// `value − component_part`, reported when every component is smooth at the origin.
    pub excision_corrected: Option<Complex64>,
    pub provenance: Provenance,
}

/// Coefficient of `λ^{exponent}` (times `log λ` when `log`) with `λ = μ^{d₀}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LambdaCoefficient {
    #[serde(serialize_with = "ser_rational")]
    pub exponent: BigRational,
    pub log: bool,
    pub value: Complex64,
    pub error: f64,
    /// False when a component needed for this power lies beyond the truncation.
    pub complete: bool,
    pub sources: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MuSample {
    pub mu: f64,
    /// `(2π)^{−n} ∫ χ Σ_j a_j(z, μ) dz`.
    pub integral: Complex64,
    pub integral_error: f64,
    /// `I(μ) − Σ_j c_j μ^{d+m−j}` evaluated as `−(2π)^{−n}∫ (1−χ) Σ_j a_j`; only for symbols smooth at the origin.
    pub excised: Option<Complex64>,
    pub excised_error: Option<f64>,
    /// All computed terms of the expansion at this `μ`.
    pub model: Complex64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitSummary {
    pub basis: Vec<BasisFunction>,
    pub residual_norm: f64,
    pub condition_number: f64,
    /// Whether the fit used the excised form of `I(μ) − Σ c_j μ^{d+m−j}`.
    pub excised_data: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceExpansion {
    pub n: usize,
    pub m: usize,
    #[serde(serialize_with = "ser_rational")]
    pub order: BigRational,
    #[serde(serialize_with = "ser_rational")]
    pub reg: BigRational,
    /// `(J, L)`.
    pub truncation: (usize, usize),
    pub cutoff: CutoffSpec,
    pub regular_at_origin: bool,
    pub power_coeffs: Vec<PowerCoefficient>,
    pub log_coeffs: Vec<LogCoefficient>,
    pub const_coeffs: Vec<ConstantCoefficient>,
    pub fit: Option<FitSummary>,
    pub samples: Vec<MuSample>,
    /// Order `d₀` of the resolvent parameter `λ = μ^{d₀}`, when known.
    pub lambda_order: Option<u32>,
    pub lambda_view: Vec<LambdaCoefficient>,
    pub notes: Vec<String>,
}

impl TraceExpansion {
    pub fn power(&self, j: usize) -> Option<&PowerCoefficient> {
        self.power_coeffs.iter().find(|c| c.j == j)
    }

    pub fn log(&self, ell: usize) -> Option<&LogCoefficient> {
        self.log_coeffs.iter().find(|c| c.ell == ell)
    }

    pub fn constant(&self, ell: usize) -> Option<&ConstantCoefficient> {
        self.const_coeffs.iter().find(|c| c.ell == ell)
    }

    pub fn lambda(&self, exponent: &BigRational, log: bool) -> Option<&LambdaCoefficient> {
        self.lambda_view.iter().find(|c| &c.exponent == exponent && c.log == log)
    }

    /// Terms whose μ-exponent is at least `min_exponent`, evaluated at `μ`.
    /// Constant-family terms use the fitted (cutoff-dependent) values.
    pub fn model_at(&self, mu: f64, min_exponent: f64) -> Complex64 {
        let mut s = ComplexSum::new();
        for c in &self.power_coeffs {
            let e = rational_to_f64(&c.mu_exponent);
            if e >= min_exponent - 1e-12 {
                s.add(c.value * mu.powf(e));
            }
        }
        for c in &self.log_coeffs {
            let e = rational_to_f64(&c.mu_exponent);
            if e >= min_exponent - 1e-12 {
                s.add(c.value * mu.powf(e) * mu.ln());
            }
        }
        for c in &self.const_coeffs {
            let e = rational_to_f64(&c.mu_exponent);
            if e >= min_exponent - 1e-12 {
                s.add(c.value * mu.powf(e));
            }
        }
        s.value()
    }
}

fn int(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

fn two_pi_pow(n: usize) -> f64 {
    (2.0 * std::f64::consts::PI).powi(n as i32)
}

/// `Σ_k w_k f(r ω_k)` in node order.
fn sphere_sum<F: Fn(&[f64]) -> Complex64>(rule: &SphereRule, r: f64, f: F) -> Complex64 {
    let mut s = ComplexSum::new();
    let mut z = vec![0.0; rule.m];
    for (node, &w) in rule.nodes.iter().zip(&rule.weights) {
        for (zi, &oi) in z.iter_mut().zip(node) {
            *zi = r * oi;
        }
        s.add(f(&z) * w);
    }
    s.value()
}

fn check_convergent(a: &SymbolExpansion) -> Result<(), TraceError> {
    let m = a.nvars();
    if a.order_f64() >= -(m as f64) {
        return Err(TraceError::Divergent { order: format_rational(a.order()), m });
    }
    Ok(())
}

fn require(r: QuadResult, stage: &str, mu: f64) -> Result<QuadResult, TraceError> {
    if r.converged && r.value.re.is_finite() && r.value.im.is_finite() {
        Ok(r)
    } else {
        Err(TraceError::QuadratureFailed { stage: stage.into(), mu, error: r.error, intervals: r.intervals })
    }
}

fn natural_scale(a: &SymbolExpansion, mu: f64) -> f64 {
    if mu >= 1.0 {
        mu.powf(a.order_f64() + a.nvars() as f64)
    } else {
        1.0
    }
}

/// `(2π)^{−n} ∫ χ(z) Σ_j a_j(z, μ) dz` by an angular rule and adaptive radial quadrature in `u = 1/(1+r)`.
pub fn trace_integral_numeric(a: &SymbolExpansion, mu: f64, spec: &QuadratureSpec) -> Result<QuadResult, TraceError> {
    check_convergent(a)?;
    if !(mu >= 0.0) {
        return Err(TraceError::InvalidSpec(format!("μ = {mu} must be non-negative")));
    }
    if a.is_zero() {
        return Ok(QuadResult { value: Complex64::new(0.0, 0.0), error: 0.0, evaluations: 0, intervals: 0, converged: true });
    }
    let m = a.nvars();
    let rule = SphereRule::new(m, spec.sphere_order);
    let sym = CompiledSymbol::new(a);
    let chi = a.cutoff;
    let norm = two_pi_pow(a.n());
    let g = |r: f64| {
        let c = chi.value(r);
        if c == 0.0 || r == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        sphere_sum(&rule, r, |z| sym.evaluate(z, mu)) * (c * r.powi(m as i32 - 1) / norm)
    };
    let r = integrate_half_line(g, &[chi.inner, chi.outer, mu.max(chi.outer)], &spec.tolerance(natural_scale(a, mu)));
    require(r, "trace integral", mu)
}

/// `(2π)^{−n} ∫ Σ_j a_j(z, μ) dz` without the cutoff; requires components smooth at the origin.
pub fn trace_integral_uncut(a: &SymbolExpansion, mu: f64, spec: &QuadratureSpec) -> Result<QuadResult, TraceError> {
    check_convergent(a)?;
    if !a.is_regular_at_origin() {
        return Err(TraceError::SingularAtOrigin);
    }
    let m = a.nvars();
    let rule = SphereRule::new(m, spec.sphere_order);
    let sym = CompiledSymbol::new(a);
    let norm = two_pi_pow(a.n());
    let g = |r: f64| {
        if r == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        sphere_sum(&rule, r, |z| sym.evaluate(z, mu)) * (r.powi(m as i32 - 1) / norm)
    };
    let r = integrate_half_line(g, &[1.0, mu], &spec.tolerance(natural_scale(a, mu)));
    require(r, "uncut trace integral", mu)
}

/// `−(2π)^{−n} ∫_{|z|≤r₁} (1−χ) Σ_j a_j(z, μ) dz`. For symbols smooth at the origin this equals
/// `I(μ) − Σ_j c_j μ^{d+m−j}` without the cancellation of the direct difference.
pub fn excised_integral(a: &SymbolExpansion, mu: f64, spec: &QuadratureSpec) -> Result<QuadResult, TraceError> {
    if !a.is_regular_at_origin() {
        return Err(TraceError::SingularAtOrigin);
    }
    let m = a.nvars();
    let rule = SphereRule::new(m, spec.sphere_order);
    let sym = CompiledSymbol::new(a);
    let chi = a.cutoff;
    let norm = two_pi_pow(a.n());
    let g = |r: f64| {
        let c = 1.0 - chi.value(r);
        if c == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        sphere_sum(&rule, r, |z| sym.evaluate(z, mu)) * (-c * r.powi(m as i32 - 1) / norm)
    };
    let scale = if mu >= 1.0 { mu.powf(rational_to_f64(&a.mu_shift())) } else { 1.0 };
    let r = integrate(g, &[0.0, chi.inner, chi.outer], &spec.tolerance(scale));
    require(r, "excised integral", mu)
}

/// `q_{j,ℓ}` for `ℓ < l_max`, zero where absent.
fn q_coefficients(a: &SymbolExpansion, j: usize, l_max: usize) -> Vec<TermBundle> {
    let mut out = vec![TermBundle::zero(a.nvars()); l_max];
    let series = mu_series(&a.components()[j], a.base().map(|b| b.as_ref()), l_max);
    for e in series.entries {
        out[e.ell] = e.symbol;
    }
    out
}

/// `ℓ = j − m − ν` when it is a non-negative integer.
fn log_index(a: &SymbolExpansion, j: usize) -> Option<usize> {
    let l = int(j as i64) - int(a.nvars() as i64) - a.reg();
    (l.is_integer() && !l.is_negative()).then(|| l.to_integer().to_usize()).flatten()
}

/// `(2π)^{−n} S` as an exact Gaussian rational; the sphere constant carries `π^n` when `m = 2n`.
fn normalized_sphere_integral(p: &TermBundle, n: usize) -> GaussianRational {
    let s = sphere_integral_bundle(p, 2 * n);
    debug_assert_eq!(s.pi_half_power as usize, 2 * n);
    s.coeff.scale(&BigRational::new(BigInt::from(1), BigInt::from(2).pow(n as u32)))
}

/// Exact `c′_ℓ = (2π)^{−n} Σ_j ∫_{S^{m−1}} q_{j,ℓ}` over the admissible `ℓ = j − m − ν ≥ 0`.
pub fn log_coefficients(a: &SymbolExpansion) -> BTreeMap<usize, GaussianRational> {
    let mut out: BTreeMap<usize, GaussianRational> = BTreeMap::new();
    for j in 0..a.len() {
        if let Some(l) = log_index(a, j) {
            let q = &q_coefficients(a, j, l + 1)[l];
            let v = normalized_sphere_integral(q, a.n());
            let slot = out.entry(l).or_insert_with(GaussianRational::zero);
            *slot += &v;
        }
    }
    out
}

/// Smallest `L` with `ν − j + L > −m`, so that `a_j − Σ_{ℓ<L} q_{j,ℓ}` is integrable near the origin.
fn subtraction_depth(a: &SymbolExpansion, j: usize) -> usize {
    let t = int(j as i64) - a.reg() - int(a.nvars() as i64);
    let fl = t.floor().to_integer().to_i64().expect("small index");
    (fl + 1).max(0) as usize
}

/// `c_j = (2π)^{−n} [∫_{|z|≥1} a_j(z,1) + ∫_{|w|≤1} s_j(w,1) + Σ_{ℓ non-log} S_{j,ℓ}/(ν−j+ℓ+m)]`
/// with `s_j = a_j − Σ_{ℓ<L_j} q_{j,ℓ}`.
pub fn power_coefficients(a: &SymbolExpansion, spec: &QuadratureSpec) -> Result<Vec<PowerCoefficient>, TraceError> {
    check_convergent(a)?;
    let m = a.nvars();
    let n = a.n();
    let rule = SphereRule::new(m, spec.sphere_order);
    let tol = spec.tolerance(1.0);
    let norm = two_pi_pow(n);
    let base = a.base().map(|b| b.as_ref());
    (0..a.len())
        .into_par_iter()
        .map(|j| {
            let comp = &a.components()[j];
            let mu_exponent = a.order() + int(m as i64) - int(j as i64);
            if comp.is_zero() {
                return Ok(PowerCoefficient {
                    j,
                    mu_exponent,
                    value: Complex64::new(0.0, 0.0),
                    error: 0.0,
                    provenance: Provenance::Exact,
                });
            }
            let sym = CompiledSymbol::from_components(m, base, std::slice::from_ref(comp));
            let depth = subtraction_depth(a, j);
            let qs = q_coefficients(a, j, depth);
            let log_l = log_index(a, j);
            let mut exact = GaussianRational::zero();
            let mut sub = TermBundle::zero(m);
            for (l, q) in qs.iter().enumerate() {
                if q.is_zero() {
                    continue;
                }
                sub = &sub + q;
                if Some(l) != log_l {
                    let g_plus_m = a.reg() - int(j as i64) + int(l as i64) + int(m as i64);
                    let s = normalized_sphere_integral(q, n);
                    exact += &s.scale(&(BigRational::from_integer(BigInt::from(1)) / g_plus_m));
                }
            }
            let sub = CompiledBundle::new(&sub);
            let outer = integrate_half_line(
                |r: f64| {
                    if r < 1.0 {
                        return Complex64::new(0.0, 0.0);
                    }
                    sphere_sum(&rule, r, |z| sym.evaluate(z, 1.0)) * (r.powi(m as i32 - 1) / norm)
                },
                &[1.0],
                &tol,
            );
            let outer = require(outer, "power coefficient (outer)", 1.0)?;
            let inner = integrate(
                |r: f64| {
                    if r == 0.0 {
                        return Complex64::new(0.0, 0.0);
                    }
                    let s = sphere_sum(&rule, r, |z| {
                        let v = sym.evaluate(z, 1.0);
                        if sub.is_zero() {
                            v
                        } else {
                            v - sub.evaluate_with_norm(z, r)
                        }
                    });
                    s * (r.powi(m as i32 - 1) / norm)
                },
                &[0.0, 1.0],
                &tol,
            );
            let inner = require(inner, "power coefficient (ball)", 1.0)?;
            Ok(PowerCoefficient {
                j,
                mu_exponent,
                value: outer.value + inner.value + exact.to_complex(),
                error: outer.error + inner.error,
                provenance: Provenance::Quadrature,
            })
        })
        .collect()
}

/// `(2π)^{−n} Σ_j [∫_{|z|≤r₁} χ q_{j,ℓ} − S_{j,ℓ}·r₁^{g+m}/(g+m)]`, with `−S_{j,ℓ} log r₁` when `g = −m`.
/// For integrable `q_{j,ℓ}` this is `−(2π)^{−n} Σ_j ∫ (1−χ) q_{j,ℓ}`.
pub fn component_constant_part(a: &SymbolExpansion, ell: usize, spec: &QuadratureSpec) -> Result<Complex64, TraceError> {
    let m = a.nvars();
    let n = a.n();
    let rule = SphereRule::new(m, spec.sphere_order);
    let norm = two_pi_pow(n);
    let chi = a.cutoff;
    let r1 = chi.outer;
    let mut total = ComplexSum::new();
    for j in 0..a.len() {
        let q = &q_coefficients(a, j, ell + 1)[ell];
        if q.is_zero() {
            continue;
        }
        let cq = CompiledBundle::new(q);
        let ball = integrate(
            |r: f64| {
                let c = chi.value(r);
                if c == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                sphere_sum(&rule, r, |z| cq.evaluate_with_norm(z, r)) * (c * r.powi(m as i32 - 1) / norm)
            },
            &[0.0, chi.inner, r1],
            &spec.tolerance(1.0),
        );
        let ball = require(ball, "component constant part", 1.0)?;
        let s = normalized_sphere_integral(q, n).to_complex();
        let g_plus_m = rational_to_f64(&(a.reg() - int(j as i64) + int(ell as i64) + int(m as i64)));
        let sub = if g_plus_m == 0.0 { s * r1.ln() } else { s * (r1.powf(g_plus_m) / g_plus_m) };
        total.add(ball.value - sub);
    }
    Ok(total.value())
}

fn known_terms(power: &[PowerCoefficient], logs: &[LogCoefficient]) -> Vec<(BasisFunction, Complex64)> {
    power
        .iter()
        .map(|c| (BasisFunction::power(rational_to_f64(&c.mu_exponent)), c.value))
        .chain(logs.iter().map(|c| (BasisFunction::log_power(rational_to_f64(&c.mu_exponent)), c.value)))
        .collect()
}

/// Fits `y(μ) − Σ known ≈ Σ_k c_k φ_k(μ)`.
pub fn fit_constant_coefficients(
    samples: &[(f64, Complex64)],
    known: &[(BasisFunction, Complex64)],
    basis: &[BasisFunction],
) -> Result<FitResult, TraceError> {
    let data: Vec<(f64, Complex64)> = samples
        .iter()
        .map(|&(mu, y)| {
            let mut s = ComplexSum::new();
            s.add(y);
            for (b, c) in known {
                s.add(-(c * b.eval(mu)));
            }
            (mu, s.value())
        })
        .collect();
    fit_basis(&data, basis)
}

/// Full expansion of the trace of a truncated symbol: exact log coefficients,
/// quadrature power coefficients, sampled integrals and fitted constants.
///
/// `ell_step` restricts the fitted constant family to `ℓ ≡ 0 (mod ell_step)`;
/// `lambda_order` adds the view in `λ = μ^{lambda_order}`.
pub fn trace_expansion(
    a: &SymbolExpansion,
    l_max: usize,
    ell_step: usize,
    lambda_order: Option<u32>,
    spec: &QuadratureSpec,
) -> Result<TraceExpansion, TraceError> {
    spec.validate()?;
    check_convergent(a)?;
    let m = a.nvars();
    let n = a.n();
    let regular = a.is_regular_at_origin();

    let log_exact = log_coefficients(a);
    let log_coeffs: Vec<LogCoefficient> = log_exact
        .into_iter()
        .map(|(ell, exact)| LogCoefficient {
            ell,
            mu_exponent: a.mu_shift() - int(ell as i64),
            value: exact.to_complex(),
            exact,
            provenance: Provenance::Exact,
        })
        .collect();
    let power_coeffs = power_coefficients(a, spec)?;

    let sampled: Vec<(f64, QuadResult, Option<QuadResult>)> = spec
        .mu_grid
        .par_iter()
        .map(|&mu| {
            let i = trace_integral_numeric(a, mu, spec)?;
            let e = if regular { Some(excised_integral(a, mu, spec)?) } else { None };
            Ok((mu, i, e))
        })
        .collect::<Result<_, TraceError>>()?;

    let ells: Vec<usize> = match &spec.fit_ells {
        Some(v) => v.clone(),
        None => (0..l_max).filter(|l| l % ell_step.max(1) == 0).collect(),
    };
    let basis: Vec<BasisFunction> =
        ells.iter().map(|&l| BasisFunction::power(rational_to_f64(&(a.mu_shift() - int(l as i64))))).collect();
    let fit = if regular {
        let data: Vec<(f64, Complex64)> = sampled.iter().map(|(mu, _, e)| (*mu, e.expect("regular").value)).collect();
        fit_constant_coefficients(&data, &[], &basis)?
    } else {
        let data: Vec<(f64, Complex64)> = sampled.iter().map(|(mu, i, _)| (*mu, i.value)).collect();
        fit_constant_coefficients(&data, &known_terms(&power_coeffs, &log_coeffs), &basis)?
    };

    let parts: Vec<Complex64> = ells
        .par_iter()
        .map(|&l| component_constant_part(a, l, spec))
        .collect::<Result<_, TraceError>>()?;
    let const_coeffs: Vec<ConstantCoefficient> = ells
        .iter()
        .zip(&fit.coefficients)
        .zip(&parts)
        .map(|((&ell, &value), &component_part)| ConstantCoefficient {
            ell,
            mu_exponent: a.mu_shift() - int(ell as i64),
            value,
            component_part,
            excision_corrected: regular.then(|| value - component_part),
            provenance: Provenance::Fitted,
        })
        .collect();

    let mut out = TraceExpansion {
        n,
        m,
        order: a.order().clone(),
        reg: a.reg().clone(),
        truncation: (a.len(), l_max),
        cutoff: a.cutoff,
        regular_at_origin: regular,
        power_coeffs,
        log_coeffs,
        const_coeffs,
        fit: Some(FitSummary {
            basis,
            residual_norm: fit.residual_norm,
            condition_number: fit.condition_number,
            excised_data: regular,
        }),
        samples: Vec::new(),
        lambda_order,
        lambda_view: Vec::new(),
        notes: Vec::new(),
    };
    out.samples = sampled
        .iter()
        .map(|(mu, i, e)| MuSample {
            mu: *mu,
            integral: i.value,
            integral_error: i.error,
            excised: e.map(|e| e.value),
            excised_error: e.map(|e| e.error),
            model: out.model_at(*mu, f64::NEG_INFINITY),
        })
        .collect();
    if regular {
        out.notes.push(
            "constant coefficients fitted to the excised integral -(2π)^{-n}∫(1-χ)a, which equals I(μ) - Σ_j c_j μ^{d+m-j} for symbols smooth at the origin"
                .into(),
        );
    }
    if let Some(d0) = lambda_order {
        out.lambda_view = lambda_view(&out, d0);
    }
    Ok(out)
}

fn lambda_view(t: &TraceExpansion, d0: u32) -> Vec<LambdaCoefficient> {
    let d0r = int(d0 as i64);
    let j_max = t.truncation.0;
    // smallest μ-exponent for which every power coefficient is available
    let complete_from = &t.order + int(t.m as i64) - int(j_max as i64) + int(1);
    let mut map: BTreeMap<(BigRational, bool), (Complex64, f64, Vec<String>)> = BTreeMap::new();
    for c in &t.power_coeffs {
        let e = (c.mu_exponent.clone(), false);
        let slot = map.entry(e).or_insert((Complex64::new(0.0, 0.0), 0.0, Vec::new()));
        slot.0 += c.value;
        slot.1 += c.error;
        slot.2.push(format!("c_{}", c.j));
    }
    for c in &t.const_coeffs {
        let v = c.excision_corrected.unwrap_or(c.value);
        let slot = map.entry((c.mu_exponent.clone(), false)).or_insert((Complex64::new(0.0, 0.0), 0.0, Vec::new()));
        slot.0 += v;
        slot.2.push(if c.excision_corrected.is_some() { format!("c''_{} (excision-corrected)", c.ell) } else { format!("c''_{}", c.ell) });
    }
    for c in &t.log_coeffs {
        let slot = map.entry((c.mu_exponent.clone(), true)).or_insert((Complex64::new(0.0, 0.0), 0.0, Vec::new()));
        // μ^e log μ = (1/d₀) λ^{e/d₀} log λ
        slot.0 += c.value / d0 as f64;
        slot.2.push(format!("c'_{}/{}", c.ell, d0));
    }
    let mut out: Vec<LambdaCoefficient> = map
        .into_iter()
        .map(|((e, log), (value, error, sources))| LambdaCoefficient {
            complete: e >= complete_from,
            exponent: e / &d0r,
            log,
            value,
            error,
            sources,
        })
        .collect();
    out.sort_by(|a, b| b.exponent.cmp(&a.exponent).then(a.log.cmp(&b.log)));
    out
}

/// Resolvent pipeline for `Tr q(x,D)(λ − p₀(x,D))^{−N}` with `λ = μ^d`:
/// `q # parametrix(p₀, J)^{#N}` truncated to `J` components, then [`trace_expansion`]
/// with the constant family restricted to multiples of `d`.
pub fn resolvent_trace_expansion(
    p0: &EllipticOperator,
    q: &SymbolExpansion,
    power: u32,
    j_max: usize,
    l_max: usize,
    cutoff: CutoffSpec,
    spec: &QuadratureSpec,
) -> Result<TraceExpansion, TraceError> {
    let d = p0.order();
    let n = p0.n();
    let omega = q.order();
    let lhs = omega - int(d as i64 * power as i64);
    if lhs >= int(-2 * n as i64) {
        return Err(TraceError::Precondition(format!(
            "ω − dN = {} must be below −2n = {}",
            format_rational(&lhs),
            -2 * n as i64
        )));
    }
    if power == 0 || j_max == 0 || l_max == 0 {
        return Err(TraceError::Precondition("N, J and L must be at least 1".into()));
    }
    if q.nvars() != p0.nvars() {
        return Err(TraceError::Precondition("q and p₀ live in different dimensions".into()));
    }
    check_ellipticity(p0, &SphereSample::default())?;
    let b = parametrix(p0, j_max)?;
    let bn = symbol_power(&b, power, j_max)?;
    let a = leibniz_truncated(q, &bn, j_max)?.with_cutoff(cutoff);
    trace_expansion(&a, l_max, d as usize, Some(d), spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::CutoffProfile;
    use crate::poly::int as rint;

    #[test]
    fn resolvent_square_integrals() {
        let base = EllipticOperator::harmonic_oscillator(1).denominator_base();
        let a = SymbolExpansion::single_piece(base, TermBundle::one(2), 2, rint(0)).unwrap();
        let spec = QuadratureSpec::default();
        let i1 = trace_integral_uncut(&a, 1.0, &spec).unwrap();
        assert!((i1.value.re - 0.5).abs() < 1e-11);
        let i2 = trace_integral_uncut(&a, 2.0, &spec).unwrap();
        assert!((i2.value.re - 0.125).abs() < 1e-12);
        let c = power_coefficients(&a, &spec).unwrap();
        assert!((c[0].value.re - 0.5).abs() < 1e-11);
    }

    #[test]
    fn zero_symbol_integrates_to_zero() {
        let base = EllipticOperator::harmonic_oscillator(1).denominator_base();
        let a = SymbolExpansion::single_piece(base, TermBundle::one(2), 2, rint(0)).unwrap();
        let z = a.truncated(0);
        assert_eq!(trace_integral_numeric(&z, 3.0, &QuadratureSpec::default()).unwrap().value, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn synthetic_log_symbol() {
        let base = EllipticOperator::harmonic_oscillator(1).denominator_base();
        let a = SymbolExpansion::single_piece(base, TermBundle::radial(2, rint(-2)), 2, rint(-2))
            .unwrap()
            .with_cutoff(CutoffSpec::new(0.5, 1.0, CutoffProfile::SmoothBump).unwrap());
        let logs = log_coefficients(&a);
        assert_eq!(logs.len(), 1);
        assert_eq!(logs[&0], GaussianRational::from_int(1));
    }

    #[test]
    fn divergent_symbols_are_refused() {
        let base = EllipticOperator::harmonic_oscillator(1).denominator_base();
        let a = SymbolExpansion::single_piece(base, TermBundle::one(2), 1, rint(0)).unwrap();
        assert!(matches!(trace_integral_numeric(&a, 1.0, &QuadratureSpec::default()), Err(TraceError::Divergent { .. })));
    }

    #[test]
    fn spec_validation() {
        let mut s = QuadratureSpec::default();
        assert!(s.validate().is_ok());
        s.mu_grid = vec![10.0, 5.0];
        assert!(s.validate().is_err());
        s.mu_grid = vec![0.5, 5.0];
        assert!(s.validate().is_err());
    }
}
