use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::CalculusError;
use crate::poly::{format_rational, rational_to_f64, GaussianRational, TermBundle};

/// Differential-type operator symbol `p₀ = Σ_ℓ p₀^{(d-ℓ)}` with polynomial homogeneous components.
#[derive(Clone, Debug, PartialEq)]
pub struct EllipticOperator {
    n: usize,
    d: u32,
    components: Vec<TermBundle>,
}

impl EllipticOperator {
    /// `components[ℓ]` is the part of degree `d - ℓ`; missing trailing parts are zero.
    pub fn new(n: usize, d: u32, mut components: Vec<TermBundle>) -> Result<Self, CalculusError> {
        if d == 0 {
            return Err(CalculusError::InvalidOperator("order d must be positive".into()));
        }
        if components.len() > d as usize + 1 {
            return Err(CalculusError::InvalidOperator(format!(
                "{} components given for order {d}; at most d+1 allowed",
                components.len()
            )));
        }
        components.resize(d as usize + 1, TermBundle::zero(2 * n));
        for (l, c) in components.iter().enumerate() {
            if c.nvars() != 2 * n {
                return Err(CalculusError::InvalidOperator(format!("component {l} has {} variables", c.nvars())));
            }
            if !c.is_polynomial() {
                return Err(CalculusError::InvalidOperator(format!("component {l} is not polynomial")));
            }
            let deg = BigRational::from_integer(BigInt::from(d as i64 - l as i64));
            if !c.is_homogeneous_of(&deg) {
                return Err(CalculusError::InvalidOperator(format!(
                    "component {l} is not homogeneous of degree {}",
                    d as usize - l
                )));
            }
        }
        if components[0].is_zero() {
            return Err(CalculusError::InvalidOperator("principal part vanishes".into()));
        }
        Ok(Self { n, d, components })
    }

    /// Splits a polynomial of degree `d` into its homogeneous parts.
    pub fn from_polynomial(n: usize, d: u32, p: &TermBundle) -> Result<Self, CalculusError> {
        let mut comps = vec![TermBundle::zero(2 * n); d as usize + 1];
        for (deg, part) in p.homogeneous_parts() {
            let g = deg
                .to_integer()
                .to_i64()
                .filter(|g| deg.is_integer() && *g >= 0 && *g <= d as i64)
                .ok_or_else(|| {
                    CalculusError::InvalidOperator(format!("term of degree {} outside 0..={d}", format_rational(&deg)))
                })?;
            comps[(d as i64 - g) as usize] = part;
        }
        Self::new(n, d, comps)
    }

    /// `p₀ = -(|x|² + |ξ|²)`, so that `-p₀(x,D)` is the harmonic oscillator.
    pub fn harmonic_oscillator(n: usize) -> Self {
        let p = -&TermBundle::norm_squared(2 * n);
        Self::new(n, 2, vec![p]).expect("valid operator")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nvars(&self) -> usize {
        2 * self.n
    }

    pub fn order(&self) -> u32 {
        self.d
    }

    pub fn principal(&self) -> &TermBundle {
        &self.components[0]
    }

    /// `p₀^{(d-ℓ)}`, zero for `ℓ > d`.
    pub fn component(&self, l: usize) -> Option<&TermBundle> {
        self.components.get(l)
    }

    pub fn components(&self) -> &[TermBundle] {
        &self.components
    }

    pub fn denominator_base(&self) -> Arc<DenominatorBase> {
        Arc::new(DenominatorBase { order: self.d, principal: self.components[0].clone() })
    }
}

/// `R(z, μ) = μ^d − p₀^{(d)}(z)`, the common denominator of resolvent components.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DenominatorBase {
    pub order: u32,
    pub principal: TermBundle,
}

impl DenominatorBase {
    pub fn evaluate(&self, z: &[f64], mu: f64) -> Complex64 {
        let p = self.principal.evaluate(z).expect("principal symbol is polynomial");
        Complex64::new(mu.powi(self.order as i32), 0.0) - p
    }
}

/// Homogeneous piece `Σ_M γ_M(z) R^{-M}` of joint degree `degree`.
///
/// `M` may be negative (positive powers of `R`). The numerator `γ_M` is
/// homogeneous of degree `degree + d·M`; the representation is unique, so
/// structural equality is mathematical equality.
#[derive(Clone, Debug, PartialEq)]
pub struct HomogeneousComponent {
    nvars: usize,
    pieces: BTreeMap<i32, TermBundle>,
    degree: BigRational,
    reg_index: BigRational,
}

impl HomogeneousComponent {
    pub fn zero(nvars: usize, degree: BigRational, reg_index: BigRational) -> Self {
        Self { nvars, pieces: BTreeMap::new(), degree, reg_index }
    }

    /// Validates numerator homogeneity and that every μ-power produced by
    /// expanding the pieces sits at a non-negative integer offset from the
    /// leading power `μ^{degree − reg_index}`.
    pub fn new(
        nvars: usize,
        pieces: BTreeMap<i32, TermBundle>,
        degree: BigRational,
        reg_index: BigRational,
        base_order: Option<u32>,
    ) -> Result<Self, CalculusError> {
        let mut out = Self::zero(nvars, degree, reg_index);
        for (m, num) in pieces {
            if num.is_zero() {
                continue;
            }
            if num.nvars() != nvars {
                return Err(CalculusError::InvalidSymbol("numerator variable count mismatch".into()));
            }
            let d = match (base_order, m) {
                (_, 0) => 0,
                (Some(d), _) => d,
                (None, _) => return Err(CalculusError::InvalidSymbol("R-power without a denominator base".into())),
            };
            let num_deg = &out.degree + BigRational::from_integer(BigInt::from(d as i64 * m as i64));
            if !num.is_homogeneous_of(&num_deg) {
                return Err(CalculusError::InvalidSymbol(format!(
                    "numerator of R^{} is not homogeneous of degree {}",
                    -m,
                    format_rational(&num_deg)
                )));
            }
            let offset = &num_deg - &out.reg_index;
            if !offset.is_integer() || offset.is_negative() {
                return Err(CalculusError::InvalidSymbol(format!(
                    "regularity index {} exceeds the numerator degree {} of R^{}",
                    format_rational(&out.reg_index),
                    format_rational(&num_deg),
                    -m
                )));
            }
            out.pieces.insert(m, num);
        }
        Ok(out)
    }

    pub(crate) fn from_pieces_unchecked(
        nvars: usize,
        pieces: BTreeMap<i32, TermBundle>,
        degree: BigRational,
        reg_index: BigRational,
    ) -> Self {
        let pieces = pieces.into_iter().filter(|(_, b)| !b.is_zero()).collect();
        Self { nvars, pieces, degree, reg_index }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn degree(&self) -> &BigRational {
        &self.degree
    }

    pub fn reg_index(&self) -> &BigRational {
        &self.reg_index
    }

    /// Numerators keyed by the power `M` of `R^{-M}`.
    pub fn pieces(&self) -> &BTreeMap<i32, TermBundle> {
        &self.pieces
    }

    pub fn is_zero(&self) -> bool {
        self.pieces.is_empty()
    }

    /// True when every numerator is a polynomial, i.e. the component is smooth at `z = 0` for `μ > 0`.
    pub fn is_regular_at_origin(&self) -> bool {
        self.pieces.values().all(TermBundle::is_polynomial)
    }

    pub fn evaluate(&self, base: Option<&DenominatorBase>, z: &[f64], mu: f64) -> Complex64 {
        let r = base.map(|b| b.evaluate(z, mu));
        let mut acc = crate::numeric::ComplexSum::new();
        for (&m, num) in &self.pieces {
            let v = num.evaluate(z).unwrap_or(Complex64::new(f64::NAN, f64::NAN));
            let factor = if m == 0 { Complex64::new(1.0, 0.0) } else { r.expect("base required").powi(-m) };
            acc.add(v * factor);
        }
        acc.value()
    }

    pub(crate) fn with_indices(mut self, degree: BigRational, reg_index: BigRational) -> Self {
        self.degree = degree;
        self.reg_index = reg_index;
        self
    }
}

/// Zero-excision function `χ(|z|)`: 0 for `|z| ≤ inner`, 1 for `|z| ≥ outer`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffSpec {
    pub inner: f64,
    pub outer: f64,
    pub profile: CutoffProfile,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CutoffProfile {
    SmoothBump,
    /// Indicator of `|z| ≥ outer`.
    Sharp,
}

impl Default for CutoffSpec {
    fn default() -> Self {
        Self { inner: 0.5, outer: 1.0, profile: CutoffProfile::SmoothBump }
    }
}

impl CutoffSpec {
    pub fn new(inner: f64, outer: f64, profile: CutoffProfile) -> Result<Self, CalculusError> {
        if !(inner > 0.0 && inner < outer && outer.is_finite()) {
            return Err(CalculusError::InvalidCutoff { inner, outer });
        }
        Ok(Self { inner, outer, profile })
    }

    pub fn value(&self, r: f64) -> f64 {
        match self.profile {
            CutoffProfile::Sharp => {
                if r >= self.outer {
                    1.0
                } else {
                    0.0
                }
            }
            CutoffProfile::SmoothBump => {
                if r <= self.inner {
                    0.0
                } else if r >= self.outer {
                    1.0
                } else {
                    let t = (r - self.inner) / (self.outer - self.inner);
                    let a = bump_exp(t);
                    let b = bump_exp(1.0 - t);
                    a / (a + b)
                }
            }
        }
    }
}

fn bump_exp(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// Truncated poly-homogeneous symbol: components `j = 0..J-1` of degree
/// `order − j` and regularity `reg − j`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolExpansion {
    nvars: usize,
    order: BigRational,
    reg: BigRational,
    base: Option<Arc<DenominatorBase>>,
    components: Vec<HomogeneousComponent>,
    pub cutoff: CutoffSpec,
    /// `None` when the components represent the symbol exactly (finite expansion).
    remainder_order: Option<(BigRational, BigRational)>,
}

impl SymbolExpansion {
    pub fn new(
        nvars: usize,
        order: BigRational,
        reg: BigRational,
        base: Option<Arc<DenominatorBase>>,
        components: Vec<HomogeneousComponent>,
        exact: bool,
    ) -> Result<Self, CalculusError> {
        for (j, c) in components.iter().enumerate() {
            let jj = BigRational::from_integer(BigInt::from(j));
            if c.degree != &order - &jj || c.reg_index != &reg - &jj {
                return Err(CalculusError::InvalidSymbol(format!(
                    "component {j} has indices ({}, {}), expected ({}, {})",
                    format_rational(&c.degree),
                    format_rational(&c.reg_index),
                    format_rational(&(&order - &jj)),
                    format_rational(&(&reg - &jj))
                )));
            }
            if c.nvars != nvars {
                return Err(CalculusError::InvalidSymbol(format!("component {j} variable count mismatch")));
            }
            if base.is_none() && c.pieces.keys().any(|&m| m != 0) {
                return Err(CalculusError::InvalidSymbol(format!("component {j} uses R without a base")));
            }
        }
        let j = BigRational::from_integer(BigInt::from(components.len()));
        let remainder_order = (!exact).then(|| (&order - &j, &reg - &j));
        Ok(Self { nvars, order, reg, base, components, cutoff: CutoffSpec::default(), remainder_order })
    }

    pub(crate) fn from_parts_unchecked(
        nvars: usize,
        order: BigRational,
        reg: BigRational,
        base: Option<Arc<DenominatorBase>>,
        components: Vec<HomogeneousComponent>,
        remainder_order: Option<(BigRational, BigRational)>,
    ) -> Self {
        Self { nvars, order, reg, base, components, cutoff: CutoffSpec::default(), remainder_order }
    }

    /// μ-independent symbol from a finite sum of generalized monomials.
    /// `order` defaults to the top degree; every degree must differ from it by a non-negative integer.
    pub fn from_bundle(p: &TermBundle, order: Option<BigRational>) -> Result<Self, CalculusError> {
        let nvars = p.nvars();
        let order = match order.or_else(|| p.max_degree()) {
            Some(o) => o,
            None => BigRational::zero(),
        };
        let mut comps: Vec<HomogeneousComponent> = Vec::new();
        let parts = p.homogeneous_parts();
        let mut max_j = 0usize;
        let mut placed = Vec::new();
        for (deg, part) in parts {
            let off = &order - &deg;
            if !off.is_integer() || off.is_negative() {
                return Err(CalculusError::InvalidSymbol(format!(
                    "term of degree {} incompatible with order {}",
                    format_rational(&deg),
                    format_rational(&order)
                )));
            }
            let j = off.to_integer().to_usize().expect("component index");
            max_j = max_j.max(j);
            placed.push((j, part));
        }
        if !placed.is_empty() {
            for j in 0..=max_j {
                let jj = BigRational::from_integer(BigInt::from(j));
                comps.push(HomogeneousComponent::zero(nvars, &order - &jj, &order - &jj));
            }
        }
        for (j, part) in placed {
            comps[j].pieces.insert(0, part);
        }
        Self::new(nvars, order.clone(), order, None, comps, true)
    }

    /// `p = μ^d − p₀` with component 0 equal to `R` and component `ℓ ≥ 1` equal to `−p₀^{(d−ℓ)}`.
    pub fn resolvent_operator(p0: &EllipticOperator) -> Self {
        let nvars = p0.nvars();
        let d = BigRational::from_integer(BigInt::from(p0.order()));
        let base = p0.denominator_base();
        let mut comps = Vec::new();
        for l in 0..=p0.order() as usize {
            let ll = BigRational::from_integer(BigInt::from(l));
            let mut pieces = BTreeMap::new();
            if l == 0 {
                pieces.insert(-1, TermBundle::one(nvars));
            } else {
                pieces.insert(0, -p0.component(l).expect("component"));
            }
            comps.push(HomogeneousComponent::from_pieces_unchecked(nvars, pieces, &d - &ll, -ll));
        }
        Self::from_parts_unchecked(nvars, d, BigRational::zero(), Some(base), comps, None)
    }

    /// Single-component symbol `numerator · R^{-power}` with the given regularity index.
    pub fn single_piece(
        base: Arc<DenominatorBase>,
        numerator: TermBundle,
        power: i32,
        reg: BigRational,
    ) -> Result<Self, CalculusError> {
        let nvars = numerator.nvars();
        let num_deg = numerator
            .homogeneous_degree()
            .ok_or_else(|| CalculusError::InvalidSymbol("numerator must be homogeneous and non-zero".into()))?;
        let order = num_deg - BigRational::from_integer(BigInt::from(base.order as i64 * power as i64));
        let mut pieces = BTreeMap::new();
        pieces.insert(power, numerator);
        let comp = HomogeneousComponent::new(nvars, pieces, order.clone(), reg.clone(), Some(base.order))?;
        Self::new(nvars, order, reg, Some(base), vec![comp], true)
    }

    pub fn with_cutoff(mut self, cutoff: CutoffSpec) -> Self {
        self.cutoff = cutoff;
        self
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn n(&self) -> usize {
        self.nvars / 2
    }

    pub fn order(&self) -> &BigRational {
        &self.order
    }

    pub fn reg(&self) -> &BigRational {
        &self.reg
    }

    pub fn base(&self) -> Option<&Arc<DenominatorBase>> {
        self.base.as_ref()
    }

    pub fn components(&self) -> &[HomogeneousComponent] {
        &self.components
    }

    pub fn component(&self, j: usize) -> Option<&HomogeneousComponent> {
        self.components.get(j)
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn remainder_order(&self) -> Option<&(BigRational, BigRational)> {
        self.remainder_order.as_ref()
    }

    pub fn is_exact(&self) -> bool {
        self.remainder_order.is_none()
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(HomogeneousComponent::is_zero)
    }

    /// `order − reg`, the leading μ-exponent of the expansion at infinity.
    pub fn mu_shift(&self) -> BigRational {
        &self.order - &self.reg
    }

    pub fn is_regular_at_origin(&self) -> bool {
        self.components.iter().all(HomogeneousComponent::is_regular_at_origin)
    }

    /// `Σ_j a_j(z, μ)` without the cutoff.
    pub fn evaluate_components(&self, z: &[f64], mu: f64) -> Complex64 {
        crate::numeric::complex_sum(self.components.iter().map(|c| c.evaluate(self.base.as_deref(), z, mu)))
    }

    /// `χ(z) Σ_j a_j(z, μ)`.
    pub fn evaluate(&self, z: &[f64], mu: f64) -> Complex64 {
        let r = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        let chi = self.cutoff.value(r);
        if chi == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        self.evaluate_components(z, mu) * chi
    }

    pub fn order_f64(&self) -> f64 {
        rational_to_f64(&self.order)
    }

    /// Keeps components `j < count`.
    pub fn truncated(&self, count: usize) -> Self {
        if count >= self.components.len() {
            return self.clone();
        }
        let mut out = self.clone();
        out.components.truncate(count);
        let j = BigRational::from_integer(BigInt::from(count));
        out.remainder_order = Some((&self.order - &j, &self.reg - &j));
        out
    }

    pub(crate) fn zero_like(nvars: usize, order: &BigRational, reg: &BigRational, j: usize) -> HomogeneousComponent {
        let jj = BigRational::from_integer(BigInt::from(j));
        HomogeneousComponent::zero(nvars, order - &jj, reg - &jj)
    }
}

/// Identity symbol `1` of order 0.
pub fn unit_symbol(nvars: usize) -> SymbolExpansion {
    SymbolExpansion::from_bundle(&TermBundle::one(nvars), None).expect("constant symbol")
}

pub(crate) fn one_over_factorial(alpha: &[u32]) -> GaussianRational {
    let mut f = BigInt::one();
    for &a in alpha {
        for k in 2..=a {
            f *= BigInt::from(k);
        }
    }
    GaussianRational::real(BigRational::new(BigInt::one(), f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::int;

    #[test]
    fn cutoff_profile() {
        let c = CutoffSpec::default();
        assert_eq!(c.value(0.3), 0.0);
        assert_eq!(c.value(1.0), 1.0);
        assert!((c.value(0.75) - 0.5).abs() < 1e-15);
        let s = CutoffSpec::new(0.5, 1.0, CutoffProfile::Sharp).unwrap();
        assert_eq!(s.value(0.99), 0.0);
        assert_eq!(s.value(1.0), 1.0);
        assert!(CutoffSpec::new(1.0, 0.5, CutoffProfile::Sharp).is_err());
    }

    #[test]
    fn operator_validation() {
        let ho = EllipticOperator::harmonic_oscillator(1);
        assert_eq!(ho.order(), 2);
        assert!(ho.component(1).unwrap().is_zero());
        let bad = EllipticOperator::new(1, 2, vec![TermBundle::var(2, 0)]);
        assert!(bad.is_err());
        let p = &TermBundle::norm_squared(2) + &TermBundle::var(2, 0);
        let op = EllipticOperator::from_polynomial(1, 2, &(-&p)).unwrap();
        assert_eq!(op.component(1).unwrap(), &(-&TermBundle::var(2, 0)));
    }

    #[test]
    fn bundle_symbol_components() {
        let x = TermBundle::var(2, 0);
        let s = SymbolExpansion::from_bundle(&(&x.pow(2) + &TermBundle::one(2)), None).unwrap();
        assert_eq!(s.len(), 3);
        assert!(s.component(1).unwrap().is_zero());
        assert_eq!(s.order(), &int(2));
        assert!(s.is_exact());
    }

    #[test]
    fn regularity_above_numerator_degree_is_rejected() {
        let base = EllipticOperator::harmonic_oscillator(1).denominator_base();
        let ok = SymbolExpansion::single_piece(base.clone(), TermBundle::radial(2, int(-2)), 2, int(-2));
        assert!(ok.is_ok());
        let bad = SymbolExpansion::single_piece(base, TermBundle::radial(2, int(-2)), 2, int(0));
        assert!(bad.is_err());
    }
}
