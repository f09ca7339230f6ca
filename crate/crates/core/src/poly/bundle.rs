use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::gaussian::{format_rational, rational_to_f64, GaussianRational};
use super::PolyError;
use crate::numeric::ComplexSum;

/// Exponent vector plus radial power. The derived order (exponents
/// lexicographically, then radial power) is the canonical term order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MonomialKey {
    pub exponents: Vec<u32>,
    pub radial: BigRational,
}

impl MonomialKey {
    pub fn degree(&self) -> BigRational {
        let total: u64 = self.exponents.iter().map(|&e| e as u64).sum();
        BigRational::from_integer(BigInt::from(total)) + &self.radial
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneralizedMonomial {
    pub coeff: GaussianRational,
    pub exponents: Vec<u32>,
    pub radial_power: BigRational,
}

impl GeneralizedMonomial {
    pub fn degree(&self) -> BigRational {
        MonomialKey { exponents: self.exponents.clone(), radial: self.radial_power.clone() }.degree()
    }

    pub fn is_polynomial(&self) -> bool {
        self.radial_power.is_zero()
    }

    /// The constant monomial `1`.
    pub fn unit(nvars: usize) -> Self {
        Self { coeff: GaussianRational::one(), exponents: vec![0; nvars], radial_power: BigRational::zero() }
    }
}

/// Which derivative [`TermBundle::differentiate`] takes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DerivKind {
    /// Plain partial derivative `∂`.
    Partial,
    /// `D = -i∂`.
    D,
}

/// Finite sum of generalized monomials in a fixed number of variables.
///
/// Terms are merged on equal `(exponents, radial)` keys and zero coefficients
/// are dropped. Structural equality is functional equality for polynomials;
/// with radial factors use [`TermBundle::equals_as_function`], since
/// `Σ z_i² · |z|^s` and `|z|^{s+2}` are distinct spellings.
#[derive(Clone, PartialEq, Eq)]
pub struct TermBundle {
    nvars: usize,
    terms: BTreeMap<MonomialKey, GaussianRational>,
}

impl TermBundle {
    pub fn zero(nvars: usize) -> Self {
        Self { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: GaussianRational) -> Self {
        let mut b = Self::zero(nvars);
        b.add_term(vec![0; nvars], BigRational::zero(), c);
        b
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, GaussianRational::one())
    }

    /// The coordinate `z_i`.
    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Self::monomial(nvars, GaussianRational::one(), e, BigRational::zero())
    }

    /// `|z|^s`.
    pub fn radial(nvars: usize, s: BigRational) -> Self {
        Self::monomial(nvars, GaussianRational::one(), vec![0; nvars], s)
    }

    /// `|z|²` written as the polynomial `Σ z_i²`.
    pub fn norm_squared(nvars: usize) -> Self {
        let mut b = Self::zero(nvars);
        for i in 0..nvars {
            let mut e = vec![0; nvars];
            e[i] = 2;
            b.add_term(e, BigRational::zero(), GaussianRational::one());
        }
        b
    }

    pub fn monomial(nvars: usize, coeff: GaussianRational, exponents: Vec<u32>, radial: BigRational) -> Self {
        assert_eq!(exponents.len(), nvars, "exponent vector length");
        let mut b = Self::zero(nvars);
        b.add_term(exponents, radial, coeff);
        b
    }

    pub fn from_monomials<I: IntoIterator<Item = GeneralizedMonomial>>(nvars: usize, terms: I) -> Self {
        let mut b = Self::zero(nvars);
        for t in terms {
            assert_eq!(t.exponents.len(), nvars, "exponent vector length");
            b.add_term(t.exponents, t.radial_power, t.coeff);
        }
        b
    }

    fn add_term(&mut self, exponents: Vec<u32>, radial: BigRational, coeff: GaussianRational) {
        if coeff.is_zero() {
            return;
        }
        let key = MonomialKey { exponents, radial };
        match self.terms.get_mut(&key) {
            Some(c) => {
                *c += &coeff;
                if c.is_zero() {
                    self.terms.remove(&key);
                }
            }
            None => {
                self.terms.insert(key, coeff);
            }
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = (&MonomialKey, &GaussianRational)> {
        self.terms.iter()
    }

    pub fn monomials(&self) -> Vec<GeneralizedMonomial> {
        self.terms
            .iter()
            .map(|(k, c)| GeneralizedMonomial {
                coeff: c.clone(),
                exponents: k.exponents.clone(),
                radial_power: k.radial.clone(),
            })
            .collect()
    }

    pub fn coefficient(&self, exponents: &[u32], radial: &BigRational) -> GaussianRational {
        let key = MonomialKey { exponents: exponents.to_vec(), radial: radial.clone() };
        self.terms.get(&key).cloned().unwrap_or_else(GaussianRational::zero)
    }

    /// True when no term carries a radial factor.
    pub fn is_polynomial(&self) -> bool {
        self.terms.keys().all(|k| k.radial.is_zero())
    }

    /// Common homogeneity degree of all terms, or `None` if the bundle is zero or mixed.
    pub fn homogeneous_degree(&self) -> Option<BigRational> {
        let mut degs = self.terms.keys().map(MonomialKey::degree);
        let first = degs.next()?;
        degs.all(|d| d == first).then_some(first)
    }

    pub fn is_homogeneous_of(&self, degree: &BigRational) -> bool {
        self.terms.keys().all(|k| &k.degree() == degree)
    }

    pub fn max_degree(&self) -> Option<BigRational> {
        self.terms.keys().map(MonomialKey::degree).max()
    }

    /// Splits the bundle by homogeneity degree. Concatenating the parts gives back `self`.
    pub fn homogeneous_parts(&self) -> BTreeMap<BigRational, TermBundle> {
        let mut out: BTreeMap<BigRational, TermBundle> = BTreeMap::new();
        for (k, c) in &self.terms {
            out.entry(k.degree())
                .or_insert_with(|| TermBundle::zero(self.nvars))
                .terms
                .insert(k.clone(), c.clone());
        }
        out
    }

    pub fn scale(&self, c: &GaussianRational) -> TermBundle {
        if c.is_zero() {
            return TermBundle::zero(self.nvars);
        }
        TermBundle {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(k, v)| (k.clone(), v * c)).collect(),
        }
    }

    pub fn scale_rational(&self, r: &BigRational) -> TermBundle {
        self.scale(&GaussianRational::real(r.clone()))
    }

    pub fn multiply(&self, other: &TermBundle) -> TermBundle {
        assert_eq!(self.nvars, other.nvars, "variable count mismatch");
        let mut out = TermBundle::zero(self.nvars);
        for (ka, ca) in &self.terms {
            for (kb, cb) in &other.terms {
                let exps = ka.exponents.iter().zip(&kb.exponents).map(|(a, b)| a + b).collect();
                out.add_term(exps, &ka.radial + &kb.radial, ca * cb);
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> TermBundle {
        let mut acc = TermBundle::one(self.nvars);
        let mut base = self.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.multiply(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.multiply(&base);
            }
        }
        acc
    }

    /// `∂_{z_i}(c z^α |z|^s) = c α_i z^{α-e_i}|z|^s + c s z^{α+e_i}|z|^{s-2}`; `D` adds a factor `-i`.
    pub fn differentiate(&self, var: usize, kind: DerivKind) -> TermBundle {
        assert!(var < self.nvars, "variable index out of range");
        let mut out = TermBundle::zero(self.nvars);
        let two = BigRational::from_integer(BigInt::from(2));
        for (k, c) in &self.terms {
            let a = k.exponents[var];
            if a > 0 {
                let mut e = k.exponents.clone();
                e[var] -= 1;
                out.add_term(e, k.radial.clone(), c.scale(&BigRational::from_integer(BigInt::from(a))));
            }
            if !k.radial.is_zero() {
                let mut e = k.exponents.clone();
                e[var] += 1;
                out.add_term(e, &k.radial - &two, c.scale(&k.radial));
            }
        }
        match kind {
            DerivKind::Partial => out,
            DerivKind::D => out.scale(&GaussianRational::minus_i()),
        }
    }

    /// Applies `∂^α` (or `D^α`) for a multi-index over all variables.
    pub fn differentiate_multi(&self, alpha: &[u32], kind: DerivKind) -> TermBundle {
        let mut out = self.clone();
        for (var, &a) in alpha.iter().enumerate() {
            for _ in 0..a {
                if out.is_zero() {
                    return out;
                }
                out = out.differentiate(var, kind);
            }
        }
        out
    }

    /// Rewrites every non-negative even integer radial power `|z|^{2k}` as `(Σ z_i²)^k`.
    /// Useful before comparing bundles that mix the two spellings of `|z|²`.
    pub fn expand_even_radials(&self) -> TermBundle {
        let mut out = TermBundle::zero(self.nvars);
        let norm2 = TermBundle::norm_squared(self.nvars);
        for (k, c) in &self.terms {
            let even = k.radial.is_integer() && !k.radial.is_negative() && k.radial.numer() % BigInt::from(2) == BigInt::zero();
            if even && !k.radial.is_zero() {
                let half = (k.radial.numer() / BigInt::from(2)).to_u32().expect("radial power fits in u32");
                let base = TermBundle::monomial(self.nvars, c.clone(), k.exponents.clone(), BigRational::zero());
                out = &out + &base.multiply(&norm2.pow(half));
            } else {
                out.add_term(k.exponents.clone(), k.radial.clone(), c.clone());
            }
        }
        out
    }

    /// Exact equality as functions on `z ≠ 0`, modulo `|z|² = Σ z_i²`.
    ///
    /// The difference is multiplied by `|z|^{2K}` so every radial power is non-negative,
    /// then each `|z|^{c+2k}` with `c ∈ [0, 2)` is rewritten as `|z|^c (Σ z_i²)^k`. Terms
    /// `|z|^c · polynomial` with distinct `c` are linearly independent, so the rewritten
    /// difference vanishes structurally iff the functions agree.
    pub fn equals_as_function(&self, other: &TermBundle) -> bool {
        let diff = self - other;
        let Some(min_radial) = diff.terms.keys().map(|k| k.radial.clone()).min() else {
            return true;
        };
        let two = BigRational::from_integer(BigInt::from(2));
        let lift = if min_radial.is_negative() { (-&min_radial / &two).ceil() * &two } else { BigRational::zero() };
        let norm2 = TermBundle::norm_squared(self.nvars);
        let mut out = TermBundle::zero(self.nvars);
        for (k, c) in &diff.terms {
            let s = &k.radial + &lift;
            let half = (&s / &two).floor();
            let residue = &s - &half * &two;
            let base = TermBundle::monomial(self.nvars, c.clone(), k.exponents.clone(), residue);
            out = &out + &base.multiply(&norm2.pow(half.to_integer().to_u32().expect("radial power fits in u32")));
        }
        out.is_zero()
    }

    /// Numeric value with compensated summation in canonical term order.
    pub fn evaluate(&self, point: &[f64]) -> Result<Complex64, PolyError> {
        if point.len() != self.nvars {
            return Err(PolyError::DimensionMismatch { expected: self.nvars, got: point.len() });
        }
        let norm = point.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut sum = ComplexSum::new();
        for (k, c) in &self.terms {
            let mut v = 1.0;
            for (x, &e) in point.iter().zip(&k.exponents) {
                if e > 0 {
                    v *= x.powi(e as i32);
                }
            }
            if !k.radial.is_zero() {
                if norm == 0.0 {
                    if k.radial.is_negative() {
                        return Err(PolyError::RadialSingularity { power: format_rational(&k.radial) });
                    }
                    v = 0.0;
                } else {
                    v *= radial_power(norm, &k.radial);
                }
            }
            sum.add(c.to_complex() * v);
        }
        Ok(sum.value())
    }
}

fn radial_power(norm: f64, s: &BigRational) -> f64 {
    if s.is_integer() {
        if let Some(k) = s.numer().to_i32() {
            return norm.powi(k);
        }
    }
    norm.powf(rational_to_f64(s))
}

impl<'a> Add<&'a TermBundle> for &'a TermBundle {
    type Output = TermBundle;
    fn add(self, o: &TermBundle) -> TermBundle {
        assert_eq!(self.nvars, o.nvars, "variable count mismatch");
        let mut out = self.clone();
        for (k, c) in &o.terms {
            out.add_term(k.exponents.clone(), k.radial.clone(), c.clone());
        }
        out
    }
}

impl<'a> Sub<&'a TermBundle> for &'a TermBundle {
    type Output = TermBundle;
    fn sub(self, o: &TermBundle) -> TermBundle {
        self + &(-o)
    }
}

impl Neg for &TermBundle {
    type Output = TermBundle;
    fn neg(self) -> TermBundle {
        TermBundle { nvars: self.nvars, terms: self.terms.iter().map(|(k, c)| (k.clone(), -c)).collect() }
    }
}

impl<'a> Mul<&'a TermBundle> for &'a TermBundle {
    type Output = TermBundle;
    fn mul(self, o: &TermBundle) -> TermBundle {
        self.multiply(o)
    }
}

impl fmt::Display for TermBundle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let n = self.nvars / 2;
        for (idx, (k, c)) in self.terms.iter().enumerate() {
            if idx > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({c})")?;
            for (i, &e) in k.exponents.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let name = if self.nvars % 2 == 0 && n > 0 {
                    if i < n { format!("x{}", i + 1) } else { format!("ξ{}", i - n + 1) }
                } else {
                    format!("z{}", i + 1)
                };
                if e == 1 { write!(f, "·{name}")? } else { write!(f, "·{name}^{e}")? }
            }
            if !k.radial.is_zero() {
                write!(f, "·|z|^{}", format_rational(&k.radial))?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for TermBundle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::super::gaussian::{int, rat};
    use super::*;

    fn x() -> TermBundle {
        TermBundle::var(2, 0)
    }
    fn xi() -> TermBundle {
        TermBundle::var(2, 1)
    }
    fn c(v: i64) -> GaussianRational {
        GaussianRational::from_int(v)
    }

    #[test]
    fn multiply_monomials() {
        assert_eq!(x().multiply(&xi()).multiply(&x()), TermBundle::monomial(2, c(1), vec![2, 1], int(0)));
    }

    #[test]
    fn functional_equality_modulo_norm_identity() {
        // (x² + ξ²)|z|^{-4} = |z|^{-2}, and x|z|^{1/2} differs from x|z|^{5/2}
        let lhs = TermBundle::norm_squared(2).multiply(&TermBundle::radial(2, int(-4)));
        let rhs = TermBundle::radial(2, int(-2));
        assert_ne!(lhs, rhs);
        assert!(lhs.equals_as_function(&rhs));
        let a = x().multiply(&TermBundle::radial(2, rat(1, 2)));
        let b = x().multiply(&TermBundle::radial(2, rat(5, 2)));
        assert!(!a.equals_as_function(&b));
        assert!(a.multiply(&TermBundle::norm_squared(2)).equals_as_function(&b));
        assert!(TermBundle::zero(2).equals_as_function(&TermBundle::zero(2)));
    }

    #[test]
    fn radial_powers_cancel() {
        let p = TermBundle::radial(2, int(2)).multiply(&TermBundle::radial(2, int(-2)));
        assert_eq!(p, TermBundle::one(2));
    }

    #[test]
    fn conjugate_product_is_norm() {
        let ixi = xi().scale(&GaussianRational::i());
        let p = (&x() + &ixi).multiply(&(&x() - &ixi));
        assert_eq!(p, TermBundle::norm_squared(2));
    }

    #[test]
    fn derivative_examples() {
        let xi2 = xi().pow(2);
        assert_eq!(xi2.differentiate(1, DerivKind::Partial), xi().scale(&c(2)));
        let x2 = x().pow(2);
        let expected = x().scale(&GaussianRational::new(int(0), int(-2)));
        assert_eq!(x2.differentiate(0, DerivKind::D), expected);
        let inv = TermBundle::radial(2, int(-1));
        let expected = TermBundle::monomial(2, c(-1), vec![1, 0], int(-3));
        assert_eq!(inv.differentiate(0, DerivKind::Partial), expected);
    }

    #[test]
    fn homogeneous_parts_examples() {
        let p = &x().pow(2) + &x();
        let parts = p.homogeneous_parts();
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[&int(2)], x().pow(2));
        assert_eq!(parts[&int(1)], x());

        let q = TermBundle::radial(2, int(2)).multiply(&(&TermBundle::one(2) + &TermBundle::radial(2, int(-2))));
        let parts = q.homogeneous_parts();
        assert_eq!(parts[&int(2)], TermBundle::radial(2, int(2)));
        assert_eq!(parts[&int(0)], TermBundle::one(2));

        assert!(TermBundle::zero(2).homogeneous_parts().is_empty());
    }

    #[test]
    fn evaluate_examples() {
        let p = TermBundle::norm_squared(2);
        assert_eq!(p.evaluate(&[1.0, 1.0]).unwrap(), Complex64::new(2.0, 0.0));
        let r = TermBundle::radial(2, int(-1));
        assert!((r.evaluate(&[3.0, 4.0]).unwrap().re - 0.2).abs() < 1e-15);
        let t = TermBundle::monomial(2, GaussianRational::new(int(0), int(2)), vec![1, 1], int(0));
        assert_eq!(t.evaluate(&[1.0, 2.0]).unwrap(), Complex64::new(0.0, 4.0));
    }

    #[test]
    fn evaluate_rejects_singular_origin() {
        let r = TermBundle::radial(2, rat(-1, 2));
        assert!(matches!(r.evaluate(&[0.0, 0.0]), Err(PolyError::RadialSingularity { .. })));
        assert!(matches!(r.evaluate(&[1.0]), Err(PolyError::DimensionMismatch { .. })));
        assert_eq!(TermBundle::radial(2, int(3)).evaluate(&[0.0, 0.0]).unwrap().re, 0.0);
    }

    #[test]
    fn zero_terms_are_dropped() {
        let p = &x() - &x();
        assert!(p.is_zero());
        assert_eq!(p, TermBundle::zero(2));
    }
}
