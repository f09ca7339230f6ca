//! Expansion of symbols in powers of `μ` and the two families of limit coefficients.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use super::symbol::{DenominatorBase, HomogeneousComponent, SymbolExpansion};
use super::CalculusError;
use crate::poly::{GaussianRational, TermBundle};

/// Generalized binomial coefficient `binom(r, k)` for rational `r`.
pub fn binomial(r: &BigRational, k: u32) -> BigRational {
    let mut acc = BigRational::one();
    for i in 0..k {
        acc = acc * (r - BigRational::from_integer(BigInt::from(i))) / BigRational::from_integer(BigInt::from(i + 1));
    }
    acc
}

/// Taylor coefficient `p_{ρ,ℓ}(z) = (1/ℓ!) ∂_t^ℓ ⟨tz⟩^ρ |_{t=0}` in `m` variables:
/// `binom(ρ/2, k)·|z|^{2k}` for `ℓ = 2k`, zero for odd `ℓ`.
pub fn coefficient_polynomial(rho: &BigRational, l: u32, m: usize) -> TermBundle {
    if l % 2 == 1 {
        return TermBundle::zero(m);
    }
    let k = l / 2;
    let half = rho / BigRational::from_integer(BigInt::from(2));
    let c = binomial(&half, k);
    if k == 0 {
        return TermBundle::constant(m, GaussianRational::real(c));
    }
    TermBundle::radial(m, BigRational::from_integer(BigInt::from(l))).scale_rational(&c)
}

/// One coefficient `q_{j,ℓ}(z) μ^{d−ν−ℓ}` of a component's expansion in μ.
#[derive(Clone, Debug, PartialEq)]
pub struct MuEntry {
    pub ell: usize,
    pub mu_exponent: BigRational,
    pub symbol: TermBundle,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MuExpansion {
    /// Sorted by decreasing μ-exponent (increasing `ℓ`); zero coefficients omitted.
    pub entries: Vec<MuEntry>,
    pub remainder_exponent: BigRational,
    pub remainder_radial_degree: BigRational,
}

impl MuExpansion {
    pub fn entry(&self, ell: usize) -> Option<&MuEntry> {
        self.entries.iter().find(|e| e.ell == ell)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Expands `Σ_M γ_M R^{-M}` in powers of μ through `ℓ < L`, using
/// `R^{-M} = Σ_k binom(−M, k)(−P)^k μ^{−dM−dk}`.
pub fn mu_series(c: &HomogeneousComponent, base: Option<&DenominatorBase>, l_max: usize) -> MuExpansion {
    let nvars = c.nvars();
    let shift = c.degree() - c.reg_index();
    let int = |v: i64| BigRational::from_integer(BigInt::from(v));
    let mut acc: BTreeMap<usize, TermBundle> = BTreeMap::new();
    for (&m, num) in c.pieces() {
        let d = if m == 0 { 0 } else { base.expect("R-power requires a denominator base").order as i64 };
        let neg_p = base.map(|b| -&b.principal);
        let minus_m = int(-(m as i64));
        let mut k: u32 = 0;
        let mut p_pow = TermBundle::one(nvars);
        loop {
            let e = int(-d * m as i64 - d * k as i64);
            let ell_r = &shift - &e;
            let ell = ell_r.to_integer().to_i64().expect("ℓ fits in i64");
            debug_assert!(ell_r.is_integer() && ell >= 0, "validated regularity");
            if ell as usize >= l_max {
                break;
            }
            let coeff = binomial(&minus_m, k);
            if coeff.is_zero() && m <= 0 {
                break;
            }
            let term = num.multiply(&p_pow).scale_rational(&coeff);
            let slot = acc.entry(ell as usize).or_insert_with(|| TermBundle::zero(nvars));
            *slot = &*slot + &term;
            if m == 0 {
                break;
            }
            k += 1;
            p_pow = p_pow.multiply(neg_p.as_ref().expect("base"));
        }
    }
    let entries = acc
        .into_iter()
        .filter(|(_, s)| !s.is_zero())
        .map(|(ell, symbol)| MuEntry {
            ell,
            mu_exponent: &shift - int(ell as i64),
            symbol,
        })
        .collect();
    MuExpansion {
        entries,
        remainder_exponent: &shift - int(l_max as i64),
        remainder_radial_degree: c.reg_index() + int(l_max as i64),
    }
}

/// Coefficients `a^∞_{{d,ν+k}}`, `k < L`: the total coefficient of `μ^{d−ν−k}`
/// summed over all stored components.
pub fn brace_coefficients(a: &SymbolExpansion, l_max: usize) -> Vec<TermBundle> {
    let mut out = vec![TermBundle::zero(a.nvars()); l_max];
    for c in a.components() {
        let series = mu_series(c, a.base().map(|b| b.as_ref()), l_max);
        for e in series.entries {
            out[e.ell] = &out[e.ell] + &e.symbol;
        }
    }
    out
}

/// Lower-triangular conversion matrix with `b_{kℓ} = p_{shift−ℓ, k−ℓ}`, `shift = d − ν`.
pub fn b_matrix(shift: &BigRational, size: usize, m: usize) -> Vec<Vec<TermBundle>> {
    (0..size)
        .map(|k| {
            (0..size)
                .map(|l| {
                    if l > k {
                        TermBundle::zero(m)
                    } else {
                        let rho = shift - BigRational::from_integer(BigInt::from(l));
                        coefficient_polynomial(&rho, (k - l) as u32, m)
                    }
                })
                .collect()
        })
        .collect()
}

pub fn apply_b_matrix(b: &[Vec<TermBundle>], v: &[TermBundle]) -> Result<Vec<TermBundle>, CalculusError> {
    if b.len() != v.len() {
        return Err(CalculusError::InvalidArgument("matrix/vector size mismatch".into()));
    }
    Ok(b.iter()
        .map(|row| {
            row.iter()
                .zip(v)
                .fold(TermBundle::zero(v.first().map_or(0, TermBundle::nvars)), |acc, (bij, vj)| &acc + &bij.multiply(vj))
        })
        .collect())
}

/// Solves `brace = B · bracket` by forward substitution (the diagonal of `B` is 1).
pub fn bracket_from_brace(brace: &[TermBundle], shift: &BigRational, m: usize) -> Vec<TermBundle> {
    let b = b_matrix(shift, brace.len(), m);
    let mut out: Vec<TermBundle> = Vec::with_capacity(brace.len());
    for k in 0..brace.len() {
        let mut v = brace[k].clone();
        for (l, prev) in out.iter().enumerate() {
            v = &v - &b[k][l].multiply(prev);
        }
        out.push(v);
    }
    out
}

/// Coefficients `a^∞_{[d,ν+k]}`, `k < L`.
pub fn bracket_coefficients(a: &SymbolExpansion, l_max: usize) -> Vec<TermBundle> {
    let brace = brace_coefficients(a, l_max);
    bracket_from_brace(&brace, &a.mu_shift(), a.nvars())
}
