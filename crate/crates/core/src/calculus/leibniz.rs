use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;

use super::symbol::{one_over_factorial, DenominatorBase, HomogeneousComponent, SymbolExpansion};
use super::CalculusError;
use crate::poly::{DerivKind, GaussianRational, TermBundle};

/// Multi-indices `α ∈ ℕⁿ` with `|α| = total`, in lexicographic order.
pub fn multi_indices(n: usize, total: u32) -> Vec<Vec<u32>> {
    fn rec(n: usize, total: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if prefix.len() + 1 == n {
            prefix.push(total);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for a in (0..=total).rev() {
            prefix.push(a);
            rec(n, total - a, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        if total == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    rec(n, total, &mut Vec::new(), &mut out);
    out
}

/// `∂_{z_var}` (or `D`) of `Σ_M γ_M R^{-M}`:
/// `Σ_M (∂γ_M) R^{-M} + M γ_M (∂P) R^{-M-1}` with `R = μ^d − P`.
pub fn differentiate_component(
    c: &HomogeneousComponent,
    base: Option<&DenominatorBase>,
    var: usize,
    kind: DerivKind,
) -> HomogeneousComponent {
    let nvars = c.nvars();
    let mut pieces: BTreeMap<i32, TermBundle> = BTreeMap::new();
    let dp = base.map(|b| b.principal.differentiate(var, DerivKind::Partial));
    for (&m, num) in c.pieces() {
        let d_num = num.differentiate(var, kind);
        if !d_num.is_zero() {
            let e = pieces.entry(m).or_insert_with(|| TermBundle::zero(nvars));
            *e = &*e + &d_num;
        }
        if m != 0 {
            let dp = dp.as_ref().expect("R-power requires a denominator base");
            let mut extra = num.multiply(dp).scale(&GaussianRational::from_int(m as i64));
            if kind == DerivKind::D {
                extra = extra.scale(&GaussianRational::minus_i());
            }
            let e = pieces.entry(m + 1).or_insert_with(|| TermBundle::zero(nvars));
            *e = &*e + &extra;
        }
    }
    let one = BigRational::from_integer(BigInt::from(1));
    HomogeneousComponent::from_pieces_unchecked(nvars, pieces, c.degree() - &one, c.reg_index() - &one)
}

pub fn differentiate_component_multi(
    c: &HomogeneousComponent,
    base: Option<&DenominatorBase>,
    alpha: &[u32],
    offset: usize,
    kind: DerivKind,
) -> HomogeneousComponent {
    let mut out = c.clone();
    for (i, &a) in alpha.iter().enumerate() {
        for _ in 0..a {
            out = differentiate_component(&out, base, offset + i, kind);
        }
    }
    out
}

/// Pointwise product; `R`-powers add.
pub fn multiply_components(a: &HomogeneousComponent, b: &HomogeneousComponent) -> HomogeneousComponent {
    let nvars = a.nvars();
    let mut pieces: BTreeMap<i32, TermBundle> = BTreeMap::new();
    for (&ma, na) in a.pieces() {
        for (&mb, nb) in b.pieces() {
            let prod = na.multiply(nb);
            let e = pieces.entry(ma + mb).or_insert_with(|| TermBundle::zero(nvars));
            *e = &*e + &prod;
        }
    }
    HomogeneousComponent::from_pieces_unchecked(nvars, pieces, a.degree() + b.degree(), a.reg_index() + b.reg_index())
}

pub fn multiply_component_by_bundle(a: &HomogeneousComponent, p: &TermBundle, degree_shift: &BigRational) -> HomogeneousComponent {
    let pieces = a.pieces().iter().map(|(&m, num)| (m, num.multiply(p))).collect();
    HomogeneousComponent::from_pieces_unchecked(a.nvars(), pieces, a.degree() + degree_shift, a.reg_index() + degree_shift)
}

pub fn add_components(a: &HomogeneousComponent, b: &HomogeneousComponent) -> HomogeneousComponent {
    let mut pieces = a.pieces().clone();
    for (&m, num) in b.pieces() {
        let e = pieces.entry(m).or_insert_with(|| TermBundle::zero(a.nvars()));
        *e = &*e + num;
    }
    HomogeneousComponent::from_pieces_unchecked(a.nvars(), pieces, a.degree().clone(), a.reg_index().clone())
}

pub fn scale_component(a: &HomogeneousComponent, c: &GaussianRational) -> HomogeneousComponent {
    let pieces = a.pieces().iter().map(|(&m, num)| (m, num.scale(c))).collect();
    HomogeneousComponent::from_pieces_unchecked(a.nvars(), pieces, a.degree().clone(), a.reg_index().clone())
}

pub(crate) fn merge_bases(
    a: Option<&Arc<DenominatorBase>>,
    b: Option<&Arc<DenominatorBase>>,
) -> Result<Option<Arc<DenominatorBase>>, CalculusError> {
    match (a, b) {
        (Some(x), Some(y)) if x != y => Err(CalculusError::BaseMismatch),
        (Some(x), _) => Ok(Some(x.clone())),
        (None, y) => Ok(y.cloned()),
    }
}

/// Derivatives `∂^α c_k` over a block of variables, cached by multi-index.
struct DerivativeTable<'a> {
    comps: &'a [HomogeneousComponent],
    base: Option<&'a DenominatorBase>,
    offset: usize,
    kind: DerivKind,
    cache: HashMap<Vec<u32>, Vec<Option<HomogeneousComponent>>>,
}

impl<'a> DerivativeTable<'a> {
    fn new(comps: &'a [HomogeneousComponent], base: Option<&'a DenominatorBase>, offset: usize, kind: DerivKind) -> Self {
        Self { comps, base, offset, kind, cache: HashMap::new() }
    }

    fn get(&mut self, alpha: &[u32], k: usize) -> HomogeneousComponent {
        if k >= self.comps.len() {
            unreachable!("component index checked by caller");
        }
        if alpha.iter().all(|&a| a == 0) {
            return self.comps[k].clone();
        }
        if let Some(Some(c)) = self.cache.get(alpha).and_then(|v| v.get(k)) {
            return c.clone();
        }
        let i = alpha.iter().position(|&a| a > 0).expect("non-zero multi-index");
        let mut parent = alpha.to_vec();
        parent[i] -= 1;
        let p = self.get(&parent, k);
        let d = differentiate_component(&p, self.base, self.offset + i, self.kind);
        let slot = self.cache.entry(alpha.to_vec()).or_insert_with(|| vec![None; self.comps.len()]);
        slot[k] = Some(d.clone());
        d
    }
}

/// Largest total ξ-degree among polynomial numerators, `None` when radial factors or `R`-powers occur.
fn polynomial_degree_in(s: &SymbolExpansion, range: std::ops::Range<usize>) -> Option<u32> {
    let mut best = 0;
    for c in s.components() {
        for (&m, num) in c.pieces() {
            if m != 0 || !num.is_polynomial() {
                return None;
            }
            for (key, _) in num.iter() {
                best = best.max(key.exponents[range.clone()].iter().sum());
            }
        }
    }
    Some(best)
}

/// Components `j < K` of `a # b = Σ_α (1/α!)(∂_ξ^α a)(D_x^α b)`.
///
/// A contribution `(∂_ξ^α a_k)(D_x^α b_l)` has joint degree
/// `d_a + d_b − (k + l + 2|α|)` and lands in component `k + l + 2|α|`.
/// Components that would need operand components beyond a truncated
/// operand's length are not produced.
pub fn leibniz_truncated(a: &SymbolExpansion, b: &SymbolExpansion, k_max: usize) -> Result<SymbolExpansion, CalculusError> {
    if a.nvars() != b.nvars() {
        return Err(CalculusError::DimensionMismatch { left: a.nvars(), right: b.nvars() });
    }
    let base = merge_bases(a.base(), b.base())?;
    let nvars = a.nvars();
    let n = nvars / 2;
    let count = [
        Some(k_max),
        (!a.is_exact()).then_some(a.len()),
        (!b.is_exact()).then_some(b.len()),
    ]
    .into_iter()
    .flatten()
    .min()
    .expect("k_max present");

    let order = a.order() + b.order();
    let reg = a.reg() + b.reg();
    let base_ref = base.as_deref();
    let mut da = DerivativeTable::new(a.components(), base_ref, n, DerivKind::Partial);
    let mut db = DerivativeTable::new(b.components(), base_ref, 0, DerivKind::D);

    let mut out: Vec<HomogeneousComponent> =
        (0..count).map(|j| SymbolExpansion::zero_like(nvars, &order, &reg, j)).collect();
    for t in 0..=(count.saturating_sub(1) / 2) as u32 {
        let alphas = multi_indices(n, t);
        for j in (2 * t as usize)..count {
            let rest = j - 2 * t as usize;
            for k in 0..=rest {
                let l = rest - k;
                if k >= a.len() || l >= b.len() || a.components()[k].is_zero() || b.components()[l].is_zero() {
                    continue;
                }
                for alpha in &alphas {
                    let fa = da.get(alpha, k);
                    if fa.is_zero() {
                        continue;
                    }
                    let fb = db.get(alpha, l);
                    if fb.is_zero() {
                        continue;
                    }
                    let term = scale_component(&multiply_components(&fa, &fb), &one_over_factorial(alpha));
                    out[j] = add_components(&out[j], &term);
                }
            }
        }
    }
    let out: Vec<HomogeneousComponent> = out
        .into_iter()
        .enumerate()
        .map(|(j, c)| {
            let jj = BigRational::from_integer(BigInt::from(j));
            c.with_indices(&order - &jj, &reg - &jj)
        })
        .collect();

    // Exact when both operands are exact polynomials and no contribution can reach index ≥ count.
    let exact = a.is_exact()
        && b.is_exact()
        && match (polynomial_degree_in(a, n..nvars), polynomial_degree_in(b, 0..n)) {
            (Some(xa), Some(xb)) => {
                let reach = a.len().saturating_sub(1) + b.len().saturating_sub(1) + 2 * xa.min(xb) as usize;
                count > reach
            }
            _ => false,
        };
    let remainder = (!exact).then(|| {
        let c = BigRational::from_integer(BigInt::from(count));
        (&order - &c, &reg - &c)
    });
    Ok(SymbolExpansion::from_parts_unchecked(nvars, order, reg, base, out, remainder).with_cutoff(a.cutoff))
}

/// `b^{#N}` truncated to `J` components.
pub fn symbol_power(b: &SymbolExpansion, power: u32, j_max: usize) -> Result<SymbolExpansion, CalculusError> {
    if power == 0 {
        return Err(CalculusError::InvalidArgument("symbol power must be at least 1".into()));
    }
    let mut acc = b.truncated(j_max);
    for _ in 1..power {
        acc = leibniz_truncated(b, &acc, j_max)?;
    }
    Ok(acc)
}

/// Full Leibniz expansion of two μ-independent bundles, summing `|α| ≤ max_order`.
/// Exact for polynomial operands once `max_order` reaches the ξ-degree of `a`.
pub fn leibniz_bundles(a: &TermBundle, b: &TermBundle, max_order: u32) -> TermBundle {
    let nvars = a.nvars();
    let n = nvars / 2;
    let mut out = TermBundle::zero(nvars);
    for t in 0..=max_order {
        for alpha in multi_indices(n, t) {
            let mut xi_alpha = vec![0; nvars];
            let mut x_alpha = vec![0; nvars];
            xi_alpha[n..].copy_from_slice(&alpha);
            x_alpha[..n].copy_from_slice(&alpha);
            let fa = a.differentiate_multi(&xi_alpha, DerivKind::Partial);
            if fa.is_zero() {
                continue;
            }
            let fb = b.differentiate_multi(&x_alpha, DerivKind::D);
            if fb.is_zero() {
                continue;
            }
            out = &out + &fa.multiply(&fb).scale(&one_over_factorial(&alpha));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::EllipticOperator;
    use crate::poly::int;

    fn sym(p: &TermBundle) -> SymbolExpansion {
        SymbolExpansion::from_bundle(p, None).unwrap()
    }

    fn total(s: &SymbolExpansion) -> TermBundle {
        let mut acc = TermBundle::zero(s.nvars());
        for c in s.components() {
            for (&m, num) in c.pieces() {
                assert_eq!(m, 0);
                acc = &acc + num;
            }
        }
        acc
    }

    #[test]
    fn multi_index_enumeration() {
        assert_eq!(multi_indices(2, 2), vec![vec![2, 0], vec![1, 1], vec![0, 2]]);
        assert_eq!(multi_indices(1, 0), vec![vec![0]]);
        assert_eq!(multi_indices(3, 1).len(), 3);
    }

    #[test]
    fn xi_hash_x() {
        let x = TermBundle::var(2, 0);
        let xi = TermBundle::var(2, 1);
        let p = leibniz_truncated(&sym(&xi), &sym(&x), 3).unwrap();
        let expected = &x.multiply(&xi) + &TermBundle::constant(2, GaussianRational::minus_i());
        assert_eq!(total(&p), expected);
        assert!(p.is_exact());
    }

    #[test]
    fn x_hash_xi() {
        let x = TermBundle::var(2, 0);
        let xi = TermBundle::var(2, 1);
        let p = leibniz_truncated(&sym(&x), &sym(&xi), 3).unwrap();
        assert_eq!(total(&p), x.multiply(&xi));
    }

    #[test]
    fn xi2_hash_x2() {
        let x = TermBundle::var(2, 0);
        let xi = TermBundle::var(2, 1);
        let p = leibniz_truncated(&sym(&xi.pow(2)), &sym(&x.pow(2)), 5).unwrap();
        let c = |re: i64, im: i64| GaussianRational::new(int(re), int(im));
        let expected = TermBundle::from_monomials(
            2,
            [
                crate::poly::GeneralizedMonomial { coeff: c(1, 0), exponents: vec![2, 2], radial_power: int(0) },
                crate::poly::GeneralizedMonomial { coeff: c(0, -4), exponents: vec![1, 1], radial_power: int(0) },
                crate::poly::GeneralizedMonomial { coeff: c(-2, 0), exponents: vec![0, 0], radial_power: int(0) },
            ],
        );
        assert_eq!(total(&p), expected);
    }

    #[test]
    fn mismatched_bases_rejected() {
        let b1 = EllipticOperator::harmonic_oscillator(1);
        let b2 = EllipticOperator::new(1, 2, vec![TermBundle::norm_squared(2).scale(&GaussianRational::from_int(-2))]).unwrap();
        let s1 = SymbolExpansion::resolvent_operator(&b1);
        let s2 = SymbolExpansion::resolvent_operator(&b2);
        assert!(matches!(leibniz_truncated(&s1, &s2, 2), Err(CalculusError::BaseMismatch)));
    }

    #[test]
    fn derivative_of_resolvent_power() {
        // ∂_ξ R^{-1} = -2ξ R^{-2} for R = μ² + x² + ξ².
        let base = EllipticOperator::harmonic_oscillator(1).denominator_base();
        let mut pieces = BTreeMap::new();
        pieces.insert(1, TermBundle::one(2));
        let c = HomogeneousComponent::from_pieces_unchecked(2, pieces, int(-2), int(0));
        let d = differentiate_component(&c, Some(&base), 1, DerivKind::Partial);
        assert_eq!(d.pieces().len(), 1);
        assert_eq!(d.pieces()[&2], TermBundle::var(2, 1).scale(&GaussianRational::from_int(-2)));
        assert_eq!(d.degree(), &int(-3));
    }

    #[test]
    fn leibniz_bundle_matches_truncated_for_polynomials() {
        let x = TermBundle::var(2, 0);
        let xi = TermBundle::var(2, 1);
        let a = &xi.pow(3) + &x;
        let b = &x.pow(2).multiply(&xi) + &TermBundle::one(2);
        let full = leibniz_bundles(&a, &b, 4);
        let trunc = leibniz_truncated(&sym(&a), &sym(&b), 20).unwrap();
        assert_eq!(total(&trunc), full);
    }
}
