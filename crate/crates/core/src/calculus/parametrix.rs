use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;

use super::leibniz::{add_components, differentiate_component, multi_indices, multiply_component_by_bundle, scale_component};
use super::symbol::{one_over_factorial, EllipticOperator, HomogeneousComponent, SymbolExpansion};
use super::CalculusError;
use crate::poly::{DerivKind, TermBundle};

/// Sampling density for the sphere `S^{m-1}` and the distance threshold to `ℝ̄₊`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SphereSample {
    /// Points per polar angle; the azimuth gets twice as many.
    pub density: usize,
    pub epsilon: f64,
}

impl Default for SphereSample {
    fn default() -> Self {
        Self { density: 128, epsilon: 1e-9 }
    }
}

/// Outcome of a sampled ellipticity check. Sampling cannot prove the
/// condition, so the certificate only records what was observed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EllipticityCertificate {
    pub min_distance: f64,
    pub samples: usize,
    pub density: usize,
    pub epsilon: f64,
    pub advisory: bool,
}

/// Deterministic sample of `S^{m-1}` in hyperspherical coordinates (midpoint rule in the polar angles).
pub fn sphere_sample_points(m: usize, density: usize) -> Vec<Vec<f64>> {
    match m {
        0 => Vec::new(),
        1 => vec![vec![1.0], vec![-1.0]],
        _ => {
            let az = 2 * density.max(1);
            let mut pts = Vec::new();
            let polar: Vec<f64> = (0..density).map(|k| PI * (k as f64 + 0.5) / density as f64).collect();
            let mut idx = vec![0usize; m - 2];
            loop {
                for a in 0..az {
                    let phi = 2.0 * PI * a as f64 / az as f64;
                    let mut p = Vec::with_capacity(m);
                    let mut s = 1.0;
                    for &i in &idx {
                        let th = polar[i];
                        p.push(s * th.cos());
                        s *= th.sin();
                    }
                    p.push(s * phi.cos());
                    p.push(s * phi.sin());
                    pts.push(p);
                }
                // odometer over the polar angles
                let mut pos = 0;
                loop {
                    if pos == idx.len() {
                        return pts;
                    }
                    idx[pos] += 1;
                    if idx[pos] < density {
                        break;
                    }
                    idx[pos] = 0;
                    pos += 1;
                }
            }
        }
    }
}

/// Checks that `p₀^{(d)}` stays away from `ℝ̄₊` on a sample of the unit sphere.
pub fn check_ellipticity(p0: &EllipticOperator, grid: &SphereSample) -> Result<EllipticityCertificate, CalculusError> {
    let pts = sphere_sample_points(p0.nvars(), grid.density);
    let mut min_distance = f64::INFINITY;
    for z in &pts {
        let v = p0.principal().evaluate(z).expect("principal symbol is polynomial");
        let dist = if v.re >= 0.0 { v.im.abs() } else { v.norm() };
        min_distance = min_distance.min(dist);
        if !(v.im.abs() > grid.epsilon || v.re < -grid.epsilon) {
            return Err(CalculusError::NotElliptic { point: z.clone(), value: (v.re, v.im) });
        }
    }
    Ok(EllipticityCertificate {
        min_distance,
        samples: pts.len(),
        density: grid.density,
        epsilon: grid.epsilon,
        advisory: true,
    })
}

/// Resolvent parametrix `b` of `p = μ^d − p₀`, components `j < J`.
///
/// `b^{(−d,0)} = R^{-1}` and for `j ≥ 1`
/// `b^{(−d−j,−j)} = Σ_{k+ℓ+2|α|=j, k<j} (1/α!)(∂_ξ^α b^{(−d−k,−k)})(D_x^α p₀^{(d−ℓ)}) R^{-1}`,
/// which is the component-`j` condition of `b # p = 1`.
pub fn parametrix(p0: &EllipticOperator, j_max: usize) -> Result<SymbolExpansion, CalculusError> {
    check_ellipticity(p0, &SphereSample::default())?;
    Ok(parametrix_unchecked(p0, j_max))
}

pub(crate) fn parametrix_unchecked(p0: &EllipticOperator, j_max: usize) -> SymbolExpansion {
    let nvars = p0.nvars();
    let n = p0.n();
    let d = p0.order() as usize;
    let base = p0.denominator_base();
    let int = |v: i64| BigRational::from_integer(BigInt::from(v));

    let mut comps: Vec<HomogeneousComponent> = Vec::with_capacity(j_max);
    // ∂_ξ^α b_k, keyed by (α, k)
    let mut db: HashMap<(Vec<u32>, usize), HomogeneousComponent> = HashMap::new();
    // D_x^α p₀^{(d−ℓ)}, keyed by (α, ℓ)
    let mut dp: HashMap<(Vec<u32>, usize), TermBundle> = HashMap::new();

    for j in 0..j_max {
        let degree = int(-(d as i64) - j as i64);
        let reg = int(-(j as i64));
        if j == 0 {
            let mut pieces = BTreeMap::new();
            pieces.insert(1, TermBundle::one(nvars));
            comps.push(HomogeneousComponent::from_pieces_unchecked(nvars, pieces, degree, reg));
            continue;
        }
        let mut acc = HomogeneousComponent::zero(nvars, int(-(j as i64)), int(-(j as i64)));
        for t in 0..=(j / 2) {
            for alpha in multi_indices(n, t as u32) {
                for k in 0..j {
                    if k + 2 * t > j {
                        continue;
                    }
                    let l = j - k - 2 * t;
                    if l > d || comps[k].is_zero() {
                        continue;
                    }
                    let p_l = p0.component(l).expect("component index");
                    if p_l.is_zero() {
                        continue;
                    }
                    let fb = derivative_of(&mut db, &comps, &base, &alpha, k, n);
                    if fb.is_zero() {
                        continue;
                    }
                    let fp = dp
                        .entry((alpha.clone(), l))
                        .or_insert_with(|| {
                            let mut x_alpha = vec![0; nvars];
                            x_alpha[..n].copy_from_slice(&alpha);
                            p_l.differentiate_multi(&x_alpha, DerivKind::D)
                        })
                        .clone();
                    if fp.is_zero() {
                        continue;
                    }
                    let shift = int(d as i64 - l as i64 - t as i64);
                    let term = multiply_component_by_bundle(&fb, &fp, &shift);
                    acc = add_components(&acc, &scale_component(&term, &one_over_factorial(&alpha)));
                }
            }
        }
        let pieces = acc.pieces().iter().map(|(&m, num)| (m + 1, num.clone())).collect();
        comps.push(HomogeneousComponent::from_pieces_unchecked(nvars, pieces, degree, reg));
    }
    let order = int(-(d as i64));
    let jj = int(j_max as i64);
    SymbolExpansion::from_parts_unchecked(
        nvars,
        order.clone(),
        int(0),
        Some(base),
        comps,
        Some((&order - &jj, -jj)),
    )
}

fn derivative_of(
    cache: &mut HashMap<(Vec<u32>, usize), HomogeneousComponent>,
    comps: &[HomogeneousComponent],
    base: &super::symbol::DenominatorBase,
    alpha: &[u32],
    k: usize,
    n: usize,
) -> HomogeneousComponent {
    if alpha.iter().all(|&a| a == 0) {
        return comps[k].clone();
    }
    if let Some(c) = cache.get(&(alpha.to_vec(), k)) {
        return c.clone();
    }
    let i = alpha.iter().position(|&a| a > 0).expect("non-zero");
    let mut parent = alpha.to_vec();
    parent[i] -= 1;
    let p = derivative_of(cache, comps, base, &parent, k, n);
    let out = differentiate_component(&p, Some(base), n + i, DerivKind::Partial);
    cache.insert((alpha.to_vec(), k), out.clone());
    out
}
