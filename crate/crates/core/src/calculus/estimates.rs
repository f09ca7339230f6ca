//! Numerical check of the weighted derivative bounds
//! `|D_z^α ∂_μ^j a| ≲ ⟨z⟩^{ν−|α|} ⟨z,μ⟩^{d−ν−j}`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::compiled::CompiledSymbol;
use super::leibniz::multi_indices;

/// Anything that can be sampled at `(z, μ)`.
pub trait EvaluableSymbol: Sync {
    fn nvars(&self) -> usize;
    fn eval(&self, z: &[f64], mu: f64) -> Complex64;
}

impl EvaluableSymbol for CompiledSymbol {
    fn nvars(&self) -> usize {
        CompiledSymbol::nvars(self)
    }

    fn eval(&self, z: &[f64], mu: f64) -> Complex64 {
        self.evaluate(z, mu)
    }
}

/// Closure-backed symbol.
pub struct FnSymbol<F> {
    pub nvars: usize,
    pub f: F,
}

impl<F: Fn(&[f64], f64) -> Complex64 + Sync> EvaluableSymbol for FnSymbol<F> {
    fn nvars(&self) -> usize {
        self.nvars
    }

    fn eval(&self, z: &[f64], mu: f64) -> Complex64 {
        (self.f)(z, mu)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimateGrid {
    pub z_points: Vec<Vec<f64>>,
    pub mu_values: Vec<f64>,
    pub ceiling: f64,
    /// Relative finite-difference step.
    pub rel_step: f64,
}

impl EstimateGrid {
    /// Product grid: every `x_i` and every `ξ_i` runs over `±logspace(lo, hi, per_sign)`,
    /// all `x_i` equal and all `ξ_i` equal; `μ` over `logspace(mu_lo, mu_hi, mu_count)`.
    pub fn log_spaced(n: usize, lo: f64, hi: f64, per_sign: usize, mu_lo: f64, mu_hi: f64, mu_count: usize) -> Self {
        let mags = log_space(lo, hi, per_sign);
        let axis: Vec<f64> = mags.iter().rev().map(|v| -v).chain(mags.iter().copied()).collect();
        let mut z_points = Vec::with_capacity(axis.len() * axis.len());
        for &x in &axis {
            for &xi in &axis {
                let mut z = vec![x; n];
                z.extend(std::iter::repeat(xi).take(n));
                z_points.push(z);
            }
        }
        Self { z_points, mu_values: log_space(mu_lo, mu_hi, mu_count), ceiling: 1e3, rel_step: 1e-4 }
    }

    /// 20 × 20 position/frequency values (`±10^{-2}..10^3`) times 10 values of `μ ∈ [1, 10^4]`.
    pub fn standard(n: usize) -> Self {
        Self::log_spaced(n, 1e-2, 1e3, 10, 1.0, 1e4, 10)
    }
}

fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count).map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp()).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateReport {
    pub max_ratio: f64,
    pub worst_point: Vec<f64>,
    pub worst_mu: f64,
    /// Derivative orders over `(z₁..z_m, μ)` attaining the maximum.
    pub worst_derivative: Vec<u32>,
    pub evaluations: usize,
    pub ceiling: f64,
    pub pass: bool,
}

/// Central difference of order `k` in one variable: `Σ_i (−1)^i C(k,i) f(t + (k/2 − i)h) / h^k`.
fn stencil(k: u32) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(k as usize + 1);
    let mut binom = 1.0;
    for i in 0..=k {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        out.push((k as f64 / 2.0 - i as f64, sign * binom));
        binom = binom * (k - i) as f64 / (i + 1) as f64;
    }
    out
}

fn mixed_difference<S: EvaluableSymbol + ?Sized>(a: &S, z: &[f64], mu: f64, orders: &[u32], steps: &[f64]) -> Complex64 {
    let m = z.len();
    let stencils: Vec<Vec<(f64, f64)>> = orders.iter().map(|&k| stencil(k)).collect();
    let mut idx = vec![0usize; orders.len()];
    let mut acc = Complex64::new(0.0, 0.0);
    let mut zz = z.to_vec();
    loop {
        let mut w = 1.0;
        for (v, &i) in idx.iter().enumerate() {
            let (off, c) = stencils[v][i];
            w *= c;
            if v < m {
                zz[v] = z[v] + off * steps[v];
            }
        }
        let (off_mu, _) = stencils[m][idx[m]];
        acc += a.eval(&zz, mu + off_mu * steps[m]) * w;
        let mut pos = 0;
        loop {
            if pos == idx.len() {
                let scale: f64 = orders.iter().zip(steps).map(|(&k, &h)| h.powi(k as i32)).product();
                return acc / scale;
            }
            idx[pos] += 1;
            if idx[pos] < stencils[pos].len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

fn derivative<S: EvaluableSymbol + ?Sized>(a: &S, z: &[f64], mu: f64, orders: &[u32], steps: &[f64]) -> Complex64 {
    if orders.iter().all(|&k| k == 0) {
        return a.eval(z, mu);
    }
    let coarse = mixed_difference(a, z, mu, orders, steps);
    let half: Vec<f64> = steps.iter().map(|h| h / 2.0).collect();
    let fine = mixed_difference(a, z, mu, orders, &half);
    (fine * 4.0 - coarse) / 3.0
}

/// Maximum over the grid and all `|α| + j ≤ max_order` of
/// `|D_z^α ∂_μ^j a| / (⟨z⟩^{ν−|α|} ⟨z,μ⟩^{d−ν−j})`.
/// Derivatives are central differences with steps `h·⟨z⟩` in `z` and
/// `h·max(μ,1)` in `μ`, Richardson-extrapolated once.
pub fn check_symbol_estimates<S: EvaluableSymbol + ?Sized>(
    a: &S,
    d: f64,
    nu: f64,
    grid: &EstimateGrid,
    max_order: u32,
) -> EstimateReport {
    let m = a.nvars();
    let derivs: Vec<Vec<u32>> = (0..=max_order).flat_map(|t| multi_indices(m + 1, t)).collect();
    let points: Vec<(usize, usize)> =
        (0..grid.z_points.len()).flat_map(|i| (0..grid.mu_values.len()).map(move |k| (i, k))).collect();
    let per_point: Vec<(f64, usize)> = points
        .par_iter()
        .map(|&(i, k)| {
            let z = &grid.z_points[i];
            let mu = grid.mu_values[k];
            let z2: f64 = z.iter().map(|v| v * v).sum();
            let jz = (1.0 + z2).sqrt();
            let jzm = (1.0 + z2 + mu * mu).sqrt();
            let mut steps = vec![grid.rel_step * jz; m];
            steps.push(grid.rel_step * mu.max(1.0));
            let mut best = (f64::NEG_INFINITY, 0usize);
            for (di, alpha) in derivs.iter().enumerate() {
                let az: u32 = alpha[..m].iter().sum();
                let j = alpha[m];
                let weight = jz.powf(nu - az as f64) * jzm.powf(d - nu - j as f64);
                let ratio = derivative(a, z, mu, alpha, &steps).norm() / weight;
                let ratio = if ratio.is_nan() { f64::INFINITY } else { ratio };
                if ratio > best.0 {
                    best = (ratio, di);
                }
            }
            best
        })
        .collect();
    let mut max_ratio = f64::NEG_INFINITY;
    let mut worst = (0usize, 0usize);
    for (p, &(r, di)) in per_point.iter().enumerate() {
        if r > max_ratio {
            max_ratio = r;
            worst = (p, di);
        }
    }
    let evaluations = points.len() * derivs.iter().map(|a| if a.iter().all(|&k| k == 0) { 1 } else { 2 * a.iter().map(|&k| k as usize + 1).product::<usize>() }).sum::<usize>();
    let (zi, mk) = points.get(worst.0).copied().unwrap_or((0, 0));
    EstimateReport {
        max_ratio,
        worst_point: grid.z_points.get(zi).cloned().unwrap_or_default(),
        worst_mu: grid.mu_values.get(mk).copied().unwrap_or(f64::NAN),
        worst_derivative: derivs.get(worst.1).cloned().unwrap_or_default(),
        evaluations,
        ceiling: grid.ceiling,
        pass: max_ratio.is_finite() && max_ratio <= grid.ceiling,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{parametrix, EllipticOperator};

    fn small_grid() -> EstimateGrid {
        EstimateGrid::log_spaced(1, 1e-2, 1e3, 5, 1.0, 1e4, 5)
    }

    #[test]
    fn resolvent_leading_term_passes() {
        let b = parametrix(&EllipticOperator::harmonic_oscillator(1), 1).unwrap();
        let rep = check_symbol_estimates(&CompiledSymbol::new(&b), -2.0, 0.0, &small_grid(), 2);
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn mu_squared_with_wrong_order_fails() {
        let a = FnSymbol { nvars: 2, f: |_: &[f64], mu: f64| Complex64::new(mu * mu, 0.0) };
        let rep = check_symbol_estimates(&a, 1.0, 0.0, &small_grid(), 2);
        assert!(!rep.pass);
        assert!(rep.max_ratio > 1e3);
    }

    #[test]
    fn polynomial_of_matching_degree_passes() {
        let a = FnSymbol { nvars: 2, f: |z: &[f64], _: f64| Complex64::new(z[0] * z[0] + z[1] * z[1], 0.0) };
        let rep = check_symbol_estimates(&a, 2.0, 2.0, &small_grid(), 2);
        assert!(rep.pass, "{rep:?}");
        assert!(rep.max_ratio <= 2.0 + 1e-6);
    }

    #[test]
    fn stencils_are_exact_on_polynomials() {
        let a = FnSymbol { nvars: 2, f: |z: &[f64], mu: f64| Complex64::new(z[0].powi(2) * z[1] * mu, 0.0) };
        let v = derivative(&a, &[1.5, 2.0], 3.0, &[1, 1, 0], &[1e-3, 1e-3, 1e-3]);
        assert!((v.re - 2.0 * 1.5 * 3.0).abs() < 1e-6);
    }
}
