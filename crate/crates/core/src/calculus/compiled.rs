//! Floating-point snapshots of exact symbols for repeated evaluation.

use num_complex::Complex64;

use super::symbol::{DenominatorBase, HomogeneousComponent, SymbolExpansion};
use crate::numeric::ComplexSum;
use crate::poly::{rational_to_f64, TermBundle};

#[derive(Clone, Debug)]
struct CompiledTerm {
    coeff: Complex64,
    exponents: Vec<u32>,
    /// `None` for polynomial terms.
    radial: Option<f64>,
}

/// A `TermBundle` with coefficients rounded to `f64`, terms in canonical order.
#[derive(Clone, Debug)]
pub struct CompiledBundle {
    nvars: usize,
    terms: Vec<CompiledTerm>,
}

impl CompiledBundle {
    pub fn new(p: &TermBundle) -> Self {
        let terms = p
            .iter()
            .map(|(k, c)| CompiledTerm {
                coeff: c.to_complex(),
                exponents: k.exponents.clone(),
                radial: (!num_traits::Zero::is_zero(&k.radial)).then(|| rational_to_f64(&k.radial)),
            })
            .collect();
        Self { nvars: p.nvars(), terms }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Evaluates at `z`; `norm` must equal `|z|`.
    pub fn evaluate_with_norm(&self, z: &[f64], norm: f64) -> Complex64 {
        let mut sum = ComplexSum::new();
        for t in &self.terms {
            let mut v = 1.0;
            for (x, &e) in z.iter().zip(&t.exponents) {
                if e > 0 {
                    v *= x.powi(e as i32);
                }
            }
            if let Some(s) = t.radial {
                v *= if s.fract() == 0.0 { norm.powi(s as i32) } else { norm.powf(s) };
            }
            sum.add(t.coeff * v);
        }
        sum.value()
    }

    pub fn evaluate(&self, z: &[f64]) -> Complex64 {
        self.evaluate_with_norm(z, norm(z))
    }
}

fn norm(z: &[f64]) -> f64 {
    z.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `Σ_M γ_M R^{-M}` in floating point.
#[derive(Clone, Debug)]
pub struct CompiledComponent {
    pieces: Vec<(i32, CompiledBundle)>,
}

impl CompiledComponent {
    pub fn new(c: &HomogeneousComponent) -> Self {
        Self { pieces: c.pieces().iter().map(|(&m, b)| (m, CompiledBundle::new(b))).collect() }
    }

    /// `r` is the value of `R(z, μ)`, `norm` equals `|z|`.
    pub fn evaluate_with(&self, z: &[f64], norm: f64, r: Complex64) -> Complex64 {
        let mut sum = ComplexSum::new();
        for (m, b) in &self.pieces {
            let v = b.evaluate_with_norm(z, norm);
            sum.add(if *m == 0 { v } else { v * r.powi(-m) });
        }
        sum.value()
    }

    pub fn is_zero(&self) -> bool {
        self.pieces.is_empty()
    }
}

/// Floating-point form of a `SymbolExpansion` or of selected components.
#[derive(Clone, Debug)]
pub struct CompiledSymbol {
    nvars: usize,
    principal: Option<CompiledBundle>,
    order: u32,
    components: Vec<CompiledComponent>,
}

impl CompiledSymbol {
    pub fn new(s: &SymbolExpansion) -> Self {
        Self::from_components(s.nvars(), s.base().map(|b| b.as_ref()), s.components())
    }

    pub fn from_components(nvars: usize, base: Option<&DenominatorBase>, comps: &[HomogeneousComponent]) -> Self {
        Self {
            nvars,
            principal: base.map(|b| CompiledBundle::new(&b.principal)),
            order: base.map_or(0, |b| b.order),
            components: comps.iter().map(CompiledComponent::new).collect(),
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn denominator(&self, z: &[f64], norm: f64, mu: f64) -> Complex64 {
        match &self.principal {
            Some(p) => Complex64::new(mu.powi(self.order as i32), 0.0) - p.evaluate_with_norm(z, norm),
            None => Complex64::new(1.0, 0.0),
        }
    }

    /// Values of each component at `(z, μ)`, in order.
    pub fn evaluate_each(&self, z: &[f64], mu: f64) -> Vec<Complex64> {
        let nz = norm(z);
        let r = self.denominator(z, nz, mu);
        self.components.iter().map(|c| c.evaluate_with(z, nz, r)).collect()
    }

    /// `Σ_j a_j(z, μ)` without any cutoff.
    pub fn evaluate(&self, z: &[f64], mu: f64) -> Complex64 {
        let nz = norm(z);
        let r = self.denominator(z, nz, mu);
        let mut sum = ComplexSum::new();
        for c in &self.components {
            sum.add(c.evaluate_with(z, nz, r));
        }
        sum.value()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{parametrix, EllipticOperator};

    #[test]
    fn compiled_matches_exact_evaluation() {
        let b = parametrix(&EllipticOperator::harmonic_oscillator(1), 5).unwrap();
        let c = CompiledSymbol::new(&b);
        for (z, mu) in [([0.3, -1.2], 2.0), ([4.0, 0.5], 0.7)] {
            let lhs = c.evaluate(&z, mu);
            let rhs = b.evaluate_components(&z, mu);
            assert!((lhs - rhs).norm() <= 1e-14 * rhs.norm().max(1e-300));
        }
    }
}
