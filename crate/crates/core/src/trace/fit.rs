//! Weighted linear least squares in bases of `μ^e` and `μ^e log μ`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use super::TraceError;

/// `μ^{exponent}`, times `log μ` when `log` is set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BasisFunction {
    pub exponent: f64,
    pub log: bool,
}

impl BasisFunction {
    pub fn power(exponent: f64) -> Self {
        Self { exponent, log: false }
    }

    pub fn log_power(exponent: f64) -> Self {
        Self { exponent, log: true }
    }

    pub fn eval(&self, mu: f64) -> f64 {
        let p = mu.powf(self.exponent);
        if self.log {
            p * mu.ln()
        } else {
            p
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitResult {
    pub coefficients: Vec<Complex64>,
    /// Weighted residual 2-norm.
    pub residual_norm: f64,
    /// Ratio of extreme singular values of the column-normalized weighted design matrix.
    pub condition_number: f64,
}

/// Least squares for `y(μ) ≈ Σ_k c_k φ_k(μ)` with row `i` weighted by
/// `μ_i^{−e_max}`, `e_max` the largest basis exponent, so every row is O(1).
pub fn fit_basis(samples: &[(f64, Complex64)], basis: &[BasisFunction]) -> Result<FitResult, TraceError> {
    if basis.is_empty() {
        return Ok(FitResult { coefficients: Vec::new(), residual_norm: 0.0, condition_number: 1.0 });
    }
    let mut mus: Vec<f64> = samples.iter().map(|s| s.0).collect();
    mus.sort_by(|a, b| a.partial_cmp(b).expect("finite μ"));
    mus.dedup();
    if mus.len() < 2 * basis.len() {
        return Err(TraceError::InsufficientSamples { samples: mus.len(), required: 2 * basis.len() });
    }
    let e_max = basis.iter().map(|b| b.exponent).fold(f64::NEG_INFINITY, f64::max);
    let rows = samples.len();
    let cols = basis.len();
    let mut a = DMatrix::<f64>::zeros(rows, cols);
    let mut yr = DVector::<f64>::zeros(rows);
    let mut yi = DVector::<f64>::zeros(rows);
    for (i, &(mu, y)) in samples.iter().enumerate() {
        let w = mu.powf(-e_max);
        for (k, b) in basis.iter().enumerate() {
            a[(i, k)] = w * b.eval(mu);
        }
        yr[i] = w * y.re;
        yi[i] = w * y.im;
    }
    let norms: Vec<f64> = (0..cols).map(|k| a.column(k).norm()).collect();
    for (k, &nk) in norms.iter().enumerate() {
        if nk == 0.0 {
            return Err(TraceError::IllConditioned { condition_number: f64::INFINITY });
        }
        a.column_mut(k).scale_mut(1.0 / nk);
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition_number = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !condition_number.is_finite() || condition_number > 1e14 {
        return Err(TraceError::IllConditioned { condition_number });
    }
    let eps = 1e-15 * smax;
    let xr = svd.solve(&yr, eps).map_err(|e| TraceError::FitFailed(e.to_string()))?;
    let xi = svd.solve(&yi, eps).map_err(|e| TraceError::FitFailed(e.to_string()))?;
    let rr = &a * &xr - &yr;
    let ri = &a * &xi - &yi;
    let residual_norm = (rr.norm_squared() + ri.norm_squared()).sqrt();
    let coefficients = (0..cols).map(|k| Complex64::new(xr[k] / norms[k], xi[k] / norms[k])).collect();
    Ok(FitResult { coefficients, residual_norm, condition_number })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::geometric_grid;

    #[test]
    fn recovers_planted_log_model() {
        let basis = [BasisFunction::power(-4.0), BasisFunction::log_power(-4.0)];
        let samples: Vec<(f64, Complex64)> = geometric_grid(10.0, 320.0, 16)
            .into_iter()
            .map(|mu| (mu, Complex64::new(2.0 * mu.powi(-4) + 3.0 * mu.powi(-4) * mu.ln(), 0.0)))
            .collect();
        let fit = fit_basis(&samples, &basis).unwrap();
        assert!((fit.coefficients[0].re - 2.0).abs() < 1e-6);
        assert!((fit.coefficients[1].re - 3.0).abs() < 1e-6);
    }

    #[test]
    fn zero_data_gives_zero_coefficients() {
        let basis = [BasisFunction::power(-4.0), BasisFunction::power(-6.0)];
        let samples: Vec<(f64, Complex64)> =
            geometric_grid(10.0, 320.0, 16).into_iter().map(|mu| (mu, Complex64::new(0.0, 0.0))).collect();
        let fit = fit_basis(&samples, &basis).unwrap();
        assert!(fit.coefficients.iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn too_few_samples() {
        let basis = [BasisFunction::power(-4.0), BasisFunction::power(-6.0)];
        let samples = vec![(10.0, Complex64::new(1.0, 0.0)), (20.0, Complex64::new(1.0, 0.0))];
        assert!(matches!(fit_basis(&samples, &basis), Err(TraceError::InsufficientSamples { .. })));
    }
}
