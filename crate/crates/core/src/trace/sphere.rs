//! Exact integrals of monomials over the unit sphere `S^{m−1}`.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::numeric::ComplexSum;
use crate::poly::{GaussianRational, GeneralizedMonomial, TermBundle};

/// `coeff · π^{pi_half_power / 2}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SphereConstant {
    pub coeff: GaussianRational,
    pub pi_half_power: u32,
}

impl SphereConstant {
    pub fn zero(m: usize) -> Self {
        Self { coeff: GaussianRational::zero(), pi_half_power: natural_pi_power(m) }
    }

    pub fn is_zero(&self) -> bool {
        self.coeff.is_zero()
    }

    pub fn to_complex(&self) -> Complex64 {
        self.coeff.to_complex() * PI.sqrt().powi(self.pi_half_power as i32)
    }

    /// Sum of two constants carrying the same power of `π`.
    pub fn add(&self, other: &SphereConstant) -> SphereConstant {
        assert_eq!(self.pi_half_power, other.pi_half_power, "sphere constants of one dimension share the π-power");
        SphereConstant { coeff: &self.coeff + &other.coeff, pi_half_power: self.pi_half_power }
    }

    pub fn scale(&self, c: &GaussianRational) -> SphereConstant {
        SphereConstant { coeff: &self.coeff * c, pi_half_power: self.pi_half_power }
    }
}

/// Every monomial integral over `S^{m−1}` carries `π^{m/2}` for even `m` and `π^{(m−1)/2}` for odd `m`.
fn natural_pi_power(m: usize) -> u32 {
    (m - m % 2) as u32
}

fn factorial(k: u64) -> BigInt {
    (2..=k).fold(BigInt::one(), |acc, v| acc * BigInt::from(v))
}

/// `Γ(k + 1/2) / √π = (2k)! / (4^k k!)`.
fn gamma_half_over_sqrt_pi(k: u64) -> BigRational {
    BigRational::new(factorial(2 * k), BigInt::from(4).pow(k as u32) * factorial(k))
}

/// `∫_{S^{m−1}} ω^α dσ = 2 Π Γ((α_i+1)/2) / Γ((|α|+m)/2)`, zero when some `α_i` is odd.
/// The radial factor `|ω|^s` equals one on the sphere.
pub fn sphere_integral_exact(t: &GeneralizedMonomial, m: usize) -> SphereConstant {
    let power = natural_pi_power(m);
    if t.exponents.iter().any(|a| a % 2 == 1) || t.coeff.is_zero() {
        return SphereConstant::zero(m);
    }
    let mut num = BigRational::from_integer(BigInt::from(2));
    for &a in &t.exponents {
        num *= gamma_half_over_sqrt_pi(a as u64 / 2);
    }
    let total: u64 = t.exponents.iter().map(|&a| a as u64).sum::<u64>() + m as u64;
    // total is even iff m is even, since |α| is even here
    let den = if total % 2 == 0 {
        BigRational::from_integer(factorial(total / 2 - 1))
    } else {
        gamma_half_over_sqrt_pi((total - 1) / 2)
    };
    SphereConstant { coeff: t.coeff.scale(&(num / den)), pi_half_power: power }
}

pub fn sphere_integral_bundle(p: &TermBundle, m: usize) -> SphereConstant {
    p.monomials()
        .iter()
        .fold(SphereConstant::zero(m), |acc, t| acc.add(&sphere_integral_exact(t, m)))
}

/// Seeded Monte-Carlo estimate of a sphere integral.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub value: Complex64,
    pub std_error: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Uniform points on `S^{m−1}` from normalized Gaussian vectors; the estimate is `|S^{m−1}|` times the sample mean.
pub fn monte_carlo_sphere_integral(p: &TermBundle, m: usize, samples: usize, seed: u64) -> MonteCarloEstimate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let area = sphere_area(m);
    let mut sum = ComplexSum::new();
    let mut sq = crate::numeric::CompensatedSum::new();
    let mut z = vec![0.0; m];
    for _ in 0..samples {
        let r = loop {
            for v in z.iter_mut() {
                *v = StandardNormal.sample(&mut rng);
            }
            let r = z.iter().map(|v| v * v).sum::<f64>().sqrt();
            if r > 0.0 {
                break r;
            }
        };
        z.iter_mut().for_each(|v| *v /= r);
        let f = p.evaluate(&z).expect("unit vector is away from the origin");
        sum.add(f);
        sq.add(f.norm_sqr());
    }
    let n = samples as f64;
    let mean = sum.value() / n;
    let var = (sq.value() / n - mean.norm_sqr()).max(0.0) * n / (n - 1.0).max(1.0);
    MonteCarloEstimate { value: mean * area, std_error: area * (var / n).sqrt(), samples, seed }
}

/// `|S^{m−1}| = 2π^{m/2} / Γ(m/2)`.
pub fn sphere_area(m: usize) -> f64 {
    sphere_integral_exact(&GeneralizedMonomial::unit(m), m).to_complex().re
}
