//! Adaptive Gauss–Kronrod integration and product rules on spheres.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::numeric::ComplexSum;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
/// Gauss weights for the odd-indexed Kronrod nodes `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { abs: 1e-12, rel: 1e-10, max_intervals: 4000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadResult {
    pub value: Complex64,
    pub error: f64,
    pub evaluations: usize,
    pub intervals: usize,
    pub converged: bool,
}

#[derive(Clone, Copy, Debug)]
struct Segment {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> Segment {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        kron += s * WGK[i];
        if i % 2 == 1 {
            gauss += s * WG[i / 2];
        }
    }
    let value = kron * h;
    let error = ((kron - gauss) * h).norm();
    Segment { a, b, value, error }
}

/// Globally adaptive G7–K15 over `[breaks[0], breaks[last]]`, starting from the
/// given breakpoints. The interval with the largest error estimate (leftmost on
/// ties) is bisected until `error ≤ max(abs, rel·|value|)`. Sums are taken in
/// interval order with compensation, so the result is deterministic.
pub fn integrate<F: Fn(f64) -> Complex64>(f: F, breaks: &[f64], tol: &Tolerance) -> QuadResult {
    let mut segs: Vec<Segment> = breaks.windows(2).filter(|w| w[1] > w[0]).map(|w| gk15(&f, w[0], w[1])).collect();
    let mut evaluations = 15 * segs.len();
    loop {
        let (value, error) = totals(&segs);
        let target = tol.abs.max(tol.rel * value.norm());
        if error <= target || segs.len() >= tol.max_intervals {
            return QuadResult { value, error, evaluations, intervals: segs.len(), converged: error <= target };
        }
        let (worst, _) = segs
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, be), (i, s)| if s.error > be { (i, s.error) } else { (bi, be) });
        let s = segs[worst];
        let mid = 0.5 * (s.a + s.b);
        if !(mid > s.a && mid < s.b) {
            return QuadResult { value, error, evaluations, intervals: segs.len(), converged: false };
        }
        let left = gk15(&f, s.a, mid);
        let right = gk15(&f, mid, s.b);
        evaluations += 30;
        segs[worst] = left;
        segs.insert(worst + 1, right);
    }
}

fn totals(segs: &[Segment]) -> (Complex64, f64) {
    let mut v = ComplexSum::new();
    let mut e = crate::numeric::CompensatedSum::new();
    for s in segs {
        v.add(s.value);
        e.add(s.error);
    }
    (v.value(), e.value())
}

/// `∫_0^∞ g(r) dr` through `u = 1/(1+r)`, split at the images of the given radii.
pub fn integrate_half_line<F: Fn(f64) -> Complex64>(g: F, radii: &[f64], tol: &Tolerance) -> QuadResult {
    let mut breaks = vec![0.0, 1.0];
    for &r in radii {
        if r > 0.0 && r.is_finite() {
            breaks.push(1.0 / (1.0 + r));
        }
    }
    breaks.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
    breaks.dedup();
    integrate(
        |u| {
            let r = (1.0 - u) / u;
            g(r) / (u * u)
        },
        &breaks,
        tol,
    )
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut t = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, t);
            dp = d;
            let step = p / d;
            t -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, t);
        dp = if d != 0.0 { d } else { dp };
        let wi = 2.0 / ((1.0 - t * t) * dp * dp);
        x[i] = -t;
        x[n - 1 - i] = t;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre(n: usize, t: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, t);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * t * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * (t * p1 - p0) / (t * t - 1.0))
}

/// Nodes on `S^{m−1}` with weights summing to `|S^{m−1}|`.
///
/// `m = 2`: trapezoid with `order` equispaced angles. `m ≥ 3`: hyperspherical
/// coordinates with `order`-point Gauss–Legendre in each polar angle (the
/// `sin^k` Jacobian folded into the weights) and a `2·order`-point trapezoid in
/// the azimuth.
#[derive(Clone, Debug)]
pub struct SphereRule {
    pub m: usize,
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl SphereRule {
    pub fn new(m: usize, order: usize) -> Self {
        match m {
            0 => Self { m, nodes: Vec::new(), weights: Vec::new() },
            1 => Self { m, nodes: vec![vec![-1.0], vec![1.0]], weights: vec![1.0, 1.0] },
            2 => {
                let w = 2.0 * PI / order as f64;
                let nodes = (0..order)
                    .map(|k| {
                        let t = 2.0 * PI * k as f64 / order as f64;
                        vec![t.cos(), t.sin()]
                    })
                    .collect();
                Self { m, nodes, weights: vec![w; order] }
            }
            _ => {
                let (gx, gw) = gauss_legendre(order);
                let polar: Vec<(f64, f64)> =
                    gx.iter().zip(&gw).map(|(&x, &w)| (0.5 * PI * (x + 1.0), 0.5 * PI * w)).collect();
                let az = 2 * order;
                let mut nodes = Vec::new();
                let mut weights = Vec::new();
                let mut idx = vec![0usize; m - 2];
                loop {
                    let mut s = 1.0;
                    let mut w = 2.0 * PI / az as f64;
                    let mut head = Vec::with_capacity(m);
                    for (k, &i) in idx.iter().enumerate() {
                        let (th, wt) = polar[i];
                        head.push(s * th.cos());
                        w *= wt * th.sin().powi((m - 2 - k) as i32);
                        s *= th.sin();
                    }
                    for a in 0..az {
                        let phi = 2.0 * PI * a as f64 / az as f64;
                        let mut p = head.clone();
                        p.push(s * phi.cos());
                        p.push(s * phi.sin());
                        nodes.push(p);
                        weights.push(w);
                    }
                    let mut pos = 0;
                    loop {
                        if pos == idx.len() {
                            return Self { m, nodes, weights };
                        }
                        idx[pos] += 1;
                        if idx[pos] < order {
                            break;
                        }
                        idx[pos] = 0;
                        pos += 1;
                    }
                }
            }
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_kronrod_smooth_and_singular() {
        let r = integrate(|x| Complex64::new(x.exp(), 0.0), &[0.0, 1.0], &Tolerance::default());
        assert!((r.value.re - (1f64.exp() - 1.0)).abs() < 1e-13);
        let r = integrate(|x| Complex64::new(x.sqrt().recip(), 0.0), &[0.0, 1.0], &Tolerance::default());
        assert!(r.converged);
        assert!((r.value.re - 2.0).abs() < 1e-9);
    }

    #[test]
    fn half_line_rational() {
        // ∫_0^∞ r (1 + r²)^{-2} dr = 1/2
        let r = integrate_half_line(|r| Complex64::new(r / (1.0 + r * r).powi(2), 0.0), &[1.0], &Tolerance::default());
        assert!((r.value.re - 0.5).abs() < 1e-12);
    }

    #[test]
    fn legendre_rule_integrates_polynomials() {
        let (x, w) = gauss_legendre(7);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(12)).sum();
        assert!((s - 2.0 / 13.0).abs() < 1e-14);
    }

    #[test]
    fn sphere_rule_weights() {
        for (m, area) in [(2usize, 2.0 * PI), (3, 4.0 * PI), (4, 2.0 * PI * PI)] {
            let rule = SphereRule::new(m, 12);
            let s: f64 = rule.weights.iter().sum();
            assert!((s - area).abs() < 1e-12, "m = {m}");
            for p in &rule.nodes {
                assert!((p.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }
}
