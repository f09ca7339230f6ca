//! Acceptance suite: one PASS/FAIL line per criterion; the process fails if any criterion fails.

use std::collections::BTreeMap;
use std::time::Instant;

use num_complex::Complex64;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use shubin_core::calculus::{
    brace_coefficients, check_symbol_estimates, leibniz_bundles, leibniz_truncated, parametrix, CompiledSymbol,
    CutoffProfile, CutoffSpec, EllipticOperator, EstimateGrid, SymbolExpansion, symbol_power,
};
use shubin_core::numeric::{geometric_grid, log_log_slope};
use shubin_core::oracle::{compare_expansions, oscillator_expansion_reference};
use shubin_core::poly::{int, rat, rational_to_f64, GaussianRational, TermBundle};
use shubin_core::trace::{
    fit_basis, log_coefficients, resolvent_trace_expansion, trace_integral_numeric, BasisFunction,
    QuadratureSpec, TraceExpansion,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

// ---------------------------------------------------------------------------
// Criterion 1: operator composition oracle on monomial test functions.

/// Polynomial in `x ∈ ℝⁿ` with Gaussian-rational coefficients.
type XPoly = BTreeMap<Vec<u32>, GaussianRational>;

fn xpoly_add(p: &mut XPoly, k: Vec<u32>, c: GaussianRational) {
    let e = p.entry(k).or_insert_with(GaussianRational::zero);
    *e += &c;
    if e.is_zero() {
        p.retain(|_, v| !v.is_zero());
    }
}

/// `a(x, D) u` for `a = Σ c z^{(β, γ)}` and `D = −i∂`: each term acts as `c x^β D^γ`.
fn apply_operator(a: &TermBundle, n: usize, u: &XPoly) -> XPoly {
    let mut out = XPoly::new();
    for t in a.monomials() {
        let (beta, gamma) = t.exponents.split_at(n);
        for (ue, uc) in u {
            if ue.iter().zip(gamma).any(|(e, g)| e < g) {
                continue;
            }
            let mut coeff = &t.coeff * uc;
            let mut exps = ue.clone();
            for i in 0..n {
                for k in 0..gamma[i] {
                    coeff = coeff.scale(&int((ue[i] - k) as i64));
                }
                exps[i] = exps[i] - gamma[i] + beta[i];
            }
            let total: u32 = gamma.iter().sum();
            for _ in 0..total {
                coeff = &coeff * &GaussianRational::minus_i();
            }
            xpoly_add(&mut out, exps, coeff);
        }
    }
    out
}

fn random_polynomial(rng: &mut ChaCha8Rng, n: usize) -> TermBundle {
    let nvars = 2 * n;
    let mut p = TermBundle::zero(nvars);
    for _ in 0..rng.gen_range(1..=5) {
        let deg = rng.gen_range(0..=4u32);
        let mut exps = vec![0u32; nvars];
        for _ in 0..deg {
            exps[rng.gen_range(0..nvars)] += 1;
        }
        let c = GaussianRational::new(int(rng.gen_range(-3..=3)), int(rng.gen_range(-3..=3)));
        p = &p + &TermBundle::monomial(nvars, c, exps, int(0));
    }
    p
}

fn monomials_up_to(n: usize, deg: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|v: Vec<u32>| {
                (0..=deg).map(move |k| {
                    let mut w = v.clone();
                    w.push(k);
                    w
                })
            })
            .collect();
    }
    out.retain(|v| v.iter().sum::<u32>() <= deg);
    out
}

fn sum_components(s: &SymbolExpansion) -> TermBundle {
    s.components().iter().fold(TermBundle::zero(s.nvars()), |acc, c| {
        c.pieces().values().fold(acc, |acc, p| &acc + p)
    })
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut failures = 0;
    let mut checks = 0;
    for case in 0..200 {
        let n = 1 + case % 2;
        let a = random_polynomial(&mut rng, n);
        let b = random_polynomial(&mut rng, n);
        let ab = leibniz_bundles(&a, &b, 4);
        let sa = SymbolExpansion::from_bundle(&a, None).unwrap();
        let sb = SymbolExpansion::from_bundle(&b, None).unwrap();
        let truncated = leibniz_truncated(&sa, &sb, 17).unwrap();
        let ab_components = sum_components(&truncated);
        let ok_trunc = ab_components == ab && truncated.is_exact();
        let mut ok = ok_trunc;
        for beta in monomials_up_to(n, 4) {
            let mut u = XPoly::new();
            u.insert(beta, GaussianRational::one());
            let lhs = apply_operator(&a, n, &apply_operator(&b, n, &u));
            let rhs = apply_operator(&ab, n, &u);
            checks += 1;
            ok &= lhs == rhs;
        }
        if !ok {
            failures += 1;
        }
    }
    outcome(failures == 0, format!("200 random pairs, {checks} monomial test functions, {failures} mismatches"))
}

// ---------------------------------------------------------------------------
// Criterion 2: parametrix defect.

fn defect_ok(p0: &EllipticOperator, j: usize) -> (bool, String) {
    let b = parametrix(p0, j).unwrap();
    let p = SymbolExpansion::resolvent_operator(p0);
    let mut ok = true;
    let mut msg = Vec::new();
    for (name, prod) in [("p#b", leibniz_truncated(&p, &b, j).unwrap()), ("b#p", leibniz_truncated(&b, &p, j).unwrap())] {
        let c0 = prod.component(0).unwrap();
        let unit = c0.pieces().len() == 1 && c0.pieces().get(&0) == Some(&TermBundle::one(p0.nvars()));
        let rest_zero = (1..j).all(|k| prod.component(k).is_some_and(|c| c.is_zero()));
        ok &= unit && rest_zero && prod.len() == j;
        msg.push(format!("{name}: component 0 = 1 {unit}, components 1..{} zero {rest_zero}", j - 1));
    }
    (ok, msg.join("; "))
}

fn criterion_2() -> Outcome {
    let ho = EllipticOperator::harmonic_oscillator(1);
    let shifted = EllipticOperator::from_polynomial(
        1,
        2,
        &(&TermBundle::norm_squared(2).scale_rational(&int(-1)) - &TermBundle::var(2, 0)),
    )
    .unwrap();
    let (a, ma) = defect_ok(&ho, 8);
    let (b, mb) = defect_ok(&shifted, 8);
    outcome(a && b, format!("HO [{ma}]; −(x²+ξ²)−x [{mb}]"))
}

// ---------------------------------------------------------------------------
// Criterion 3: δ-convolution of brace coefficients.

fn criterion_3() -> Outcome {
    let p0 = EllipticOperator::harmonic_oscillator(1);
    let l = 12;
    let b = parametrix(&p0, l).unwrap();
    let p = SymbolExpansion::resolvent_operator(&p0);
    let bb = brace_coefficients(&b, l);
    let bp = brace_coefficients(&p, l);
    let mut conv_ok = true;
    for ell in 0..l {
        let mut s = TermBundle::zero(2);
        for k in 0..=ell {
            s = &s + &leibniz_bundles(&bb[k], &bp[ell - k], 12);
        }
        let expected = if ell == 0 { TermBundle::one(2) } else { TermBundle::zero(2) };
        conv_ok &= s == expected;
    }
    let off_multiples = (0..l).filter(|e| e % 2 == 1).all(|e| bb[e].is_zero());
    // even brace coefficients are the sharp powers of p₀
    let mut power = TermBundle::one(2);
    let mut powers_ok = true;
    for k in 0..l / 2 {
        powers_ok &= bb[2 * k] == power;
        power = leibniz_bundles(&power, p0.principal(), 12);
    }
    outcome(
        conv_ok && off_multiples && powers_ok,
        format!(
            "Σ_k b{{k}} # p{{ℓ−k}} = δ for ℓ < {l}: {conv_ok}; odd ℓ vanish: {off_multiples}; b{{2k}} = p0^#k: {powers_ok}"
        ),
    )
}

// ---------------------------------------------------------------------------
// Criteria 4–8: resolvent trace expansion of the harmonic oscillator.

fn ho_expansion(power: u32, j: usize, l: usize, cutoff: CutoffSpec, spec: &QuadratureSpec) -> TraceExpansion {
    let p0 = EllipticOperator::harmonic_oscillator(1);
    let q = SymbolExpansion::from_bundle(&TermBundle::one(2), None).unwrap();
    resolvent_trace_expansion(&p0, &q, power, j, l, cutoff, spec).unwrap()
}

fn criterion_4() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for power in [2u32, 3, 4] {
        let e = ho_expansion(power, 2, 2, CutoffSpec::default(), &QuadratureSpec::default());
        let c0 = e.power(0).unwrap().value;
        let closed = rat(1, 2 * (power as i64 - 1));
        let reference = oscillator_expansion_reference(power, 1).unwrap()[0].clone();
        let err = (c0 - Complex64::new(rational_to_f64(&closed), 0.0)).norm();
        let exact_match = reference == closed;
        ok &= err <= 1e-9 && exact_match;
        parts.push(format!("N={power}: c_0 = {:.15} |err| = {err:.1e}, reference a_0 = {reference}", c0.re));
    }
    outcome(ok, parts.join("; "))
}

fn criterion_5() -> Outcome {
    let t = Instant::now();
    let e = ho_expansion(2, 6, 8, CutoffSpec::default(), &QuadratureSpec::default());
    let secs = t.elapsed().as_secs_f64();
    let reference = oscillator_expansion_reference(2, 3).unwrap();
    let report = compare_expansions(&e, &reference, 2, &[1e-8, 1e-6, 1e-4]).unwrap();
    let logs_zero = !e.log_coeffs.is_empty() && e.log_coeffs.iter().all(|c| c.exact.is_zero());
    let rows: Vec<String> = report
        .rows
        .iter()
        .map(|r| format!("λ^{} engine {:.10} vs {} (|err| {:.1e} ≤ {:.0e})", r.lambda_exponent, r.engine.re, r.oracle_exact, r.abs_error, r.tolerance))
        .collect();
    outcome(
        report.pass && logs_zero && secs <= 300.0,
        format!("{}; all {} c'_ℓ exactly 0: {logs_zero}; {secs:.2}s", rows.join(", "), e.log_coeffs.len()),
    )
}

fn criterion_6() -> Outcome {
    let base = EllipticOperator::harmonic_oscillator(1).denominator_base();
    let a = SymbolExpansion::single_piece(base, TermBundle::radial(2, int(-2)), 2, int(-2))
        .unwrap()
        .with_cutoff(CutoffSpec::default());
    let logs = log_coefficients(&a);
    let exact_one = logs.len() == 1 && logs.get(&0) == Some(&GaussianRational::from_int(1));
    let spec = QuadratureSpec::default();
    let samples: Vec<(f64, Complex64)> =
        spec.mu_grid.iter().map(|&mu| (mu, trace_integral_numeric(&a, mu, &spec).unwrap().value)).collect();
    let basis = [
        BasisFunction::log_power(-4.0),
        BasisFunction::power(-4.0),
        BasisFunction::power(-6.0),
        BasisFunction::power(-8.0),
    ];
    let fit = fit_basis(&samples, &basis).unwrap();
    let fitted = fit.coefficients[0];
    let err = (fitted - Complex64::new(1.0, 0.0)).norm();
    outcome(
        exact_one && err <= 1e-3,
        format!("exact c'_0 = {} ; independent fit of the μ^-4 log μ coefficient = {:.8} (|err| {err:.1e})", logs.get(&0).map_or("none".into(), |c| c.to_string()), fitted.re),
    )
}

fn criterion_7() -> Outcome {
    let spec = QuadratureSpec::default();
    let a = ho_expansion(2, 6, 8, CutoffSpec::new(0.5, 1.0, CutoffProfile::SmoothBump).unwrap(), &spec);
    let b = ho_expansion(2, 6, 8, CutoffSpec::new(1.0, 2.0, CutoffProfile::SmoothBump).unwrap(), &spec);
    let dc = a.power_coeffs.iter().zip(&b.power_coeffs).map(|(x, y)| (x.value - y.value).norm()).fold(0.0, f64::max);
    let dl = a.log_coeffs.iter().zip(&b.log_coeffs).map(|(x, y)| (x.value - y.value).norm()).fold(0.0, f64::max);
    let dcc = a.const_coeffs.iter().zip(&b.const_coeffs).map(|(x, y)| (x.value - y.value).norm()).fold(0.0, f64::max);
    let aligned = a.power_coeffs.len() == b.power_coeffs.len() && a.log_coeffs.len() == b.log_coeffs.len();
    outcome(
        aligned && dc < 1e-7 && dl < 1e-7 && dcc > 1e-3,
        format!("max |Δc_j| = {dc:.1e}, max |Δc'_ℓ| = {dl:.1e}, max |Δc''_ℓ| = {dcc:.3}"),
    )
}

fn criterion_8() -> Outcome {
    // tight radial tolerances so that I(μ) − model(μ) ~ μ^{-8} ≈ 1e-20 stays above quadrature noise
    let spec = QuadratureSpec { abs_tol: 1e-15, rel_tol: 1e-14, ..QuadratureSpec::default() };
    let e = ho_expansion(2, 6, 8, CutoffSpec::default(), &spec);
    let b = parametrix(&EllipticOperator::harmonic_oscillator(1), 6).unwrap();
    let a = symbol_power(&b, 2, 6).unwrap().with_cutoff(CutoffSpec::default());
    // evaluation grid interleaved with the fitting grid
    let mus = geometric_grid(11.0, 300.0, 12);
    let mut lambdas = Vec::new();
    let mut residuals = Vec::new();
    for &mu in &mus {
        let i = trace_integral_numeric(&a, mu, &spec).unwrap().value;
        // model through λ^{-3} = μ^{-6}
        let r = (i - e.model_at(mu, -6.0)).norm();
        lambdas.push(mu * mu);
        residuals.push(r);
    }
    let slope = log_log_slope(&lambdas, &residuals);
    outcome(
        (slope + 4.0).abs() <= 0.5,
        format!(
            "log-log slope in λ = {slope:.3} (target −4 ± 0.5); residual {:.2e} at μ = {:.0}, {:.2e} at μ = {:.0}",
            residuals[0], mus[0], residuals[mus.len() - 1], mus[mus.len() - 1]
        ),
    )
}

// ---------------------------------------------------------------------------
// Criterion 9: symbol estimates of the parametrix components.

fn criterion_9() -> Outcome {
    // derivative cap |α| + j ≤ 2 covers mixed and second derivatives
    const MAX_ORDER: u32 = 2;
    let p0 = EllipticOperator::harmonic_oscillator(1);
    let b = parametrix(&p0, 7).unwrap();
    let grid = EstimateGrid::standard(1);
    let base = b.base().map(|x| x.as_ref());
    let mut ok = true;
    let mut parts = Vec::new();
    let mut first_order = 0.0f64;
    for j in 0..=6usize {
        let c = CompiledSymbol::from_components(2, base, std::slice::from_ref(b.component(j).unwrap()));
        let rep = check_symbol_estimates(&c, -2.0 - j as f64, -(j as f64), &grid, MAX_ORDER);
        first_order = first_order.max(check_symbol_estimates(&c, -2.0 - j as f64, -(j as f64), &grid, 1).max_ratio);
        ok &= rep.pass;
        parts.push(format!("j={j}: {:.2}{}", rep.max_ratio, if rep.pass { "" } else { " (over ceiling)" }));
    }
    outcome(
        ok,
        format!(
            "max ratio with |α|+j ≤ {MAX_ORDER}, ceiling 1e3: {}; for reference, max over j with |α|+j ≤ 1 is {first_order:.2}",
            parts.join(", ")
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("Leibniz product equals operator composition", criterion_1),
        ("parametrix defect vanishes", criterion_2),
        ("δ-convolution of brace coefficients", criterion_3),
        ("leading trace coefficient", criterion_4),
        ("oracle coefficient match", criterion_5),
        ("log-term reproduction", criterion_6),
        ("cutoff independence", criterion_7),
        ("residual decay", criterion_8),
        ("symbol-estimate membership", criterion_9),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = f();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {} [{verdict}] {name} ({:.1}s): {}", k + 1, t.elapsed().as_secs_f64(), o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} of 9 criteria passed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
