//! Pipeline: ellipticity → parametrix → trace expansion → oracle comparison.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use shubin_core::calculus::{check_ellipticity, CalculusError, EllipticityCertificate, SphereSample};
use shubin_core::oracle::{compare_expansions, oscillator_expansion_reference, OracleReport};
use shubin_core::poly::format_rational;
use shubin_core::trace::{
    monte_carlo_sphere_integral, resolvent_trace_expansion, sphere_integral_bundle, TraceError, TraceExpansion,
};

use crate::config::{RunConfig, SCHEMA};
use crate::CliError;

/// Monte-Carlo cross-check of the exact sphere integral of the principal symbol.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonteCarloCheck {
    pub quantity: String,
    pub exact: [f64; 2],
    pub estimate: [f64; 2],
    pub std_error: f64,
    pub samples: usize,
    pub seed: u64,
    pub within_four_sigma: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagnostics {
    pub ellipticity: EllipticityCertificate,
    /// Largest radial quadrature error estimate over the μ-grid.
    pub max_quadrature_error: f64,
    pub fit_condition_number: Option<f64>,
    pub fit_residual_norm: Option<f64>,
    pub monte_carlo: MonteCarloCheck,
    pub notes: Vec<String>,
}

/// Structured result; contains no wall-clock data so identical configurations give identical bytes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunResult {
    pub schema: String,
    pub config: RunConfig,
    pub expansion: TraceExpansion,
    pub oracle: Option<OracleReport>,
    pub diagnostics: Diagnostics,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Timing {
    pub ellipticity_seconds: f64,
    pub expansion_seconds: f64,
    pub oracle_seconds: f64,
    pub total_seconds: f64,
    pub threads: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Emit {
    Json,
    Csv,
    All,
}

const MONTE_CARLO_SAMPLES: usize = 20_000;

const BRACE_SIGN_NOTE: &str = "brace coefficients of the parametrix follow b_{-d, dk} = (+1)·p0^{#k}, \
the sign forced by the δ-identity brace_ℓ(b # (μ^d − p0)) = δ_{ℓ0}; a (−1)^k convention disagrees with that identity";

fn computation(e: TraceError) -> CliError {
    match e {
        TraceError::Precondition(m) | TraceError::InvalidSpec(m) => CliError::Validation(m),
        TraceError::Calculus(CalculusError::NotElliptic { point, value }) => CliError::Computation(format!(
            "ellipticity violated: p0 principal part = {} + {}i at unit vector {point:?}",
            value.0, value.1
        )),
        other => CliError::Computation(other.to_string()),
    }
}

pub fn run(config: &RunConfig, seed: u64, verbose: bool) -> Result<(RunResult, Timing), CliError> {
    let start = Instant::now();
    let prepared = config.prepare()?;
    let log = |m: &str| {
        if verbose {
            eprintln!("[shubin] {m}");
        }
    };

    let t = Instant::now();
    let ellipticity = check_ellipticity(&prepared.p0, &SphereSample::default())
        .map_err(|e| computation(TraceError::Calculus(e)))?;
    let ellipticity_seconds = t.elapsed().as_secs_f64();
    log(&format!("ellipticity: min distance {:.3e} over {} samples", ellipticity.min_distance, ellipticity.samples));

    let t = Instant::now();
    let expansion = resolvent_trace_expansion(
        &prepared.p0,
        &prepared.q,
        config.power,
        config.j,
        config.l,
        config.cutoff,
        &config.quadrature,
    )
    .map_err(computation)?;
    let expansion_seconds = t.elapsed().as_secs_f64();
    log(&format!(
        "expansion: {} power, {} log, {} constant coefficients",
        expansion.power_coeffs.len(),
        expansion.log_coeffs.len(),
        expansion.const_coeffs.len()
    ));

    let t = Instant::now();
    let oracle = if config.oracle.enabled {
        let reference = oscillator_expansion_reference(config.power, config.oracle.terms)
            .map_err(|e| CliError::Computation(e.to_string()))?;
        let report = compare_expansions(&expansion, &reference, config.power, &config.oracle.tolerances)
            .map_err(|e| CliError::Computation(e.to_string()))?;
        log(&format!("oracle: {}", if report.pass { "PASS" } else { "FAIL" }));
        Some(report)
    } else {
        None
    };
    let oracle_seconds = t.elapsed().as_secs_f64();

    let m = prepared.p0.nvars();
    let principal = prepared.p0.principal();
    let exact = sphere_integral_bundle(principal, m).to_complex();
    let mc = monte_carlo_sphere_integral(principal, m, MONTE_CARLO_SAMPLES, seed);
    let monte_carlo = MonteCarloCheck {
        quantity: "integral of the principal symbol over the unit sphere".into(),
        exact: [exact.re, exact.im],
        estimate: [mc.value.re, mc.value.im],
        std_error: mc.std_error,
        samples: mc.samples,
        seed,
        within_four_sigma: (mc.value - exact).norm() <= 4.0 * mc.std_error + 1e-12 * exact.norm().max(1.0),
    };

    let max_quadrature_error = expansion.samples.iter().map(|s| s.integral_error).fold(0.0, f64::max);
    let mut notes = expansion.notes.clone();
    notes.push(BRACE_SIGN_NOTE.into());
    if let Some(r) = &oracle {
        for row in r.rows.iter().filter(|r| !r.pass) {
            notes.push(format!(
                "oracle row {} (λ^{}) exceeds tolerance: |error| = {:.3e} > {:.1e}",
                row.label, row.lambda_exponent, row.abs_error, row.tolerance
            ));
        }
    }
    let diagnostics = Diagnostics {
        ellipticity,
        max_quadrature_error,
        fit_condition_number: expansion.fit.as_ref().map(|f| f.condition_number),
        fit_residual_norm: expansion.fit.as_ref().map(|f| f.residual_norm),
        monte_carlo,
        notes,
    };
    let result = RunResult { schema: SCHEMA.into(), config: config.clone(), expansion, oracle, diagnostics };
    let timing = Timing {
        ellipticity_seconds,
        expansion_seconds,
        oracle_seconds,
        total_seconds: start.elapsed().as_secs_f64(),
        threads: rayon_threads(),
    };
    Ok((result, timing))
}

fn rayon_threads() -> usize {
    std::env::var("RAYON_NUM_THREADS")
        .ok()
        .and_then(|s| s.parse().ok())
        .filter(|&t: &usize| t > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

pub fn results_json(result: &RunResult) -> String {
    let mut s = serde_json::to_string_pretty(result).expect("results serialize");
    s.push('\n');
    s
}

fn csv_err(e: impl std::fmt::Display) -> CliError {
    CliError::Io(e.to_string())
}

/// One row per coefficient: `family,index,exponent,log,re,im,error,provenance,complete`.
pub fn coefficients_csv(e: &TraceExpansion) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["family", "index", "exponent", "log", "re", "im", "error", "provenance", "complete"])
        .map_err(csv_err)?;
    let prov = |p| serde_json::to_value(p).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
    for c in &e.power_coeffs {
        w.write_record([
            "mu_power".into(),
            c.j.to_string(),
            format_rational(&c.mu_exponent),
            "false".into(),
            c.value.re.to_string(),
            c.value.im.to_string(),
            c.error.to_string(),
            prov(c.provenance),
            "true".into(),
        ])
        .map_err(csv_err)?;
    }
    for c in &e.log_coeffs {
        w.write_record([
            "mu_log".into(),
            c.ell.to_string(),
            format_rational(&c.mu_exponent),
            "true".into(),
            c.value.re.to_string(),
            c.value.im.to_string(),
            "0".into(),
            prov(c.provenance),
            "true".into(),
        ])
        .map_err(csv_err)?;
    }
    for c in &e.const_coeffs {
        w.write_record([
            "mu_constant".into(),
            c.ell.to_string(),
            format_rational(&c.mu_exponent),
            "false".into(),
            c.value.re.to_string(),
            c.value.im.to_string(),
            "".into(),
            prov(c.provenance),
            "true".into(),
        ])
        .map_err(csv_err)?;
    }
    for (k, c) in e.lambda_view.iter().enumerate() {
        w.write_record([
            "lambda".into(),
            k.to_string(),
            format_rational(&c.exponent),
            c.log.to_string(),
            c.value.re.to_string(),
            c.value.im.to_string(),
            c.error.to_string(),
            c.sources.join(" "),
            c.complete.to_string(),
        ])
        .map_err(csv_err)?;
    }
    String::from_utf8(w.into_inner().map_err(csv_err)?).map_err(csv_err)
}

/// One row per μ-grid point with the integral, the modeled expansion and their difference.
pub fn samples_csv(e: &TraceExpansion) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "mu",
        "integral_re",
        "integral_im",
        "integral_error",
        "excised_re",
        "excised_im",
        "model_re",
        "model_im",
        "residual_re",
        "residual_im",
    ])
    .map_err(csv_err)?;
    for s in &e.samples {
        let (xr, xi) = s.excised.map_or((String::new(), String::new()), |x| (x.re.to_string(), x.im.to_string()));
        let r = s.integral - s.model;
        w.write_record([
            s.mu.to_string(),
            s.integral.re.to_string(),
            s.integral.im.to_string(),
            s.integral_error.to_string(),
            xr,
            xi,
            s.model.re.to_string(),
            s.model.im.to_string(),
            r.re.to_string(),
            r.im.to_string(),
        ])
        .map_err(csv_err)?;
    }
    String::from_utf8(w.into_inner().map_err(csv_err)?).map_err(csv_err)
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}

/// Writes the requested artifacts into `dir` and returns their paths.
pub fn emit(
    result: &RunResult,
    timing: &Timing,
    dir: &Path,
    what: Emit,
) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let out = &result.config.outputs;
    let mut written = Vec::new();
    if matches!(what, Emit::Json | Emit::All) {
        written.push(write(dir, &out.results, &results_json(result))?);
        let t = serde_json::to_string_pretty(timing).expect("timing serializes") + "\n";
        written.push(write(dir, &out.timing, &t)?);
    }
    if matches!(what, Emit::Csv | Emit::All) {
        written.push(write(dir, &out.coefficients, &coefficients_csv(&result.expansion)?)?);
        written.push(write(dir, &out.samples, &samples_csv(&result.expansion)?)?);
    }
    Ok(written)
}
