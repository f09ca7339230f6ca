//! Run configuration: a versioned JSON document describing one resolvent trace computation.

use serde::{Deserialize, Serialize};

use shubin_core::calculus::{CutoffSpec, EllipticOperator, SymbolExpansion};
use shubin_core::poly::{format_rational, parse_rational, GaussianRational, TermBundle};
use shubin_core::trace::QuadratureSpec;

use crate::CliError;

pub const SCHEMA: &str = "shubin-run/1";

/// `(re + i·im) · z^exps · |z|^radial` with `z = (x, ξ)`; rationals are `"p/q"` strings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub re: String,
    #[serde(default = "zero_string")]
    pub im: String,
    pub exps: Vec<u32>,
    #[serde(default = "zero_string")]
    pub radial: String,
}

fn zero_string() -> String {
    "0".into()
}

impl Term {
    pub fn real(re: &str, exps: Vec<u32>) -> Self {
        Self { re: re.into(), im: zero_string(), exps, radial: zero_string() }
    }
}

/// The amplitude `q`; `order` defaults to the top degree of its terms.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmplitudeConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<String>,
    pub terms: Vec<Term>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub enabled: bool,
    /// Number of leading λ-coefficients compared.
    #[serde(default = "default_oracle_terms")]
    pub terms: usize,
    /// Tolerance per compared coefficient; the last entry repeats.
    #[serde(default = "default_oracle_tolerances")]
    pub tolerances: Vec<f64>,
}

fn default_oracle_terms() -> usize {
    3
}

fn default_oracle_tolerances() -> Vec<f64> {
    vec![1e-8, 1e-6, 1e-4]
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { enabled: false, terms: default_oracle_terms(), tolerances: default_oracle_tolerances() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: String,
    pub results: String,
    pub coefficients: String,
    pub samples: String,
    pub timing: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: "out".into(),
            results: "results.json".into(),
            coefficients: "coefficients.csv".into(),
            samples: "mu_samples.csv".into(),
            timing: "timing.json".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: String,
    pub n: usize,
    pub d: u32,
    /// `p0[ℓ]` is the homogeneous part of degree `d − ℓ`.
    pub p0: Vec<Vec<Term>>,
    pub q: AmplitudeConfig,
    /// Resolvent power `N`.
    pub power: u32,
    /// Number of symbol components `J`.
    pub j: usize,
    /// Number of constant-family indices `L`.
    pub l: usize,
    #[serde(default)]
    pub cutoff: CutoffSpec,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub outputs: OutputConfig,
}

/// Operators built from a validated configuration.
pub struct Prepared {
    pub p0: EllipticOperator,
    pub q: SymbolExpansion,
}

fn rational(s: &str, what: &str) -> Result<shubin_core::poly::GaussianRational, CliError> {
    parse_rational(s)
        .map(GaussianRational::real)
        .ok_or_else(|| CliError::Validation(format!("{what}: cannot parse rational {s:?}")))
}

fn bundle(terms: &[Term], nvars: usize, what: &str) -> Result<TermBundle, CliError> {
    let mut out = TermBundle::zero(nvars);
    for (k, t) in terms.iter().enumerate() {
        let ctx = format!("{what} term {k}");
        if t.exps.len() != nvars {
            return Err(CliError::Validation(format!("{ctx}: {} exponents given, expected 2n = {nvars}", t.exps.len())));
        }
        let re = rational(&t.re, &ctx)?;
        let im = rational(&t.im, &ctx)?;
        let radial = parse_rational(&t.radial)
            .ok_or_else(|| CliError::Validation(format!("{ctx}: cannot parse radial power {:?}", t.radial)))?;
        let coeff = GaussianRational::new(re.re, im.re);
        out = &out + &TermBundle::monomial(nvars, coeff, t.exps.clone(), radial);
    }
    Ok(out)
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serializes")
    }

    /// The one-dimensional harmonic oscillator `p₀ = −(x² + ξ²)`, `q = 1`, `N = 2`, `J = 6`, `L = 8`, oracle on.
    pub fn harmonic_oscillator() -> Self {
        Self {
            schema: SCHEMA.into(),
            n: 1,
            d: 2,
            p0: vec![vec![Term::real("-1", vec![2, 0]), Term::real("-1", vec![0, 2])]],
            q: AmplitudeConfig { order: Some("0".into()), terms: vec![Term::real("1", vec![0, 0])] },
            power: 2,
            j: 6,
            l: 8,
            cutoff: CutoffSpec::default(),
            quadrature: QuadratureSpec::default(),
            oracle: OracleConfig { enabled: true, ..OracleConfig::default() },
            outputs: OutputConfig::default(),
        }
    }

    /// Checks every precondition that does not need numerics and builds the operators.
    pub fn prepare(&self) -> Result<Prepared, CliError> {
        let v = |m: String| Err(CliError::Validation(m));
        if self.schema != SCHEMA {
            return v(format!("schema {:?} is not supported (expected {SCHEMA:?})", self.schema));
        }
        if self.n == 0 {
            return v("n must be positive".into());
        }
        if self.power == 0 || self.j == 0 || self.l == 0 {
            return v("N, J and L must all be at least 1".into());
        }
        let nvars = 2 * self.n;
        let comps = self
            .p0
            .iter()
            .enumerate()
            .map(|(l, terms)| bundle(terms, nvars, &format!("p0 component {l}")))
            .collect::<Result<Vec<_>, _>>()?;
        let p0 = EllipticOperator::new(self.n, self.d, comps).map_err(|e| CliError::Validation(format!("p0: {e}")))?;
        let q_bundle = bundle(&self.q.terms, nvars, "q")?;
        let q_order = match &self.q.order {
            Some(s) => Some(parse_rational(s).ok_or_else(|| CliError::Validation(format!("q: cannot parse order {s:?}")))?),
            None => None,
        };
        let q = SymbolExpansion::from_bundle(&q_bundle, q_order).map_err(|e| CliError::Validation(format!("q: {e}")))?;
        let omega = shubin_core::poly::rational_to_f64(q.order());
        let lhs = omega - self.d as f64 * self.power as f64;
        if lhs >= -2.0 * self.n as f64 {
            return v(format!(
                "ω − dN = {} − {}·{} = {lhs} must be below −2n = {}",
                format_rational(q.order()),
                self.d,
                self.power,
                -2 * self.n as i64
            ));
        }
        CutoffSpec::new(self.cutoff.inner, self.cutoff.outer, self.cutoff.profile)
            .map_err(|e| CliError::Validation(format!("cutoff: {e}")))?;
        self.quadrature.validate().map_err(|e| CliError::Validation(format!("quadrature: {e}")))?;
        if self.oracle.enabled {
            let ho = EllipticOperator::harmonic_oscillator(1);
            let one = SymbolExpansion::from_bundle(&TermBundle::one(2), None).expect("constant symbol");
            if self.n != 1 || p0.order() != 2 || p0.components() != ho.components() || q != one {
                return v("oracle comparison is available only for n = 1, p0 = −(x² + ξ²), q = 1".into());
            }
            if self.oracle.terms == 0 || self.oracle.tolerances.is_empty() {
                return v("oracle needs at least one term and one tolerance".into());
            }
            if self.oracle.tolerances.iter().any(|t| !(*t > 0.0)) {
                return v("oracle tolerances must be positive".into());
            }
        }
        Ok(Prepared { p0, q })
    }
}
