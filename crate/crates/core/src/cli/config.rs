//! Experiment configuration files.
//!
//! A configuration is a TOML document with the sections `[surface]`,
//! `[suspension]`, `[bundle]`, `[run]` and `[output]`. Vectors in
//! `[suspension]` and `[bundle]` are aligned with `surface.alphabet`, like
//! `surface.lambda`; everything emitted afterwards is in top order.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::bundle::{sample_admissible, sample_offsets};
use crate::iet::{default_alphabet, validate_iet, IetSpec, Length, RawIet};
use crate::suspension::{heights_cone_contains, heights_from_tau};

/// A number as written in the file: integer, float, or a string such as
/// `"2/5"`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Num {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Num {
    fn to_length(&self) -> Result<Length, CliError> {
        match self {
            Num::Int(i) => Length::parse(&i.to_string()),
            Num::Float(x) => Ok(Length::Float(*x)),
            Num::Text(s) => Length::parse(s),
        }
        .map_err(|e| CliError::Validation(e.to_string()))
    }

    fn to_f64(&self) -> Result<f64, CliError> {
        self.to_length().map(|l| l.to_f64())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum BValue {
    Values(Vec<Num>),
    Keyword(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSection {
    pub alphabet: Option<Vec<String>>,
    pub pi0: Option<Vec<usize>>,
    pub pi1: Vec<usize>,
    pub lambda: Vec<Num>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuspensionSection {
    pub tau: Option<Vec<Num>>,
    pub h: Option<Vec<Num>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleSection {
    pub b: Option<BValue>,
    pub seed: Option<u64>,
}

/// Command parameters. Every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Starting point on `[0, |I|)` for iterate, birkhoff, cohom.
    pub x0: f64,
    pub rho0: f64,
    /// iterate: number of steps.
    pub steps: usize,
    /// birkhoff: orbit length.
    pub n: usize,
    /// birkhoff: fiber modes.
    pub modes: Vec<i64>,
    /// Observables: `"const"`, `"indicator:<symbol>"` or `"cos:<k>"`.
    pub f: String,
    pub g: String,
    pub mode_f: i64,
    pub mode_g: i64,
    pub n_max: usize,
    /// `"grid"` or `"monte_carlo"`.
    pub method: String,
    /// Grid panel count; defaults to the minimum for `n_max`.
    pub mesh: Option<usize>,
    pub samples: usize,
    /// spectrum: lag window length.
    pub window: usize,
    /// spectrum: atom-probe grid size.
    pub lambda_grid: usize,
    pub tower_heights: Vec<usize>,
    pub lambdas: Vec<f64>,
    pub rokhlin_mode: i64,
    pub bases: Vec<usize>,
    pub orbit_length: usize,
    pub cohom_mode: i64,
    /// cohom: grid for the best invariance defect; 0 skips it.
    pub invariance_grid: usize,
    pub t_values: Vec<f64>,
    /// commutator: letter whose rectangle holds the square.
    pub letter: Option<String>,
    pub x: Option<f64>,
    pub s: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            x0: 0.1234,
            rho0: 0.0,
            steps: 1000,
            n: 1_000_000,
            modes: (1..=10).flat_map(|m| [-m, m]).collect(),
            f: "const".into(),
            g: "const".into(),
            mode_f: 1,
            mode_g: 1,
            n_max: 1000,
            method: "grid".into(),
            mesh: None,
            samples: 100_000,
            window: 512,
            lambda_grid: 256,
            tower_heights: vec![100, 1000, 10000],
            lambdas: vec![0.1, 0.3, 0.7],
            rokhlin_mode: 1,
            bases: vec![8, 16, 32, 64],
            orbit_length: 10_000,
            cohom_mode: 1,
            invariance_grid: 4096,
            t_values: vec![1e-3, 1e-2, 1e-1],
            letter: None,
            x: None,
            s: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub directory: String,
    pub formats: Format,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { directory: ".".into(), formats: Format::Both }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Both,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub surface: SurfaceSection,
    #[serde(default)]
    pub suspension: SuspensionSection,
    #[serde(default)]
    pub bundle: BundleSection,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub output: OutputSection,
}

/// Where the offsets came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BSource {
    Given,
    Sample,
    Default,
}

/// The parts of a resolved configuration that determine the results.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemanticConfig {
    pub alphabet: Vec<String>,
    pub pi1: Vec<usize>,
    /// Normalized lengths: `"p/q"` for exact input, shortest decimal otherwise.
    pub lambda: Vec<String>,
    pub exact: bool,
    pub tau: Vec<f64>,
    pub h: Vec<f64>,
    pub b: Vec<f64>,
    pub b_source: BSource,
    pub seed: u64,
    pub run: RunConfig,
}

/// A validated configuration with defaults filled in; vectors in top order.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub spec: IetSpec,
    pub semantic: SemanticConfig,
    pub output: OutputSection,
}

impl ExperimentConfig {
    pub fn tau(&self) -> &[f64] {
        &self.semantic.tau
    }

    pub fn h(&self) -> &[f64] {
        &self.semantic.h
    }

    pub fn b(&self) -> &[f64] {
        &self.semantic.b
    }

    pub fn run(&self) -> &RunConfig {
        &self.semantic.run
    }

    pub fn seed(&self) -> u64 {
        self.semantic.seed
    }
}

pub fn parse_config(path: &Path, seed_override: Option<u64>) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    parse_config_str(&text, seed_override)
}

pub fn parse_config_str(text: &str, seed_override: Option<u64>) -> Result<ExperimentConfig, CliError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
    resolve(raw, seed_override)
}

fn aligned(
    what: &str,
    values: &[Num],
    raw_alphabet: &[String],
    spec: &IetSpec,
) -> Result<Vec<f64>, CliError> {
    let d = spec.d();
    if values.len() != d {
        return Err(CliError::Validation(format!("{what} has {} entries, expected {d}", values.len())));
    }
    let given = values.iter().map(Num::to_f64).collect::<Result<Vec<_>, _>>()?;
    if given.iter().any(|v| !v.is_finite()) {
        return Err(CliError::Validation(format!("{what} has a non-finite entry")));
    }
    Ok(spec
        .perm()
        .alphabet()
        .iter()
        .map(|sym| given[raw_alphabet.iter().position(|s| s == sym).expect("validated alphabet")])
        .collect())
}

fn resolve(raw: RawConfig, seed_override: Option<u64>) -> Result<ExperimentConfig, CliError> {
    let d = raw.surface.pi1.len();
    let alphabet = raw.surface.alphabet.clone().unwrap_or_else(|| default_alphabet(d));
    let pi0 = raw.surface.pi0.clone().unwrap_or_else(|| (1..=alphabet.len()).collect());
    let lengths = raw.surface.lambda.iter().map(Num::to_length).collect::<Result<Vec<_>, _>>()?;
    let spec = validate_iet(&RawIet { alphabet: alphabet.clone(), pi0, pi1: raw.surface.pi1.clone(), lengths })
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let perm = spec.perm();
    let seed = seed_override.or(raw.bundle.seed).unwrap_or(0);

    let sample = matches!(&raw.bundle.b, Some(BValue::Keyword(k)) if k == "sample");
    if let Some(BValue::Keyword(k)) = &raw.bundle.b {
        if k != "sample" {
            return Err(CliError::Validation(format!("bundle.b must be an array or \"sample\", got \"{k}\"")));
        }
    }

    let (tau, h) = match (&raw.suspension.tau, &raw.suspension.h) {
        (Some(_), Some(_)) => {
            return Err(CliError::Validation("give exactly one of suspension.tau and suspension.h".into()))
        }
        (Some(t), None) => {
            let tau = aligned("tau", t, &alphabet, &spec)?;
            let h = heights_from_tau(perm, &tau).map_err(|e| CliError::Validation(e.to_string()))?;
            (tau, h)
        }
        (None, Some(hv)) => {
            let h = aligned("h", hv, &alphabet, &spec)?;
            let tau = heights_cone_contains(perm, &h)
                .ok()
                .flatten()
                .ok_or_else(|| CliError::Validation("heights are not realized by any suspension".into()))?;
            (tau, h)
        }
        (None, None) if sample => {
            let s = sample_admissible(&spec, seed);
            (s.tau, s.h)
        }
        (None, None) => {
            return Err(CliError::Validation(
                "give exactly one of suspension.tau and suspension.h (or bundle.b = \"sample\")".into(),
            ))
        }
    };

    let (b, b_source) = match &raw.bundle.b {
        Some(BValue::Values(v)) => (aligned("b", v, &alphabet, &spec)?, BSource::Given),
        Some(BValue::Keyword(_)) => {
            let b = if raw.suspension.tau.is_none() && raw.suspension.h.is_none() {
                sample_admissible(&spec, seed).b
            } else {
                sample_offsets(&spec, &h, seed)
            };
            (b, BSource::Sample)
        }
        None => (vec![0.0; d], BSource::Default),
    };

    let mut run = raw.run;
    validate_run(&mut run, &spec)?;
    let lambda = match spec.exact_lambda() {
        Some(q) => q.iter().map(|v| v.to_string()).collect(),
        None => spec.lambda().iter().map(|v| v.to_string()).collect(),
    };
    let semantic = SemanticConfig {
        alphabet: perm.alphabet().to_vec(),
        pi1: crate::iet::monodromy(perm),
        lambda,
        exact: spec.is_exact(),
        tau,
        h,
        b,
        b_source,
        seed,
        run,
    };
    Ok(ExperimentConfig { spec, semantic, output: raw.output })
}

fn validate_run(run: &mut RunConfig, spec: &IetSpec) -> Result<(), CliError> {
    let bad = |m: String| Err(CliError::Validation(m));
    let total = spec.total_length();
    if !(run.x0 >= 0.0 && run.x0 < total) {
        return bad(format!("run.x0 = {} lies outside [0, {total})", run.x0));
    }
    if !run.rho0.is_finite() {
        return bad("run.rho0 must be finite".into());
    }
    if run.method != "grid" && run.method != "monte_carlo" {
        return bad(format!("run.method must be \"grid\" or \"monte_carlo\", got \"{}\"", run.method));
    }
    for o in [&run.f, &run.g] {
        parse_observable_name(o, spec)?;
    }
    if let Some(l) = &run.letter {
        if spec.perm().symbol_index(l).is_none() {
            return bad(format!("run.letter \"{l}\" is not in the alphabet"));
        }
    }
    if run.mesh.is_none() && run.method == "grid" {
        run.mesh = Some(crate::dynamics::correlation::required_mesh(spec.d(), run.n_max));
    }
    Ok(())
}

/// Parsed observable name.
#[derive(Debug, Clone, PartialEq)]
pub enum ObservableName {
    Const,
    Indicator(usize),
    Cos(i64),
}

pub fn parse_observable_name(name: &str, spec: &IetSpec) -> Result<ObservableName, CliError> {
    let err = || CliError::Validation(format!("unknown observable \"{name}\""));
    if name == "const" {
        return Ok(ObservableName::Const);
    }
    match name.split_once(':') {
        Some(("indicator", sym)) => spec.perm().symbol_index(sym).map(ObservableName::Indicator).ok_or_else(err),
        Some(("cos", k)) => k.parse().map(ObservableName::Cos).map_err(|_| err()),
        _ => Err(err()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TORUS: &str = r#"
[surface]
pi1 = [2, 1]
lambda = ["2/5", "3/5"]
[suspension]
h = [1, 1]
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config_str(TORUS, None).unwrap();
        assert!(c.spec.is_exact());
        assert_eq!(c.semantic.lambda, vec!["2/5", "3/5"]);
        assert_eq!(c.b(), &[0.0, 0.0]);
        assert_eq!(c.semantic.b_source, BSource::Default);
        assert_eq!(c.run().mesh, Some(4 * (2 * 1000 + 2)));
        assert_eq!(c.output, OutputSection::default());
    }

    #[test]
    fn lambda_length_is_checked() {
        let text = TORUS.replace(r#"["2/5", "3/5"]"#, "[0.5]");
        assert!(matches!(parse_config_str(&text, None), Err(CliError::Validation(_))));
    }

    #[test]
    fn unknown_field_names_the_line() {
        let text = format!("{TORUS}bogus = 1\n");
        match parse_config_str(&text, None) {
            Err(CliError::Parse(m)) => assert!(m.contains("line") && m.contains("bogus"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn tau_and_h_are_exclusive() {
        let text = format!("{TORUS}tau = [1, -1]\n");
        assert!(matches!(parse_config_str(&text, None), Err(CliError::Validation(_))));
    }

    #[test]
    fn vectors_follow_the_alphabet() {
        let text = r#"
[surface]
alphabet = ["C", "A", "B"]
pi0 = [3, 1, 2]
pi1 = [2, 3, 1]
lambda = [0.3, 0.4, 0.3]
[suspension]
tau = [-1, 2, -1]
[bundle]
b = [0.0, 0.7, 0.4]
"#;
        let c = parse_config_str(text, None).unwrap();
        assert_eq!(c.semantic.alphabet, vec!["A", "B", "C"]);
        assert_eq!(c.tau(), &[2.0, -1.0, -1.0]);
        assert_eq!(c.h(), &[2.0, 2.0, 2.0]);
        assert_eq!(c.b(), &[0.7, 0.4, 0.0]);
        assert!(!c.spec.is_exact());
    }

    #[test]
    fn sampled_bundles_depend_on_the_seed() {
        let text = "[surface]\npi1 = [3, 1, 2]\nlambda = [0.4, 0.3, 0.3]\n[bundle]\nb = \"sample\"\nseed = 42\n";
        let a = parse_config_str(text, None).unwrap();
        let b = parse_config_str(text, Some(7)).unwrap();
        assert_eq!(a.seed(), 42);
        assert_eq!(b.seed(), 7);
        assert_ne!(a.b(), b.b());
    }
}
