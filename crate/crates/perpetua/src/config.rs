//! Experiment configuration: TOML text to a validated model, coefficient
//! functions and experiment settings.

use std::fmt;
use std::str::FromStr;

use perpetua_core::apps::{DivergenceCase, HTransform};
use perpetua_core::distributions::{Family, SojournLaw};
use perpetua_core::limitlaws::{constant_a, CRITICAL_TOL};
use perpetua_core::perpetuity::StateFns;
use perpetua_core::semimarkov::SemiMarkovModel;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Simulate,
    VerifyT1,
    VerifyT2a,
    VerifyT2b,
    VerifyT3a,
    VerifyT3b,
    VerifyT4,
    Pitchfork,
    PitchforkSmallball,
    Ou,
    StableOu,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 11] = [
        ExperimentKind::Simulate,
        ExperimentKind::VerifyT1,
        ExperimentKind::VerifyT2a,
        ExperimentKind::VerifyT2b,
        ExperimentKind::VerifyT3a,
        ExperimentKind::VerifyT3b,
        ExperimentKind::VerifyT4,
        ExperimentKind::Pitchfork,
        ExperimentKind::PitchforkSmallball,
        ExperimentKind::Ou,
        ExperimentKind::StableOu,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::VerifyT1 => "verify-t1",
            ExperimentKind::VerifyT2a => "verify-t2a",
            ExperimentKind::VerifyT2b => "verify-t2b",
            ExperimentKind::VerifyT3a => "verify-t3a",
            ExperimentKind::VerifyT3b => "verify-t3b",
            ExperimentKind::VerifyT4 => "verify-t4",
            ExperimentKind::Pitchfork => "pitchfork",
            ExperimentKind::PitchforkSmallball => "pitchfork-smallball",
            ExperimentKind::Ou => "ou",
            ExperimentKind::StableOu => "stable-ou",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown experiment kind `{s}`"))
    }
}

/// One entry of the sojourn table.
// `deny_unknown_fields` does not combine with `flatten`; misspelled
// parameters are still caught by the tagged law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SojournEntry {
    pub from: usize,
    pub to: usize,
    #[serde(flatten)]
    pub law: LawSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum LawSpec {
    Exponential { rate: f64 },
    Pareto { shape: f64, scale: f64 },
    Weibull { shape: f64, scale: f64 },
    Gamma { shape: f64, scale: f64 },
    Lognormal { mu: f64, sigma: f64 },
    Uniform { low: f64, high: f64 },
}

impl LawSpec {
    pub fn family(self) -> Family {
        match self {
            LawSpec::Exponential { rate } => Family::Exponential { rate },
            LawSpec::Pareto { shape, scale } => Family::Pareto { shape, scale },
            LawSpec::Weibull { shape, scale } => Family::Weibull { shape, scale },
            LawSpec::Gamma { shape, scale } => Family::Gamma { shape, scale },
            LawSpec::Lognormal { mu, sigma } => Family::LogNormal { mu, sigma },
            LawSpec::Uniform { low, high } => Family::Uniform { low, high },
        }
    }
}

/// Initial law of the environment: an explicit vector or `"pi"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialSpec {
    Named(String),
    Vector(Vec<f64>),
}

impl Default for InitialSpec {
    fn default() -> Self {
        InitialSpec::Named("pi".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    /// Rows of the embedded transition matrix.
    pub transitions: Vec<Vec<f64>>,
    pub sojourn: Vec<SojournEntry>,
    #[serde(default)]
    pub initial: InitialSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TransformSpec {
    #[default]
    Identity,
    Arctan,
    Exp,
}

impl From<TransformSpec> for HTransform {
    fn from(t: TransformSpec) -> Self {
        match t {
            TransformSpec::Identity => HTransform::Identity,
            TransformSpec::Arctan => HTransform::Arctan,
            TransformSpec::Exp => HTransform::Exp,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionsBlock {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    #[serde(default)]
    pub transform: TransformSpec,
    /// Index of the stable noise for `stable-ou`.
    pub alpha_star: Option<f64>,
}

/// Scaling regime for the divergence statistics of `pitchfork` and `ou`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaseSpec {
    GaussianDivergent,
    GaussianCritical,
    StableDivergent,
    StableCritical,
    ConstantNegative,
    ConstantZero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Upper bound on two-sample KS statistics.
    pub ks: Option<f64>,
    /// Upper bound on the critical-case KS of the maximum coordinate.
    pub ks_max: Option<f64>,
    /// Absolute tolerance on a Hill index.
    pub hill: Option<f64>,
    /// Relative tolerance of the small-ball Hill check.
    pub hill_relative: Option<f64>,
    /// Tolerance on `|P[X > 0] - 1/2|`.
    pub symmetry: Option<f64>,
    /// Absolute tolerance on the small-ball exponent when `expected_nu` is set.
    pub nu: Option<f64>,
    /// Relative tolerance on a deterministic limit.
    pub relative: Option<f64>,
    /// Largest allowed fraction of replications outside the CLT band.
    pub band_failures: Option<f64>,
    /// Largest allowed rejection rate of the transformed Gaussian factor.
    pub rejection_rate: Option<f64>,
    /// Significance level reported with KS tests.
    pub significance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentBlock {
    pub kind: Option<ExperimentKind>,
    pub horizon: Option<f64>,
    pub replications: Option<usize>,
    /// Anchor state for cycle-based quantities; defaults to the most likely state.
    pub anchor: Option<usize>,
    /// Output grid for `simulate`.
    pub grid: Option<Vec<f64>>,
    /// Number of simulated cycles used to estimate cycle variances.
    pub cycles: Option<usize>,
    /// Grid size of the stable-motion approximation.
    pub path_steps: Option<usize>,
    pub rho0: Option<f64>,
    pub x0: Option<f64>,
    pub case: Option<CaseSpec>,
    pub expected_nu: Option<f64>,
    #[serde(default)]
    pub tolerance: Tolerances,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunBlock {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub output: Option<String>,
}

/// Raw configuration as written in the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelBlock,
    pub functions: FunctionsBlock,
    pub experiment: ExperimentBlock,
    #[serde(default)]
    pub run: RunBlock,
}

pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_REPS: usize = 1000;
pub const DEFAULT_HORIZON: f64 = 100.0;
pub const DEFAULT_CYCLES: usize = 20_000;

/// Parse TOML text. Syntax errors carry line and column.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub kind: Option<ExperimentKind>,
    pub seed: Option<u64>,
    pub reps: Option<usize>,
    pub horizon: Option<f64>,
    pub out: Option<String>,
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(k) = o.kind {
            self.experiment.kind = Some(k);
        }
        if let Some(s) = o.seed {
            self.run.seed = Some(s);
        }
        if let Some(r) = o.reps {
            self.experiment.replications = Some(r);
        }
        if let Some(h) = o.horizon {
            self.experiment.horizon = Some(h);
        }
        if let Some(p) = &o.out {
            self.run.output = Some(p.clone());
        }
        if let Some(w) = o.workers {
            self.run.workers = Some(w);
        }
    }
}

/// Configuration with the model built and the regime checked.
#[derive(Debug, Clone)]
pub struct Validated {
    pub config: ExperimentConfig,
    pub kind: ExperimentKind,
    pub model: SemiMarkovModel,
    pub fns: StateFns,
    pub anchor: usize,
    pub seed: u64,
    pub reps: usize,
    pub workers: usize,
}

impl Validated {
    pub fn horizon(&self) -> f64 {
        self.config.experiment.horizon.unwrap_or(DEFAULT_HORIZON)
    }

    pub fn cycles(&self) -> usize {
        self.config.experiment.cycles.unwrap_or(DEFAULT_CYCLES)
    }

    pub fn tol(&self) -> &Tolerances {
        &self.config.experiment.tolerance
    }

    pub fn mean_a(&self) -> f64 {
        self.model.pi_mean(self.fns.a())
    }

    pub fn transform(&self) -> HTransform {
        self.config.functions.transform.into()
    }

    pub fn case(&self) -> Option<DivergenceCase> {
        let alpha = self.config.functions.alpha_star.unwrap_or(f64::NAN);
        self.config.experiment.case.map(|c| match c {
            CaseSpec::GaussianDivergent => DivergenceCase::GaussianDivergent,
            CaseSpec::GaussianCritical => DivergenceCase::GaussianCritical,
            CaseSpec::StableDivergent => DivergenceCase::StableDivergent { alpha },
            CaseSpec::StableCritical => DivergenceCase::StableCritical { alpha },
            CaseSpec::ConstantNegative => DivergenceCase::ConstantNegative,
            CaseSpec::ConstantZero => DivergenceCase::ConstantZero,
        })
    }
}

pub fn build_model(block: &ModelBlock) -> Result<SemiMarkovModel, CliError> {
    let n = block.transitions.len();
    let mut laws: Vec<Vec<Option<SojournLaw>>> = vec![vec![None; n]; n];
    for e in &block.sojourn {
        if e.from >= n || e.to >= n {
            return Err(CliError::Invalid(format!("sojourn entry ({}, {}) refers to a missing state", e.from, e.to)));
        }
        if laws[e.from][e.to].is_some() {
            return Err(CliError::Invalid(format!("sojourn entry ({}, {}) given twice", e.from, e.to)));
        }
        let law = SojournLaw::new(e.law.family())
            .map_err(|err| CliError::Invalid(format!("sojourn law ({}, {}): {err}", e.from, e.to)))?;
        laws[e.from][e.to] = Some(law);
    }
    let (initial, at_pi) = match &block.initial {
        InitialSpec::Vector(v) => (v.clone(), false),
        InitialSpec::Named(s) if s == "pi" => (uniform(n), true),
        InitialSpec::Named(s) => return Err(CliError::Invalid(format!("unknown initial law `{s}` (use a vector or \"pi\")"))),
    };
    let model = SemiMarkovModel::new(block.transitions.clone(), laws, initial)?;
    Ok(if at_pi { model.started_at_pi() } else { model })
}

fn uniform(n: usize) -> Vec<f64> {
    vec![1.0 / n.max(1) as f64; n]
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Invalid(msg.into())
}

/// Build the model and check the experiment's regime preconditions.
pub fn validate(config: ExperimentConfig, env_workers: Option<usize>) -> Result<Validated, CliError> {
    let kind = config
        .experiment
        .kind
        .ok_or_else(|| invalid("experiment kind missing (set experiment.kind or pass it on the command line)"))?;
    let model = build_model(&config.model)?;
    let fns = StateFns::new(config.functions.a.clone(), config.functions.b.clone())?;
    fns.check(&model)?;
    let anchor = match config.experiment.anchor {
        Some(j) => {
            model.check_state(j)?;
            j
        }
        None => model.most_likely_state(),
    };
    let reps = config.experiment.replications.unwrap_or(DEFAULT_REPS);
    if reps == 0 {
        return Err(invalid("replications must be positive"));
    }
    if let Some(h) = config.experiment.horizon {
        if !(h > 0.0 && h.is_finite()) {
            return Err(invalid("horizon must be positive and finite"));
        }
    }
    let workers = config.run.workers.or(env_workers).unwrap_or(1).max(1);
    let seed = config.run.seed.unwrap_or(DEFAULT_SEED);
    let v = Validated { config, kind, model, fns, anchor, seed, reps, workers };
    check_regime(&v)?;
    Ok(v)
}

fn check_regime(v: &Validated) -> Result<(), CliError> {
    use perpetua_core::Error as E;
    let mean_a = v.mean_a();
    let b = v.fns.b();
    let f = &v.config.functions;
    let e = &v.config.experiment;
    match v.kind {
        ExperimentKind::Simulate => {}
        ExperimentKind::VerifyT1 => {
            if !(mean_a > 0.0) {
                return Err(E::NotStable(mean_a).into());
            }
        }
        ExperimentKind::VerifyT2a => {
            if !(mean_a < 0.0) {
                return Err(E::NotDivergent(mean_a).into());
            }
        }
        ExperimentKind::VerifyT2b | ExperimentKind::VerifyT3b => {
            if mean_a.abs() > CRITICAL_TOL {
                return Err(E::NotCritical(mean_a).into());
            }
            if b.iter().all(|x| *x == 0.0) {
                return Err(E::ZeroB.into());
            }
        }
        ExperimentKind::VerifyT3a => {
            if !(mean_a < 0.0) {
                return Err(E::NotDivergent(mean_a).into());
            }
        }
        ExperimentKind::VerifyT4 => {
            let a = constant_a(&v.fns)?;
            if a > 0.0 {
                return Err(invalid(format!("constant-coefficient check needs a <= 0, got a = {a}")));
            }
        }
        ExperimentKind::Pitchfork | ExperimentKind::PitchforkSmallball => {
            if let Some(state) = b.iter().position(|x| !(*x > 0.0)) {
                return Err(E::NonPositiveB { state }.into());
            }
            if e.case.is_none() && !(mean_a > 0.0) {
                return Err(E::NotStable(mean_a).into());
            }
            if v.kind == ExperimentKind::PitchforkSmallball && v.fns.a().iter().all(|x| *x >= 0.0) {
                return Err(invalid("small-ball exponent needs a(j) < 0 in some state"));
            }
        }
        ExperimentKind::Ou => {
            if e.case.is_none() && !(mean_a > 0.0) {
                return Err(E::NotStable(mean_a).into());
            }
        }
        ExperimentKind::StableOu => {
            let alpha = f.alpha_star.ok_or_else(|| invalid("stable-ou needs functions.alpha_star"))?;
            if !(alpha > 1.0 && alpha <= 2.0) {
                return Err(E::UnsupportedAlpha(alpha).into());
            }
            if let Some(state) = b.iter().position(|x| !(*x >= 0.0)) {
                return Err(E::NegativeB { state }.into());
            }
            if !(mean_a > 0.0) {
                return Err(E::NotStable(mean_a).into());
            }
        }
    }
    if matches!(e.case, Some(CaseSpec::StableDivergent | CaseSpec::StableCritical)) && f.alpha_star.is_none() {
        return Err(invalid("stable cases need functions.alpha_star as the tail index"));
    }
    if let Some(rho0) = e.rho0 {
        if !(rho0 > 0.0) {
            return Err(invalid("rho0 must be positive"));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const SWAP: &str = r#"
[model]
transitions = [[0.0, 1.0], [1.0, 0.0]]
sojourn = [
  { from = 0, to = 1, family = "exponential", rate = 1.0 },
  { from = 1, to = 0, family = "exponential", rate = 2.0 },
]

[functions]
a = [1.0, 0.5]
b = [1.0, 1.0]

[experiment]
kind = "verify-t1"
horizon = 50.0
replications = 200
"#;

    #[test]
    fn minimal_swap_config_is_valid() {
        let c = parse_config(SWAP).unwrap();
        let v = validate(c, None).unwrap();
        assert_eq!(v.kind, ExperimentKind::VerifyT1);
        assert_eq!(v.anchor, 0);
        assert!((v.model.initial()[0] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn row_sum_error_names_the_row() {
        let text = SWAP.replace("[1.0, 0.0]]", "[0.9, 0.0]]");
        let err = validate(parse_config(&text).unwrap(), None).unwrap_err();
        assert!(matches!(err, CliError::Validation(perpetua_core::Error::RowSumError { row: 1, .. })), "{err}");
    }

    #[test]
    fn critical_kind_rejects_non_critical_model() {
        let text = SWAP.replace("verify-t1", "verify-t2b");
        let err = validate(parse_config(&text).unwrap(), None).unwrap_err();
        assert!(matches!(err, CliError::Validation(perpetua_core::Error::NotCritical(_))));
        assert!(err.to_string().contains("E_pi[a] = 0"));
    }

    #[test]
    fn syntax_errors_report_a_line() {
        let err = parse_config("[model]\ntransitions = [[0.0, 1.0\n").unwrap_err();
        assert!(err.to_string().contains("line"), "{err}");
    }

    #[test]
    fn overrides_take_precedence() {
        let mut c = parse_config(SWAP).unwrap();
        c.apply(&Overrides { seed: Some(9), reps: Some(7), workers: Some(3), ..Default::default() });
        let v = validate(c, Some(5)).unwrap();
        assert_eq!((v.seed, v.reps, v.workers), (9, 7, 3));
        let v = validate(parse_config(SWAP).unwrap(), Some(5)).unwrap();
        assert_eq!(v.workers, 5);
    }
}
