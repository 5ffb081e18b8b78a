//! Run-configuration loading, command dispatch, and deterministic artifact
//! emission for the `plap` binary.
//!
//! A run is described by one JSON file (see `docs/config-schema.md`): a
//! problem block, a command, optional command-specific fields, tolerances
//! with documented defaults, and an output block. The binary is invoked as
//! `plap <command> --config <path> [--out <dir>] [--format csv,json]`, where
//! the subcommand must match the `command` field of the config.
//!
//! Exit codes: 0 on success, 1 on a solver failure (a `diagnostic.json`
//! naming the failure is written to the output directory), 2 when the
//! `check` command finds a failed hypothesis. Artifacts are written
//! atomically (temp file in the same directory, then rename), so readers
//! never observe partial files. Identical configs produce byte-identical
//! output on the same build: every float is printed with 17 significant
//! digits (`{:.16e}`), lines end in LF, and every artifact embeds the full
//! resolved config so a run can be reproduced exactly from its output.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curve::{
    classify_curve, detect_lambda0, homotopy_parameter_grid, trace_homotopy, trace_lambda_curve,
    CurveClassification, CurveOptions, HomotopyKind, Lambda0Verdict, SolutionCurve, StopReason,
};
use crate::diagnostics::{
    amplitude_ratio_monotonicity, check_model_hypotheses, classify_energy_source,
    identity_profiles, identity_residuals, one_dim_identities, qualitative_checks,
    AmplitudeRatioMonotonicity, CheckStatus, HypothesisReport, IdentityResiduals,
    OneDimReport, QualitativeReport, ResidualStats, SourceSignCase, SourceSignReport,
};
use crate::ivp::IvpOptions;
use crate::model::{CoefficientFn, ModelError, Nonlinearity, ProblemSpec};
use crate::shoot::{solve_at_lambda, RadialSolution, ShootOptions};
use crate::timemap::time_map_lambda;

// --- configuration schema ----------------------------------------------------

/// Which pipeline a run drives. Serialized lowercase in configs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    /// One boundary-value solve at a fixed lambda.
    Solve,
    /// Solution branch over a geometric lambda grid.
    Curve,
    /// Coefficient deformation trace at fixed lambda.
    Homotopy,
    /// Hypothesis audit of the problem description (no solving).
    Check,
    /// Quadrature lambda oracle at given amplitudes (no shooting).
    Timemap,
    /// Pointwise identity and qualitative diagnostics of one solve.
    Identities,
    /// Curve trace plus shape classification and existence-range verdict.
    Classify,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Solve => "solve",
            CommandKind::Curve => "curve",
            CommandKind::Homotopy => "homotopy",
            CommandKind::Check => "check",
            CommandKind::Timemap => "timemap",
            CommandKind::Identities => "identities",
            CommandKind::Classify => "classify",
        }
    }

    /// Whether the command solves the boundary-value problem, which is the
    /// regime where the subcriticality gate applies. `check` must accept
    /// supercritical configs (auditing them is its purpose), and the time
    /// map is a quadrature that never leaves amplitude space.
    fn requires_admissible(self) -> bool {
        !matches!(self, CommandKind::Check | CommandKind::Timemap)
    }
}

/// The nonlinearity as a tagged object with exact polynomial coefficient
/// lists (ascending powers), never parsed expression strings.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum NonlinearityConfig {
    /// f(u) given by `coefficients` in ascending powers of u (1D only).
    Autonomous { coefficients: Vec<f64> },
    /// f(r, u) = b(r)^{bPower} u^q with b given by ascending r-coefficients.
    #[serde(rename = "pureB", rename_all = "camelCase")]
    PureB {
        b: Vec<f64>,
        q: f64,
        #[serde(default = "default_weight")]
        b_power: f64,
    },
    /// f(r, u) = -aWeight a(r) u^{p-1} + b(r) u^q.
    #[serde(rename = "modelAB", rename_all = "camelCase")]
    ModelAb {
        a: Vec<f64>,
        b: Vec<f64>,
        q: f64,
        #[serde(default = "default_weight")]
        a_weight: f64,
    },
    /// f(u) = u: the eigenvalue control problem.
    LinearTest,
}

fn default_weight() -> f64 {
    1.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct ProblemConfig {
    pub p: f64,
    pub n: u32,
    pub nonlinearity: NonlinearityConfig,
}

/// Tolerances with the module defaults injected for absent fields.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct Tolerances {
    /// Relative integrator tolerance (default 1e-10).
    #[serde(default = "default_integrator_rel")]
    pub integrator_rel: f64,
    /// Absolute integrator tolerance (default 1e-12).
    #[serde(default = "default_integrator_abs")]
    pub integrator_abs: f64,
    /// |u(1)| acceptance threshold for a boundary hit (default 1e-9).
    #[serde(default = "default_boundary")]
    pub boundary: f64,
    /// Relative amplitude-bracket width below which root searches give up
    /// (default 1e-12).
    #[serde(default = "default_root")]
    pub root: f64,
}

fn default_integrator_rel() -> f64 {
    1e-10
}
fn default_integrator_abs() -> f64 {
    1e-12
}
fn default_boundary() -> f64 {
    1e-9
}
fn default_root() -> f64 {
    1e-12
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            integrator_rel: default_integrator_rel(),
            integrator_abs: default_integrator_abs(),
            boundary: default_boundary(),
            root: default_root(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct OutputConfig {
    /// Directory the artifacts are written into (created if absent).
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    /// Which artifacts to write; both by default.
    #[serde(default = "default_formats")]
    pub formats: Vec<OutputFormat>,
}

fn default_directory() -> PathBuf {
    PathBuf::from("out")
}

fn default_formats() -> Vec<OutputFormat> {
    vec![OutputFormat::Csv, OutputFormat::Json]
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { directory: default_directory(), formats: default_formats() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum HomotopyKindConfig {
    /// b(r)^t from the constant-coefficient problem to the full one.
    CoefficientPower,
    /// t a(r): switches the linear term on from the pure-power problem.
    LinearTermSwitch,
}

impl From<HomotopyKindConfig> for HomotopyKind {
    fn from(kind: HomotopyKindConfig) -> HomotopyKind {
        match kind {
            HomotopyKindConfig::CoefficientPower => HomotopyKind::CoefficientPower,
            HomotopyKindConfig::LinearTermSwitch => HomotopyKind::LinearTermSwitch,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct HomotopyConfig {
    pub kind: HomotopyKindConfig,
    /// Uniform parameter steps on [0, 1]; 11 when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
}

/// One run: problem, command, command-specific fields, tolerances, output.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct RunConfig {
    pub command: CommandKind,
    pub problem: ProblemConfig,
    /// Required by solve, homotopy, and identities.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// Required by curve and classify: [lo, hi] with 0 < lo < hi.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_range: Option<[f64; 2]>,
    /// Geometric grid size for curve and classify; 9 when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    /// Required by homotopy.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub homotopy: Option<HomotopyConfig>,
    /// Required by timemap: amplitudes to evaluate the lambda oracle at.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitudes: Option<Vec<f64>>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputConfig,
}

// --- errors -------------------------------------------------------------------

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    /// The text is valid JSON but does not have the shape of a run config
    /// (unknown command, unknown nonlinearity tag, misnamed field, ...).
    #[error("invalid config: {message}")]
    Shape { message: String },
    /// A well-shaped config with an inadmissible value; names the field.
    #[error("invalid config field {field}: {message}")]
    Field { field: String, message: String },
}

fn field_err(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field { field: field.to_string(), message: message.into() }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("config declares command '{config}' but the invoked subcommand is '{invoked}'")]
    CommandMismatch {
        config: &'static str,
        invoked: &'static str,
    },
    #[error("unknown output format '{0}' (expected csv or json)")]
    Format(String),
    #[error("cannot create output directory {dir}: {source}")]
    OutputDir {
        dir: String,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },
}

/// A failure of the numerical pipeline itself (as opposed to a bad config
/// or a filesystem problem): reported via exit code 1 plus a diagnostic
/// file naming the failure.
#[derive(Debug)]
pub struct SolverFailure(pub String);

// --- loading and validation ---------------------------------------------------

/// Read, parse, and validate a run config. Syntax errors carry the line and
/// column; shape errors carry the offending tag or key; value errors name
/// the offending field. Defaults are injected for absent tolerance fields,
/// the output block, and the grid sizes of curve-like commands, so the
/// returned config is fully resolved.
pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = fs::read_to_string(path)
        .map_err(|source| ConfigError::Read { path: path.display().to_string(), source })?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| ConfigError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let mut config: RunConfig = serde_json::from_value(value)
        .map_err(|e| ConfigError::Shape { message: e.to_string() })?;
    validate(&mut config)?;
    Ok(config)
}

/// Validate a parsed config in place, injecting grid-size defaults.
fn validate(config: &mut RunConfig) -> Result<(), ConfigError> {
    let t = config.tolerances;
    for (field, value) in [
        ("tolerances.integratorRel", t.integrator_rel),
        ("tolerances.integratorAbs", t.integrator_abs),
        ("tolerances.boundary", t.boundary),
        ("tolerances.root", t.root),
    ] {
        if !value.is_finite() || value <= 0.0 {
            return Err(field_err(field, format!("must be positive and finite, got {value}")));
        }
    }
    if config.output.formats.is_empty() {
        return Err(field_err("output.formats", "must name at least one of csv, json"));
    }
    if let Some(lambda) = config.lambda {
        if !lambda.is_finite() || lambda <= 0.0 {
            return Err(field_err("lambda", format!("must be positive and finite, got {lambda}")));
        }
    }

    match config.command {
        CommandKind::Solve | CommandKind::Identities => {
            if config.lambda.is_none() {
                return Err(field_err("lambda", "required by this command"));
            }
        }
        CommandKind::Homotopy => {
            if config.lambda.is_none() {
                return Err(field_err("lambda", "required by this command"));
            }
            let homotopy = config
                .homotopy
                .as_mut()
                .ok_or_else(|| field_err("homotopy", "required by this command"))?;
            let steps = *homotopy.steps.get_or_insert(11);
            if steps < 2 {
                return Err(field_err("homotopy.steps", format!("need at least 2, got {steps}")));
            }
        }
        CommandKind::Curve | CommandKind::Classify => {
            let range = config
                .lambda_range
                .ok_or_else(|| field_err("lambdaRange", "required by this command"))?;
            let [lo, hi] = range;
            if !lo.is_finite() || !hi.is_finite() || lo <= 0.0 || hi <= lo {
                return Err(field_err(
                    "lambdaRange",
                    format!("must satisfy 0 < lo < hi, got [{lo}, {hi}]"),
                ));
            }
            let points = *config.points.get_or_insert(9);
            if points < 2 {
                return Err(field_err("points", format!("need at least 2, got {points}")));
            }
        }
        CommandKind::Timemap => {
            let amplitudes = config
                .amplitudes
                .as_ref()
                .filter(|a| !a.is_empty())
                .ok_or_else(|| field_err("amplitudes", "non-empty list required by this command"))?;
            for &alpha in amplitudes {
                if !alpha.is_finite() || alpha <= 0.0 {
                    return Err(field_err(
                        "amplitudes",
                        format!("entries must be positive and finite, got {alpha}"),
                    ));
                }
            }
        }
        CommandKind::Check => {}
    }

    // Constructing the problem performs the remaining value checks (p > 1,
    // n >= 1, the growth floor on q); the subcriticality gate applies only
    // to commands that will actually solve.
    let spec = build_spec(config, config.lambda.unwrap_or(1.0))?;
    if config.command.requires_admissible() {
        spec.assert_admissible().map_err(|e| match e {
            ModelError::SupercriticalGrowth { .. } => {
                field_err("problem.nonlinearity.q", e.to_string())
            }
            other => field_err("problem", other.to_string()),
        })?;
    }
    Ok(())
}

fn build_nonlinearity(config: &NonlinearityConfig) -> Result<Nonlinearity, ConfigError> {
    match config {
        NonlinearityConfig::Autonomous { coefficients } => Nonlinearity::autonomous(coefficients)
            .map_err(|e| field_err("problem.nonlinearity.coefficients", e.to_string())),
        NonlinearityConfig::PureB { b, q, b_power } => {
            let b = CoefficientFn::from_coeffs(b)
                .map_err(|e| field_err("problem.nonlinearity.b", e.to_string()))?;
            Nonlinearity::pure_b_powered(b, *q, *b_power)
                .map_err(|e| field_err("problem.nonlinearity.bPower", e.to_string()))
        }
        NonlinearityConfig::ModelAb { a, b, q, a_weight } => {
            let a = CoefficientFn::from_coeffs(a)
                .map_err(|e| field_err("problem.nonlinearity.a", e.to_string()))?;
            let b = CoefficientFn::from_coeffs(b)
                .map_err(|e| field_err("problem.nonlinearity.b", e.to_string()))?;
            Nonlinearity::model_ab_weighted(a, b, *q, *a_weight)
                .map_err(|e| field_err("problem.nonlinearity.aWeight", e.to_string()))
        }
        NonlinearityConfig::LinearTest => Ok(Nonlinearity::linear_test()),
    }
}

/// Instantiate the problem at the given lambda, mapping construction errors
/// onto the config fields they came from.
fn build_spec(config: &RunConfig, lambda: f64) -> Result<ProblemSpec, ConfigError> {
    let nonlinearity = build_nonlinearity(&config.problem.nonlinearity)?;
    ProblemSpec::new(config.problem.p, config.problem.n, nonlinearity, lambda).map_err(|e| {
        match e {
            ModelError::InvalidP(_) => field_err("problem.p", e.to_string()),
            ModelError::InvalidN(_) => field_err("problem.n", e.to_string()),
            ModelError::InvalidLambda(_) => field_err("lambda", e.to_string()),
            ModelError::SubminimalGrowth { .. } | ModelError::SupercriticalGrowth { .. } => {
                field_err("problem.nonlinearity.q", e.to_string())
            }
            other => field_err("problem", other.to_string()),
        }
    })
}

fn shoot_options(t: &Tolerances) -> ShootOptions {
    ShootOptions {
        ivp: IvpOptions {
            rtol: t.integrator_rel,
            atol: t.integrator_abs,
            ..IvpOptions::default()
        },
        boundary_tol: t.boundary,
        root_tol: t.root,
        ..ShootOptions::default()
    }
}

fn curve_options(t: &Tolerances) -> CurveOptions {
    CurveOptions { shoot: shoot_options(t), ..CurveOptions::default() }
}

// --- result mirrors (serialized shapes) ----------------------------------------

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct SolutionJson {
    lambda: f64,
    alpha: f64,
    u_prime_at_one: f64,
    boundary_residual: f64,
    degeneracy_margin: f64,
    monotone_violation: bool,
    multiple_crossings: bool,
    startup_epsilon: f64,
    nodes: usize,
    r: Vec<f64>,
    u: Vec<f64>,
    u_prime: Vec<f64>,
    v: Vec<f64>,
    w: Vec<f64>,
    w_prime: Vec<f64>,
}

fn solution_json(solution: &RadialSolution) -> SolutionJson {
    let trajectory = solution.trajectory();
    let grid = trajectory.grid();
    let linearized = solution.linearized();
    let samples: Vec<_> = grid.iter().map(|&r| linearized.sample(r)).collect();
    SolutionJson {
        lambda: solution.lambda(),
        alpha: solution.alpha(),
        u_prime_at_one: solution.u_prime_at_one(),
        boundary_residual: solution.boundary_residual(),
        degeneracy_margin: solution.degeneracy_margin(),
        monotone_violation: solution.monotone_violation(),
        multiple_crossings: solution.multiple_crossings(),
        startup_epsilon: trajectory.epsilon(),
        nodes: grid.len(),
        r: grid.to_vec(),
        u: trajectory.u().to_vec(),
        u_prime: trajectory.u_prime().to_vec(),
        v: trajectory.v().to_vec(),
        w: samples.iter().map(|s| s.w).collect(),
        w_prime: samples.iter().map(|s| s.w_prime).collect(),
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase", tag = "kind")]
enum StopReasonJson {
    ReachedEnd,
    #[serde(rename_all = "camelCase")]
    NoSolution { parameter: f64, detail: String },
    #[serde(rename_all = "camelCase")]
    MarginCollapse { parameter: f64 },
}

fn stop_reason_json(reason: &StopReason) -> StopReasonJson {
    match reason {
        StopReason::ReachedEnd => StopReasonJson::ReachedEnd,
        StopReason::NoSolution { parameter, detail } => {
            StopReasonJson::NoSolution { parameter: *parameter, detail: detail.clone() }
        }
        StopReason::MarginCollapse { parameter } => {
            StopReasonJson::MarginCollapse { parameter: *parameter }
        }
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct CurvePointJson {
    parameter: f64,
    alpha: f64,
    alpha_excess: Option<f64>,
    u_prime_at_one: f64,
    degeneracy_margin: f64,
    boundary_residual: f64,
    u_at_midradius: f64,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct CurveJson {
    points: Vec<CurvePointJson>,
    stop_reason: StopReasonJson,
    warnings: Vec<String>,
}

fn curve_json(curve: &SolutionCurve) -> CurveJson {
    CurveJson {
        points: curve
            .points()
            .iter()
            .map(|pt| CurvePointJson {
                parameter: pt.parameter(),
                alpha: pt.alpha(),
                alpha_excess: pt.alpha_excess(),
                u_prime_at_one: pt.u_prime_at_one(),
                degeneracy_margin: pt.degeneracy_margin(),
                boundary_residual: pt.boundary_residual(),
                u_at_midradius: pt.u_at_midradius(),
            })
            .collect(),
        stop_reason: stop_reason_json(curve.stop_reason()),
        warnings: curve.warnings().to_vec(),
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct ClassificationJson {
    fold_count: usize,
    alpha_strictly_monotone: bool,
    alpha_trend: i8,
    margin_sign_constant: bool,
    min_margin_over_median: f64,
}

impl From<CurveClassification> for ClassificationJson {
    fn from(c: CurveClassification) -> Self {
        ClassificationJson {
            fold_count: c.fold_count,
            alpha_strictly_monotone: c.alpha_strictly_monotone,
            alpha_trend: c.alpha_trend,
            margin_sign_constant: c.margin_sign_constant,
            min_margin_over_median: c.min_margin_over_median,
        }
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase", tag = "verdict")]
enum ExistenceRangeJson {
    #[serde(rename_all = "camelCase")]
    Finite {
        lambda0: f64,
        boundary_slope: f64,
        method: &'static str,
    },
    #[serde(rename_all = "camelCase")]
    Unbounded {
        /// None encodes "unbounded by sign structure", i.e. probed to infinity.
        probed_to: Option<f64>,
        method: &'static str,
    },
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct ClassifyJson {
    #[serde(flatten)]
    curve: CurveJson,
    classification: ClassificationJson,
    existence_range: Option<ExistenceRangeJson>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct WitnessJson {
    location: f64,
    value: f64,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct CheckEntryJson {
    name: &'static str,
    status: &'static str,
    pass: bool,
    witness: Option<WitnessJson>,
    detail: String,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct CheckJson {
    passed: bool,
    entries: Vec<CheckEntryJson>,
}

fn status_name(status: CheckStatus) -> &'static str {
    match status {
        CheckStatus::Pass => "pass",
        CheckStatus::Fail => "fail",
        CheckStatus::NotApplicable => "notApplicable",
    }
}

fn check_json(report: &HypothesisReport) -> CheckJson {
    CheckJson {
        passed: report.passed(),
        entries: report
            .entries()
            .iter()
            .map(|entry| CheckEntryJson {
                name: entry.name,
                status: status_name(entry.status),
                pass: entry.status != CheckStatus::Fail,
                witness: entry
                    .witness
                    .as_ref()
                    .map(|w| WitnessJson { location: w.location, value: w.value }),
                detail: entry.detail.clone(),
            })
            .collect(),
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct TimeMapRowJson {
    alpha: f64,
    lambda: f64,
    quadrature_error_estimate: f64,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct TimeMapJson {
    rows: Vec<TimeMapRowJson>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct ResidualStatsJson {
    max_abs: f64,
    scale: f64,
    relative: f64,
    nodes_checked: usize,
}

impl From<ResidualStats> for ResidualStatsJson {
    fn from(s: ResidualStats) -> Self {
        ResidualStatsJson {
            max_abs: s.max_abs,
            scale: s.scale,
            relative: s.relative,
            nodes_checked: s.nodes_checked,
        }
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct IdentityResidualsJson {
    pairing: ResidualStatsJson,
    linearized_flux: ResidualStatsJson,
    energy_flux: ResidualStatsJson,
}

impl From<IdentityResiduals> for IdentityResidualsJson {
    fn from(r: IdentityResiduals) -> Self {
        IdentityResidualsJson {
            pairing: r.pairing.into(),
            linearized_flux: r.linearized_flux.into(),
            energy_flux: r.energy_flux.into(),
        }
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct AmplitudeRatioJson {
    nonincreasing: bool,
    worst_rise: f64,
    checked_nodes: usize,
    skipped_nodes: usize,
    degenerate_denominator: bool,
}

impl From<AmplitudeRatioMonotonicity> for AmplitudeRatioJson {
    fn from(m: AmplitudeRatioMonotonicity) -> Self {
        AmplitudeRatioJson {
            nonincreasing: m.nonincreasing,
            worst_rise: m.worst_rise,
            checked_nodes: m.checked_nodes,
            skipped_nodes: m.skipped_nodes,
            degenerate_denominator: m.degenerate_denominator,
        }
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct QualitativeJson {
    hopf_margin: f64,
    hopf_ok: bool,
    monotone_decreasing: bool,
    worst_interior_slope: f64,
    center_source: f64,
    center_source_positive: bool,
    source_sign_changes: usize,
    source_crossing: Option<f64>,
    energy_rise: f64,
    energy_ok: bool,
    w_crossings: Vec<f64>,
    w_crossings_after_source_crossing: usize,
}

impl From<QualitativeReport> for QualitativeJson {
    fn from(q: QualitativeReport) -> Self {
        QualitativeJson {
            hopf_margin: q.hopf_margin,
            hopf_ok: q.hopf_ok,
            monotone_decreasing: q.monotone_decreasing,
            worst_interior_slope: q.worst_interior_slope,
            center_source: q.center_source,
            center_source_positive: q.center_source_positive,
            source_sign_changes: q.source_sign_changes,
            source_crossing: q.source_crossing,
            energy_rise: q.energy_rise,
            energy_ok: q.energy_ok,
            w_crossings: q.w_crossings,
            w_crossings_after_source_crossing: q.w_crossings_after_source_crossing,
        }
    }
}

fn source_case_name(case: SourceSignCase) -> &'static str {
    match case {
        SourceSignCase::Nonnegative => "nonnegative",
        SourceSignCase::Nonpositive => "nonpositive",
        SourceSignCase::SignChanging => "signChanging",
        SourceSignCase::Indeterminate => "indeterminate",
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct SourceSignJson {
    case: &'static str,
    min: f64,
    max: f64,
    first_sign_change: Option<f64>,
}

impl From<SourceSignReport> for SourceSignJson {
    fn from(s: SourceSignReport) -> Self {
        SourceSignJson {
            case: source_case_name(s.case),
            min: s.min,
            max: s.max,
            first_sign_change: s.first_sign_change,
        }
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct OneDimJson {
    invariant_constant: f64,
    invariant_deviation: f64,
    invariant_ok: bool,
    flux_derivative_deviation: f64,
    gamma_crossing: Option<f64>,
    turning_quantity: Option<f64>,
    turning_negative: Option<bool>,
    pairing_at_crossing: Option<f64>,
    pairing_positive: Option<bool>,
    slope_at_crossing: Option<f64>,
    slope_negative: Option<bool>,
}

impl From<OneDimReport> for OneDimJson {
    fn from(r: OneDimReport) -> Self {
        OneDimJson {
            invariant_constant: r.invariant_constant,
            invariant_deviation: r.invariant_deviation,
            invariant_ok: r.invariant_ok,
            flux_derivative_deviation: r.flux_derivative_deviation,
            gamma_crossing: r.gamma_crossing,
            turning_quantity: r.turning_quantity,
            turning_negative: r.turning_negative,
            pairing_at_crossing: r.pairing_at_crossing,
            pairing_positive: r.pairing_positive,
            slope_at_crossing: r.slope_at_crossing,
            slope_negative: r.slope_negative,
        }
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct IdentitiesJson {
    lambda: f64,
    alpha: f64,
    boundary_flux_reference: f64,
    guarded_nodes: usize,
    residuals: IdentityResidualsJson,
    amplitude_ratio: AmplitudeRatioJson,
    qualitative: QualitativeJson,
    energy_source: SourceSignJson,
    one_dim: Option<OneDimJson>,
}

// --- CSV builders ---------------------------------------------------------------

/// 17 significant digits: enough for exact f64 round-trips.
fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

/// RFC-4180 quoting for text cells (numeric cells never need it).
fn csv_escape(text: &str) -> String {
    if text.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

fn solution_csv(solution: &RadialSolution) -> String {
    let trajectory = solution.trajectory();
    let linearized = solution.linearized();
    let mut out = String::from("r,u,uPrime,v,w,wPrime\n");
    for (i, &r) in trajectory.grid().iter().enumerate() {
        let sample = linearized.sample(r);
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt(r),
            fmt(trajectory.u()[i]),
            fmt(trajectory.u_prime()[i]),
            fmt(trajectory.v()[i]),
            fmt(sample.w),
            fmt(sample.w_prime),
        ));
    }
    out
}

fn curve_csv(curve: &SolutionCurve) -> String {
    let mut out = String::from("parameter,alpha,uPrimeAtOne,degeneracyMargin\n");
    for pt in curve.points() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt(pt.parameter()),
            fmt(pt.alpha()),
            fmt(pt.u_prime_at_one()),
            fmt(pt.degeneracy_margin()),
        ));
    }
    out
}

fn check_csv(report: &HypothesisReport) -> String {
    let mut out = String::from("name,status,witnessLocation,witnessValue,detail\n");
    for entry in report.entries() {
        let (location, value) = match &entry.witness {
            Some(w) => (fmt(w.location), fmt(w.value)),
            None => (String::new(), String::new()),
        };
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            csv_escape(entry.name),
            status_name(entry.status),
            location,
            value,
            csv_escape(&entry.detail),
        ));
    }
    out
}

fn timemap_csv(rows: &[TimeMapRowJson]) -> String {
    let mut out = String::from("alpha,lambda,quadratureErrorEstimate\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{}\n",
            fmt(row.alpha),
            fmt(row.lambda),
            fmt(row.quadrature_error_estimate),
        ));
    }
    out
}

fn identities_csv(profiles: &crate::diagnostics::IdentityProfiles) -> String {
    let mut out = String::from(
        "r,pairing,linearizedFlux,solutionFlux,energyFlux,energySource,amplitudeRatio\n",
    );
    for (i, &r) in profiles.grid().iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            fmt(r),
            fmt(profiles.pairing()[i]),
            fmt(profiles.linearized_flux()[i]),
            fmt(profiles.solution_flux()[i]),
            fmt(profiles.energy_flux()[i]),
            fmt(profiles.energy_source()[i]),
            fmt(profiles.amplitude_ratio()[i]),
        ));
    }
    out
}

// --- command dispatch -------------------------------------------------------------

/// The result of one command: exit code plus the two artifact bodies.
pub struct CommandOutput {
    pub exit_code: i32,
    pub csv: String,
    pub json: serde_json::Value,
}

fn json_value<T: Serialize>(value: &T) -> serde_json::Value {
    serde_json::to_value(value).expect("result mirrors serialize infallibly")
}

/// Run a validated config to completion in memory. Numerical failures come
/// back as `SolverFailure` so the caller can write the diagnostic artifact
/// and exit with code 1.
pub fn run_command(config: &RunConfig) -> Result<CommandOutput, SolverFailure> {
    let fail = |e: &dyn std::fmt::Display| SolverFailure(e.to_string());
    match config.command {
        CommandKind::Solve => {
            let lambda = config.lambda.expect("validated");
            let spec = build_spec(config, lambda).map_err(|e| fail(&e))?;
            let solution = solve_at_lambda(&spec, lambda, None, &shoot_options(&config.tolerances))
                .map_err(|e| fail(&e))?;
            Ok(CommandOutput {
                exit_code: 0,
                csv: solution_csv(&solution),
                json: json_value(&solution_json(&solution)),
            })
        }
        CommandKind::Curve => {
            let [lo, hi] = config.lambda_range.expect("validated");
            let points = config.points.expect("validated");
            let spec = build_spec(config, lo).map_err(|e| fail(&e))?;
            let curve = trace_lambda_curve(&spec, lo, hi, points, &curve_options(&config.tolerances))
                .map_err(|e| fail(&e))?;
            Ok(CommandOutput {
                exit_code: 0,
                csv: curve_csv(&curve),
                json: json_value(&curve_json(&curve)),
            })
        }
        CommandKind::Homotopy => {
            let lambda = config.lambda.expect("validated");
            let homotopy = config.homotopy.expect("validated");
            let steps = homotopy.steps.expect("validated");
            let spec = build_spec(config, lambda).map_err(|e| fail(&e))?;
            let ts = homotopy_parameter_grid(steps);
            let curve = trace_homotopy(
                &spec,
                homotopy.kind.into(),
                lambda,
                &ts,
                &curve_options(&config.tolerances),
            )
            .map_err(|e| fail(&e))?;
            Ok(CommandOutput {
                exit_code: 0,
                csv: curve_csv(&curve),
                json: json_value(&curve_json(&curve)),
            })
        }
        CommandKind::Check => {
            let spec =
                build_spec(config, config.lambda.unwrap_or(1.0)).map_err(|e| fail(&e))?;
            let report = check_model_hypotheses(&spec);
            let json = check_json(&report);
            Ok(CommandOutput {
                exit_code: if json.passed { 0 } else { 2 },
                csv: check_csv(&report),
                json: json_value(&json),
            })
        }
        CommandKind::Timemap => {
            let amplitudes = config.amplitudes.as_ref().expect("validated");
            let spec =
                build_spec(config, config.lambda.unwrap_or(1.0)).map_err(|e| fail(&e))?;
            let mut rows = Vec::with_capacity(amplitudes.len());
            for &alpha in amplitudes {
                let result = time_map_lambda(spec.nonlinearity(), spec.p(), alpha)
                    .map_err(|e| fail(&e))?;
                rows.push(TimeMapRowJson {
                    alpha: result.alpha,
                    lambda: result.lambda,
                    quadrature_error_estimate: result.quadrature_error_estimate,
                });
            }
            Ok(CommandOutput {
                exit_code: 0,
                csv: timemap_csv(&rows),
                json: json_value(&TimeMapJson { rows }),
            })
        }
        CommandKind::Identities => {
            let lambda = config.lambda.expect("validated");
            let spec = build_spec(config, lambda).map_err(|e| fail(&e))?;
            let solution = solve_at_lambda(&spec, lambda, None, &shoot_options(&config.tolerances))
                .map_err(|e| fail(&e))?;
            let profiles = identity_profiles(&solution);
            let one_dim = if spec.n() == 1 && spec.nonlinearity().is_autonomous() {
                one_dim_identities(&solution).ok().map(OneDimJson::from)
            } else {
                None
            };
            let report = IdentitiesJson {
                lambda: solution.lambda(),
                alpha: solution.alpha(),
                boundary_flux_reference: profiles.boundary_flux_reference(),
                guarded_nodes: profiles.guarded_nodes(),
                residuals: identity_residuals(&solution).into(),
                amplitude_ratio: amplitude_ratio_monotonicity(&profiles).into(),
                qualitative: qualitative_checks(&solution).into(),
                energy_source: classify_energy_source(&profiles).into(),
                one_dim,
            };
            Ok(CommandOutput {
                exit_code: 0,
                csv: identities_csv(&profiles),
                json: json_value(&report),
            })
        }
        CommandKind::Classify => {
            let [lo, hi] = config.lambda_range.expect("validated");
            let points = config.points.expect("validated");
            let spec = build_spec(config, lo).map_err(|e| fail(&e))?;
            let opts = curve_options(&config.tolerances);
            let curve = trace_lambda_curve(&spec, lo, hi, points, &opts).map_err(|e| fail(&e))?;
            let classification = classify_curve(&curve).map_err(|e| fail(&e))?;
            let mut body = curve_json(&curve);
            let existence_range = match detect_lambda0(&spec, &opts) {
                Ok(report) => Some(match report.verdict {
                    Lambda0Verdict::Finite { lambda0, boundary_slope } => {
                        ExistenceRangeJson::Finite {
                            lambda0,
                            boundary_slope,
                            method: report.method,
                        }
                    }
                    Lambda0Verdict::Unbounded { probed_to } => ExistenceRangeJson::Unbounded {
                        probed_to: probed_to.is_finite().then_some(probed_to),
                        method: report.method,
                    },
                }),
                Err(e) => {
                    body.warnings.push(format!("existence-range detection failed: {e}"));
                    None
                }
            };
            let report = ClassifyJson {
                curve: body,
                classification: classification.into(),
                existence_range,
            };
            Ok(CommandOutput {
                exit_code: 0,
                csv: curve_csv(&curve),
                json: json_value(&report),
            })
        }
    }
}

// --- emission -----------------------------------------------------------------------

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct Envelope<'a> {
    version: &'static str,
    command: &'static str,
    config: &'a RunConfig,
    result: &'a serde_json::Value,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct DiagnosticFile<'a> {
    version: &'static str,
    command: &'static str,
    error: &'a str,
    config: &'a RunConfig,
}

/// Write bytes so that the final path never holds a partial file: a temp
/// file in the same directory (hence the same filesystem) is renamed over
/// the target.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let file_name = path
        .file_name()
        .and_then(|name| name.to_str())
        .unwrap_or("artifact");
    let tmp = path.with_file_name(format!("{file_name}.tmp"));
    let write_err = |source| CliError::Write { path: path.display().to_string(), source };
    fs::write(&tmp, bytes).map_err(write_err)?;
    fs::rename(&tmp, path).map_err(write_err)?;
    Ok(())
}

/// Write the requested artifacts (`<command>.csv`, `<command>.json`) into
/// the output directory. Returns the paths written.
pub fn emit_results(config: &RunConfig, output: &CommandOutput) -> Result<Vec<PathBuf>, CliError> {
    let name = config.command.name();
    let envelope = Envelope {
        version: env!("CARGO_PKG_VERSION"),
        command: name,
        config,
        result: &output.json,
    };
    let mut written = Vec::new();
    let mut seen = Vec::new();
    for &format in &config.output.formats {
        if seen.contains(&format) {
            continue;
        }
        seen.push(format);
        match format {
            OutputFormat::Csv => {
                let path = config.output.directory.join(format!("{name}.csv"));
                write_atomic(&path, output.csv.as_bytes())?;
                written.push(path);
            }
            OutputFormat::Json => {
                let text = serde_json::to_string_pretty(&envelope)
                    .expect("envelope serializes infallibly");
                let path = config.output.directory.join(format!("{name}.json"));
                write_atomic(&path, format!("{text}\n").as_bytes())?;
                written.push(path);
            }
        }
    }
    Ok(written)
}

fn write_diagnostic(config: &RunConfig, error: &str) -> Result<PathBuf, CliError> {
    let body = DiagnosticFile {
        version: env!("CARGO_PKG_VERSION"),
        command: config.command.name(),
        error,
        config,
    };
    let text = serde_json::to_string_pretty(&body).expect("diagnostic serializes infallibly");
    let path = config.output.directory.join("diagnostic.json");
    write_atomic(&path, format!("{text}\n").as_bytes())?;
    Ok(path)
}

// --- binary interface -----------------------------------------------------------------

#[derive(Debug, Parser)]
#[command(
    name = "plap",
    version,
    about = "Shooting solver and verification suite for radial p-Laplace Dirichlet problems on the unit ball"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Path to the JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides output.directory from the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated artifact formats; overrides output.formats.
    #[arg(long, value_delimiter = ',')]
    pub format: Option<Vec<String>>,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Solve the boundary-value problem at one lambda.
    Solve(RunArgs),
    /// Trace the solution branch over a lambda range.
    Curve(RunArgs),
    /// Trace a coefficient homotopy at fixed lambda.
    Homotopy(RunArgs),
    /// Audit the structural hypotheses of the problem.
    Check(RunArgs),
    /// Evaluate the quadrature lambda oracle at given amplitudes.
    Timemap(RunArgs),
    /// Solve once and report identity and qualitative diagnostics.
    Identities(RunArgs),
    /// Trace a branch and classify its shape and existence range.
    Classify(RunArgs),
}

impl CliCommand {
    fn parts(&self) -> (CommandKind, &RunArgs) {
        match self {
            CliCommand::Solve(args) => (CommandKind::Solve, args),
            CliCommand::Curve(args) => (CommandKind::Curve, args),
            CliCommand::Homotopy(args) => (CommandKind::Homotopy, args),
            CliCommand::Check(args) => (CommandKind::Check, args),
            CliCommand::Timemap(args) => (CommandKind::Timemap, args),
            CliCommand::Identities(args) => (CommandKind::Identities, args),
            CliCommand::Classify(args) => (CommandKind::Classify, args),
        }
    }
}

fn parse_formats(names: &[String]) -> Result<Vec<OutputFormat>, CliError> {
    names
        .iter()
        .map(|name| match name.as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(CliError::Format(other.to_string())),
        })
        .collect()
}

fn execute(cli: &Cli) -> Result<i32, CliError> {
    let (kind, args) = cli.command.parts();
    let mut config = load_config(&args.config)?;
    if config.command != kind {
        return Err(CliError::CommandMismatch {
            config: config.command.name(),
            invoked: kind.name(),
        });
    }
    if let Some(out) = &args.out {
        config.output.directory = out.clone();
    }
    if let Some(formats) = &args.format {
        config.output.formats = parse_formats(formats)?;
        if config.output.formats.is_empty() {
            return Err(CliError::Format(String::new()));
        }
    }
    fs::create_dir_all(&config.output.directory).map_err(|source| CliError::OutputDir {
        dir: config.output.directory.display().to_string(),
        source,
    })?;
    match run_command(&config) {
        Ok(output) => {
            for path in emit_results(&config, &output)? {
                println!("wrote {}", path.display());
            }
            Ok(output.exit_code)
        }
        Err(SolverFailure(message)) => {
            let path = write_diagnostic(&config, &message)?;
            eprintln!("solver failure: {message}");
            eprintln!("diagnostic written to {}", path.display());
            Ok(1)
        }
    }
}

/// Entry point for the binary: returns the process exit code.
/// Configuration and filesystem errors print to stderr and exit 1 without a
/// diagnostic file (there may be no valid output directory to write into).
pub fn run(cli: &Cli) -> i32 {
    match execute(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            1
        }
    }
}
