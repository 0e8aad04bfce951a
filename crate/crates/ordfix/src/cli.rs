//! Command-line front end: scenario configuration, dispatch, and
//! machine-readable reports.
//!
//! Configuration precedence is flags over config file over defaults. The
//! config file is plain `key = value` lines with `#` comments; unknown keys
//! are rejected. Exit codes: 0 success, 2 configuration error, 3 solver
//! failure, 4 condition violation.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Parser;
use serde::Serialize;

use crate::contraction::{check_condition_h, ConditionReport, Modulus, PairSampler};
use crate::error::Error;
use crate::operators::{
    IntegralMode, KernelRule, PeriodicBVPOperator, ScaleOperator, SignalFeedbackOperator,
};
use crate::solver::{solve, uniqueness_probe, FixedPointResult, SolveConfig, UniquenessReport};
use crate::space::{ConeSpec, GridFunction};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_CONDITION: i32 = 4;

/// Scale factor of the deliberately non-contracting check operator.
const NEGATIVE_CONTROL_FACTOR: f64 = -2.0;
/// Pair count for the condition check scenario.
const CHECK_PAIR_COUNT: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Signal,
    Periodic,
    CheckH,
    ProbeUniqueness,
}

impl Scenario {
    fn parse(s: &str) -> Result<Self, Error> {
        match s {
            "signal" => Ok(Self::Signal),
            "periodic" => Ok(Self::Periodic),
            "check-h" => Ok(Self::CheckH),
            "probe-uniqueness" => Ok(Self::ProbeUniqueness),
            other => Err(Error::Config(format!(
                "unknown scenario '{other}' (expected signal, periodic, check-h or probe-uniqueness)"
            ))),
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Self::Signal => "signal",
            Self::Periodic => "periodic",
            Self::CheckH => "check-h",
            Self::ProbeUniqueness => "probe-uniqueness",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
}

impl OutputFormat {
    fn parse(s: &str) -> Result<Self, Error> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            other => Err(Error::Config(format!(
                "unknown format '{other}' (expected json or csv)"
            ))),
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Self::Json => "json",
            Self::Csv => "csv",
        }
    }
}

/// Operator choice for the condition-check scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckOperator {
    Signal,
    /// `A(u) = -2u`: decreasing but not contracting, fails the check.
    NegScale,
}

impl CheckOperator {
    fn parse(s: &str) -> Result<Self, Error> {
        match s {
            "signal" => Ok(Self::Signal),
            "negscale" => Ok(Self::NegScale),
            other => Err(Error::Config(format!(
                "unknown operator '{other}' (expected signal or negscale)"
            ))),
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Self::Signal => "signal",
            Self::NegScale => "negscale",
        }
    }
}

/// Fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub grid_n: usize,
    pub tol: f64,
    pub max_iters: usize,
    pub m_param: u32,
    pub lambda_bvp: f64,
    pub alpha: Option<f64>,
    pub c: f64,
    pub seed: u64,
    pub output_format: OutputFormat,
    pub output_path: Option<PathBuf>,
    pub record_trace: bool,
    pub check_operator: CheckOperator,
    pub modulus_c: f64,
}

impl RunConfig {
    pub fn defaults(scenario: Scenario) -> Self {
        Self {
            scenario,
            grid_n: 1000,
            tol: 1e-10,
            max_iters: 10_000,
            m_param: 1,
            lambda_bvp: 1.0,
            alpha: None,
            c: 2.0,
            seed: 42,
            output_format: OutputFormat::Json,
            output_path: None,
            record_trace: false,
            check_operator: CheckOperator::Signal,
            modulus_c: 0.15,
        }
    }

    fn validate(&self) -> Result<(), Error> {
        if self.grid_n < 1 {
            return Err(Error::Config("grid-n must be at least 1".into()));
        }
        if !self.tol.is_finite() || self.tol <= 0.0 {
            return Err(Error::Config(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iters < 1 {
            return Err(Error::Config("max-iters must be at least 1".into()));
        }
        if self.m_param < 1 {
            return Err(Error::Config("m-param must be a positive integer".into()));
        }
        if !self.lambda_bvp.is_finite() || self.lambda_bvp <= 0.0 {
            return Err(Error::Config(format!(
                "lambda must be positive, got {}",
                self.lambda_bvp
            )));
        }
        if let Some(alpha) = self.alpha {
            if !alpha.is_finite() || alpha <= 0.0 {
                return Err(Error::Config(format!(
                    "alpha must be positive, got {alpha}"
                )));
            }
        }
        if !self.modulus_c.is_finite() || self.modulus_c <= 0.0 || self.modulus_c >= 1.0 {
            return Err(Error::Config(format!(
                "modulus-c must lie in (0, 1), got {}",
                self.modulus_c
            )));
        }
        Ok(())
    }
}

/// Command-line arguments; every option overrides the config file, which
/// overrides the built-in defaults.
#[derive(Debug, Parser)]
#[command(
    name = "solve",
    version,
    about = "Fixed-point solver scenarios for decreasing operators on ordered grids"
)]
pub struct Cli {
    /// Scenario: signal, periodic, check-h, probe-uniqueness.
    #[arg(long)]
    pub scenario: Option<String>,
    /// Grid resolution (number of intervals).
    #[arg(long = "grid-n")]
    pub grid_n: Option<usize>,
    /// Target certified distance to the fixed point.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Iteration budget for the squared-operator chain.
    #[arg(long = "max-iters")]
    pub max_iters: Option<usize>,
    /// Channel parameter of the signal operator (positive integer).
    #[arg(long = "m-param")]
    pub m_param: Option<u32>,
    /// Kernel rate of the periodic operator.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Hypothesis constant of the periodic operator; defaults to lambda * N.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Constant term of the periodic nonlinearity F(t, u) = c - lambda u.
    #[arg(long)]
    pub c: Option<f64>,
    /// Seed for all sampling.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output format: json (full report) or csv (iteration trace).
    #[arg(long)]
    pub format: Option<String>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Record the iteration trace.
    #[arg(long)]
    pub trace: bool,
    /// Optional key = value config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Operator for check-h: signal (default) or negscale.
    #[arg(long)]
    pub operator: Option<String>,
    /// Level of the constant contraction modulus.
    #[arg(long = "modulus-c")]
    pub modulus_c: Option<f64>,
}

fn parse_config_file(path: &Path) -> Result<Vec<(String, String)>, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config file {}: {e}", path.display())))?;
    let mut entries = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!(
                "config line {}: expected 'key = value', got '{line}'",
                lineno + 1
            ))
        })?;
        entries.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(entries)
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, Error> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value '{value}' for {key}")))
}

fn apply_file_entry(cfg: &mut RunConfig, key: &str, value: &str) -> Result<(), Error> {
    match key {
        "scenario" => cfg.scenario = Scenario::parse(value)?,
        "grid-n" => cfg.grid_n = parse_num(key, value)?,
        "tol" => cfg.tol = parse_num(key, value)?,
        "max-iters" => cfg.max_iters = parse_num(key, value)?,
        "m-param" => cfg.m_param = parse_num(key, value)?,
        "lambda" => cfg.lambda_bvp = parse_num(key, value)?,
        "alpha" => cfg.alpha = Some(parse_num(key, value)?),
        "c" => cfg.c = parse_num(key, value)?,
        "seed" => cfg.seed = parse_num(key, value)?,
        "format" => cfg.output_format = OutputFormat::parse(value)?,
        "out" => cfg.output_path = Some(PathBuf::from(value)),
        "trace" => cfg.record_trace = parse_num(key, value)?,
        "operator" => cfg.check_operator = CheckOperator::parse(value)?,
        "modulus-c" => cfg.modulus_c = parse_num(key, value)?,
        other => {
            return Err(Error::Config(format!("unknown config key '{other}'")));
        }
    }
    Ok(())
}

/// Resolves the effective configuration: defaults, then the config file,
/// then command-line flags.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig, Error> {
    let file_entries = match &cli.config {
        Some(path) => parse_config_file(path)?,
        None => Vec::new(),
    };
    let scenario = match (
        &cli.scenario,
        file_entries.iter().find(|(k, _)| k == "scenario"),
    ) {
        (Some(s), _) => Scenario::parse(s)?,
        (None, Some((_, v))) => Scenario::parse(v)?,
        (None, None) => {
            return Err(Error::Config(
                "missing scenario: pass --scenario or set it in the config file".into(),
            ))
        }
    };
    let mut cfg = RunConfig::defaults(scenario);
    for (key, value) in &file_entries {
        apply_file_entry(&mut cfg, key, value)?;
    }
    cfg.scenario = scenario;
    if let Some(v) = cli.grid_n {
        cfg.grid_n = v;
    }
    if let Some(v) = cli.tol {
        cfg.tol = v;
    }
    if let Some(v) = cli.max_iters {
        cfg.max_iters = v;
    }
    if let Some(v) = cli.m_param {
        cfg.m_param = v;
    }
    if let Some(v) = cli.lambda {
        cfg.lambda_bvp = v;
    }
    if let Some(v) = cli.alpha {
        cfg.alpha = Some(v);
    }
    if let Some(v) = cli.c {
        cfg.c = v;
    }
    if let Some(v) = cli.seed {
        cfg.seed = v;
    }
    if let Some(v) = &cli.format {
        cfg.output_format = OutputFormat::parse(v)?;
    }
    if let Some(v) = &cli.out {
        cfg.output_path = Some(v.clone());
    }
    if cli.trace {
        cfg.record_trace = true;
    }
    if let Some(v) = &cli.operator {
        cfg.check_operator = CheckOperator::parse(v)?;
    }
    if let Some(v) = cli.modulus_c {
        cfg.modulus_c = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

// ---------------------------------------------------------------------------
// Report bodies
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct ConfigEcho {
    scenario: String,
    grid_n: usize,
    tol: f64,
    max_iters: usize,
    m_param: u32,
    lambda: f64,
    alpha: f64,
    c: f64,
    seed: u64,
    format: String,
    out: Option<String>,
    trace: bool,
    operator: String,
    modulus_c: f64,
}

#[derive(Debug, Serialize)]
struct ResultBody {
    fixed_point_values: Vec<f64>,
    residual: f64,
    lambda: Option<f64>,
    d0: f64,
    iterations: usize,
    case: String,
}

#[derive(Debug, Serialize)]
pub struct TraceRow {
    pub iter: usize,
    pub step_norm: f64,
    pub a_priori: f64,
    pub a_posteriori: f64,
}

#[derive(Debug, Serialize)]
struct WitnessBody {
    pair_index: usize,
    node_index: usize,
    gap: f64,
    lhs: f64,
    rhs: f64,
}

#[derive(Debug, Serialize)]
struct ConditionBody {
    pairs_tested: usize,
    pairs_passed: usize,
    worst_ratio: f64,
    witness: Option<WitnessBody>,
}

#[derive(Debug, Serialize)]
struct ProbeRunBody {
    start: String,
    ok: bool,
    error: Option<String>,
    residual: Option<f64>,
    lambda: Option<f64>,
    iterations: Option<usize>,
    case: Option<String>,
}

#[derive(Debug, Serialize)]
struct UniquenessBody {
    runs: Vec<ProbeRunBody>,
    successes: usize,
    max_pairwise_distance: f64,
}

#[derive(Debug, Serialize)]
struct Report {
    config: ConfigEcho,
    #[serde(skip_serializing_if = "Option::is_none")]
    result: Option<ResultBody>,
    #[serde(skip_serializing_if = "Option::is_none")]
    condition: Option<ConditionBody>,
    #[serde(skip_serializing_if = "Option::is_none")]
    uniqueness: Option<UniquenessBody>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace: Option<Vec<TraceRow>>,
    wall_ms: u64,
    version: String,
}

fn config_echo(cfg: &RunConfig, spec: &ConeSpec) -> ConfigEcho {
    ConfigEcho {
        scenario: cfg.scenario.name().to_string(),
        grid_n: cfg.grid_n,
        tol: cfg.tol,
        max_iters: cfg.max_iters,
        m_param: cfg.m_param,
        lambda: cfg.lambda_bvp,
        alpha: cfg.alpha.unwrap_or(cfg.lambda_bvp * spec.normal_constant),
        c: cfg.c,
        seed: cfg.seed,
        format: cfg.output_format.name().to_string(),
        out: cfg.output_path.as_ref().map(|p| p.display().to_string()),
        trace: cfg.record_trace,
        operator: cfg.check_operator.name().to_string(),
        modulus_c: cfg.modulus_c,
    }
}

fn result_body(res: &FixedPointResult) -> ResultBody {
    ResultBody {
        fixed_point_values: res.fixed_point.values().to_vec(),
        residual: res.residual,
        lambda: res.lambda,
        d0: res.d0,
        iterations: res.iterations,
        case: res.case_taken.to_string(),
    }
}

fn condition_body(report: &ConditionReport) -> ConditionBody {
    ConditionBody {
        pairs_tested: report.pairs_tested,
        pairs_passed: report.pairs_passed,
        worst_ratio: report.worst_ratio,
        witness: report.witness.as_ref().map(|w| WitnessBody {
            pair_index: w.pair_index,
            node_index: w.node_index,
            gap: w.gap,
            lhs: w.lhs,
            rhs: w.rhs,
        }),
    }
}

fn uniqueness_body(report: &UniquenessReport) -> UniquenessBody {
    UniquenessBody {
        runs: report
            .runs
            .iter()
            .map(|run| match &run.outcome {
                Ok(res) => ProbeRunBody {
                    start: run.start.clone(),
                    ok: true,
                    error: None,
                    residual: Some(res.residual),
                    lambda: res.lambda,
                    iterations: Some(res.iterations),
                    case: Some(res.case_taken.to_string()),
                },
                Err(e) => ProbeRunBody {
                    start: run.start.clone(),
                    ok: false,
                    error: Some(e.to_string()),
                    residual: None,
                    lambda: None,
                    iterations: None,
                    case: None,
                },
            })
            .collect(),
        successes: report.successes(),
        max_pairwise_distance: report.max_pairwise_distance,
    }
}

pub fn trace_rows(res: &FixedPointResult) -> Result<Vec<TraceRow>, Error> {
    let trace = res
        .trace
        .as_ref()
        .ok_or_else(|| Error::Config("trace was not recorded for this run".into()))?;
    Ok(trace
        .steps
        .iter()
        .map(|s| TraceRow {
            iter: s.iterate,
            step_norm: s.step_norm,
            a_priori: s.a_priori,
            a_posteriori: s.a_posteriori,
        })
        .collect())
}

/// Renders trace rows as CSV with 17 significant digits, enough to
/// round-trip doubles exactly.
pub fn trace_csv(rows: &[TraceRow]) -> String {
    let mut out = String::from("iter,step_norm,a_priori,a_posteriori\n");
    for row in rows {
        out.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e}\n",
            row.iter, row.step_norm, row.a_priori, row.a_posteriori
        ));
    }
    out
}

/// Writes the recorded trace of a solve either as CSV or as a JSON array
/// with the same fields.
pub fn emit_trace(
    result: &FixedPointResult,
    format: OutputFormat,
    path: &Path,
) -> Result<(), Error> {
    let rows = trace_rows(result)?;
    let rendered = match format {
        OutputFormat::Csv => trace_csv(&rows),
        OutputFormat::Json => serde_json::to_string_pretty(&rows)?,
    };
    std::fs::write(path, rendered)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Scenario dispatch
// ---------------------------------------------------------------------------

enum Outcome {
    Solve(FixedPointResult),
    Condition(ConditionReport),
    Uniqueness(UniquenessReport),
}

fn solve_config(cfg: &RunConfig) -> SolveConfig {
    SolveConfig {
        tol: cfg.tol,
        max_iters: cfg.max_iters,
        record_trace: cfg.record_trace || cfg.output_format == OutputFormat::Csv,
        seed: cfg.seed,
        retighten_rate: false,
    }
}

fn run_scenario(cfg: &RunConfig, spec: &ConeSpec) -> Result<Outcome, Error> {
    match cfg.scenario {
        Scenario::Signal => {
            let op = SignalFeedbackOperator::new(cfg.m_param, cfg.grid_n, IntegralMode::Analytic)
                .map_err(|e| Error::Config(e.to_string()))?;
            let modulus =
                Modulus::constant(cfg.modulus_c).map_err(|e| Error::Config(e.to_string()))?;
            let u0 = GridFunction::constant(cfg.grid_n, 0.0)
                .map_err(|e| Error::Config(e.to_string()))?;
            let res = solve(&op, &u0, &modulus, spec, &solve_config(cfg))?;
            Ok(Outcome::Solve(res))
        }
        Scenario::Periodic => {
            let lam = cfg.lambda_bvp;
            let c = cfg.c;
            let alpha = cfg.alpha.unwrap_or(lam * spec.normal_constant);
            let op = PeriodicBVPOperator::new(
                lam,
                alpha,
                cfg.grid_n,
                KernelRule::SplitAtDiagonal,
                move |_t, z| c - lam * z,
                spec,
            )
            .map_err(|e| Error::Config(e.to_string()))?;
            let u0 = GridFunction::constant(cfg.grid_n, 0.0)
                .map_err(|e| Error::Config(e.to_string()))?;
            let res = solve(&op, &u0, &Modulus::logarithmic(), spec, &solve_config(cfg))?;
            Ok(Outcome::Solve(res))
        }
        Scenario::CheckH => {
            let modulus =
                Modulus::constant(cfg.modulus_c).map_err(|e| Error::Config(e.to_string()))?;
            let pairs = PairSampler::new(cfg.grid_n, CHECK_PAIR_COUNT, 0.0, 1.0, cfg.seed)
                .map_err(|e| Error::Config(e.to_string()))?
                .generate();
            let report = match cfg.check_operator {
                CheckOperator::Signal => {
                    let op = SignalFeedbackOperator::new(
                        cfg.m_param,
                        cfg.grid_n,
                        IntegralMode::Analytic,
                    )
                    .map_err(|e| Error::Config(e.to_string()))?;
                    check_condition_h(&op, &modulus, &pairs, spec)?
                }
                CheckOperator::NegScale => {
                    let op = ScaleOperator::new(NEGATIVE_CONTROL_FACTOR, cfg.grid_n)
                        .map_err(|e| Error::Config(e.to_string()))?;
                    check_condition_h(&op, &modulus, &pairs, spec)?
                }
            };
            Ok(Outcome::Condition(report))
        }
        Scenario::ProbeUniqueness => {
            let op = SignalFeedbackOperator::new(cfg.m_param, cfg.grid_n, IntegralMode::Analytic)
                .map_err(|e| Error::Config(e.to_string()))?;
            let starts = probe_starts(cfg.grid_n).map_err(|e| Error::Config(e.to_string()))?;
            let modulus =
                Modulus::constant(cfg.modulus_c).map_err(|e| Error::Config(e.to_string()))?;
            let report = uniqueness_probe(&op, &starts, &modulus, spec, &solve_config(cfg))?;
            Ok(Outcome::Uniqueness(report))
        }
    }
}

/// The canonical probe starts: two constants, two crossing lines, and a
/// bump; the set contains mutually incomparable functions.
pub fn probe_starts(grid_n: usize) -> Result<Vec<(String, GridFunction)>, Error> {
    Ok(vec![
        ("0".to_string(), GridFunction::constant(grid_n, 0.0)?),
        ("1".to_string(), GridFunction::constant(grid_n, 1.0)?),
        ("t".to_string(), GridFunction::from_fn(grid_n, |t| t)?),
        (
            "1-t".to_string(),
            GridFunction::from_fn(grid_n, |t| 1.0 - t)?,
        ),
        (
            "sin^2(pi t)".to_string(),
            GridFunction::from_fn(grid_n, |t| (std::f64::consts::PI * t).sin().powi(2))?,
        ),
    ])
}

fn write_output(cfg: &RunConfig, rendered: &str) -> Result<(), Error> {
    match &cfg.output_path {
        Some(path) => std::fs::write(path, rendered)?,
        None => println!("{rendered}"),
    }
    Ok(())
}

/// Runs the resolved configuration end to end and returns the process exit
/// code. Solver failures surface as errors; condition violations and probe
/// disagreements are reported with a dedicated exit code.
pub fn execute(cli: &Cli) -> Result<i32, Error> {
    let cfg = resolve_config(cli)?;
    let spec = ConeSpec::default();
    let started = Instant::now();
    let outcome = run_scenario(&cfg, &spec)?;
    let wall_ms = started.elapsed().as_millis() as u64;

    if cfg.output_format == OutputFormat::Csv {
        let res = match &outcome {
            Outcome::Solve(res) => res,
            _ => {
                return Err(Error::Config(
                    "csv output applies to the solve scenarios only".into(),
                ))
            }
        };
        let rendered = trace_csv(&trace_rows(res)?);
        write_output(&cfg, &rendered)?;
        return Ok(EXIT_OK);
    }

    let mut report = Report {
        config: config_echo(&cfg, &spec),
        result: None,
        condition: None,
        uniqueness: None,
        trace: None,
        wall_ms,
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    let exit = match &outcome {
        Outcome::Solve(res) => {
            report.result = Some(result_body(res));
            if cfg.record_trace {
                report.trace = Some(trace_rows(res)?);
            }
            EXIT_OK
        }
        Outcome::Condition(cond) => {
            report.condition = Some(condition_body(cond));
            if cond.all_passed() {
                EXIT_OK
            } else {
                EXIT_CONDITION
            }
        }
        Outcome::Uniqueness(probe) => {
            report.uniqueness = Some(uniqueness_body(probe));
            if probe.successes() < 2 {
                EXIT_SOLVER
            } else if probe.max_pairwise_distance > 10.0 * cfg.tol {
                EXIT_CONDITION
            } else {
                EXIT_OK
            }
        }
    };
    let rendered = serde_json::to_string_pretty(&report)?;
    write_output(&cfg, &rendered)?;
    Ok(exit)
}

/// Maps an error to the process exit code contract.
pub fn exit_code_for(error: &Error) -> i32 {
    match error {
        Error::Config(_) => EXIT_CONFIG,
        _ => EXIT_SOLVER,
    }
}
