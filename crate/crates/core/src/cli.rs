//! The `dnls` command line: JSON config in, JSON report on stdout, CSV files out.
//!
//! Exit codes: 0 ok, 1 config or input error, 2 certificate, 3 solver, 4 degree.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::certificate::{certify_and_verify, CertificateError, ExistenceCertificate};
use crate::degree::{estimate_degree, DegreeError, DegreeReport, DegreeTarget, MAX_REAL_DIM};
use crate::lattice::{LatticeError, LatticeField, LatticeParams};
use crate::operator::{OperatorError, ShiftedOperator};
use crate::potentials::Potential;
use crate::solver::{
    lift_profile, residual_direct, solve, PipelineConfig, SolveReport, SolverError, SolverOptions,
};

pub const SOLUTION_FILE: &str = "solution.csv";
pub const STEADY_FILE: &str = "steady.csv";
pub const REPORT_FILE: &str = "report.json";
pub const INCOMPLETE_ENUMERATION: &str = "INCOMPLETE-ENUMERATION";

#[derive(Debug, Parser)]
#[command(
    name = "dnls",
    version,
    about = "Periodic solutions of the discrete nonlinear Schrodinger equation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute the existence certificate and sample the boundary inequality.
    Certify(CommonArgs),
    /// Certify, then find a periodic solution by homotopy continuation.
    Solve(CommonArgs),
    /// Solve for a time-independent profile (T forced to 1).
    Steady(CommonArgs),
    /// Recompute the residual of a solution file.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        solution: PathBuf,
    },
    /// Estimate the degree of S and Q on the certified ball.
    Degree(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for report.json and CSV output (CSV defaults to the working directory).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    PowerLaw,
    Bounded,
    Zero,
    Constant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    pub kind: PotentialKind,
    /// `f(t)` as `[re, im]` pairs; the list length is the time period.
    #[serde(default)]
    pub coefficients: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent: Option<f64>,
}

fn default_shift_factor() -> f64 {
    crate::operator::DEFAULT_SHIFT_FACTOR
}
fn default_slack() -> f64 {
    crate::certificate::DEFAULT_SLACK
}
fn default_tolerance() -> f64 {
    crate::solver::DEFAULT_TOLERANCE
}
fn default_max_iter() -> usize {
    crate::solver::DEFAULT_MAX_ITER
}
fn default_samples() -> usize {
    10_000
}
fn default_n_starts() -> usize {
    32
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(rename = "T")]
    pub t_period: usize,
    #[serde(rename = "K")]
    pub k_period: usize,
    pub beta: f64,
    pub epsilon: f64,
    pub gamma: f64,
    pub potential: PotentialConfig,
    #[serde(default = "default_shift_factor")]
    pub shift_factor: f64,
    #[serde(default = "default_slack")]
    pub slack: f64,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_n_starts")]
    pub n_starts: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("config field `{field}`: {message}")]
    Parse { field: String, message: String },
    #[error("config field `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

fn invalid(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        reason: reason.into(),
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            ConfigError::Parse {
                field: if field == "." || field == "?" {
                    "<root>".into()
                } else {
                    field
                },
                message: e.into_inner().to_string(),
            }
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.params()?;
        if !(self.shift_factor.is_finite() && self.shift_factor > 1.0) {
            return Err(invalid(
                "shift_factor",
                format!("must exceed 1, got {}", self.shift_factor),
            ));
        }
        if !(0.0..1.0).contains(&self.slack) {
            return Err(invalid(
                "slack",
                format!("must lie in [0, 1), got {}", self.slack),
            ));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(invalid(
                "tolerance",
                format!("must be positive, got {}", self.tolerance),
            ));
        }
        if self.max_iter == 0 {
            return Err(invalid("max_iter", "must be at least 1"));
        }
        if self.n_starts == 0 {
            return Err(invalid("n_starts", "must be at least 1"));
        }
        let g = self.potential()?;
        g.check_period(self.t_period)
            .map_err(|e| invalid("potential.coefficients", e.to_string()))?;
        Ok(())
    }

    pub fn params(&self) -> Result<LatticeParams, ConfigError> {
        LatticeParams::new(
            self.t_period,
            self.k_period,
            self.beta,
            self.epsilon,
            self.gamma,
        )
        .map_err(|e| match e {
            LatticeError::InvalidParams { field, reason } => invalid(field, reason),
            other => invalid("<root>", other.to_string()),
        })
    }

    /// Builds the potential. Power laws with `r >= 3` are accepted here so the
    /// certificate can reject them.
    pub fn potential(&self) -> Result<Potential, ConfigError> {
        let p = &self.potential;
        let coeffs: Vec<Complex64> = p
            .coefficients
            .iter()
            .map(|c| Complex64::new(c[0], c[1]))
            .collect();
        let built = match p.kind {
            PotentialKind::Zero => return Ok(Potential::zero()),
            PotentialKind::PowerLaw => {
                let r = p
                    .exponent
                    .ok_or_else(|| invalid("potential.exponent", "required for kind power_law"))?;
                if !(r.is_finite() && r > 0.0) {
                    return Err(invalid(
                        "potential.exponent",
                        format!("must be positive, got {r}"),
                    ));
                }
                if r < 3.0 {
                    Potential::power_law(coeffs, r)
                } else {
                    Potential::power_law_unchecked(coeffs, r)
                }
            }
            PotentialKind::Bounded => Potential::bounded(coeffs),
            PotentialKind::Constant => Potential::constant(coeffs),
        };
        built.map_err(|e| invalid("potential.coefficients", e.to_string()))
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            shift_factor: self.shift_factor,
            slack: self.slack,
            samples: self.samples,
            n_starts: self.n_starts,
            seed: self.seed,
            solver: SolverOptions {
                tol: self.tolerance,
                max_iter: self.max_iter,
                ..SolverOptions::default()
            },
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Certificate(#[from] CertificateError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Degree(#[from] DegreeError),
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Input(_) | CliError::Write { .. } => 1,
            CliError::Operator(_) | CliError::Certificate(_) => 2,
            CliError::Solver(SolverError::Certificate(_) | SolverError::InvalidCertificate) => 2,
            CliError::Solver(_) => 3,
            CliError::Degree(DegreeError::DimensionTooLarge { .. }) => 1,
            CliError::Degree(DegreeError::Solver(SolverError::InvalidCertificate)) => 2,
            CliError::Degree(_) => 4,
        }
    }
}

/// What a command produced: the JSON report, files for the output
/// directory, the exit code and, for nonzero codes, a diagnostic.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub report: String,
    pub files: Vec<(String, String)>,
    pub exit_code: i32,
    pub message: Option<String>,
}

#[derive(Serialize)]
struct CertifyReport<'a> {
    command: &'static str,
    config: &'a RunConfig,
    valid: bool,
    certificate: &'a ExistenceCertificate,
}

#[derive(Serialize)]
struct SolveOutput<'a> {
    command: &'static str,
    config: &'a RunConfig,
    certificate: &'a ExistenceCertificate,
    solve: &'a SolveReport,
    solution_file: &'static str,
}

#[derive(Serialize)]
struct SteadyOutput<'a> {
    command: &'static str,
    config: &'a RunConfig,
    certificate: &'a ExistenceCertificate,
    solve: &'a SolveReport,
    /// `u(k)` as `[re, im]`.
    profile: Vec<[f64; 2]>,
    solution_file: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CsvLayout {
    #[serde(rename = "t,k,re,im")]
    Field,
    #[serde(rename = "k,re,im")]
    Profile,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeResidual {
    pub t: usize,
    pub k: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub command: &'static str,
    pub layout: CsvLayout,
    pub nodes: usize,
    pub max_residual: f64,
    pub mean_residual: f64,
    pub worst: NodeResidual,
    pub tolerance: f64,
    pub ok: bool,
}

#[derive(Serialize)]
struct DegreeOutput<'a> {
    command: &'static str,
    config: &'a RunConfig,
    certificate: &'a ExistenceCertificate,
    s_map: &'a DegreeReport,
    q_map: &'a DegreeReport,
    estimates_agree: bool,
    status: &'static str,
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

/// `t,k,re,im`, row-major, 17 significant digits.
pub fn field_csv(phi: &LatticeField) -> String {
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record(["t", "k", "re", "im"])
        .expect("in-memory write");
    for t in 0..phi.t_period() {
        for k in 0..phi.k_period() {
            let z = phi.as_slice()[phi.index(t as i64, k as i64)];
            w.write_record([t.to_string(), k.to_string(), fmt(z.re), fmt(z.im)])
                .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii")
}

/// `k,re,im` for a steady profile.
pub fn profile_csv(profile: &[Complex64]) -> String {
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record(["k", "re", "im"]).expect("in-memory write");
    for (k, z) in profile.iter().enumerate() {
        w.write_record([k.to_string(), fmt(z.re), fmt(z.im)])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii")
}

/// Parses either CSV layout into a field on the config lattice. A `k,re,im`
/// profile is repeated over all `T` time slices.
pub fn read_solution(
    text: &str,
    t_period: usize,
    k_period: usize,
) -> Result<(CsvLayout, LatticeField), CliError> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = r
        .headers()
        .map_err(|e| CliError::Input(format!("cannot read CSV header: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    let layout = match headers
        .iter()
        .map(String::as_str)
        .collect::<Vec<_>>()
        .as_slice()
    {
        ["t", "k", "re", "im"] => CsvLayout::Field,
        ["k", "re", "im"] => CsvLayout::Profile,
        _ => {
            return Err(CliError::Input(format!(
                "unexpected CSV header `{}`; expected `t,k,re,im` or `k,re,im`",
                headers.join(",")
            )))
        }
    };
    let rows_t = if layout == CsvLayout::Field {
        t_period
    } else {
        1
    };
    let mut values: Vec<Option<Complex64>> = vec![None; rows_t * k_period];
    for (line, record) in r.records().enumerate() {
        let record = record.map_err(|e| CliError::Input(format!("CSV row {}: {e}", line + 1)))?;
        let num = |i: usize| -> Result<&str, CliError> {
            record.get(i).ok_or_else(|| {
                CliError::Input(format!("CSV row {}: missing column {}", line + 1, i + 1))
            })
        };
        let index = |s: &str, name: &str, limit: usize| -> Result<usize, CliError> {
            let v: usize = s
                .parse()
                .map_err(|_| CliError::Input(format!("CSV row {}: bad {name} `{s}`", line + 1)))?;
            if v >= limit {
                return Err(CliError::Input(format!(
                    "dimension mismatch: CSV row {} has {name} = {v}, lattice has {limit}",
                    line + 1
                )));
            }
            Ok(v)
        };
        let real = |s: &str| -> Result<f64, CliError> {
            s.parse()
                .map_err(|_| CliError::Input(format!("CSV row {}: bad number `{s}`", line + 1)))
        };
        let offset = if layout == CsvLayout::Field { 1 } else { 0 };
        let t = if layout == CsvLayout::Field {
            index(num(0)?, "t", t_period)?
        } else {
            0
        };
        let k = index(num(offset)?, "k", k_period)?;
        let z = Complex64::new(real(num(offset + 1)?)?, real(num(offset + 2)?)?);
        let slot = &mut values[t * k_period + k];
        if slot.is_some() {
            return Err(CliError::Input(format!(
                "CSV row {}: node ({t}, {k}) appears twice",
                line + 1
            )));
        }
        *slot = Some(z);
    }
    let missing = values.iter().filter(|v| v.is_none()).count();
    if missing > 0 {
        return Err(CliError::Input(format!(
            "dimension mismatch: {missing} of {} nodes missing from the CSV",
            values.len()
        )));
    }
    let values: Vec<Complex64> = values.into_iter().flatten().collect();
    let field = match layout {
        CsvLayout::Field => LatticeField::from_flat(t_period, k_period, values),
        CsvLayout::Profile => lift_profile(&values, t_period),
    };
    Ok((layout, field))
}

fn certificate(
    config: &RunConfig,
    params: &LatticeParams,
    g: &Potential,
) -> Result<(ShiftedOperator, ExistenceCertificate), CliError> {
    let op = ShiftedOperator::build(params, config.shift_factor)?;
    let cert = certify_and_verify(&op, g, config.slack, config.samples, config.seed)?;
    Ok((op, cert))
}

fn invalid_certificate(cert: &ExistenceCertificate) -> String {
    match &cert.evidence {
        Some(e) if e.count == 0 => "certificate not valid: no boundary samples".into(),
        Some(e) => format!(
            "certificate not valid: boundary min gap {} is not positive",
            e.min_gap
        ),
        None => "certificate not valid: no boundary evidence".into(),
    }
}

pub fn cmd_certify(config: &RunConfig) -> Result<Outcome, CliError> {
    let params = config.params()?;
    let g = config.potential()?;
    let (_, cert) = certificate(config, &params, &g)?;
    let valid = cert.is_valid();
    Ok(Outcome {
        report: to_json(&CertifyReport {
            command: "certify",
            config,
            valid,
            certificate: &cert,
        }),
        files: vec![],
        exit_code: if valid { 0 } else { 2 },
        message: (!valid).then(|| invalid_certificate(&cert)),
    })
}

fn solver_message(rep: &SolveReport) -> Option<String> {
    (!rep.converged()).then(|| {
        format!(
            "solver did not converge: status {:?}, residual {:e}",
            rep.status, rep.residual_direct
        )
    })
}

pub fn cmd_solve(config: &RunConfig) -> Result<Outcome, CliError> {
    let params = config.params()?;
    let g = config.potential()?;
    let (op, cert) = certificate(config, &params, &g)?;
    if !cert.is_valid() {
        return Err(CliError::Solver(SolverError::InvalidCertificate));
    }
    let cfg = config.pipeline();
    let rep = solve(&op, &g, &cert, cfg.n_starts, cfg.seed, &cfg.solver)?;
    Ok(Outcome {
        report: to_json(&SolveOutput {
            command: "solve",
            config,
            certificate: &cert,
            solve: &rep,
            solution_file: SOLUTION_FILE,
        }),
        files: vec![(SOLUTION_FILE.into(), field_csv(&rep.solution))],
        exit_code: if rep.converged() { 0 } else { 3 },
        message: solver_message(&rep),
    })
}

pub fn cmd_steady(config: &RunConfig) -> Result<Outcome, CliError> {
    let mut steady_config = config.clone();
    steady_config.t_period = 1;
    let params = steady_config.params()?;
    let g = steady_config.potential()?;
    if g.period() != 1 {
        return Err(invalid(
            "potential.coefficients",
            "a steady state needs a time-independent potential (one coefficient)",
        )
        .into());
    }
    let (op, cert) = certificate(&steady_config, &params, &g)?;
    if !cert.is_valid() {
        return Err(CliError::Solver(SolverError::InvalidCertificate));
    }
    let cfg = steady_config.pipeline();
    let rep = solve(&op, &g, &cert, cfg.n_starts, cfg.seed, &cfg.solver)?;
    let profile = rep.solution.as_slice().to_vec();
    Ok(Outcome {
        report: to_json(&SteadyOutput {
            command: "steady",
            config: &steady_config,
            certificate: &cert,
            solve: &rep,
            profile: profile.iter().map(|z| [z.re, z.im]).collect(),
            solution_file: STEADY_FILE,
        }),
        files: vec![(STEADY_FILE.into(), profile_csv(&profile))],
        exit_code: if rep.converged() { 0 } else { 3 },
        message: solver_message(&rep),
    })
}

/// Pointwise residual of the solution in `text`, using nothing but the config.
pub fn verify_solution(config: &RunConfig, text: &str) -> Result<VerifyReport, CliError> {
    let params = config.params()?;
    let g = config.potential()?;
    let (layout, phi) = read_solution(text, params.t_period, params.k_period)?;
    let res = residual_direct(&phi, &params, &g).map_err(|e| CliError::Input(e.to_string()))?;
    let moduli: Vec<f64> = res.as_slice().iter().map(|z| z.norm()).collect();
    let (worst_index, max_residual) =
        moduli
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, r)| {
                // NaN ranks worst
                if r.is_nan() || (!best.1.is_nan() && r > best.1) {
                    (i, r)
                } else {
                    best
                }
            });
    let mean_residual = moduli.iter().sum::<f64>() / moduli.len() as f64;
    Ok(VerifyReport {
        command: "verify",
        layout,
        nodes: moduli.len(),
        max_residual,
        mean_residual,
        worst: NodeResidual {
            t: worst_index / params.k_period,
            k: worst_index % params.k_period,
            residual: max_residual,
        },
        tolerance: config.tolerance,
        ok: max_residual <= config.tolerance,
    })
}

pub fn cmd_verify(config: &RunConfig, solution: &Path) -> Result<Outcome, CliError> {
    let text = fs::read_to_string(solution)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", solution.display())))?;
    let rep = verify_solution(config, &text)?;
    let message = (!rep.ok).then(|| {
        format!(
            "max node residual {:e} at (t, k) = ({}, {}) exceeds tolerance {:e}",
            rep.max_residual, rep.worst.t, rep.worst.k, rep.tolerance
        )
    });
    Ok(Outcome {
        report: to_json(&rep),
        files: vec![],
        exit_code: if rep.ok { 0 } else { 3 },
        message,
    })
}

pub fn cmd_degree(config: &RunConfig) -> Result<Outcome, CliError> {
    let params = config.params()?;
    let dim = 2 * params.nodes();
    if dim > MAX_REAL_DIM {
        return Err(DegreeError::DimensionTooLarge {
            dim,
            max: MAX_REAL_DIM,
        }
        .into());
    }
    let g = config.potential()?;
    let (op, cert) = certificate(config, &params, &g)?;
    if !cert.is_valid() {
        return Err(CliError::Solver(SolverError::InvalidCertificate));
    }
    let opts = config.pipeline().solver;
    let s_map = estimate_degree(
        DegreeTarget::SMap,
        &op,
        &g,
        &cert,
        config.n_starts,
        config.seed,
        &opts,
    )?;
    let q_map = estimate_degree(
        DegreeTarget::QMap,
        &op,
        &g,
        &cert,
        config.n_starts,
        config.seed,
        &opts,
    )?;
    let agree = s_map.degree_estimate == q_map.degree_estimate;
    let ok = agree && s_map.parity_ok && q_map.parity_ok;
    Ok(Outcome {
        report: to_json(&DegreeOutput {
            command: "degree",
            config,
            certificate: &cert,
            s_map: &s_map,
            q_map: &q_map,
            estimates_agree: agree,
            status: if ok { "ok" } else { INCOMPLETE_ENUMERATION },
        }),
        files: vec![],
        exit_code: if ok { 0 } else { 4 },
        message: (!ok).then(|| {
            format!(
                "{INCOMPLETE_ENUMERATION}: deg S = {}, deg Q = {}",
                s_map.degree_estimate, q_map.degree_estimate
            )
        }),
    })
}

fn load(args: &CommonArgs) -> Result<RunConfig, CliError> {
    let mut config = RunConfig::from_path(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    Ok(config)
}

/// Runs a parsed command line without touching the file system beyond
/// reading inputs.
pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Certify(a) => cmd_certify(&load(a)?),
        Command::Solve(a) => cmd_solve(&load(a)?),
        Command::Steady(a) => cmd_steady(&load(a)?),
        Command::Verify { common, solution } => cmd_verify(&load(common)?, solution),
        Command::Degree(a) => cmd_degree(&load(a)?),
    }
}

fn common(cli: &Cli) -> &CommonArgs {
    match &cli.command {
        Command::Certify(a) | Command::Solve(a) | Command::Steady(a) | Command::Degree(a) => a,
        Command::Verify { common, .. } => common,
    }
}

/// Writes `report.json` (only with `--out`) and the command's CSV files
/// (into `--out`, else the working directory).
pub fn write_outputs(cli: &Cli, outcome: &Outcome) -> Result<(), CliError> {
    let out = common(cli).out.clone();
    let dir = out.clone().unwrap_or_else(|| PathBuf::from("."));
    let write = |name: &str, content: &str| {
        let path = dir.join(name);
        fs::create_dir_all(&dir)
            .and_then(|_| fs::write(&path, content))
            .map_err(|source| CliError::Write {
                path: path.display().to_string(),
                source,
            })
    };
    if out.is_some() {
        write(REPORT_FILE, &outcome.report)?;
    }
    for (name, content) in &outcome.files {
        write(name, content)?;
    }
    Ok(())
}

/// The whole program; returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    match execute(cli) {
        Ok(outcome) => {
            print!("{}", outcome.report);
            if let Err(e) = write_outputs(cli, &outcome) {
                eprintln!("error: {e}");
                return e.exit_code();
            }
            if let Some(msg) = &outcome.message {
                eprintln!("{msg}");
            }
            outcome.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{"T": 4, "K": 4, "beta": 1, "epsilon": 1, "gamma": 1,
        "potential": {"kind": "power_law", "coefficients": [[1, 0]], "exponent": 2}}"#;

    fn field_of(err: ConfigError) -> String {
        match err {
            ConfigError::Parse { field, .. } | ConfigError::Invalid { field, .. } => field,
            ConfigError::Read { .. } => panic!("unexpected read error"),
        }
    }

    #[test]
    fn defaults_apply() {
        let c = RunConfig::from_json(BASE).unwrap();
        assert_eq!(c.shift_factor, 1.5);
        assert_eq!(c.slack, 0.1);
        assert_eq!(c.tolerance, 1e-10);
        assert_eq!(c.max_iter, 100);
        assert_eq!(c.samples, 10_000);
        assert_eq!(c.n_starts, 32);
        assert_eq!(c.seed, 0);
    }

    #[test]
    fn diagnostics_name_the_field() {
        let cases = [
            (BASE.replace("\"beta\": 1", "\"beta\": \"x\""), "beta"),
            (BASE.replace("\"K\": 4", "\"K\": 1"), "K"),
            (BASE.replace("\"T\": 4", "\"T\": 0"), "T"),
            (BASE.replace("\"epsilon\": 1", "\"epsilon\": 0"), "epsilon"),
            (
                BASE.replace("\"gamma\": 1,", "\"gamma\": 1, \"colour\": 3,"),
                "colour",
            ),
            (BASE.replace("power_law", "quartic"), "potential.kind"),
            (BASE.replace(", \"exponent\": 2", ""), "potential.exponent"),
            (
                BASE.replace("\"exponent\": 2", "\"exponent\": -1"),
                "potential.exponent",
            ),
            (BASE.replace("[[1, 0]]", "[]"), "potential.coefficients"),
            (
                BASE.replace("[[1, 0]]", "[[1, 0], [1, 0], [1, 0]]"),
                "potential.coefficients",
            ),
            (BASE.replace("}}", "}, \"slack\": 1.5}"), "slack"),
            (
                BASE.replace("}}", "}, \"shift_factor\": 0.9}"),
                "shift_factor",
            ),
        ];
        for (text, field) in cases {
            let err = RunConfig::from_json(&text).unwrap_err();
            let msg = err.to_string();
            assert!(field_of(err).contains(field), "{field}: {msg}");
            assert!(msg.contains(field), "{msg}");
        }
        let missing = RunConfig::from_json(r#"{"T": 4, "K": 4}"#).unwrap_err();
        assert!(missing.to_string().contains("beta"), "{missing}");
    }

    #[test]
    fn cubic_power_law_reaches_the_certificate() {
        let c = RunConfig::from_json(&BASE.replace("\"exponent\": 2", "\"exponent\": 3")).unwrap();
        let err = cmd_certify(&c).unwrap_err();
        assert!(matches!(
            err,
            CliError::Certificate(CertificateError::NoThresholdFound { .. })
        ));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn csv_round_trip_is_lossless() {
        let phi = LatticeField::from_fn(2, 3, |t, k| {
            Complex64::new(
                0.1 * t as f64 + 1.0 / 3.0,
                -(k as f64).sqrt() * std::f64::consts::PI,
            )
        });
        let text = field_csv(&phi);
        assert!(text.starts_with("t,k,re,im\n0,0,"));
        let (layout, back) = read_solution(&text, 2, 3).unwrap();
        assert_eq!(layout, CsvLayout::Field);
        assert_eq!(back, phi);

        let profile = vec![Complex64::new(2.0, 0.0), Complex64::new(-1e-300, 7.5)];
        let text = profile_csv(&profile);
        assert_eq!(text.lines().next(), Some("k,re,im"));
        let (layout, lifted) = read_solution(&text, 3, 2).unwrap();
        assert_eq!(layout, CsvLayout::Profile);
        assert_eq!(lifted, lift_profile(&profile, 3));
    }

    #[test]
    fn csv_shape_errors() {
        let phi = LatticeField::zeros(2, 2);
        let text = field_csv(&phi);
        assert!(
            matches!(read_solution(&text, 2, 3), Err(CliError::Input(m)) if m.contains("missing"))
        );
        assert!(
            matches!(read_solution(&text, 1, 2), Err(CliError::Input(m)) if m.contains("mismatch"))
        );
        let dup = format!("{text}0,0,1,1\n");
        assert!(
            matches!(read_solution(&dup, 2, 2), Err(CliError::Input(m)) if m.contains("twice"))
        );
        assert!(read_solution("a,b\n", 2, 2).is_err());
    }
}
