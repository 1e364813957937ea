//! Command-line front end: argument and config-file parsing, run
//! orchestration and artifact output.
//!
//! Settings come from built-in defaults, then an optional flat `key = value`
//! file (`--config`), then flags. Exit codes: 0 success, 1 other failure,
//! 2 non-convergence, 3 hypothesis violation, 64 usage.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

use crate::analysis::{self, AnalysisError, NodalReport, DEFAULT_NODAL_THRESHOLD};
use crate::coxeter::{CoxeterError, CoxeterGroup, NamedGroup};
use crate::field::{self, Field, GridSpec, GroupAction, Resample};
use crate::functionals::{Choquard, FunctionalState, Nonlinearity};
use crate::riesz::RieszKernel;
use crate::solver::{self, SolveReport, SolverConfig, SolverError};

pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_NO_CONVERGENCE: i32 = 2;
pub const EXIT_HYPOTHESES: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{0}")]
    Hypotheses(String),
    #[error("{0}")]
    NoConvergence(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Hypotheses(_) => EXIT_HYPOTHESES,
            CliError::NoConvergence(_) => EXIT_NO_CONVERGENCE,
            CliError::Failed(_) => EXIT_FAILURE,
        }
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        let msg = e.to_string();
        match e {
            SolverError::NoDescent { .. } | SolverError::SymmetryDrift(_) => CliError::NoConvergence(msg),
            SolverError::Hypotheses(_) | SolverError::NotEven => CliError::Hypotheses(msg),
            SolverError::Config(_) | SolverError::SeparationViolation { .. } | SolverError::BumpLeavesDomain { .. } => {
                CliError::Usage(msg)
            }
            _ => CliError::Failed(msg),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Solver(s) => s.into(),
            other => CliError::Failed(other.to_string()),
        }
    }
}

impl From<CoxeterError> for CliError {
    fn from(e: CoxeterError) -> Self {
        match e {
            CoxeterError::Parse(_) => CliError::Usage(e.to_string()),
            other => CliError::Failed(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Failed(e.to_string())
    }
}

impl From<field::FieldError> for CliError {
    fn from(e: field::FieldError) -> Self {
        CliError::Failed(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "choquard", version, about = "Ground states and Coxeter-symmetric saddles of the Choquard equation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print order, generators, chamber normals and sign table of a group as JSON.
    Coxeter {
        /// Group tag: trivial, A1, I2:m, A1xA1, A1xI2:m, A3, B3, H3, A1xA1xA1.
        group: String,
    },
    /// Solve for a ground state (trivial group) or a G-saddle.
    Solve(SolveArgs),
    /// Solve several groups and check the energy inequalities among them.
    Hierarchy(HierarchyArgs),
    /// Recompute the residuals of a stored field.
    Verify(VerifyArgs),
    /// Convert a stored field to CSV.
    Convert(ConvertArgs),
}

/// Problem and solver settings shared by the solving subcommands.
#[derive(Debug, Clone, Default, Args)]
pub struct ProblemArgs {
    /// Flat `key = value` file; flags take precedence over its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Nonlinearity, e.g. `power:p=2` or `sum:c1=1,p1=2;c2=0.5,p2=3`.
    #[arg(long)]
    pub nl: Option<String>,
    /// Grid points per axis (power of two).
    #[arg(long = "M")]
    pub m: Option<usize>,
    /// Half width of the cube.
    #[arg(long = "L")]
    pub l: Option<f64>,
    /// Resampling for non-permutation group elements: spectral or multilinear.
    #[arg(long)]
    pub resample: Option<String>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long)]
    pub grad_tol: Option<f64>,
    #[arg(long)]
    pub pohozaev_tol: Option<f64>,
    #[arg(long)]
    pub rescale_every: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub separation: Option<f64>,
    #[arg(long)]
    pub radius: Option<f64>,
    /// Run even if the hypotheses on F fail.
    #[arg(long)]
    pub override_hypotheses: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long)]
    pub group: Option<String>,
    /// Output directory for `field.chqf`, `radial.csv`, `report.json` and `run.cfg`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct HierarchyArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Comma-separated group tags, e.g. `trivial,A1,I2:2`.
    #[arg(long)]
    pub groups: Option<String>,
    /// Output directory for `hierarchy.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Field file in the CHQF format.
    pub field: PathBuf,
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Group whose symmetry residual is reported.
    #[arg(long)]
    pub group: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct ConvertArgs {
    /// Field file in the CHQF format.
    pub field: PathBuf,
    /// Write the radial profile (`r, |u|, sign`) instead of every cell.
    #[arg(long)]
    pub radial: bool,
    /// Destination file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Fully resolved settings of a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub dim: usize,
    pub alpha: f64,
    pub nl: String,
    pub group: String,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "L")]
    pub l: f64,
    pub resample: String,
    pub solver: SolverConfig,
}

const KEYS: &[&str] = &[
    "dim",
    "alpha",
    "nl",
    "group",
    "groups",
    "M",
    "L",
    "resample",
    "max_iters",
    "step",
    "grad_tol",
    "pohozaev_tol",
    "rescale_every",
    "seed",
    "restarts",
    "max_halvings",
    "polish_below",
    "symmetry_drift_tol",
    "separation",
    "radius",
    "override_hypotheses",
];

/// Parses a flat config: one `key = value` per line, `#` starts a comment.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", n + 1)))?;
        let k = k.trim().replace('-', "_");
        if !KEYS.contains(&k.as_str()) {
            return Err(CliError::Usage(format!("config line {}: unknown key `{k}`", n + 1)));
        }
        out.insert(k, v.trim().to_string());
    }
    Ok(out)
}

impl ProblemArgs {
    /// Config-file entries overridden by the flags that were given.
    fn settings(&self) -> Result<BTreeMap<String, String>, CliError> {
        let mut s = match &self.config {
            Some(p) => {
                let text = fs::read_to_string(p)
                    .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", p.display())))?;
                parse_config(&text)?
            }
            None => BTreeMap::new(),
        };
        let mut set = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                s.insert(k.to_string(), v);
            }
        };
        set("dim", self.dim.map(|v| v.to_string()));
        set("alpha", self.alpha.map(|v| v.to_string()));
        set("nl", self.nl.clone());
        set("M", self.m.map(|v| v.to_string()));
        set("L", self.l.map(|v| v.to_string()));
        set("resample", self.resample.clone());
        set("max_iters", self.max_iters.map(|v| v.to_string()));
        set("step", self.step.map(|v| v.to_string()));
        set("grad_tol", self.grad_tol.map(|v| v.to_string()));
        set("pohozaev_tol", self.pohozaev_tol.map(|v| v.to_string()));
        set("rescale_every", self.rescale_every.map(|v| v.to_string()));
        set("seed", self.seed.map(|v| v.to_string()));
        set("restarts", self.restarts.map(|v| v.to_string()));
        set("separation", self.separation.map(|v| v.to_string()));
        set("radius", self.radius.map(|v| v.to_string()));
        if self.override_hypotheses {
            set("override_hypotheses", Some("true".into()));
        }
        Ok(s)
    }
}

fn get<T: std::str::FromStr>(s: &BTreeMap<String, String>, key: &str) -> Result<Option<T>, CliError> {
    s.get(key)
        .map(|v| v.parse::<T>().map_err(|_| CliError::Usage(format!("invalid value `{v}` for {key}"))))
        .transpose()
}

fn require<T: std::str::FromStr>(s: &BTreeMap<String, String>, key: &str) -> Result<T, CliError> {
    get(s, key)?.ok_or_else(|| CliError::Usage(format!("missing required setting --{key}")))
}

impl RunConfig {
    /// Resolves settings; `dim` and `alpha` are required, the rest default
    /// to the reference configuration.
    pub fn from_settings(s: &BTreeMap<String, String>) -> Result<Self, CliError> {
        let d = SolverConfig::default();
        let solver = SolverConfig {
            max_iters: get(s, "max_iters")?.unwrap_or(d.max_iters),
            step: get(s, "step")?.unwrap_or(d.step),
            grad_tol: get(s, "grad_tol")?.unwrap_or(d.grad_tol),
            pohozaev_tol: get(s, "pohozaev_tol")?.unwrap_or(d.pohozaev_tol),
            rescale_every: get(s, "rescale_every")?.unwrap_or(d.rescale_every),
            seed: get(s, "seed")?.unwrap_or(d.seed),
            restarts: get(s, "restarts")?.unwrap_or(d.restarts),
            max_halvings: get(s, "max_halvings")?.unwrap_or(d.max_halvings),
            polish_below: get(s, "polish_below")?.unwrap_or(d.polish_below),
            symmetry_drift_tol: get(s, "symmetry_drift_tol")?.unwrap_or(d.symmetry_drift_tol),
            separation: get(s, "separation")?,
            radius: get(s, "radius")?,
            override_hypotheses: get(s, "override_hypotheses")?.unwrap_or(false),
        };
        let cfg = Self {
            dim: require(s, "dim")?,
            alpha: require(s, "alpha")?,
            nl: s.get("nl").cloned().unwrap_or_else(|| "power:p=2".into()),
            group: s.get("group").cloned().unwrap_or_else(|| "trivial".into()),
            m: get(s, "M")?.unwrap_or(64),
            l: get(s, "L")?.unwrap_or(12.0),
            resample: s.get("resample").cloned().unwrap_or_else(|| "spectral".into()),
            solver,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(2..=3).contains(&self.dim) {
            return Err(CliError::Usage(format!("dim must be 2 or 3, got {}", self.dim)));
        }
        if !(self.alpha > 0.0 && self.alpha < self.dim as f64) {
            return Err(CliError::Usage(format!("alpha must lie in (0, {}), got {}", self.dim, self.alpha)));
        }
        self.grid()?;
        self.nonlinearity()?;
        self.resample_mode()?;
        self.solver.validate()?;
        Ok(())
    }

    pub fn grid(&self) -> Result<GridSpec, CliError> {
        GridSpec::new(self.dim, self.m, self.l).map_err(|e| CliError::Usage(e.to_string()))
    }

    pub fn nonlinearity(&self) -> Result<Nonlinearity, CliError> {
        self.nl.parse().map_err(|e: crate::functionals::FunctionalError| CliError::Usage(e.to_string()))
    }

    pub fn resample_mode(&self) -> Result<Resample, CliError> {
        match self.resample.as_str() {
            "spectral" => Ok(Resample::Spectral),
            "multilinear" => Ok(Resample::Multilinear),
            other => Err(CliError::Usage(format!("unknown resample mode `{other}`"))),
        }
    }

    pub fn problem(&self) -> Result<Choquard, CliError> {
        let kernel = RieszKernel::cached(self.grid()?, self.alpha).map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(Choquard::new(self.nonlinearity()?, kernel))
    }

    pub fn action(&self, tag: &str) -> Result<GroupAction, CliError> {
        let group = parse_group(tag, self.dim)?;
        GroupAction::with_resample(group, self.dim, self.resample_mode()?).map_err(|e| CliError::Usage(e.to_string()))
    }

    /// The settings as a config file that reproduces the run.
    pub fn to_config_string(&self) -> String {
        let s = &self.solver;
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("dim", self.dim.to_string());
        kv("alpha", self.alpha.to_string());
        kv("nl", self.nl.clone());
        kv("group", self.group.clone());
        kv("M", self.m.to_string());
        kv("L", self.l.to_string());
        kv("resample", self.resample.clone());
        kv("max_iters", s.max_iters.to_string());
        kv("step", s.step.to_string());
        kv("grad_tol", s.grad_tol.to_string());
        kv("pohozaev_tol", s.pohozaev_tol.to_string());
        kv("rescale_every", s.rescale_every.to_string());
        kv("seed", s.seed.to_string());
        kv("restarts", s.restarts.to_string());
        kv("max_halvings", s.max_halvings.to_string());
        kv("polish_below", s.polish_below.to_string());
        kv("symmetry_drift_tol", s.symmetry_drift_tol.to_string());
        if let Some(v) = s.separation {
            kv("separation", v.to_string());
        }
        if let Some(v) = s.radius {
            kv("radius", v.to_string());
        }
        kv("override_hypotheses", s.override_hypotheses.to_string());
        out
    }
}

/// Parses a group tag and checks that its rank fits in `dim`.
pub fn parse_group(tag: &str, dim: usize) -> Result<CoxeterGroup, CliError> {
    let named: NamedGroup = tag.parse()?;
    if named.rank() > dim {
        return Err(CliError::Usage(format!("group {named} has rank {} > dim {dim}", named.rank())));
    }
    Ok(named.build()?)
}

fn create_dir(out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(|e| CliError::Failed(format!("cannot create {}: {e}", out.display())))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Failed(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

/// Radial shell width used for CSV profiles.
fn shell_width(g: &GridSpec) -> f64 {
    g.spacing()
}

pub fn cmd_coxeter(tag: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    let named: NamedGroup = tag.parse()?;
    let info = named.build()?.info();
    let text = serde_json::to_string_pretty(&info).map_err(|e| CliError::Failed(e.to_string()))?;
    writeln!(stdout, "{text}")?;
    Ok(())
}

/// Runs a solve, writes the artifacts and returns the report.
pub fn cmd_solve(args: &SolveArgs, stdout: &mut dyn Write) -> Result<SolveReport, CliError> {
    let mut settings = args.problem.settings()?;
    if let Some(g) = &args.group {
        settings.insert("group".into(), g.clone());
    }
    let cfg = RunConfig::from_settings(&settings)?;
    let problem = cfg.problem()?;
    let action = cfg.action(&cfg.group)?;
    let sol = if action.order() == 1 {
        let mut sol = solver::solve_ground(&problem, &cfg.solver)?;
        sol.group_tag = action.group().tag().to_string();
        sol
    } else {
        let ground = solver::solve_ground(&problem, &cfg.solver)?;
        solver::solve_saddle(&action, &problem, &cfg.solver, Some(&ground.field))?
    };
    let report = SolveReport::new(&sol, &problem);
    let out = args.out.clone().unwrap_or_else(|| PathBuf::from("."));
    create_dir(&out)?;
    field::write_field(BufWriter::new(File::create(out.join("field.chqf"))?), &sol.field)?;
    let rows = field::radial_profile(&sol.field, shell_width(sol.field.grid()));
    field::write_radial_csv(BufWriter::new(File::create(out.join("radial.csv"))?), &rows)?;
    write_json(&out.join("report.json"), &report)?;
    fs::write(out.join("run.cfg"), cfg.to_config_string())?;
    let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Failed(e.to_string()))?;
    writeln!(stdout, "{text}")?;
    Ok(report)
}

/// Runs the hierarchy and returns the report; the caller maps failed
/// inequalities to the exit code.
pub fn cmd_hierarchy(args: &HierarchyArgs, stdout: &mut dyn Write) -> Result<analysis::HierarchyReport, CliError> {
    let mut settings = args.problem.settings()?;
    if let Some(g) = &args.groups {
        settings.insert("groups".into(), g.clone());
    }
    let list = settings.remove("groups").ok_or_else(|| CliError::Usage("missing required setting --groups".into()))?;
    let cfg = RunConfig::from_settings(&settings)?;
    let groups = list
        .split(',')
        .map(|t| parse_group(t.trim(), cfg.dim))
        .collect::<Result<Vec<_>, _>>()?;
    if groups.is_empty() {
        return Err(CliError::Usage("empty group list".into()));
    }
    let problem = cfg.problem()?;
    let report = analysis::hierarchy_report(&groups, &problem, &cfg.solver)?;
    if let Some(out) = &args.out {
        create_dir(out)?;
        write_json(&out.join("hierarchy.json"), &report)?;
        fs::write(out.join("run.cfg"), cfg.to_config_string() + &format!("groups = {list}\n"))?;
    }
    write!(stdout, "{report}")?;
    Ok(report)
}

/// Residuals of a stored field.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub grid: GridSpec,
    pub energy: f64,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    #[serde(rename = "P_residual")]
    pub p_residual: f64,
    pub grad_residual: f64,
    pub symmetry_residual: Option<f64>,
    pub nodal: NodalReport,
    pub boundary_amplitude: f64,
    pub passed: bool,
}

pub fn verify_field(u: &Field, problem: &Choquard, action: Option<&GroupAction>, solver: &SolverConfig) -> Result<VerifyReport, CliError> {
    let state: FunctionalState = problem.evaluate(u).map_err(|e| CliError::Failed(e.to_string()))?;
    let g = problem.gradient(u).map_err(|e| CliError::Failed(e.to_string()))?;
    let norm = u.norm_l2();
    let grad_residual = if norm > 0.0 { g.norm_l2() / norm } else { f64::INFINITY };
    let symmetry_residual = action.map(|a| a.symmetry_residual(u)).transpose()?;
    let sym_tol = match action {
        Some(a) if a.is_grid_exact() => 1e-10,
        _ => solver.symmetry_drift_tol,
    };
    let p_residual = state.pohozaev_residual();
    let passed = grad_residual <= solver.grad_tol
        && p_residual <= solver.pohozaev_tol
        && symmetry_residual.is_none_or(|s| s <= sym_tol);
    Ok(VerifyReport {
        grid: *u.grid(),
        energy: state.e,
        a: state.a,
        b: state.b,
        q: state.q,
        p_residual,
        grad_residual,
        symmetry_residual,
        nodal: analysis::nodal_domains(u, DEFAULT_NODAL_THRESHOLD, action),
        boundary_amplitude: u.boundary_amplitude(),
        passed,
    })
}

pub fn cmd_verify(args: &VerifyArgs, stdout: &mut dyn Write) -> Result<VerifyReport, CliError> {
    let u = field::read_field(File::open(&args.field)?)?;
    let g = *u.grid();
    let mut settings = args.problem.settings()?;
    for (key, value) in [("dim", g.dim.to_string()), ("M", g.points_per_axis.to_string()), ("L", g.half_width.to_string())] {
        match settings.get(key) {
            Some(v) if v.parse::<f64>().ok() != value.parse::<f64>().ok() => {
                return Err(CliError::Usage(format!("{key} = {v} does not match the field ({value})")));
            }
            _ => {
                settings.insert(key.into(), value);
            }
        }
    }
    if let Some(tag) = &args.group {
        settings.insert("group".into(), tag.clone());
    }
    let cfg = RunConfig::from_settings(&settings)?;
    let problem = cfg.problem()?;
    let action = cfg.action(&cfg.group)?;
    let action = (action.order() > 1).then_some(action);
    let report = verify_field(&u, &problem, action.as_ref(), &cfg.solver)?;
    let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Failed(e.to_string()))?;
    writeln!(stdout, "{text}")?;
    Ok(report)
}

pub fn cmd_convert(args: &ConvertArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let u = field::read_field(File::open(&args.field)?)?;
    let mut sink: Box<dyn Write + '_> = match &args.out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(stdout),
    };
    if args.radial {
        field::write_radial_csv(&mut sink, &field::radial_profile(&u, shell_width(u.grid())))?;
    } else {
        field::write_field_csv(&mut sink, &u)?;
    }
    sink.flush()?;
    Ok(())
}

/// Runs the command line `args` (including the program name) and returns
/// the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(stdout, "{text}") } else { write!(stderr, "{text}") };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Coxeter { group } => cmd_coxeter(group, stdout),
        Command::Solve(a) => cmd_solve(a, stdout).map(|_| ()),
        Command::Hierarchy(a) => cmd_hierarchy(a, stdout).and_then(|r| {
            if r.all_hold() {
                Ok(())
            } else {
                Err(CliError::Failed("some hierarchy inequalities fail".into()))
            }
        }),
        Command::Verify(a) => cmd_verify(a, stdout).and_then(|r| {
            if r.passed {
                Ok(())
            } else {
                Err(CliError::NoConvergence("residuals exceed the tolerances".into()))
            }
        }),
        Command::Convert(a) => cmd_convert(a, stdout),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(std::iter::once("choquard").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn coxeter_orders() {
        let (code, out, _) = run_capture(&["coxeter", "I2:3"]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["order"], 6);
        assert_eq!(v["signs"].as_array().unwrap().len(), 6);
        let (_, out, _) = run_capture(&["coxeter", "A1"]);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["order"], 2);
    }

    #[test]
    fn coxeter_rejects_order_one_dihedral() {
        let (code, _, err) = run_capture(&["coxeter", "I2:1"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("I2:1"));
    }

    #[test]
    fn missing_alpha_is_usage_error() {
        let (code, _, err) = run_capture(&["solve", "--dim", "2", "--M", "16", "--L", "6"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("alpha"));
    }

    #[test]
    fn alpha_at_least_dim_is_rejected() {
        let (code, _, err) = run_capture(&["solve", "--dim", "2", "--alpha", "3"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("alpha must lie in (0, 2)"));
    }

    #[test]
    fn unknown_flag_and_bad_group_list() {
        assert_eq!(run_capture(&["solve", "--bogus"]).0, EXIT_USAGE);
        let (code, _, _) = run_capture(&["hierarchy", "--dim", "2", "--alpha", "1", "--groups", "A1,Z9"]);
        assert_eq!(code, EXIT_USAGE);
        let (code, _, _) = run_capture(&["hierarchy", "--dim", "2", "--alpha", "1", "--groups", "A3"]);
        assert_eq!(code, EXIT_USAGE);
    }

    #[test]
    fn hypothesis_violation_exit_code() {
        let (code, _, err) = run_capture(&["solve", "--dim", "3", "--alpha", "2", "--nl", "power:p=6", "--M", "8", "--L", "4"]);
        assert_eq!(code, EXIT_HYPOTHESES, "{err}");
    }

    #[test]
    fn config_file_with_flag_override() {
        let text = "# reference\ndim = 3\nalpha = 2\nM = 32\nmax-iters = 7\n";
        let s = parse_config(text).unwrap();
        assert_eq!(s["max_iters"], "7");
        let args = ProblemArgs { m: Some(16), ..ProblemArgs::default() };
        let mut merged = s.clone();
        merged.extend(args.settings().unwrap());
        let cfg = RunConfig::from_settings(&merged).unwrap();
        assert_eq!((cfg.dim, cfg.m, cfg.solver.max_iters), (3, 16, 7));
        let round = RunConfig::from_settings(&parse_config(&cfg.to_config_string()).unwrap()).unwrap();
        assert_eq!(round, cfg);
        assert!(matches!(parse_config("nope = 1"), Err(CliError::Usage(_))));
        assert!(matches!(parse_config("dim 3"), Err(CliError::Usage(_))));
    }
}
