//! Command-line front end.
//!
//! Exit codes: 0 pass or feasible, 1 usage or parse error, 2 verification
//! failure, 3 infeasible, 4 coverage gap.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::feasibility::{ks_colorable, lp_feasible, ColoringCertificate, FeasibilityProblem, LpCertificate, RaySet};
use crate::ontic::{is_outcome_deterministic, OntologicalModel};
use crate::quantum::{random_completion, random_ket, Ket, ProjectiveContext};
use crate::rng;
use crate::verify::{run_report, CheckId, SuiteConfig};
use crate::zoo::{ZooModel, ZooSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VERIFY_FAIL: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_COVERAGE_GAP: i32 = 4;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "ONTOSCOPE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "ontoscope", version, about = "Build, verify and probe discrete ontological models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a zoo model and write its table snapshot.
    Zoo(ZooArgs),
    /// Run verifier checks on a model file.
    Verify(VerifyArgs),
    /// Decide colorability of a ray set or feasibility of a linear problem.
    #[command(subcommand)]
    Feasibility(FeasibilityCommand),
}

#[derive(Debug, Args)]
pub struct ZooArgs {
    /// bb, ks_qubit or bell.
    #[arg(long)]
    pub model: String,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// Interval cells (bell).
    #[arg(long, default_value_t = 10_000)]
    pub grid: usize,
    /// Sphere lattice points (ks_qubit).
    #[arg(long, default_value_t = 100_000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// JSON list of kets.
    #[arg(long)]
    pub states: Option<PathBuf>,
    /// JSON list of contexts.
    #[arg(long)]
    pub contexts: Option<PathBuf>,
    /// Haar-random states added to the snapshot.
    #[arg(long, default_value_t = 0)]
    pub random_states: usize,
    /// Register this many contexts sharing the first canonical ray: the
    /// canonical basis plus random completions.
    #[arg(long, default_value_t = 0)]
    pub family: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Model JSON written by `zoo`.
    #[arg(long)]
    pub model: PathBuf,
    /// Comma-separated check ids, or `all`.
    #[arg(long, default_value = "all", value_delimiter = ',')]
    pub checks: Vec<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub born_tol: Option<f64>,
    #[arg(long)]
    pub context_tol: Option<f64>,
    /// Report path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum FeasibilityCommand {
    /// Search for a noncontextual 0/1 assignment.
    Color {
        #[arg(long)]
        rays: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve a linear feasibility problem exactly.
    Lp {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    configure_threads();
    match execute(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        // A global pool may already exist when called twice in one process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

pub fn execute(command: &Command) -> Result<i32> {
    match command {
        Command::Zoo(a) => cmd_zoo(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Feasibility(FeasibilityCommand::Color { rays, out }) => cmd_color(rays, out.as_deref()),
        Command::Feasibility(FeasibilityCommand::Lp { problem, out }) => cmd_lp(problem, out.as_deref()),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::InvalidSpec(format!("{}: {e}", path.display())))
}

fn check_output(path: &Path) -> Result<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() && !p.is_dir() => {
            Err(Error::InvalidSpec(format!("output directory {} does not exist", p.display())))
        }
        _ => Ok(()),
    }
}

fn check_input(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::InvalidSpec(format!("input {} is not a file", path.display())))
    }
}

fn emit(out: Option<&Path>, body: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, body)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(body.as_bytes())?;
            stdout.write_all(b"\n")?;
        }
    }
    Ok(())
}

fn cmd_zoo(a: &ZooArgs) -> Result<i32> {
    for p in a.states.iter().chain(&a.contexts) {
        check_input(p)?;
    }
    check_output(&a.out)?;
    let model: ZooModel = a.model.parse()?;
    let spec = ZooSpec {
        model,
        dim: if model == ZooModel::KsQubit { 2 } else { a.dim },
        sphere_points: a.n,
        grid: a.grid,
        seed: a.seed,
    };
    spec.validate()?;
    let mut states: Vec<Ket> = match &a.states {
        Some(p) => serde_json::from_str(&read(p)?)?,
        None => Vec::new(),
    };
    let mut contexts: Vec<ProjectiveContext> = match &a.contexts {
        Some(p) => serde_json::from_str(&read(p)?)?,
        None => Vec::new(),
    };
    if a.family > 0 {
        let mut r = rng::stream(a.seed, rng::streams::CONTEXTS);
        let first = Ket::basis(spec.dim, 0);
        contexts.push(ProjectiveContext::canonical(spec.dim));
        for k in 1..a.family {
            contexts.push(random_completion(format!("family-{k}"), std::slice::from_ref(&first), spec.dim, &mut r)?);
        }
    }
    let mut r = rng::stream(a.seed, rng::streams::STATES);
    for _ in 0..a.random_states {
        states.push(random_ket(spec.dim, &mut r)?);
    }
    if model == ZooModel::Bb && states.is_empty() {
        return Err(Error::InvalidSpec("bb needs --states or --random-states".into()));
    }
    let built = spec.build(&states, &contexts)?;
    let snapshot = built.snapshot(&states, &[])?;
    fs::write(&a.out, snapshot.to_json()?)?;
    println!("{}", zoo_summary(&snapshot));
    Ok(EXIT_OK)
}

fn zoo_summary(m: &OntologicalModel) -> String {
    let det = is_outcome_deterministic(m, crate::verify::DETERMINISM_TOL).deterministic;
    format!(
        "{}: {} ontic points, {} contexts, {} states, deterministic={}, lambda_sufficient={}",
        m.name(),
        m.ontic().len(),
        m.contexts().len(),
        m.states().len(),
        det,
        !m.has_state_dependent_responses()
    )
}

fn cmd_verify(a: &VerifyArgs) -> Result<i32> {
    check_input(&a.model)?;
    if let Some(o) = &a.out {
        check_output(o)?;
    }
    let checks = CheckId::parse_list(&a.checks)?;
    let model = OntologicalModel::from_json(&read(&a.model)?)?;
    let config = SuiteConfig {
        checks,
        seed: a.seed,
        born_tolerance: a.born_tol,
        context_tolerance: a.context_tol,
        ..SuiteConfig::default()
    };
    let report = run_report(&model, &config)?;
    emit(a.out.as_deref(), &serde_json::to_string(&report)?)?;
    for v in &report.checks {
        eprintln!("{:<20} {:?} max_defect={:e}", v.id.as_str(), v.status, v.max_defect);
    }
    Ok(report.exit_code())
}

#[derive(Serialize)]
struct CertificateFile<'a, C: Serialize> {
    certificate: &'a C,
}

fn cmd_color(rays: &Path, out: Option<&Path>) -> Result<i32> {
    check_input(rays)?;
    if let Some(o) = out {
        check_output(o)?;
    }
    let set = RaySet::from_json(&read(rays)?)?;
    let cert = ks_colorable(&set);
    emit(out, &serde_json::to_string(&CertificateFile { certificate: &cert })?)?;
    Ok(match cert {
        ColoringCertificate::Assignment { .. } => EXIT_OK,
        ColoringCertificate::Exhaustion { .. } => EXIT_INFEASIBLE,
    })
}

fn cmd_lp(problem: &Path, out: Option<&Path>) -> Result<i32> {
    check_input(problem)?;
    if let Some(o) = out {
        check_output(o)?;
    }
    let p = FeasibilityProblem::from_json(&read(problem)?)?;
    let cert = lp_feasible(&p)?;
    emit(out, &serde_json::to_string(&CertificateFile { certificate: &cert })?)?;
    Ok(match cert {
        LpCertificate::Solution { .. } => EXIT_OK,
        LpCertificate::Infeasible { .. } => EXIT_INFEASIBLE,
    })
}
