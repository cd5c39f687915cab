use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use oneshot::bounds::{self, BoundParams, Family};
use oneshot::harness::{self, Experiment, ProblemSource, SweepConfig};
use oneshot::problem;
use oneshot::scalar;
use oneshot::solvers::{MethodKind, MethodSpec};
use oneshot::{OneShotError, Result};

#[derive(Parser)]
#[command(name = "oneshot", version, about = "Multi-step one-shot inversion toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate the problem assumptions (exit 0 if valid, 1 if not, 2 on parse errors).
    Check {
        #[command(flatten)]
        source: SourceArgs,
    },
    /// Print a descent-step bound as JSON.
    Bound {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, default_value = "kshot")]
        method: MethodKind,
        #[arg(long, default_value_t = 1)]
        k: u32,
        #[arg(long)]
        theta0: Option<f64>,
        #[arg(long)]
        delta0: Option<f64>,
    },
    /// Run one solver and write its trace CSV.
    Solve {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, default_value = "kshot")]
        method: MethodKind,
        #[arg(long, default_value_t = 1)]
        k: u32,
        #[arg(long)]
        tau: f64,
        #[command(flatten)]
        run: RunArgs,
        /// Trace CSV path; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep over methods, k and tau; writes traces, summary.csv and bounds.csv.
    Sweep {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, value_delimiter = ',', default_value = "gd,sgd,kshot,skshot")]
        method: Vec<MethodKind>,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        k: Vec<u32>,
        #[arg(long, value_delimiter = ',', required = true)]
        tau: Vec<f64>,
        #[command(flatten)]
        run: RunArgs,
        /// Skip the predicted step bounds (bounds.csv stays header-only).
        #[arg(long)]
        no_bounds: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Exact scalar thresholds over a b-grid as CSV.
    ScalarRegion {
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6")]
        k: Vec<u32>,
        #[arg(long, default_value_t = -0.95, allow_hyphen_values = true)]
        b_min: f64,
        #[arg(long, default_value_t = 0.95, allow_hyphen_values = true)]
        b_max: f64,
        #[arg(long, default_value_t = 39)]
        b_points: usize,
        /// Restrict rows to these methods.
        #[arg(long, value_delimiter = ',')]
        method: Vec<MethodKind>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a generated problem as JSON.
    Export {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct SourceArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct InputArgs {
    /// JSON problem file.
    #[arg(long)]
    problem: Option<PathBuf>,
    /// Scalar problem `b,h,m`.
    #[arg(long, value_delimiter = ',', num_args = 1, allow_hyphen_values = true)]
    scalar: Option<Vec<f64>>,
    /// Random contraction `n_u,n_sigma,n_f,norm`.
    #[arg(long, value_delimiter = ',', num_args = 1)]
    random: Option<Vec<f64>>,
    /// Helmholtz toy `grid,wavenumber,delta`.
    #[arg(long, value_delimiter = ',', num_args = 1)]
    helmholtz: Option<Vec<f64>>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value_t = 2000)]
    max_outer: usize,
    /// Start one-shot methods from the exact state and adjoint.
    #[arg(long)]
    exact_init: bool,
    /// Pick tau by Armijo backtracking at the first iteration.
    #[arg(long)]
    line_search_first: bool,
}

fn triple(v: &[f64], what: &str) -> Result<(f64, f64, f64)> {
    match v {
        [a, b, c] => Ok((*a, *b, *c)),
        _ => Err(OneShotError::InvalidArgument(format!("{what} expects 3 comma-separated values"))),
    }
}

fn as_count(x: f64, what: &str) -> Result<usize> {
    if x >= 1.0 && x.fract() == 0.0 {
        Ok(x as usize)
    } else {
        Err(OneShotError::InvalidArgument(format!("{what} must be a positive integer, got {x}")))
    }
}

impl SourceArgs {
    fn source(&self) -> Result<ProblemSource> {
        self.input.source()
    }

    fn experiment(&self) -> Result<Experiment> {
        harness::load_experiment(&self.source()?, self.seed)
    }
}

impl InputArgs {
    fn source(&self) -> Result<ProblemSource> {
        if let Some(p) = &self.problem {
            return Ok(ProblemSource::File(p.clone()));
        }
        if let Some(v) = &self.scalar {
            let (b, h, m) = triple(v, "--scalar")?;
            return Ok(ProblemSource::Scalar { b, h, m });
        }
        if let Some(v) = &self.random {
            let [nu, ns, nf, norm] = v[..] else {
                return Err(OneShotError::InvalidArgument("--random expects n_u,n_sigma,n_f,norm".into()));
            };
            return Ok(ProblemSource::Random {
                n_u: as_count(nu, "n_u")?,
                n_sigma: as_count(ns, "n_sigma")?,
                n_f: as_count(nf, "n_f")?,
                norm,
            });
        }
        let v = self.helmholtz.as_deref().unwrap_or_default();
        let (g, wavenumber, delta) = triple(v, "--helmholtz")?;
        Ok(ProblemSource::Helmholtz { grid_n: as_count(g, "grid")?, wavenumber, delta })
    }
}

fn to_json(v: &impl serde::Serialize) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)?)
}

fn cmd_check(source: &SourceArgs) -> Result<ExitCode> {
    let report = match source.source()? {
        ProblemSource::File(path) => {
            let file = problem::load_problem_file(&path)?;
            match file.to_complex()? {
                Some(cp) => problem::validate_complex(&cp, problem::DEFAULT_EPS_RHO, problem::DEFAULT_EPS_INJ),
                None => problem::validate_default(&file.to_problem()?),
            }
        }
        _ => problem::validate_default(&source.experiment()?.problem),
    };
    println!("{}", to_json(&report)?);
    Ok(if report.is_valid { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn cmd_bound(source: &SourceArgs, kind: MethodKind, k: u32, theta0: Option<f64>, delta0: Option<f64>) -> Result<()> {
    let method = MethodSpec::new(kind, k)?;
    let exp = source.experiment()?;
    let bound = match kind {
        MethodKind::UsualGd => bounds::gd_bound(&exp.problem)?,
        MethodKind::ShiftedGd => bounds::shifted_gd_bound(&exp.problem)?,
        _ => {
            let defaults = BoundParams::default_for(Family::of(kind), method.k);
            let params = BoundParams {
                theta0: theta0.unwrap_or(defaults.theta0),
                delta0: delta0.unwrap_or(defaults.delta0),
            };
            bounds::matrix_bound(&exp.problem, method, params)?
        }
    };
    let mut out = serde_json::to_value(&bound)?;
    if let (Some(sp), Value::Object(map)) = (exp.scalar, &mut out) {
        map.insert("exact".into(), serde_json::to_value(scalar::exact_threshold(method, &sp)?)?);
    }
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn cmd_solve(source: &SourceArgs, kind: MethodKind, k: u32, tau: f64, run: &RunArgs, out: Option<&PathBuf>) -> Result<()> {
    if !(tau > 0.0) {
        return Err(OneShotError::InvalidArgument("tau must be > 0".into()));
    }
    let method = MethodSpec::new(kind, k)?;
    let exp = source.experiment()?;
    let (tau_used, trace) = harness::run_cell(&exp, method, tau, run.max_outer, run.exact_init, run.line_search_first)?;
    let csv = trace.to_csv();
    match out {
        Some(path) => std::fs::write(path, csv)?,
        None => print!("{csv}"),
    }
    eprintln!(
        "{}",
        json!({
            "method": kind.cli_name(),
            "k": method.k,
            "tau": tau_used,
            "status": trace.status.as_str(),
            "outer_iters": trace.outer_iterations(),
            "final_cost": trace.final_cost(),
        })
    );
    Ok(())
}

fn cmd_sweep(source: &SourceArgs, config: SweepConfig, out: &Path) -> Result<()> {
    let exp = source.experiment()?;
    let result = harness::run_sweep(&exp, &config)?;
    result.write(out)?;
    for c in &result.cells {
        if let Some(e) = &c.error {
            eprintln!("cell {} k={} tau={}: {e}", c.method.kind, c.method.k, c.tau);
        }
        if c.near_threshold() {
            eprintln!("cell {} k={} tau={}: near threshold (rho={:.6})", c.method.kind, c.method.k, c.tau, c.rho);
        } else if c.agrees_with_oracle() == Some(false) {
            eprintln!("cell {} k={} tau={}: disagrees with oracle (rho={:.6})", c.method.kind, c.method.k, c.tau, c.rho);
        }
    }
    print!("{}", result.summary_csv());
    Ok(())
}

fn cmd_scalar_region(ks: &[u32], b_min: f64, b_max: f64, b_points: usize, methods: &[MethodKind], out: Option<&PathBuf>) -> Result<()> {
    let grid = harness::linspace(b_min, b_max, b_points);
    let mut rows = harness::scalar_region(ks, &grid)?;
    if !methods.is_empty() {
        rows.retain(|r| methods.contains(&r.method));
    }
    let csv = harness::region_csv(&rows);
    match out {
        Some(path) => std::fs::write(path, csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Check { source } => return cmd_check(&source),
        Command::Bound { source, method, k, theta0, delta0 } => cmd_bound(&source, method, k, theta0, delta0)?,
        Command::Solve { source, method, k, tau, run, out } => cmd_solve(&source, method, k, tau, &run, out.as_ref())?,
        Command::Sweep { source, method, k, tau, run, no_bounds, out } => {
            let mut config = SweepConfig::new(tau, k, method);
            config.max_outer = run.max_outer;
            config.exact_init = run.exact_init;
            config.line_search_first = run.line_search_first;
            config.bounds = !no_bounds;
            cmd_sweep(&source, config, &out)?
        }
        Command::ScalarRegion { k, b_min, b_max, b_points, method, out } => {
            cmd_scalar_region(&k, b_min, b_max, b_points, &method, out.as_ref())?
        }
        Command::Export { source, out } => {
            let exp = source.experiment()?;
            let mut file = problem::ProblemFile::from_problem(&exp.problem);
            file.sigma_ex = Some(exp.sigma_ex.as_slice().to_vec());
            file.data = Some(exp.data.as_slice().to_vec());
            std::fs::write(out, to_json(&file)?)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                OneShotError::Parse(_) | OneShotError::Io(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
