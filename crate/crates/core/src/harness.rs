//! Problem sources, τ×k sweeps with oracle cross-checks, and CSV emission.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use rayon::prelude::*;

use crate::bounds::{self, BoundParams, Family, NormInputs, StepBound};
use crate::error::{OneShotError, Result};
use crate::problem::{self, RealInverseProblem, ScalarProblem};
use crate::scalar;
use crate::solvers::{self, ConvergenceTrace, MethodKind, MethodSpec, SolverConfig, Status};
use crate::spectral;

/// Cells with `|ρ - 1|` below this are flagged rather than compared.
pub const NEAR_THRESHOLD_BAND: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSource {
    File(PathBuf),
    Scalar { b: f64, h: f64, m: f64 },
    Random { n_u: usize, n_sigma: usize, n_f: usize, norm: f64 },
    Helmholtz { grid_n: usize, wavenumber: f64, delta: f64 },
}

/// A problem together with the synthetic experiment around it.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub problem: RealInverseProblem,
    pub sigma_ex: DVector<f64>,
    pub sigma0: DVector<f64>,
    pub data: DVector<f64>,
    pub scalar: Option<ScalarProblem>,
}

impl Experiment {
    /// `σ_ex = 1`, `σ0 = 1.2`, `f = Hu(σ_ex)` unless overridden.
    pub fn new(problem: RealInverseProblem, sigma_ex: Option<DVector<f64>>, data: Option<DVector<f64>>) -> Result<Self> {
        let n_s = problem.n_sigma();
        let sigma_ex = sigma_ex.unwrap_or_else(|| DVector::from_element(n_s, 1.0));
        if sigma_ex.len() != n_s {
            return Err(OneShotError::Dimension("sigma_ex length differs from n_sigma".into()));
        }
        let data = match data {
            Some(d) => d,
            None => problem.measure(&sigma_ex)?,
        };
        let sigma0 = &sigma_ex * 1.2;
        Ok(Self { problem, sigma_ex, sigma0, data, scalar: None })
    }
}

pub fn load_experiment(source: &ProblemSource, seed: u64) -> Result<Experiment> {
    match source {
        ProblemSource::File(path) => {
            let file = problem::load_problem_file(path)?;
            let p = file.to_problem()?;
            Experiment::new(p, file.sigma_ex.map(DVector::from_vec), file.data.map(DVector::from_vec))
        }
        ProblemSource::Scalar { b, h, m } => {
            let sp = ScalarProblem::new(*b, *h, *m)?;
            let mut e = Experiment::new(sp.to_problem(), None, None)?;
            e.scalar = Some(sp);
            Ok(e)
        }
        ProblemSource::Random { n_u, n_sigma, n_f, norm } => {
            Experiment::new(problem::random_contraction(*n_u, *n_sigma, *n_f, *norm, seed)?, None, None)
        }
        ProblemSource::Helmholtz { grid_n, wavenumber, delta } => {
            Experiment::new(problem::helmholtz_toy(*grid_n, *wavenumber, *delta, seed)?.problem, None, None)
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub taus: Vec<f64>,
    pub ks: Vec<u32>,
    pub methods: Vec<MethodKind>,
    pub max_outer: usize,
    /// Start one-shot kinds from the exact state and adjoint at `σ0`.
    pub exact_init: bool,
    pub line_search_first: bool,
    /// Compute the predicted step bound of each method.
    pub bounds: bool,
}

impl SweepConfig {
    pub fn new(taus: Vec<f64>, ks: Vec<u32>, methods: Vec<MethodKind>) -> Self {
        Self { taus, ks, methods, max_outer: 2000, exact_init: false, line_search_first: false, bounds: true }
    }

    fn check(&self) -> Result<()> {
        if self.taus.is_empty() || self.ks.is_empty() || self.methods.is_empty() {
            return Err(OneShotError::InvalidArgument("sweep lists must be non-empty".into()));
        }
        if self.taus.iter().any(|t| !(*t > 0.0)) || self.ks.contains(&0) {
            return Err(OneShotError::InvalidArgument("tau must be > 0 and k >= 1".into()));
        }
        Ok(())
    }

    /// Method instances in sweep order; GD kinds appear once regardless of `ks`.
    pub fn method_specs(&self) -> Vec<MethodSpec> {
        let mut out = Vec::new();
        for &kind in &self.methods {
            if kind.is_gd() {
                out.push(MethodSpec { kind, k: 1 });
            } else {
                out.extend(self.ks.iter().map(|&k| MethodSpec { kind, k }));
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct SweepCell {
    pub method: MethodSpec,
    /// Configured step.
    pub tau: f64,
    /// Step actually used (differs only with the first-step line search).
    pub tau_used: f64,
    pub trace: Option<ConvergenceTrace>,
    pub error: Option<String>,
    pub rho: f64,
    pub bound: Option<StepBound>,
}

impl SweepCell {
    pub fn oracle_converges(&self) -> bool {
        self.rho < 1.0 - spectral::CONVERGENCE_MARGIN
    }

    pub fn near_threshold(&self) -> bool {
        (self.rho - 1.0).abs() < NEAR_THRESHOLD_BAND
    }

    /// Converged/diverged as observed; at the iteration cap, judged by whether the
    /// cost fell between the midpoint and the end of the run.
    pub fn empirical_converges(&self) -> Option<bool> {
        let t = self.trace.as_ref()?;
        Some(match t.status {
            Status::Converged => true,
            Status::Diverged => false,
            Status::MaxIter => {
                let rel = t.relative_costs();
                let last = *rel.last()?;
                last < rel[rel.len() / 2] && last.is_finite()
            }
        })
    }

    /// `None` for failed or near-threshold cells.
    pub fn agrees_with_oracle(&self) -> Option<bool> {
        if self.near_threshold() {
            return None;
        }
        Some(self.empirical_converges()? == self.oracle_converges())
    }

    pub fn status_str(&self) -> &'static str {
        self.trace.as_ref().map_or("error", |t| t.status.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub cells: Vec<SweepCell>,
}

fn fmt_f(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

impl SweepResult {
    /// `method,k,tau,status,outer_iters,final_cost,rho`.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("method,k,tau,status,outer_iters,final_cost,rho\n");
        for c in &self.cells {
            let (iters, cost) = c.trace.as_ref().map_or((0, f64::NAN), |t| (t.outer_iterations(), t.final_cost()));
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                c.method.kind,
                c.method.k,
                fmt_f(c.tau),
                c.status_str(),
                iters,
                fmt_f(cost),
                fmt_f(c.rho)
            );
        }
        out
    }

    /// `method,k,bound,formula_id`, one row per method instance.
    pub fn bounds_csv(&self) -> String {
        let mut out = String::from("method,k,bound,formula_id\n");
        let mut seen = Vec::new();
        for c in &self.cells {
            if seen.contains(&c.method) {
                continue;
            }
            seen.push(c.method);
            if let Some(b) = &c.bound {
                let _ = writeln!(out, "{},{},{},{}", c.method.kind, c.method.k, fmt_f(b.value), b.formula_id);
            }
        }
        out
    }

    pub fn trace_file_name(cell: &SweepCell) -> String {
        format!("trace_{}_k{}_tau{:.6e}.csv", cell.method.kind, cell.method.k, cell.tau)
    }

    /// Per-cell traces, then `summary.csv` and `bounds.csv`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for c in &self.cells {
            if let Some(t) = &c.trace {
                std::fs::write(dir.join(Self::trace_file_name(c)), t.to_csv())?;
            }
        }
        std::fs::write(dir.join("summary.csv"), self.summary_csv())?;
        std::fs::write(dir.join("bounds.csv"), self.bounds_csv())?;
        Ok(())
    }
}

fn solver_config(exp: &Experiment, tau: f64, max_outer: usize) -> SolverConfig {
    let mut cfg = SolverConfig::new(tau);
    cfg.max_outer = max_outer;
    cfg.sigma_ex = Some(exp.sigma_ex.clone());
    cfg
}

/// One solver run with the sweep's initialization conventions.
pub fn run_cell(exp: &Experiment, method: MethodSpec, tau: f64, max_outer: usize, exact_init: bool, line_search_first: bool) -> Result<(f64, ConvergenceTrace)> {
    let tau_used = if line_search_first { solvers::line_search_tau(&exp.problem, &exp.data, &exp.sigma0, tau)? } else { tau };
    let cfg = solver_config(exp, tau_used, max_outer);
    let (u0, p0) = if exact_init && !method.kind.is_gd() {
        (Some(exp.problem.exact_state(&exp.sigma0)?), Some(exp.problem.exact_adjoint(&exp.sigma0, &exp.data)?))
    } else {
        (None, None)
    };
    let trace = solvers::solve(&exp.problem, &exp.data, method, &exp.sigma0, u0.as_ref(), p0.as_ref(), &cfg)?;
    Ok((tau_used, trace))
}


/// Default-parameter bounds per method, sharing the `k`-dependent norms across families.
fn predicted_bounds(exp: &Experiment, specs: &[MethodSpec]) -> Vec<Option<StepBound>> {
    let mut ks: Vec<u32> = specs.iter().filter(|m| !m.kind.is_gd()).map(|m| m.k).collect();
    ks.sort_unstable();
    ks.dedup();
    let inputs: Vec<(u32, Option<NormInputs>)> =
        ks.par_iter().map(|&k| (k, bounds::bound_inputs(&exp.problem, k).ok())).collect();
    specs
        .par_iter()
        .map(|&m| {
            let params = BoundParams::default_for(Family::of(m.kind), m.k);
            let norms = if m.kind.is_gd() {
                NormInputs::default()
            } else {
                inputs.iter().find(|(k, _)| *k == m.k)?.1?
            };
            bounds::matrix_bound_from(&exp.problem, m, params, &norms).ok()
        })
        .collect()
}

/// Evaluate every `(method, k, τ)` cell concurrently; output order follows the config.
pub fn run_sweep(exp: &Experiment, config: &SweepConfig) -> Result<SweepResult> {
    config.check()?;
    let specs = config.method_specs();
    let bounds = if config.bounds { predicted_bounds(exp, &specs) } else { vec![None; specs.len()] };
    let jobs: Vec<(usize, MethodSpec, f64)> =
        specs.iter().enumerate().flat_map(|(i, &m)| config.taus.iter().map(move |&t| (i, m, t))).collect();
    let cells = jobs
        .par_iter()
        .map(|&(i, method, tau)| {
            let run = run_cell(exp, method, tau, config.max_outer, config.exact_init, config.line_search_first);
            let (tau_used, trace, error) = match run {
                Ok((tu, t)) => (tu, Some(t), None),
                Err(e) => (tau, None, Some(e.to_string())),
            };
            let rho = spectral::build_iteration_matrix(&exp.problem, method, tau_used)
                .map(|a| spectral::spectral_radius(&a.matrix))
                .unwrap_or(f64::NAN);
            SweepCell { method, tau, tau_used, trace, error, rho, bound: bounds[i].clone() }
        })
        .collect();
    Ok(SweepResult { cells })
}

/// Largest gap between two traces' relative costs over their common length.
pub fn trace_deviation(a: &ConvergenceTrace, b: &ConvergenceTrace) -> f64 {
    a.relative_costs().iter().zip(b.relative_costs()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionRow {
    pub b: f64,
    pub k: u32,
    pub method: MethodKind,
    pub threshold: f64,
    pub branch: String,
}

/// Exact scalar thresholds (`h = m = 1`) for all four methods on a b-grid.
pub fn scalar_region(ks: &[u32], b_grid: &[f64]) -> Result<Vec<RegionRow>> {
    if let Some(b) = b_grid.iter().find(|b| !(b.abs() < 1.0)) {
        return Err(OneShotError::InvalidArgument(format!("b grid must lie in (-1,1), got {b}")));
    }
    let mut rows = Vec::new();
    for &b in b_grid {
        let sp = ScalarProblem::new(b, 1.0, 1.0)?;
        for &k in ks {
            for kind in [MethodKind::UsualGd, MethodKind::ShiftedGd, MethodKind::KStep, MethodKind::ShiftedKStep] {
                let t = scalar::exact_threshold(MethodSpec { kind, k }, &sp)?;
                rows.push(RegionRow { b, k, method: kind, threshold: t.value, branch: t.branch });
            }
        }
    }
    Ok(rows)
}

/// `b,k,method,threshold,branch`.
pub fn region_csv(rows: &[RegionRow]) -> String {
    let mut out = String::from("b,k,method,threshold,branch\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{},{}", fmt_f(r.b), r.k, r.method, fmt_f(r.threshold), r.branch);
    }
    out
}

/// `n` equispaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}
