//! The four inversion iterations as recurrences on `(σ, u, p)`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, Dyn, LU};
use serde::{Deserialize, Serialize};

use crate::error::{OneShotError, Result};
use crate::problem::RealInverseProblem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MethodKind {
    UsualGd,
    ShiftedGd,
    KStep,
    ShiftedKStep,
}

impl MethodKind {
    pub fn is_gd(self) -> bool {
        matches!(self, MethodKind::UsualGd | MethodKind::ShiftedGd)
    }

    pub fn is_shifted(self) -> bool {
        matches!(self, MethodKind::ShiftedGd | MethodKind::ShiftedKStep)
    }

    pub fn cli_name(self) -> &'static str {
        match self {
            MethodKind::UsualGd => "gd",
            MethodKind::ShiftedGd => "sgd",
            MethodKind::KStep => "kshot",
            MethodKind::ShiftedKStep => "skshot",
        }
    }
}

impl fmt::Display for MethodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.cli_name())
    }
}

impl FromStr for MethodKind {
    type Err = OneShotError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gd" => Ok(MethodKind::UsualGd),
            "sgd" => Ok(MethodKind::ShiftedGd),
            "kshot" => Ok(MethodKind::KStep),
            "skshot" => Ok(MethodKind::ShiftedKStep),
            other => Err(OneShotError::InvalidArgument(format!("unknown method {other:?} (gd, sgd, kshot, skshot)"))),
        }
    }
}

/// A method and its inner-iteration count; `k` is ignored by the GD kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MethodSpec {
    pub kind: MethodKind,
    pub k: u32,
}

impl MethodSpec {
    pub fn new(kind: MethodKind, k: u32) -> Result<Self> {
        if k == 0 {
            return Err(OneShotError::InvalidArgument("k must be >= 1".into()));
        }
        Ok(Self { kind, k: if kind.is_gd() { 1 } else { k } })
    }

    pub fn usual_gd() -> Self {
        Self { kind: MethodKind::UsualGd, k: 1 }
    }
    pub fn shifted_gd() -> Self {
        Self { kind: MethodKind::ShiftedGd, k: 1 }
    }
    pub fn k_step(k: u32) -> Self {
        Self { kind: MethodKind::KStep, k }
    }
    pub fn shifted_k_step(k: u32) -> Self {
        Self { kind: MethodKind::ShiftedKStep, k }
    }

    /// Inner iterations charged per outer step.
    pub fn inner_per_outer(&self) -> u64 {
        if self.kind.is_gd() {
            1
        } else {
            self.k as u64
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub tau: f64,
    pub max_outer: usize,
    pub tol_cost: f64,
    pub tol_grad: f64,
    pub divergence_threshold: f64,
    /// Reference parameter for the error column.
    pub sigma_ex: Option<DVector<f64>>,
}

impl SolverConfig {
    pub fn new(tau: f64) -> Self {
        Self { tau, max_outer: 2000, tol_cost: 1e-5, tol_grad: 1e-5, divergence_threshold: 1e12, sigma_ex: None }
    }

    fn check(&self) -> Result<()> {
        if !(self.tau > 0.0) || !(self.tol_cost > 0.0) || !(self.tol_grad > 0.0) {
            return Err(OneShotError::InvalidArgument("tau and tolerances must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Converged,
    MaxIter,
    Diverged,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::MaxIter => "maxiter",
            Status::Diverged => "diverged",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Iterate {
    pub sigma: DVector<f64>,
    pub state: DVector<f64>,
    pub adjoint: DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct TraceRecord {
    pub n: usize,
    pub accumulated_inner: u64,
    pub sigma: DVector<f64>,
    pub cost: f64,
    pub grad_norm: f64,
    pub err_sigma: f64,
}

#[derive(Debug, Clone)]
pub struct ConvergenceTrace {
    pub method: MethodSpec,
    pub tau: f64,
    pub records: Vec<TraceRecord>,
    pub status: Status,
}

impl ConvergenceTrace {
    pub fn outer_iterations(&self) -> usize {
        self.records.last().map_or(0, |r| r.n)
    }

    pub fn final_cost(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.cost)
    }

    pub fn final_sigma(&self) -> &DVector<f64> {
        &self.records.last().expect("traces hold at least one record").sigma
    }

    /// Cost relative to the first record.
    pub fn relative_costs(&self) -> Vec<f64> {
        let c0 = self.records.first().map_or(1.0, |r| r.cost);
        self.records.iter().map(|r| if c0 > 0.0 { r.cost / c0 } else { r.cost }).collect()
    }

    /// CSV with header `n,accumulated_inner,cost,grad_norm,err_sigma,status`.
    /// Intermediate rows carry `running`; the last carries the final status.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,accumulated_inner,cost,grad_norm,err_sigma,status\n");
        let last = self.records.len().saturating_sub(1);
        for (i, r) in self.records.iter().enumerate() {
            let status = if i == last { self.status.as_str() } else { "running" };
            out.push_str(&format!(
                "{},{},{:.16e},{:.16e},{:.16e},{}\n",
                r.n, r.accumulated_inner, r.cost, r.grad_norm, r.err_sigma, status
            ));
        }
        out
    }
}

/// Factorizations of `I - B` and `I - B^*`, reused across every direct solve.
#[derive(Debug, Clone)]
pub struct DirectSolver {
    lu: LU<f64, Dyn, Dyn>,
    lu_t: LU<f64, Dyn, Dyn>,
}

impl DirectSolver {
    pub fn new(problem: &RealInverseProblem) -> Result<Self> {
        let a = DMatrix::identity(problem.n_u(), problem.n_u()) - problem.b();
        let lu = a.clone().lu();
        if !lu.is_invertible() {
            return Err(OneShotError::Singular("I - B".into()));
        }
        Ok(Self { lu, lu_t: a.transpose().lu() })
    }

    pub fn state(&self, problem: &RealInverseProblem, sigma: &DVector<f64>) -> DVector<f64> {
        self.lu.solve(&(problem.m() * sigma + problem.f_src())).expect("factorization checked invertible")
    }

    pub fn adjoint_from_state(&self, problem: &RealInverseProblem, u: &DVector<f64>, data: &DVector<f64>) -> DVector<f64> {
        let rhs = problem.h().tr_mul(&(problem.h() * u - data));
        self.lu_t.solve(&rhs).expect("factorization checked invertible")
    }

    /// `(J(σ), ‖∇J(σ)‖)`.
    pub fn cost_and_grad(&self, problem: &RealInverseProblem, sigma: &DVector<f64>, data: &DVector<f64>) -> (f64, f64) {
        let u = self.state(problem, sigma);
        let cost = 0.5 * (problem.h() * &u - data).norm_squared();
        let p = self.adjoint_from_state(problem, &u, data);
        (cost, problem.m().tr_mul(&p).norm())
    }
}

/// Starting iterate: GD kinds solve directly at `σ0`; one-shot kinds take
/// `(u0, p0)` or zeros.
pub fn initial_iterate(
    problem: &RealInverseProblem,
    data: &DVector<f64>,
    method: MethodSpec,
    sigma0: &DVector<f64>,
    u0: Option<&DVector<f64>>,
    p0: Option<&DVector<f64>>,
    direct: &DirectSolver,
) -> Iterate {
    let n_u = problem.n_u();
    if method.kind.is_gd() {
        let u = direct.state(problem, sigma0);
        let p = direct.adjoint_from_state(problem, &u, data);
        return Iterate { sigma: sigma0.clone(), state: u, adjoint: p };
    }
    Iterate {
        sigma: sigma0.clone(),
        state: u0.cloned().unwrap_or_else(|| DVector::zeros(n_u)),
        adjoint: p0.cloned().unwrap_or_else(|| DVector::zeros(n_u)),
    }
}

/// One outer step of `method`.
pub fn advance(
    problem: &RealInverseProblem,
    data: &DVector<f64>,
    method: MethodSpec,
    tau: f64,
    it: &Iterate,
    direct: &DirectSolver,
) -> Iterate {
    let sigma_next = &it.sigma - problem.m().tr_mul(&it.adjoint) * tau;
    match method.kind {
        MethodKind::UsualGd => {
            let u = direct.state(problem, &sigma_next);
            let p = direct.adjoint_from_state(problem, &u, data);
            Iterate { sigma: sigma_next, state: u, adjoint: p }
        }
        MethodKind::ShiftedGd => {
            let u = direct.state(problem, &it.sigma);
            let p = direct.adjoint_from_state(problem, &u, data);
            Iterate { sigma: sigma_next, state: u, adjoint: p }
        }
        MethodKind::KStep | MethodKind::ShiftedKStep => {
            let sigma_inner = if method.kind == MethodKind::KStep { &sigma_next } else { &it.sigma };
            let source = problem.m() * sigma_inner + problem.f_src();
            let mut u = it.state.clone();
            let mut p = it.adjoint.clone();
            for _ in 0..method.k {
                let u_next = problem.b() * &u + &source;
                p = problem.b().tr_mul(&p) + problem.h().tr_mul(&(problem.h() * &u - data));
                u = u_next;
            }
            Iterate { sigma: sigma_next, state: u, adjoint: p }
        }
    }
}

fn accumulated_inner(n: usize, method: MethodSpec) -> u64 {
    if n == 0 {
        0
    } else {
        1 + (n as u64 - 1) * method.inner_per_outer()
    }
}

/// Run `method` from an explicit starting iterate.
pub fn run_from(
    problem: &RealInverseProblem,
    data: &DVector<f64>,
    method: MethodSpec,
    start: Iterate,
    config: &SolverConfig,
) -> Result<ConvergenceTrace> {
    config.check()?;
    let direct = DirectSolver::new(problem)?;
    let sigma0 = start.sigma.clone();
    let err = |s: &DVector<f64>| config.sigma_ex.as_ref().map_or(f64::NAN, |ex| (s - ex).norm());
    let record = |n: usize, s: &DVector<f64>| {
        let (cost, grad_norm) = direct.cost_and_grad(problem, s, data);
        TraceRecord { n, accumulated_inner: accumulated_inner(n, method), sigma: s.clone(), cost, grad_norm, err_sigma: err(s) }
    };

    let first = record(0, &sigma0);
    let (c0, g0) = (first.cost, first.grad_norm);
    let mut records = vec![first];
    if c0 == 0.0 || g0 == 0.0 {
        return Ok(ConvergenceTrace { method, tau: config.tau, records, status: Status::Converged });
    }

    let mut it = start;
    let mut status = Status::MaxIter;
    for n in 1..=config.max_outer {
        it = advance(problem, data, method, config.tau, &it, &direct);
        let finite = it.sigma.iter().chain(it.state.iter()).chain(it.adjoint.iter()).all(|v| v.is_finite());
        if !finite || (&it.sigma - &sigma0).norm() > config.divergence_threshold {
            let mut r = record(n, &it.sigma);
            if !finite {
                r.cost = f64::INFINITY;
                r.grad_norm = f64::INFINITY;
            }
            records.push(r);
            status = Status::Diverged;
            break;
        }
        let r = record(n, &it.sigma);
        let done = r.cost / c0 < config.tol_cost && r.grad_norm / g0 < config.tol_grad;
        records.push(r);
        if done {
            status = Status::Converged;
            break;
        }
    }
    Ok(ConvergenceTrace { method, tau: config.tau, records, status })
}

/// Run `method` with the default initialization of [`initial_iterate`].
pub fn solve(
    problem: &RealInverseProblem,
    data: &DVector<f64>,
    method: MethodSpec,
    sigma0: &DVector<f64>,
    u0: Option<&DVector<f64>>,
    p0: Option<&DVector<f64>>,
    config: &SolverConfig,
) -> Result<ConvergenceTrace> {
    if sigma0.len() != problem.n_sigma() || data.len() != problem.n_f() {
        return Err(OneShotError::Dimension("sigma0 or data has the wrong length".into()));
    }
    for v in [u0, p0].into_iter().flatten() {
        if v.len() != problem.n_u() {
            return Err(OneShotError::Dimension("u0/p0 must have length n_u".into()));
        }
    }
    let direct = DirectSolver::new(problem)?;
    let start = initial_iterate(problem, data, method, sigma0, u0, p0, &direct);
    run_from(problem, data, method, start, config)
}

pub fn usual_gd(problem: &RealInverseProblem, f: &DVector<f64>, sigma0: &DVector<f64>, config: &SolverConfig) -> Result<ConvergenceTrace> {
    solve(problem, f, MethodSpec::usual_gd(), sigma0, None, None, config)
}

pub fn shifted_gd(problem: &RealInverseProblem, f: &DVector<f64>, sigma0: &DVector<f64>, config: &SolverConfig) -> Result<ConvergenceTrace> {
    solve(problem, f, MethodSpec::shifted_gd(), sigma0, None, None, config)
}

pub fn k_step_one_shot(
    problem: &RealInverseProblem,
    f: &DVector<f64>,
    sigma0: &DVector<f64>,
    u0: Option<&DVector<f64>>,
    p0: Option<&DVector<f64>>,
    k: u32,
    config: &SolverConfig,
) -> Result<ConvergenceTrace> {
    solve(problem, f, MethodSpec::new(MethodKind::KStep, k)?, sigma0, u0, p0, config)
}

pub fn shifted_k_step_one_shot(
    problem: &RealInverseProblem,
    f: &DVector<f64>,
    sigma0: &DVector<f64>,
    u0: Option<&DVector<f64>>,
    p0: Option<&DVector<f64>>,
    k: u32,
    config: &SolverConfig,
) -> Result<ConvergenceTrace> {
    solve(problem, f, MethodSpec::new(MethodKind::ShiftedKStep, k)?, sigma0, u0, p0, config)
}

/// Backtracking (factor ½, Armijo constant 1e-4) on the exact cost from `σ0`,
/// starting at `tau0`. Returns the accepted step.
pub fn line_search_tau(problem: &RealInverseProblem, data: &DVector<f64>, sigma0: &DVector<f64>, tau0: f64) -> Result<f64> {
    let direct = DirectSolver::new(problem)?;
    let u = direct.state(problem, sigma0);
    let j0 = 0.5 * (problem.h() * &u - data).norm_squared();
    let grad = problem.m().tr_mul(&direct.adjoint_from_state(problem, &u, data));
    let g2 = grad.norm_squared();
    let mut tau = tau0;
    for _ in 0..60 {
        let trial = sigma0 - &grad * tau;
        let (j, _) = direct.cost_and_grad(problem, &trial, data);
        if j <= j0 - 1e-4 * tau * g2 {
            return Ok(tau);
        }
        tau *= 0.5;
    }
    Ok(tau)
}
