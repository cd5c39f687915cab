//! Linear inverse problems `u = Bu + Mσ + F`, `f = Hu`: validation, exact solves,
//! realification of complex problems, and synthetic generators.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{OneShotError, Result};
use crate::linalg::{self, Complex64};

pub const DEFAULT_EPS_RHO: f64 = 1e-8;
pub const DEFAULT_EPS_INJ: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct RealInverseProblem {
    b: DMatrix<f64>,
    m: DMatrix<f64>,
    h: DMatrix<f64>,
    f_src: DVector<f64>,
}

impl RealInverseProblem {
    pub fn new(b: DMatrix<f64>, m: DMatrix<f64>, h: DMatrix<f64>, f_src: DVector<f64>) -> Result<Self> {
        let n_u = b.nrows();
        if n_u == 0 || m.ncols() == 0 || h.nrows() == 0 {
            return Err(OneShotError::Dimension("n_u, n_sigma and n_f must be at least 1".into()));
        }
        if !b.is_square() {
            return Err(OneShotError::Dimension(format!("B is {}x{}, not square", b.nrows(), b.ncols())));
        }
        if m.nrows() != n_u {
            return Err(OneShotError::Dimension(format!("M has {} rows, expected {n_u}", m.nrows())));
        }
        if h.ncols() != n_u {
            return Err(OneShotError::Dimension(format!("H has {} columns, expected {n_u}", h.ncols())));
        }
        if f_src.len() != n_u {
            return Err(OneShotError::Dimension(format!("F has length {}, expected {n_u}", f_src.len())));
        }
        Ok(Self { b, m, h, f_src })
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }
    pub fn m(&self) -> &DMatrix<f64> {
        &self.m
    }
    pub fn h(&self) -> &DMatrix<f64> {
        &self.h
    }
    pub fn f_src(&self) -> &DVector<f64> {
        &self.f_src
    }
    pub fn n_u(&self) -> usize {
        self.b.nrows()
    }
    pub fn n_sigma(&self) -> usize {
        self.m.ncols()
    }
    pub fn n_f(&self) -> usize {
        self.h.nrows()
    }

    /// Copy with `M` replaced; used to build degenerate controls.
    pub fn with_m(&self, m: DMatrix<f64>) -> Result<Self> {
        Self::new(self.b.clone(), m, self.h.clone(), self.f_src.clone())
    }

    /// Forward operator `G = H(I-B)^{-1}M`.
    pub fn forward_operator(&self) -> Result<DMatrix<f64>> {
        let sol = linalg::solve_matrix(&linalg::identity_minus(&self.b), &self.m)?;
        Ok(&self.h * sol)
    }

    pub fn exact_state(&self, sigma: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_sigma(sigma)?;
        let rhs = &self.m * sigma + &self.f_src;
        linalg::solve(&linalg::identity_minus(&self.b), &rhs)
    }

    /// Adjoint state `p = (I-B^*)^{-1} H^*(Hu(σ) - f)`.
    pub fn exact_adjoint(&self, sigma: &DVector<f64>, data: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_data(data)?;
        let u = self.exact_state(sigma)?;
        let rhs = self.h.tr_mul(&(&self.h * u - data));
        linalg::solve(&linalg::identity_minus(&self.b.transpose()), &rhs)
    }

    /// `J(σ) = ½‖Hu(σ) - f‖²`.
    pub fn cost(&self, sigma: &DVector<f64>, data: &DVector<f64>) -> Result<f64> {
        self.check_data(data)?;
        let u = self.exact_state(sigma)?;
        Ok(0.5 * (&self.h * u - data).norm_squared())
    }

    /// `∇J(σ) = M^* p(σ)`.
    pub fn gradient(&self, sigma: &DVector<f64>, data: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.m.tr_mul(&self.exact_adjoint(sigma, data)?))
    }

    /// Synthetic data `f = Hu(σ)`.
    pub fn measure(&self, sigma: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(&self.h * self.exact_state(sigma)?)
    }

    fn check_sigma(&self, sigma: &DVector<f64>) -> Result<()> {
        if sigma.len() != self.n_sigma() {
            return Err(OneShotError::Dimension(format!(
                "sigma has length {}, expected {}",
                sigma.len(),
                self.n_sigma()
            )));
        }
        Ok(())
    }

    fn check_data(&self, data: &DVector<f64>) -> Result<()> {
        if data.len() != self.n_f() {
            return Err(OneShotError::Dimension(format!("data has length {}, expected {}", data.len(), self.n_f())));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AssumptionReport {
    pub spectral_radius_b: f64,
    pub min_singular_value: f64,
    pub max_singular_value: f64,
    pub is_valid: bool,
    pub messages: Vec<String>,
}

/// Check `ρ(B) < 1` and injectivity of `H(I-B)^{-1}M` with relative tolerances.
pub fn validate(problem: &RealInverseProblem, eps_rho: f64, eps_inj: f64) -> AssumptionReport {
    let rho = linalg::spectral_radius(problem.b());
    let mut messages = Vec::new();
    let contractive = rho < 1.0 - eps_rho;
    if !contractive {
        messages.push(format!("spectral radius of B is {rho:.6e}, not below 1"));
    }
    let (smin, smax) = match problem.forward_operator() {
        Ok(g) => {
            let sv = linalg::singular_values(&g);
            let smax = sv.first().copied().unwrap_or(0.0);
            // A wide operator has a nontrivial kernel.
            let smin = if g.ncols() > g.nrows() { 0.0 } else { sv.last().copied().unwrap_or(0.0) };
            (smin, smax)
        }
        Err(e) => {
            messages.push(format!("I - B is singular: {e}"));
            (0.0, 0.0)
        }
    };
    let injective = smin > eps_inj * smax && smax > 0.0;
    if !injective {
        messages.push(format!("H(I-B)^-1 M is not injective: sigma_min={smin:.3e}, sigma_max={smax:.3e}"));
    }
    AssumptionReport {
        spectral_radius_b: rho,
        min_singular_value: smin,
        max_singular_value: smax,
        is_valid: contractive && injective,
        messages,
    }
}

pub fn validate_default(problem: &RealInverseProblem) -> AssumptionReport {
    validate(problem, DEFAULT_EPS_RHO, DEFAULT_EPS_INJ)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexInverseProblem {
    pub b: DMatrix<Complex64>,
    pub m: DMatrix<Complex64>,
    pub h: DMatrix<Complex64>,
    pub f_src: DVector<Complex64>,
}

impl ComplexInverseProblem {
    pub fn new(
        b: DMatrix<Complex64>,
        m: DMatrix<Complex64>,
        h: DMatrix<Complex64>,
        f_src: DVector<Complex64>,
    ) -> Result<Self> {
        let n_u = b.nrows();
        let ok = n_u >= 1
            && b.is_square()
            && m.nrows() == n_u
            && m.ncols() >= 1
            && h.ncols() == n_u
            && h.nrows() >= 1
            && f_src.len() == n_u;
        if !ok {
            return Err(OneShotError::Dimension("inconsistent complex problem shapes".into()));
        }
        Ok(Self { b, m, h, f_src })
    }
}

fn block_operator(a: &DMatrix<Complex64>) -> DMatrix<f64> {
    let (re, im) = linalg::split_complex(a);
    let (r, c) = re.shape();
    let mut out = DMatrix::zeros(2 * r, 2 * c);
    out.view_mut((0, 0), (r, c)).copy_from(&re);
    out.view_mut((0, c), (r, c)).copy_from(&(-&im));
    out.view_mut((r, 0), (r, c)).copy_from(&im);
    out.view_mut((r, c), (r, c)).copy_from(&re);
    out
}

fn stacked(a: &DMatrix<Complex64>) -> DMatrix<f64> {
    let (re, im) = linalg::split_complex(a);
    let (r, c) = re.shape();
    let mut out = DMatrix::zeros(2 * r, c);
    out.view_mut((0, 0), (r, c)).copy_from(&re);
    out.view_mut((r, 0), (r, c)).copy_from(&im);
    out
}

/// Real problem of doubled state dimension equivalent to a complex one with real parameter.
pub fn realify(problem: &ComplexInverseProblem) -> RealInverseProblem {
    let f_re = problem.f_src.map(|z| z.re);
    let f_im = problem.f_src.map(|z| z.im);
    let n = f_re.len();
    let mut f = DVector::zeros(2 * n);
    f.rows_mut(0, n).copy_from(&f_re);
    f.rows_mut(n, n).copy_from(&f_im);
    RealInverseProblem::new(block_operator(&problem.b), stacked(&problem.m), block_operator(&problem.h), f)
        .expect("realified shapes are consistent by construction")
}

/// Validity of the complex problem itself, measured on complex operators.
pub fn validate_complex(problem: &ComplexInverseProblem, eps_rho: f64, eps_inj: f64) -> AssumptionReport {
    let rho = linalg::complex_eigenvalues(&problem.b).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let n = problem.b.nrows();
    let i_minus_b = DMatrix::<Complex64>::identity(n, n) - &problem.b;
    let mut messages = Vec::new();
    let (smin, smax) = match i_minus_b.lu().solve(&problem.m) {
        Some(x) => {
            // The parameter is real, so injectivity is that of the realified operator.
            let g = &problem.h * x;
            let real_g = stacked(&g);
            let sv = linalg::singular_values(&real_g);
            let smin = if real_g.ncols() > real_g.nrows() { 0.0 } else { *sv.last().unwrap_or(&0.0) };
            (smin, sv.first().copied().unwrap_or(0.0))
        }
        None => {
            messages.push("I - B is singular".into());
            (0.0, 0.0)
        }
    };
    let is_valid = rho < 1.0 - eps_rho && smax > 0.0 && smin > eps_inj * smax;
    if !is_valid {
        messages.push(format!("rho={rho:.3e}, sigma_min={smin:.3e}"));
    }
    AssumptionReport { spectral_radius_b: rho, min_singular_value: smin, max_singular_value: smax, is_valid, messages }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalarProblem {
    pub b: f64,
    pub h: f64,
    pub m: f64,
}

impl ScalarProblem {
    pub fn new(b: f64, h: f64, m: f64) -> Result<Self> {
        if !(b.abs() < 1.0) {
            return Err(OneShotError::InvalidArgument(format!("|b| must be < 1, got {b}")));
        }
        if h == 0.0 || m == 0.0 || !h.is_finite() || !m.is_finite() {
            return Err(OneShotError::InvalidArgument("h and m must be finite and nonzero".into()));
        }
        Ok(Self { b, h, m })
    }

    pub fn to_problem(&self) -> RealInverseProblem {
        RealInverseProblem::new(
            DMatrix::from_element(1, 1, self.b),
            DMatrix::from_element(1, 1, self.m),
            DMatrix::from_element(1, 1, self.h),
            DVector::zeros(1),
        )
        .expect("1x1 shapes")
    }
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| StandardNormal.sample(rng))
}

const MAX_GENERATION_ATTEMPTS: usize = 32;

/// Dense Gaussian problem with `‖B‖₂ = target_norm` exactly. Deterministic in `seed`.
pub fn random_contraction(n_u: usize, n_sigma: usize, n_f: usize, target_norm: f64, seed: u64) -> Result<RealInverseProblem> {
    if !(0.0..1.0).contains(&target_norm) {
        return Err(OneShotError::InvalidArgument(format!("target_norm must lie in [0,1), got {target_norm}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut last = String::new();
    for _ in 0..MAX_GENERATION_ATTEMPTS {
        let p = random_with_b_norm(&mut rng, n_u, n_sigma, n_f, target_norm)?;
        let report = validate_default(&p);
        if report.is_valid {
            return Ok(p);
        }
        last = report.messages.join("; ");
    }
    Err(OneShotError::Generation { attempts: MAX_GENERATION_ATTEMPTS, reason: last })
}

fn random_with_b_norm(
    rng: &mut ChaCha8Rng,
    n_u: usize,
    n_sigma: usize,
    n_f: usize,
    target_norm: f64,
) -> Result<RealInverseProblem> {
    let raw = gaussian_matrix(rng, n_u, n_u);
    let b = if target_norm == 0.0 {
        DMatrix::zeros(n_u, n_u)
    } else {
        let nrm = linalg::spectral_norm(&raw);
        raw * (target_norm / nrm)
    };
    let m = gaussian_matrix(rng, n_u, n_sigma);
    let h = gaussian_matrix(rng, n_f, n_u);
    let f = DVector::from_fn(n_u, |_, _| StandardNormal.sample(rng));
    RealInverseProblem::new(b, m, h, f)
}

/// Problem whose `B` has prescribed spectral radius but a larger norm: a non-normal
/// contraction `Q diag/shear Q^T` built from a random orthogonal basis.
pub fn random_nonnormal(n_u: usize, n_sigma: usize, n_f: usize, radius: f64, norm: f64, seed: u64) -> Result<RealInverseProblem> {
    if n_u < 2 || !(radius < 1.0) || norm < radius {
        return Err(OneShotError::InvalidArgument("need n_u >= 2, radius < 1, norm >= radius".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_GENERATION_ATTEMPTS {
        let q = gaussian_matrix(&mut rng, n_u, n_u).qr().q();
        // Upper-triangular core: eigenvalues on the diagonal, one shear entry sets the norm.
        let mut core = DMatrix::zeros(n_u, n_u);
        for i in 0..n_u {
            core[(i, i)] = radius * (1.0 - 0.5 * i as f64 / n_u as f64) * if i % 2 == 0 { 1.0 } else { -1.0 };
        }
        let shear = bisect_shear(&core, norm);
        core[(0, 1)] = shear;
        let b = &q * core * q.transpose();
        let m = gaussian_matrix(&mut rng, n_u, n_sigma);
        let h = gaussian_matrix(&mut rng, n_f, n_u);
        let f = DVector::from_fn(n_u, |_, _| StandardNormal.sample(&mut rng));
        let p = RealInverseProblem::new(b, m, h, f)?;
        if validate_default(&p).is_valid {
            return Ok(p);
        }
    }
    Err(OneShotError::Generation { attempts: MAX_GENERATION_ATTEMPTS, reason: "non-normal generator".into() })
}

fn bisect_shear(core: &DMatrix<f64>, norm: f64) -> f64 {
    let norm_with = |s: f64| {
        let mut c = core.clone();
        c[(0, 1)] = s;
        linalg::spectral_norm(&c)
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    while norm_with(hi) < norm {
        hi *= 2.0;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if norm_with(mid) < norm {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Random complex problem with `‖B‖₂ = target_norm`.
pub fn random_complex(n_u: usize, n_sigma: usize, n_f: usize, target_norm: f64, seed: u64) -> ComplexInverseProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cmat = |r: usize, c: usize| {
        DMatrix::from_fn(r, c, |_, _| {
            Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
        })
    };
    let raw = cmat(n_u, n_u);
    let b = raw.clone() * Complex64::new(target_norm / linalg::complex_spectral_norm(&raw), 0.0);
    let m = cmat(n_u, n_sigma);
    let h = cmat(n_f, n_u);
    let f = cmat(n_u, 1).column(0).into_owned();
    ComplexInverseProblem { b, m, h, f_src: f }
}

/// Structured-grid Helmholtz toy with the naive splitting `A₁ = A₁₁ + δA₁₂`.
#[derive(Debug, Clone)]
pub struct HelmholtzToy {
    pub problem: RealInverseProblem,
    pub grid_n: usize,
    pub wavenumber: f64,
    pub delta: f64,
}

const PATCHES: [(f64, f64, f64, f64); 3] = [(0.2, 0.4, 0.2, 0.4), (0.6, 0.8, 0.25, 0.45), (0.35, 0.55, 0.6, 0.8)];

/// 5-point flux-form discretization of `div(σ̃₀∇u) + k̃²u` on the unit square,
/// homogeneous Dirichlet boundary, `grid_n` cells per side.
pub fn helmholtz_toy(grid_n: usize, wavenumber: f64, delta: f64, seed: u64) -> Result<HelmholtzToy> {
    if grid_n < 4 {
        return Err(OneShotError::InvalidArgument(format!("grid_n must be >= 4, got {grid_n}")));
    }
    if !(delta >= 0.0) {
        return Err(OneShotError::InvalidArgument(format!("delta must be >= 0, got {delta}")));
    }
    let hs = 1.0 / grid_n as f64;
    let ni = grid_n - 1;
    let n_u = ni * ni;
    let idx = |i: usize, j: usize| (i - 1) + (j - 1) * ni;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = Uniform::new(1.0, 2.0).map_err(|e| OneShotError::InvalidArgument(e.to_string()))?;
    // Cell (a, b) spans [a h, (a+1) h] x [b h, (b+1) h].
    let sigma_r = DMatrix::from_fn(grid_n, grid_n, |_, _| dist.sample(&mut rng));

    // Face coefficient between node (i,j) and neighbour: mean of the two adjacent cells.
    let x_face = |i: usize, j: usize| 0.5 * (sigma_r[(i, j - 1)] + sigma_r[(i, j)]);
    let y_face = |i: usize, j: usize| 0.5 * (sigma_r[(i - 1, j)] + sigma_r[(i, j)]);
    let inv_h2 = 1.0 / (hs * hs);

    let mut lap = DMatrix::zeros(n_u, n_u);
    let mut var = DMatrix::zeros(n_u, n_u);
    for j in 1..grid_n {
        for i in 1..grid_n {
            let r = idx(i, j);
            // Faces: east (i..i+1), west (i-1..i), north, south.
            let faces = [
                ((i + 1, j), x_face(i, j)),
                ((i - 1, j), x_face(i - 1, j)),
                ((i, j + 1), y_face(i, j)),
                ((i, j - 1), y_face(i, j - 1)),
            ];
            for ((ni_, nj), w) in faces {
                lap[(r, r)] -= inv_h2;
                var[(r, r)] -= w * inv_h2;
                if (1..grid_n).contains(&ni_) && (1..grid_n).contains(&nj) {
                    let c = idx(ni_, nj);
                    lap[(r, c)] += inv_h2;
                    var[(r, c)] += w * inv_h2;
                }
            }
        }
    }
    let k2 = wavenumber * wavenumber;
    // Sign convention: A₁₁ u = -(Δu + k̃²u), so that A₁₁ is positive definite below resonance.
    let a11 = -(&lap + DMatrix::identity(n_u, n_u) * k2);
    let a12 = -var;

    let b = if delta == 0.0 {
        DMatrix::zeros(n_u, n_u)
    } else {
        -(linalg::solve_matrix(&a11, &a12)? * delta)
    };

    let node_x = |i: usize| i as f64 * hs;
    let u0 = |i: usize, _j: usize| (wavenumber * node_x(i)).cos();
    let mut a2 = DMatrix::zeros(n_u, PATCHES.len());
    for (col, &(x0, x1, y0, y1)) in PATCHES.iter().enumerate() {
        for j in 1..grid_n {
            for i in 1..grid_n {
                let (x, y) = (node_x(i), j as f64 * hs);
                if x >= x0 && x <= x1 && y >= y0 && y <= y1 {
                    a2[(idx(i, j), col)] = u0(i, j);
                }
            }
        }
    }
    let m = linalg::solve_matrix(&a11, &a2)?;

    // Boundary flux: one-sided normal derivative at each boundary edge midpoint, √h-weighted.
    let w = hs.sqrt() / hs;
    let mut h_rows: Vec<Vec<(usize, f64)>> = Vec::new();
    for t in 1..grid_n {
        h_rows.push(vec![(idx(1, t), w)]);
        h_rows.push(vec![(idx(ni, t), w)]);
        h_rows.push(vec![(idx(t, 1), w)]);
        h_rows.push(vec![(idx(t, ni), w)]);
    }
    let mut h = DMatrix::zeros(h_rows.len(), n_u);
    for (r, entries) in h_rows.iter().enumerate() {
        for &(c, v) in entries {
            h[(r, c)] = v;
        }
    }
    let problem = RealInverseProblem::new(b, m, h, DVector::zeros(n_u))?;
    let rho = linalg::spectral_radius(problem.b());
    if rho >= 1.0 {
        return Err(OneShotError::NotContractive { rho, hint: "reduce delta".into() });
    }
    Ok(HelmholtzToy { problem, grid_n, wavenumber, delta })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComplexEntry {
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComplexBlock {
    #[serde(rename = "B")]
    pub b: Vec<ComplexEntry>,
    #[serde(rename = "M")]
    pub m: Vec<ComplexEntry>,
    #[serde(rename = "H")]
    pub h: Vec<ComplexEntry>,
    #[serde(rename = "F")]
    pub f: Vec<ComplexEntry>,
}

/// On-disk problem. Real problems fill `B`, `M`, `H`, `F`; complex problems fill `complex`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemFile {
    pub n_u: usize,
    pub n_sigma: usize,
    pub n_f: usize,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<f64>>,
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub m: Option<Vec<f64>>,
    #[serde(rename = "H", default, skip_serializing_if = "Option::is_none")]
    pub h: Option<Vec<f64>>,
    #[serde(rename = "F", default, skip_serializing_if = "Option::is_none")]
    pub f: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub complex: Option<ComplexBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_ex: Option<Vec<f64>>,
    #[serde(rename = "f", default, skip_serializing_if = "Option::is_none")]
    pub data: Option<Vec<f64>>,
}

fn complex_matrix(rows: usize, cols: usize, data: &[ComplexEntry]) -> Result<DMatrix<Complex64>> {
    if data.len() != rows * cols {
        return Err(OneShotError::Dimension(format!("expected {} complex entries, got {}", rows * cols, data.len())));
    }
    Ok(DMatrix::from_row_iterator(rows, cols, data.iter().map(|e| Complex64::new(e.re, e.im))))
}

impl ProblemFile {
    pub fn from_problem(p: &RealInverseProblem) -> Self {
        Self {
            n_u: p.n_u(),
            n_sigma: p.n_sigma(),
            n_f: p.n_f(),
            b: Some(linalg::to_row_major(p.b())),
            m: Some(linalg::to_row_major(p.m())),
            h: Some(linalg::to_row_major(p.h())),
            f: Some(p.f_src().iter().copied().collect()),
            complex: None,
            sigma_ex: None,
            data: None,
        }
    }

    /// The complex problem, when the file has a `complex` block.
    pub fn to_complex(&self) -> Result<Option<ComplexInverseProblem>> {
        let Some(c) = &self.complex else { return Ok(None) };
        ComplexInverseProblem::new(
            complex_matrix(self.n_u, self.n_u, &c.b)?,
            complex_matrix(self.n_u, self.n_sigma, &c.m)?,
            complex_matrix(self.n_f, self.n_u, &c.h)?,
            complex_matrix(self.n_u, 1, &c.f)?.column(0).into_owned(),
        )
        .map(Some)
    }

    /// Build the (realified, when complex) problem.
    pub fn to_problem(&self) -> Result<RealInverseProblem> {
        if let Some(cp) = self.to_complex()? {
            return Ok(realify(&cp));
        }
        let need = |o: &Option<Vec<f64>>, name: &str| {
            o.clone().ok_or_else(|| OneShotError::Dimension(format!("missing field {name}")))
        };
        let b = linalg::from_row_major(self.n_u, self.n_u, &need(&self.b, "B")?)?;
        let m = linalg::from_row_major(self.n_u, self.n_sigma, &need(&self.m, "M")?)?;
        let h = linalg::from_row_major(self.n_f, self.n_u, &need(&self.h, "H")?)?;
        let f = need(&self.f, "F")?;
        if f.len() != self.n_u {
            return Err(OneShotError::Dimension(format!("F has length {}, expected {}", f.len(), self.n_u)));
        }
        RealInverseProblem::new(b, m, h, DVector::from_vec(f))
    }
}

pub fn load_problem_file(path: &Path) -> Result<ProblemFile> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn save_problem(path: &Path, p: &RealInverseProblem) -> Result<()> {
    let text = serde_json::to_string_pretty(&ProblemFile::from_problem(p))?;
    std::fs::write(path, text)?;
    Ok(())
}
