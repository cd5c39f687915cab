//! Block error-iteration matrices in the ordering `(p, u, σ)` and the
//! spectral-radius convergence oracle built on them.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{OneShotError, Result};
use crate::linalg::{self, Complex64};
use crate::problem::RealInverseProblem;
use crate::solvers::{MethodKind, MethodSpec};

pub const CONVERGENCE_MARGIN: f64 = 1e-10;
pub const DEFAULT_S_SAMPLES: usize = 720;

/// Accumulated inner-iteration operators: `T_k = Σ_{j<k} B^j`, `U_k`, `X_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct TuxTriple {
    pub t: DMatrix<f64>,
    pub u: DMatrix<f64>,
    pub x: DMatrix<f64>,
    pub k: u32,
}

/// Built by the recursions `T_{l+1} = I + B T_l`, `X_{l+1} = B^* X_l + H^*H T_l`,
/// and `U_k = X_{k+1} - X_k`.
pub fn tux(b: &DMatrix<f64>, h: &DMatrix<f64>, k: u32) -> Result<TuxTriple> {
    if k == 0 {
        return Err(OneShotError::InvalidArgument("k must be >= 1".into()));
    }
    let n = b.nrows();
    let hh = h.tr_mul(h);
    let bt = b.transpose();
    let id = DMatrix::identity(n, n);
    let mut t = id.clone();
    let mut x = DMatrix::zeros(n, n);
    for _ in 1..k {
        x = &bt * &x + &hh * &t;
        t = &id + b * &t;
    }
    let x_next = &bt * &x + &hh * &t;
    let u = &x_next - &x;
    Ok(TuxTriple { t, u, x, k })
}

#[derive(Debug, Clone)]
pub struct IterationMatrix {
    pub matrix: DMatrix<f64>,
    pub method: MethodSpec,
    pub tau: f64,
}

struct Blocks {
    n_u: usize,
    n_s: usize,
    a: DMatrix<f64>,
}

impl Blocks {
    fn new(n_u: usize, n_s: usize) -> Self {
        let n = 2 * n_u + n_s;
        Self { n_u, n_s, a: DMatrix::zeros(n, n) }
    }
    fn offset(&self, i: usize) -> (usize, usize) {
        match i {
            0 => (0, self.n_u),
            1 => (self.n_u, self.n_u),
            _ => (2 * self.n_u, self.n_s),
        }
    }
    fn set(&mut self, i: usize, j: usize, blk: &DMatrix<f64>) {
        let (r0, rn) = self.offset(i);
        let (c0, cn) = self.offset(j);
        assert_eq!(blk.shape(), (rn, cn));
        self.a.view_mut((r0, c0), (rn, cn)).copy_from(blk);
    }
}

pub fn build_iteration_matrix(problem: &RealInverseProblem, method: MethodSpec, tau: f64) -> Result<IterationMatrix> {
    if !(tau > 0.0) {
        return Err(OneShotError::InvalidArgument(format!("tau must be positive, got {tau}")));
    }
    let (b, m, h) = (problem.b(), problem.m(), problem.h());
    let (n_u, n_s) = (problem.n_u(), problem.n_sigma());
    let mt = m.transpose();
    let mmt = m * &mt;
    let mut blk = Blocks::new(n_u, n_s);
    blk.set(2, 0, &(-&mt * tau));
    blk.set(2, 2, &DMatrix::identity(n_s, n_s));
    match method.kind {
        MethodKind::UsualGd | MethodKind::ShiftedGd => {
            let inv_m = linalg::solve_matrix(&linalg::identity_minus(b), m)?;
            let am = linalg::solve_matrix(&linalg::identity_minus(&b.transpose()), &(h.tr_mul(h) * &inv_m))?;
            blk.set(0, 2, &am);
            blk.set(1, 2, &inv_m);
            if method.kind == MethodKind::UsualGd {
                blk.set(0, 0, &(-(&am * &mt) * tau));
                blk.set(1, 0, &(-(&inv_m * &mt) * tau));
            }
        }
        MethodKind::KStep | MethodKind::ShiftedKStep => {
            let k = method.k;
            let TuxTriple { t, u, x, .. } = tux(b, h, k)?;
            let bk = linalg::matrix_power(b, k as usize);
            let btk = bk.transpose();
            blk.set(0, 1, &u);
            blk.set(0, 2, &(&x * m));
            blk.set(1, 1, &bk);
            blk.set(1, 2, &(&t * m));
            if method.kind == MethodKind::ShiftedKStep {
                blk.set(0, 0, &btk);
            } else {
                blk.set(0, 0, &(btk - (&x * &mmt) * tau));
                blk.set(1, 0, &(-(&t * &mmt) * tau));
            }
        }
    }
    Ok(IterationMatrix { matrix: blk.a, method, tau })
}

pub fn spectral_radius(matrix: &DMatrix<f64>) -> f64 {
    linalg::spectral_radius(matrix)
}

/// `(ρ < 1 - margin, ρ)` for the method's iteration matrix.
pub fn converges(problem: &RealInverseProblem, method: MethodSpec, tau: f64) -> Result<(bool, f64)> {
    let rho = spectral_radius(&build_iteration_matrix(problem, method, tau)?.matrix);
    Ok((rho < 1.0 - CONVERGENCE_MARGIN, rho))
}

/// Distance from 1 to the spectrum of the iteration matrix.
pub fn eigenvalue_one_check(problem: &RealInverseProblem, method: MethodSpec, tau: f64) -> Result<f64> {
    let a = build_iteration_matrix(problem, method, tau)?.matrix;
    let one = Complex64::new(1.0, 0.0);
    Ok(linalg::eigenvalues(&a).iter().map(|z| (z - one).norm()).fold(f64::INFINITY, f64::min))
}

/// Error triple `(p, u, σ)` stacked into one vector.
pub fn stack_error(p: &DVector<f64>, u: &DVector<f64>, sigma: &DVector<f64>) -> DVector<f64> {
    let mut v = DVector::zeros(p.len() + u.len() + sigma.len());
    v.rows_mut(0, p.len()).copy_from(p);
    v.rows_mut(p.len(), u.len()).copy_from(u);
    v.rows_mut(p.len() + u.len(), sigma.len()).copy_from(sigma);
    v
}

fn resolvent_norm(t: &DMatrix<f64>, theta: f64) -> f64 {
    let n = t.nrows();
    let z_inv = Complex64::new(theta.cos(), -theta.sin());
    let a = DMatrix::<Complex64>::identity(n, n) - t.map(|v| Complex64::new(v, 0.0) * z_inv);
    let smin = a.svd(false, false).singular_values.min();
    if smin > 0.0 {
        1.0 / smin
    } else {
        f64::INFINITY
    }
}

/// `s(T) = sup_{|z|≥1} ‖(I - T/z)^{-1}‖₂`, estimated on the unit circle by
/// sampling and a golden-section refinement around the best sample.
pub fn s_functional(t: &DMatrix<f64>, n_samples: usize) -> Result<f64> {
    if !t.is_square() || t.is_empty() {
        return Err(OneShotError::Dimension("s(T) needs a non-empty square matrix".into()));
    }
    let rho = linalg::spectral_radius(t);
    if rho >= 1.0 {
        return Err(OneShotError::NotContractive { rho, hint: "s(T) is infinite".into() });
    }
    if t.iter().all(|&v| v == 0.0) {
        return Ok(1.0);
    }
    let n = n_samples.max(8);
    let step = 2.0 * std::f64::consts::PI / n as f64;
    // Real T: the resolvent norm is even in θ, so half the circle suffices.
    let (best_i, best) = (0..=n / 2)
        .into_par_iter()
        .map(|i| (i, resolvent_norm(t, i as f64 * step)))
        .reduce(|| (0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) { b } else { a });

    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let center = best_i as f64 * step;
    let (mut lo, mut hi) = (center - step, center + step);
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let (mut f1, mut f2) = (resolvent_norm(t, x1), resolvent_norm(t, x2));
    let mut refined = best;
    for _ in 0..60 {
        if f1 > f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = resolvent_norm(t, x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = resolvent_norm(t, x2);
        }
        refined = refined.max(f1).max(f2);
        if hi - lo < 1e-12 {
            break;
        }
    }
    Ok(refined.max(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{random_contraction, ScalarProblem};
    use crate::scalar;

    fn tux_by_sums(b: &DMatrix<f64>, h: &DMatrix<f64>, k: usize) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        let n = b.nrows();
        let hh = h.transpose() * h;
        let pw = |j: usize| linalg::matrix_power(b, j);
        let t = (0..k).fold(DMatrix::zeros(n, n), |acc, j| acc + pw(j));
        let u_of = |l: usize| {
            (0..l).fold(DMatrix::zeros(n, n), |acc, i| acc + pw(i).transpose() * &hh * pw(l - 1 - i))
        };
        let x = (1..k).fold(DMatrix::zeros(n, n), |acc, l| acc + u_of(l));
        (t, u_of(k), x)
    }

    #[test]
    fn tux_k1() {
        let b = DMatrix::from_row_slice(2, 2, &[0.2, 0.1, 0.0, -0.3]);
        let h = DMatrix::from_row_slice(1, 2, &[1.0, 2.0]);
        let r = tux(&b, &h, 1).unwrap();
        assert_eq!(r.t, DMatrix::identity(2, 2));
        assert_eq!(r.u, h.transpose() * &h);
        assert_eq!(r.x, DMatrix::zeros(2, 2));
    }

    #[test]
    fn tux_scalar_values() {
        let r = tux(&DMatrix::from_element(1, 1, 0.5), &DMatrix::from_element(1, 1, 1.0), 2).unwrap();
        assert!((r.t[(0, 0)] - 1.5).abs() < 1e-15);
        assert!((r.u[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((r.x[(0, 0)] - 1.0).abs() < 1e-15);
        let lhs = r.u[(0, 0)] * r.t[(0, 0)] - r.x[(0, 0)] * 0.25 + r.x[(0, 0)];
        assert!((lhs - 2.25).abs() < 1e-15);
    }

    #[test]
    fn recursion_matches_sums() {
        let p = random_contraction(4, 1, 3, 0.8, 17).unwrap();
        let r = tux(p.b(), p.h(), 5).unwrap();
        let (t, u, x) = tux_by_sums(p.b(), p.h(), 5);
        assert!((&r.t - t).norm() < 1e-12);
        assert!((&r.u - u).norm() < 1e-12);
        assert!((&r.x - x).norm() < 1e-12);
        assert!((&r.u - r.u.transpose()).norm() < 1e-12);
        assert!((&r.x - r.x.transpose()).norm() < 1e-12);
    }

    #[test]
    fn shifted_one_step_scalar_layout() {
        let sp = ScalarProblem::new(0.4, 1.5, 0.7).unwrap();
        let a = build_iteration_matrix(&sp.to_problem(), MethodSpec::shifted_k_step(1), 0.3).unwrap().matrix;
        let expect = DMatrix::from_row_slice(3, 3, &[0.4, 2.25, 0.0, 0.0, 0.4, 0.7, -0.21, 0.0, 1.0]);
        assert!((a - expect).norm() < 1e-15);
    }

    #[test]
    fn matrices_agree_with_scalar_module() {
        for kind in [MethodKind::UsualGd, MethodKind::ShiftedGd, MethodKind::KStep, MethodKind::ShiftedKStep] {
            for k in 1..=4 {
                let sp = ScalarProblem::new(-0.35, 0.9, 1.3).unwrap();
                let spec = MethodSpec { kind, k };
                let a = build_iteration_matrix(&sp.to_problem(), spec, 0.21).unwrap().matrix;
                let s = scalar::scalar_iteration_matrix(spec, &sp, 0.21);
                assert!((a - s).norm() < 1e-13, "{kind:?} k={k}");
            }
        }
    }

    #[test]
    fn two_step_action_matches_hand_iteration() {
        let p = random_contraction(3, 2, 2, 0.6, 4).unwrap();
        let tau = 0.07;
        let a = build_iteration_matrix(&p, MethodSpec::k_step(2), tau).unwrap().matrix;
        let (ep, eu, es) = (
            DVector::from_vec(vec![0.3, -0.1, 0.2]),
            DVector::from_vec(vec![1.0, 0.5, -0.4]),
            DVector::from_vec(vec![0.2, -0.6]),
        );
        let es1 = &es - p.m().transpose() * &ep * tau;
        let (mut u, mut q) = (eu.clone(), ep.clone());
        for _ in 0..2 {
            let un = p.b() * &u + p.m() * &es1;
            q = p.b().transpose() * &q + p.h().transpose() * p.h() * &u;
            u = un;
        }
        let got = a * stack_error(&ep, &eu, &es);
        assert!((got - stack_error(&q, &u, &es1)).norm() < 1e-13);
    }

    #[test]
    fn radius_examples() {
        assert!((spectral_radius(&DMatrix::identity(3, 3)) - 1.0).abs() < 1e-15);
        let sp = ScalarProblem::new(0.0, 1.0, 1.0).unwrap().to_problem();
        let a = build_iteration_matrix(&sp, MethodSpec::usual_gd(), 1.0).unwrap().matrix;
        // Nilpotent; eigenvalues of a defective matrix carry roundoff of order sqrt(eps).
        assert!(spectral_radius(&a) < 1e-7);
        let golden = (5f64.sqrt() - 1.0) / 2.0;
        let below = spectral_radius(&build_iteration_matrix(&sp, MethodSpec::shifted_k_step(1), golden * 0.999).unwrap().matrix);
        let above = spectral_radius(&build_iteration_matrix(&sp, MethodSpec::shifted_k_step(1), golden * 1.001).unwrap().matrix);
        assert!(below < 1.0 && above > 1.0);
    }

    #[test]
    fn converges_examples() {
        let p = random_contraction(5, 2, 3, 0.7, 3).unwrap();
        for spec in [MethodSpec::usual_gd(), MethodSpec::shifted_gd(), MethodSpec::k_step(2), MethodSpec::shifted_k_step(3)] {
            assert!(converges(&p, spec, 1e-6).unwrap().0);
        }
        let sp = ScalarProblem::new(0.2, 1.0, 1.0).unwrap().to_problem();
        assert!(!converges(&sp, MethodSpec::usual_gd(), 2.08).unwrap().0);
        assert!(converges(&sp, MethodSpec::k_step(2), 2.08).unwrap().0);
    }

    #[test]
    fn s_functional_examples() {
        assert_eq!(s_functional(&DMatrix::zeros(3, 3), 720).unwrap(), 1.0);
        let p = random_contraction(4, 1, 1, 0.5, 9).unwrap();
        let s = s_functional(p.b(), 720).unwrap();
        assert!((1.0..=2.0 + 1e-9).contains(&s));
        let nil = DMatrix::from_row_slice(2, 2, &[0.0, 0.9, 0.0, 0.0]);
        let coarse = s_functional(&nil, 720).unwrap();
        let fine = s_functional(&nil, 46080).unwrap();
        assert!((coarse - fine).abs() <= 1e-4 * fine);
        assert!(s_functional(&DMatrix::from_element(1, 1, 1.0), 720).is_err());
    }

    #[test]
    fn half_circle_matches_full_circle_sampling() {
        let p = crate::problem::random_nonnormal(4, 1, 1, 0.8, 1.5, 4).unwrap();
        let full = (0..720).map(|i| resolvent_norm(p.b(), i as f64 * std::f64::consts::PI / 360.0)).fold(0.0, f64::max);
        let s = s_functional(p.b(), 720).unwrap();
        assert!(s >= full - 1e-12 * full);
    }

    #[test]
    fn eigenvalue_one_excluded_unless_m_vanishes() {
        let p = random_contraction(6, 2, 4, 0.5, 12).unwrap();
        for kind in [MethodKind::UsualGd, MethodKind::ShiftedGd, MethodKind::KStep, MethodKind::ShiftedKStep] {
            assert!(eigenvalue_one_check(&p, MethodSpec { kind, k: 3 }, 0.1).unwrap() > 1e-8);
        }
        let z = p.with_m(DMatrix::zeros(6, 2)).unwrap();
        assert!(eigenvalue_one_check(&z, MethodSpec::k_step(3), 0.1).unwrap() < 1e-12);
    }
}
