//! Exact stability thresholds for the scalar problem `(b, h, m)` and the
//! Jury–Marden root-location criterion.
//!
//! Thresholds are expressed for `h = m = 1`; the admissible step for general
//! `(h, m)` is `threshold / (h²m²)`.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{OneShotError, Result};
use crate::problem::ScalarProblem;
use crate::solvers::{MethodKind, MethodSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicCoeffs {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
}

impl CubicCoeffs {
    /// Monic characteristic polynomial `det(zI - A)` of a 3×3 matrix.
    pub fn charpoly(a: &DMatrix<f64>) -> Self {
        assert_eq!(a.shape(), (3, 3));
        let tr = a.trace();
        let minors = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)] + a[(0, 0)] * a[(2, 2)]
            - a[(0, 2)] * a[(2, 0)]
            + a[(1, 1)] * a[(2, 2)]
            - a[(1, 2)] * a[(2, 1)];
        Self { a0: -a.determinant(), a1: minors, a2: -tr }
    }
}

/// All roots of `a0 + a1 z + a2 z² + z³` strictly inside the unit circle.
pub fn jury_marden_cubic(c: CubicCoeffs) -> bool {
    let CubicCoeffs { a0, a1, a2 } = c;
    let c1 = (a0 - 1.0) * (a0 + 1.0) < 0.0;
    let c2 = (a0 * a0 - a2 * a0 + a1 - 1.0) * (a0 * a0 + a2 * a0 - a1 - 1.0) > 0.0;
    let c3 = (a0 + a2 - a1 - 1.0) * (a0 + a2 + a1 + 1.0) < 0.0;
    c1 && c2 && c3
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Stable,
    Unstable,
    /// A zero pivot appeared; the sign pattern does not decide.
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MardenTable {
    /// `rows[k]` holds `a_0^{(k)}, …, a_{n-k}^{(k)}` in ascending powers.
    pub rows: Vec<Vec<f64>>,
    pub leading_entries: Vec<f64>,
}

/// Jury–Marden criterion for a real polynomial given by ascending coefficients.
pub fn jury_marden_general(coeffs: &[f64]) -> Result<(Verdict, MardenTable)> {
    let n = coeffs.len().checked_sub(1).ok_or_else(|| OneShotError::InvalidArgument("empty polynomial".into()))?;
    let lead = coeffs[n];
    if lead == 0.0 || !lead.is_finite() {
        return Err(OneShotError::InvalidArgument("leading coefficient must be finite and nonzero".into()));
    }
    let monic: Vec<f64> = coeffs.iter().map(|c| c / lead).collect();
    let mut rows = vec![monic];
    let mut leading = Vec::with_capacity(n);
    for k in 0..n {
        let p = &rows[k];
        let deg = p.len() - 1;
        let (a0, atop) = (p[0], p[deg]);
        let next: Vec<f64> = (0..deg).map(|j| a0 * p[j] - atop * p[deg - j]).collect();
        leading.push(next[0]);
        rows.push(next);
    }
    let verdict = if leading.contains(&0.0) {
        Verdict::Indeterminate
    } else if leading[0] < 0.0 && leading[1..].iter().all(|&v| v > 0.0) {
        Verdict::Stable
    } else {
        Verdict::Unstable
    };
    Ok((verdict, MardenTable { rows, leading_entries: leading }))
}

pub fn fk(k: u32, b: f64) -> f64 {
    let k_f = k as f64;
    1.0 - 2.0 * k_f * b.powi(k as i32 - 1) + 2.0 * k_f * b.powi(k as i32) - b.powi(2 * k as i32)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum FkRoots {
    /// `k = 1`: `f₁ < 0` everywhere.
    None,
    Odd { b1: f64, b2: f64 },
    Even { b3: f64 },
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo < 1e-15 {
            break;
        }
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn positive_root(k: u32) -> f64 {
    // f(0) = 1 (k ≥ 2) and f < 0 just below 1.
    let mut hi = 0.5;
    let mut j = 1;
    while fk(k, hi) >= 0.0 && j < 60 {
        j += 1;
        hi = 1.0 - 0.5f64.powi(j);
    }
    bisect(|b| fk(k, b), 0.0, hi)
}

pub fn fk_roots(k: u32) -> Result<FkRoots> {
    match k {
        0 => Err(OneShotError::InvalidArgument("k must be >= 1".into())),
        1 => Ok(FkRoots::None),
        _ if k % 2 == 1 => Ok(FkRoots::Odd { b1: bisect(|b| fk(k, b), -1.0, 0.0), b2: positive_root(k) }),
        _ => Ok(FkRoots::Even { b3: positive_root(k) }),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalarThreshold {
    pub k: u32,
    pub b: f64,
    #[serde(serialize_with = "crate::bounds::serialize_value")]
    pub value: f64,
    pub branch: String,
}

fn check_kb(k: u32, b: f64) -> Result<()> {
    if k == 0 {
        return Err(OneShotError::InvalidArgument("k must be >= 1".into()));
    }
    if !(b.abs() < 1.0) {
        return Err(OneShotError::InvalidArgument(format!("|b| must be < 1, got {b}")));
    }
    Ok(())
}

fn eta_denominator(k: f64, b: f64) -> f64 {
    let ki = k as i32;
    k - (k + 1.0) * b + k * b.powi(ki) - (k - 1.0) * b.powi(ki + 1)
}

pub fn eta21(k: u32, b: f64) -> f64 {
    let ki = k as i32;
    let bk = b.powi(ki);
    (1.0 - b).powi(2) * (1.0 + bk) * (1.0 - bk).powi(2) / (b.powi(ki - 1) * eta_denominator(k as f64, b))
}

pub fn eta22(k: u32, b: f64) -> f64 {
    let ki = k as i32;
    let bk = b.powi(ki);
    -(1.0 - b).powi(2) * (1.0 + bk).powi(3) / (b.powi(ki - 1) * eta_denominator(k as f64, b))
}

pub fn eta3(k: u32, b: f64) -> f64 {
    2.0 * (1.0 - b).powi(2) * (1.0 + b.powi(k as i32)).powi(2) / fk(k, b)
}

fn threshold(k: u32, b: f64, value: f64, branch: &str) -> ScalarThreshold {
    ScalarThreshold { k, b, value, branch: branch.to_string() }
}

/// Exact step threshold of the k-step one-shot method (`h = m = 1`).
pub fn eta(k: u32, b: f64) -> Result<ScalarThreshold> {
    check_kb(k, b)?;
    if k == 1 {
        return Ok(threshold(k, b, (1.0 - b).powi(3) * (1.0 + b), "eta21"));
    }
    if b == 0.0 {
        return Ok(threshold(k, b, 2.0, "b=0"));
    }
    let both = || {
        let (a, c) = (eta21(k, b), eta3(k, b));
        if a <= c {
            (a, "min(eta21,eta3):eta21")
        } else {
            (c, "min(eta21,eta3):eta3")
        }
    };
    let (value, branch) = match fk_roots(k)? {
        FkRoots::Odd { b1, b2 } => {
            if b <= b1 || b >= b2 {
                (eta21(k, b), "eta21")
            } else {
                both()
            }
        }
        FkRoots::Even { b3 } => {
            if b >= b3 {
                (eta21(k, b), "eta21")
            } else if b > 0.0 {
                both()
            } else {
                let (a, c) = (eta22(k, b), eta3(k, b));
                if a <= c {
                    (a, "min(eta22,eta3):eta22")
                } else {
                    (c, "min(eta22,eta3):eta3")
                }
            }
        }
        FkRoots::None => unreachable!("k >= 2"),
    };
    Ok(threshold(k, b, value, branch))
}

fn kappa_denominator(k: u32, b: f64) -> f64 {
    let k_f = k as f64;
    b.powi(k as i32 - 1) * (k_f - (k_f + 1.0) * b + b.powi(k as i32 + 1))
}

pub fn kappa11(k: u32, b: f64) -> f64 {
    (1.0 - b).powi(2) * (1.0 + b.powi(2 * k as i32)) / kappa_denominator(k, b)
}

pub fn kappa12(k: u32, b: f64) -> f64 {
    (1.0 - b).powi(2) * (-1.0 + b.powi(2 * k as i32)) / kappa_denominator(k, b)
}

/// `(s, y, v)` with `s = b^k`, `y = x_k/h²`, `v = t_k² - y`.
fn syv(k: u32, b: f64) -> (f64, f64, f64) {
    let ki = k as i32;
    let s = b.powi(ki);
    let k_f = k as f64;
    let y = (1.0 - k_f * b.powi(ki - 1) + (k_f - 1.0) * s) / (1.0 - b).powi(2);
    // v = b^{k-1}[k-(k+1)b+b^{k+1}]/(1-b)², evaluated directly to avoid cancellation.
    let v = kappa_denominator(k, b) / (1.0 - b).powi(2);
    (s, y, v)
}

fn kappa21_disc(s: f64, y: f64, v: f64) -> f64 {
    (-4.0 * s + 5.0) * v * v + y * y + 2.0 * (-2.0 * s * s + 2.0 * s + 1.0) * v * y
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kappa21Form {
    Stable,
    /// The quotient as first derived; loses accuracy as `v → 0`.
    Naive,
}

pub fn kappa21(k: u32, b: f64, form: Kappa21Form) -> f64 {
    let (s, y, v) = syv(k, b);
    let root = kappa21_disc(s, y, v).sqrt();
    match form {
        Kappa21Form::Naive => ((2.0 * s * s - 2.0 * s - 1.0) * v - y + root) / (2.0 * v * v),
        Kappa21Form::Stable => {
            let k_f = k as f64;
            let w = k_f - (k_f + 1.0) * b + b.powi(k as i32 + 1);
            let c = b * (1.0 - b).powi(2) / w;
            c * (s - 1.0) + 2.0 * (1.0 - s + c * (1.0 - s) * y) / (y + v + root)
        }
    }
}

pub fn kappa22(k: u32, b: f64) -> f64 {
    let (s, y, v) = syv(k, b);
    let q = 2.0 * s * s + 2.0 * s + 1.0;
    let disc = (8.0 * s * s + 12.0 * s + 5.0) * v * v + y * y + 2.0 * q * v * y;
    (q * v + y + disc.sqrt()) / (2.0 * v * v)
}

/// Bound from the `P(-1)` sign condition: `a0 + a2 - a1 - 1 = h²m²(v - y)τ - 2(1 + b^k)²`.
pub fn kappa3(k: u32, b: f64) -> f64 {
    2.0 * (1.0 - b).powi(2) * (1.0 + b.powi(k as i32)).powi(2) / (-fk(k, b))
}

/// The same bound with `(1 - b^k)²` in the numerator, as printed alongside the
/// shifted threshold table. Not used by [`kappa`].
pub fn kappa3_printed(k: u32, b: f64) -> f64 {
    2.0 * (1.0 - b).powi(2) * (1.0 - b.powi(k as i32)).powi(2) / (-fk(k, b))
}

fn argmin(cands: &[(f64, &'static str)]) -> (f64, &'static str) {
    cands.iter().copied().fold((f64::INFINITY, "none"), |acc, c| if c.0 < acc.0 { c } else { acc })
}

/// Exact step threshold of the shifted k-step one-shot method (`h = m = 1`).
pub fn kappa(k: u32, b: f64) -> Result<ScalarThreshold> {
    check_kb(k, b)?;
    if k >= 2 && b == 0.0 {
        return Ok(threshold(k, b, 1.0, "b=0"));
    }
    let k2 = || {
        let a = kappa21(k, b, Kappa21Form::Stable);
        let c = kappa22(k, b);
        if a <= c {
            (a, "kappa21")
        } else {
            (c, "kappa22")
        }
    };
    let all = || {
        let (v2, n2) = k2();
        argmin(&[(kappa11(k, b), "kappa11"), (v2, n2), (kappa3(k, b), "kappa3")])
    };
    let no3 = || {
        let (v2, n2) = k2();
        argmin(&[(kappa11(k, b), "kappa11"), (v2, n2)])
    };
    let (value, branch) = match fk_roots(k)? {
        FkRoots::None => all(),
        FkRoots::Odd { b1, b2 } => {
            if b < b1 || b > b2 {
                all()
            } else {
                no3()
            }
        }
        FkRoots::Even { b3 } => {
            if b > b3 {
                all()
            } else if b > 0.0 {
                no3()
            } else {
                let (v2, n2) = k2();
                argmin(&[(kappa12(k, b), "kappa12"), (v2, n2)])
            }
        }
    };
    Ok(threshold(k, b, value, branch))
}

pub fn usual_gd_threshold(b: f64) -> f64 {
    2.0 * (1.0 - b).powi(2)
}

pub fn shifted_gd_threshold(b: f64) -> f64 {
    (1.0 - b).powi(2)
}

/// Exact threshold for any method, scaled to `(h, m)`.
pub fn exact_threshold(method: MethodSpec, sp: &ScalarProblem) -> Result<ScalarThreshold> {
    let scale = 1.0 / (sp.h * sp.h * sp.m * sp.m);
    let mut t = match method.kind {
        MethodKind::UsualGd => threshold(1, sp.b, usual_gd_threshold(sp.b), "usual-gd"),
        MethodKind::ShiftedGd => threshold(1, sp.b, shifted_gd_threshold(sp.b), "shifted-gd"),
        MethodKind::KStep => eta(method.k, sp.b)?,
        MethodKind::ShiftedKStep => kappa(method.k, sp.b)?,
    };
    t.value *= scale;
    Ok(t)
}

/// 3×3 error-iteration matrix in the ordering `(p, u, σ)`.
pub fn scalar_iteration_matrix(method: MethodSpec, sp: &ScalarProblem, tau: f64) -> DMatrix<f64> {
    let ScalarProblem { b, h, m } = *sp;
    let h2 = h * h;
    let m2 = m * m;
    let k = method.k as i32;
    let s = b.powi(k);
    let t = (0..k).map(|j| b.powi(j)).sum::<f64>();
    let u = k as f64 * h2 * b.powi(k - 1);
    let kf = k as f64;
    let x = h2 * (1.0 - kf * b.powi(k - 1) + (kf - 1.0) * s) / (1.0 - b).powi(2);
    let g = 1.0 - b;
    let rows: [f64; 9] = match method.kind {
        MethodKind::KStep => [s - m2 * x * tau, u, m * x, -m2 * t * tau, s, m * t, -m * tau, 0.0, 1.0],
        MethodKind::ShiftedKStep => [s, u, m * x, 0.0, s, m * t, -m * tau, 0.0, 1.0],
        MethodKind::UsualGd => [
            -h2 * m2 * tau / (g * g),
            0.0,
            h2 * m / (g * g),
            -m2 * tau / g,
            0.0,
            m / g,
            -m * tau,
            0.0,
            1.0,
        ],
        MethodKind::ShiftedGd => [0.0, 0.0, h2 * m / (g * g), 0.0, 0.0, m / g, -m * tau, 0.0, 1.0],
    };
    DMatrix::from_row_slice(3, 3, &rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;
    use proptest::prelude::*;

    fn companion_radius(coeffs: &[f64]) -> f64 {
        let n = coeffs.len() - 1;
        let mut c = DMatrix::zeros(n, n);
        for i in 1..n {
            c[(i, i - 1)] = 1.0;
        }
        for i in 0..n {
            c[(i, n - 1)] = -coeffs[i] / coeffs[n];
        }
        linalg::spectral_radius(&c)
    }

    #[test]
    fn cubic_examples() {
        assert!(jury_marden_cubic(CubicCoeffs { a0: 0.0, a1: 0.0, a2: 0.0 }));
        assert!(!jury_marden_cubic(CubicCoeffs { a0: 0.0, a1: 0.0, a2: -2.0 }));
    }

    #[test]
    fn general_examples() {
        let (v, t) = jury_marden_general(&[0.5, 1.0]).unwrap();
        assert_eq!(v, Verdict::Stable);
        assert_eq!(t.leading_entries, vec![-0.75]);
        assert_eq!(jury_marden_general(&[0.0, 0.0, 0.0, 0.0, 1.0]).unwrap().0, Verdict::Stable);
        assert_eq!(jury_marden_general(&[0.0, 0.0, -2.0, 1.0]).unwrap().0, Verdict::Unstable);
        assert!(jury_marden_general(&[1.0, 0.0]).is_err());
        // Root on the unit circle: a zero pivot.
        assert_eq!(jury_marden_general(&[-1.0, 1.0]).unwrap().0, Verdict::Indeterminate);
    }

    #[test]
    fn table_rows_shrink() {
        let (_, t) = jury_marden_general(&[0.1, -0.2, 0.3, 0.05, 1.0]).unwrap();
        for (k, row) in t.rows.iter().enumerate() {
            assert_eq!(row.len(), 5 - k);
        }
    }

    #[test]
    fn fk_root_examples() {
        assert_eq!(fk_roots(1).unwrap(), FkRoots::None);
        match fk_roots(2).unwrap() {
            FkRoots::Even { b3 } => assert!((b3 - (2f64.sqrt() - 1.0)).abs() < 1e-10),
            r => panic!("{r:?}"),
        }
        match fk_roots(3).unwrap() {
            FkRoots::Odd { b1, b2 } => {
                // f₃(b) = 1 - 6b² + 6b³ - b⁶, as a degree-6 polynomial.
                let coeffs = [1.0, 0.0, -6.0, 6.0, 0.0, 0.0, -1.0];
                let n = 6;
                let mut c = DMatrix::zeros(n, n);
                for i in 1..n {
                    c[(i, i - 1)] = 1.0;
                }
                for i in 0..n {
                    c[(i, n - 1)] = -coeffs[i] / coeffs[n];
                }
                let roots: Vec<f64> = linalg::eigenvalues(&c)
                    .into_iter()
                    .filter(|z| z.im.abs() < 1e-9 && z.re.abs() < 1.0)
                    .map(|z| z.re)
                    .collect();
                assert!(roots.iter().any(|r| (r - b1).abs() < 1e-10));
                assert!(roots.iter().any(|r| (r - b2).abs() < 1e-10));
                assert!(-1.0 < b1 && b1 < 0.0 && 0.0 < b2 && b2 < 1.0);
            }
            r => panic!("{r:?}"),
        }
    }

    #[test]
    fn root_trends_in_k() {
        let mut prev = (0.0, -0.0, 0.0);
        for k in 2..=30u32 {
            match fk_roots(k).unwrap() {
                FkRoots::Odd { b1, b2 } => {
                    if k > 3 {
                        assert!(b1 < prev.1 && b2 > prev.0);
                    }
                    prev.0 = b2;
                    prev.1 = b1;
                }
                FkRoots::Even { b3 } => {
                    if k > 2 {
                        assert!(b3 > prev.2);
                    }
                    prev.2 = b3;
                }
                FkRoots::None => unreachable!(),
            }
        }
    }

    #[test]
    fn closed_form_values() {
        assert!((eta(1, 0.0).unwrap().value - 1.0).abs() < 1e-15);
        assert!((eta(1, 0.5).unwrap().value - 0.1875).abs() < 1e-15);
        for k in 2..=6 {
            assert_eq!(eta(k, 0.0).unwrap().value, 2.0);
            assert_eq!(kappa(k, 0.0).unwrap().value, 1.0);
        }
        let golden = (5f64.sqrt() - 1.0) / 2.0;
        assert!((kappa(1, 0.0).unwrap().value - golden).abs() < 1e-12);
        assert!((kappa3(1, 0.3) - 2.0 * 1.69).abs() < 1e-14);
        assert!((kappa3_printed(1, 0.3) - 2.0 * 0.49).abs() < 1e-15);
        assert!((kappa11(1, 0.3) - 1.09).abs() < 1e-14);
        assert!(eta(1, 1.0).is_err());
        assert!(kappa(0, 0.1).is_err());
    }

    #[test]
    fn b02_tau208_eta() {
        let e = eta(2, 0.2).unwrap().value;
        assert!(e > 2.08);
        assert!(usual_gd_threshold(0.2) < 2.08);
    }

    #[test]
    fn kappa21_forms_agree_and_converge() {
        for k in 1..=20 {
            for &b in &[-0.7f64, -0.3, 0.2, 0.5, 0.8] {
                // The naive quotient cancels as v ~ b^{k-1} vanishes.
                if b.abs().powi(k as i32 - 1) < 1e-3 {
                    continue;
                }
                let s = kappa21(k, b, Kappa21Form::Stable);
                let n = kappa21(k, b, Kappa21Form::Naive);
                assert!((s - n).abs() <= 1e-8 * s.abs().max(1.0), "k={k} b={b}: {s} vs {n}");
            }
        }
        assert!((kappa21(60, 0.5, Kappa21Form::Stable) - 0.25).abs() < 1e-6);
    }

    #[test]
    fn thresholds_are_exact_on_grid() {
        for k in 1..=6u32 {
            for i in 0..19 {
                let b = -0.9 + 0.1 * i as f64;
                let sp = ScalarProblem::new(b, 1.0, 1.0).unwrap();
                for kind in [MethodKind::KStep, MethodKind::ShiftedKStep] {
                    let spec = MethodSpec { kind, k };
                    let th = exact_threshold(spec, &sp).unwrap().value;
                    let below = linalg::spectral_radius(&scalar_iteration_matrix(spec, &sp, 0.99 * th));
                    let above = linalg::spectral_radius(&scalar_iteration_matrix(spec, &sp, 1.01 * th));
                    assert!(below < 1.0, "{kind:?} k={k} b={b}: rho={below} at 0.99*{th}");
                    assert!(above >= 1.0, "{kind:?} k={k} b={b}: rho={above} at 1.01*{th}");
                }
            }
        }
    }

    #[test]
    fn limits_in_k() {
        for i in 0..=16 {
            let b = -0.8 + 0.1 * i as f64;
            let (e, g) = (eta(60, b).unwrap().value, usual_gd_threshold(b));
            let (c, sg) = (kappa(60, b).unwrap().value, shifted_gd_threshold(b));
            assert!((e - g).abs() < 1e-3 * g, "eta b={b}: {e} vs {g}");
            assert!((c - sg).abs() < 1e-3 * sg, "kappa b={b}: {c} vs {sg}");
        }
    }

    #[test]
    fn scalar_matrix_examples() {
        let sp = ScalarProblem::new(0.5, 1.0, 1.0).unwrap();
        let a = scalar_iteration_matrix(MethodSpec { kind: MethodKind::ShiftedGd, k: 1 }, &sp, 0.7);
        assert_eq!(a, DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 4.0, 0.0, 0.0, 2.0, -0.7, 0.0, 1.0]));
        let sp = ScalarProblem::new(0.3, 1.3, 0.8).unwrap();
        let a = scalar_iteration_matrix(MethodSpec { kind: MethodKind::ShiftedKStep, k: 1 }, &sp, 0.4);
        assert!((a - DMatrix::from_row_slice(3, 3, &[0.3, 1.69, 0.0, 0.0, 0.3, 0.8, -0.32, 0.0, 1.0])).norm() < 1e-15);
    }

    #[test]
    fn charpoly_matches_printed_coefficients() {
        let (b, h, m, tau) = (0.3, 1.1, 0.9, 0.37);
        let sp = ScalarProblem::new(b, h, m).unwrap();
        let k = 2;
        let s = b * b;
        let t = 1.0 + b;
        let x = h * h;
        let c = CubicCoeffs::charpoly(&scalar_iteration_matrix(MethodSpec { kind: MethodKind::KStep, k }, &sp, tau));
        assert!((c.a0 + s * s).abs() < 1e-14);
        assert!((c.a1 - (m * m * (h * h * t * t - x) * tau + s * s + 2.0 * s)).abs() < 1e-14);
        assert!((c.a2 - (m * m * x * tau - (2.0 * s + 1.0))).abs() < 1e-14);

        let y = 1.0;
        let v = t * t - y;
        let c = CubicCoeffs::charpoly(&scalar_iteration_matrix(MethodSpec { kind: MethodKind::ShiftedKStep, k }, &sp, tau));
        let hm = h * h * m * m * tau;
        assert!((c.a0 - (hm * v - s * s)).abs() < 1e-14);
        assert!((c.a1 - (hm * y + s * s + 2.0 * s)).abs() < 1e-14);
        assert!((c.a2 + 2.0 * s + 1.0).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn cubic_matches_companion(a0 in -3.0..3.0f64, a1 in -3.0..3.0f64, a2 in -3.0..3.0f64) {
            let r = companion_radius(&[a0, a1, a2, 1.0]);
            prop_assume!((r - 1.0).abs() > 1e-8);
            prop_assert_eq!(jury_marden_cubic(CubicCoeffs { a0, a1, a2 }), r < 1.0);
        }

        #[test]
        fn general_matches_cubic(a0 in -3.0..3.0f64, a1 in -3.0..3.0f64, a2 in -3.0..3.0f64) {
            let (v, _) = jury_marden_general(&[a0, a1, a2, 1.0]).unwrap();
            prop_assume!(v != Verdict::Indeterminate);
            prop_assert_eq!(v == Verdict::Stable, jury_marden_cubic(CubicCoeffs { a0, a1, a2 }));
        }

        #[test]
        fn thresholds_positive(k in 1u32..12, b in -0.99..0.99f64) {
            prop_assert!(eta(k, b).unwrap().value > 0.0);
            prop_assert!(kappa(k, b).unwrap().value > 0.0);
        }
    }
}
