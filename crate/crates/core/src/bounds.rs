//! Sufficient descent-step bounds for the one-shot families and gradient descent.
//!
//! Every bound is a minimum over eigenvalue cases (real eigenvalue, then four
//! complex sectors). The same case formulas serve both the closed forms in
//! `‖B‖` and the resolvent-based forms valid whenever `ρ(B) < 1`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_6, SQRT_2};

use serde::Serialize;

use crate::error::{OneShotError, Result};
use crate::linalg;
use crate::problem::RealInverseProblem;
use crate::solvers::{MethodKind, MethodSpec};
use crate::spectral::{self, DEFAULT_S_SAMPLES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Family {
    Shifted,
    NonShifted,
}

impl Family {
    pub fn of(kind: MethodKind) -> Self {
        if kind.is_shifted() {
            Family::Shifted
        } else {
            Family::NonShifted
        }
    }

    fn tag(self) -> &'static str {
        match self {
            Family::Shifted => "shifted",
            Family::NonShifted => "nonshifted",
        }
    }

    fn max_theta0(self) -> f64 {
        match self {
            Family::Shifted => FRAC_PI_6,
            Family::NonShifted => FRAC_PI_4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundParams {
    pub theta0: f64,
    pub delta0: f64,
}

impl BoundParams {
    /// `δ₀ = 1`, `θ₀` at the top of the admissible range (scaled by 0.99 when `k ≥ 2`).
    pub fn default_for(family: Family, k: u32) -> Self {
        let scale = if k >= 2 { 0.99 } else { 1.0 };
        Self { theta0: family.max_theta0() * scale, delta0: 1.0 }
    }

    pub fn check(&self, family: Family, k: u32) -> Result<()> {
        let max = family.max_theta0();
        let ok_theta = self.theta0 > 0.0 && if k >= 2 { self.theta0 < max } else { self.theta0 <= max };
        if !ok_theta || !(self.delta0 > 0.0) {
            return Err(OneShotError::InvalidArgument(format!(
                "{} family with k={k} needs 0 < theta0 {} {max:.6} and delta0 > 0 (got theta0={}, delta0={})",
                family.tag(),
                if k >= 2 { "<" } else { "<=" },
                self.theta0,
                self.delta0
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
pub struct NormInputs {
    pub norm_b: f64,
    pub norm_h: f64,
    pub norm_m: f64,
    pub s_bk: Option<f64>,
    pub norm_bk: Option<f64>,
    pub norm_tk: Option<f64>,
    pub norm_xk: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepBound {
    #[serde(serialize_with = "serialize_value")]
    pub value: f64,
    pub formula_id: String,
    pub params: Option<BoundParams>,
    pub norm_inputs: NormInputs,
}

pub(crate) fn serialize_value<S: serde::Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*v)
    }
}

fn gd_norms(problem: &RealInverseProblem) -> Result<(f64, NormInputs)> {
    let g = problem.forward_operator()?;
    let norms = NormInputs {
        norm_b: linalg::spectral_norm(problem.b()),
        norm_h: linalg::spectral_norm(problem.h()),
        norm_m: linalg::spectral_norm(problem.m()),
        ..Default::default()
    };
    Ok((linalg::spectral_norm(&g), norms))
}

/// `2 / ‖H(I-B)^{-1}M‖²`.
pub fn gd_bound(problem: &RealInverseProblem) -> Result<StepBound> {
    let (g, norm_inputs) = gd_norms(problem)?;
    Ok(StepBound { value: 2.0 / (g * g), formula_id: "usual-gd".into(), params: None, norm_inputs })
}

/// `1 / ‖H(I-B)^{-1}M‖²`.
pub fn shifted_gd_bound(problem: &RealInverseProblem) -> Result<StepBound> {
    let (g, norm_inputs) = gd_norms(problem)?;
    Ok(StepBound { value: 1.0 / (g * g), formula_id: "shifted-gd".into(), params: None, norm_inputs })
}

/// Operator quantities entering the case formulas.
#[derive(Debug, Clone, Copy)]
struct CaseInputs {
    h2: f64,
    m2: f64,
    t: f64,
    x: f64,
    s: f64,
    p: f64,
    q1: f64,
    q2: f64,
}

fn inv(d: f64) -> f64 {
    if d == 0.0 {
        f64::INFINITY
    } else {
        1.0 / d
    }
}

fn sector_constant(delta0: f64, angle: f64) -> f64 {
    (1.0 + 2.0 * delta0 * angle.sin() + delta0 * delta0) / angle.cos().powi(2)
}

/// Case values `[real, c1, c2, c3, c4]`; absent cases are `+∞`.
fn case_values(family: Family, k: u32, ci: CaseInputs, params: BoundParams) -> [f64; 5] {
    let CaseInputs { h2, m2, t, x, s, p, q1, q2 } = ci;
    let BoundParams { theta0: th, delta0: d0 } = params;
    let hm = h2 * m2;
    let half_sin = (th / 2.0).sin();
    let c4_num = (FRAC_PI_2 - 3.0 * th).sin() + (2.0 * th).cos();
    let (c_angle, cos_max) = match family {
        Family::Shifted => (2.5 * th, (3.0 * th).cos()),
        Family::NonShifted => (1.5 * th, (2.0 * th).cos()),
    };
    let c = sector_constant(d0, c_angle);
    if k == 1 {
        let real = match family {
            Family::Shifted => 2.0 * inv(hm * s * s),
            Family::NonShifted => f64::INFINITY,
        };
        let c1 = inv(4.0 * hm * q2 * q2);
        let c2 = 2.0 * half_sin * inv(hm * (p + q1).powi(2));
        let c3 = d0 / (2.0 * c) * inv(hm * q2 * q2);
        let c4 = match family {
            Family::Shifted => c4_num * inv(hm * p * p),
            Family::NonShifted => f64::INFINITY,
        };
        return [real, c1, c2, c3, c4];
    }
    let real = match family {
        Family::Shifted => 2.0 * inv(m2 * (h2 * t * t + 2.0 * x) * s * s),
        Family::NonShifted => inv(x * m2 * s * s),
    };
    let pq = (p + q1).powi(2);
    let c1 = inv(4.0 * hm * t * t * q2 * q2 + SQRT_2 * m2 * x * pq);
    let c2 = inv((hm * t * t / (2.0 * half_sin) + SQRT_2 * m2 * x) * pq);
    let rc = c.sqrt();
    let c3 = inv(
        (2.0 * c * half_sin / d0) * hm * t * t * q2 * q2
            + (rc / d0) * m2 * x * (p * p + q1 * q1)
            + 2.0 * (rc / d0).max(rc / cos_max) * m2 * x * p * q1,
    );
    let c4 = match family {
        Family::Shifted => c4_num * inv(hm * t * t * p * p + 2.0 * m2 * x * pq),
        Family::NonShifted => f64::INFINITY,
    };
    [real, c1, c2, c3, c4]
}

const CASE_NAMES: [&str; 5] = ["real", "c1", "c2", "c3", "c4"];

fn min_case(vals: &[f64; 5]) -> (f64, &'static str) {
    let mut best = (f64::INFINITY, "none");
    for (v, name) in vals.iter().zip(CASE_NAMES) {
        if *v < best.0 {
            best = (*v, name);
        }
    }
    best
}

fn closed_inputs(k: u32, b: f64) -> CaseInputs {
    let ki = k as i32;
    let bk = b.powi(ki);
    let kf = k as f64;
    let sum = 1.0 - kf * b.powi(ki - 1) + (kf - 1.0) * bk;
    CaseInputs {
        h2: 1.0,
        m2: 1.0,
        t: (1.0 - bk) / (1.0 - b),
        x: sum / (1.0 - b).powi(2),
        s: 1.0 / (1.0 - bk),
        p: 1.0 / (1.0 - bk),
        q1: bk / (1.0 - bk),
        q2: bk / (1.0 - bk).powi(2),
    }
}

fn check_b(b: f64) -> Result<()> {
    if !(0.0..1.0).contains(&b) {
        return Err(OneShotError::InvalidArgument(format!("closed-form bounds need 0 <= b < 1, got {b}")));
    }
    Ok(())
}

/// Individual cases `[χ₀, χ₁, χ₂, χ₃, χ₄]` (shifted) or `[∞, ψ₁, ψ₂, ψ₃, ∞]` at `k = 1`.
pub fn k1_cases(family: Family, b: f64, params: BoundParams) -> Result<[f64; 5]> {
    check_b(b)?;
    Ok(case_values(family, 1, closed_inputs(1, b), params))
}

/// Individual cases at `k ≥ 2`, real-eigenvalue bound first.
pub fn k_cases(family: Family, k: u32, b: f64, params: BoundParams) -> Result<[f64; 5]> {
    check_b(b)?;
    if k < 2 {
        return Err(OneShotError::InvalidArgument("k_cases needs k >= 2".into()));
    }
    Ok(case_values(family, k, closed_inputs(k, b), params))
}

fn family_factor(family: Family, k: u32, b: f64, params: BoundParams) -> Result<(f64, String)> {
    params.check(family, k)?;
    check_b(b)?;
    let tag = family.tag();
    let kt = if k == 1 { "k1" } else { "k" };
    if b == 0.0 {
        let v = match (family, k) {
            (Family::Shifted, 1) => (5f64.sqrt() - 1.0) / 2.0,
            (Family::NonShifted, 1) => 1.0,
            (Family::Shifted, _) => 1.0,
            (Family::NonShifted, _) => 2.0,
        };
        return Ok((v, format!("{tag}-{kt}-b0")));
    }
    let (v, case) = min_case(&case_values(family, k, closed_inputs(k, b), params));
    Ok((v, format!("{tag}-{kt}-closed:{case}")))
}

/// `χ(1, b)`: shifted one-step factor, bound is `χ/(‖H‖²‖M‖²)`.
pub fn chi_k1(b: f64, params: BoundParams) -> Result<f64> {
    Ok(family_factor(Family::Shifted, 1, b, params)?.0)
}

/// `ψ(1, b)`: non-shifted one-step factor.
pub fn psi_k1(b: f64, params: BoundParams) -> Result<f64> {
    Ok(family_factor(Family::NonShifted, 1, b, params)?.0)
}

pub fn chi_k(k: u32, b: f64, params: BoundParams) -> Result<f64> {
    if k < 2 {
        return Err(OneShotError::InvalidArgument("chi_k needs k >= 2; use chi_k1".into()));
    }
    Ok(family_factor(Family::Shifted, k, b, params)?.0)
}

pub fn psi_k(k: u32, b: f64, params: BoundParams) -> Result<f64> {
    if k < 2 {
        return Err(OneShotError::InvalidArgument("psi_k needs k >= 2; use psi_k1".into()));
    }
    Ok(family_factor(Family::NonShifted, k, b, params)?.0)
}

/// Simplified shifted one-step factor for `θ₀ = π/6`, `δ₀ = 1`.
pub fn practical_shifted_k1(b: f64) -> f64 {
    let r = ((1.0 - b) / (1.0 + b)).powi(2);
    let tail = if b == 0.0 { f64::INFINITY } else { (1.0 - (5.0 * std::f64::consts::PI / 12.0).sin()) / 4.0 * (1.0 - b).powi(4) / (b * b) };
    (0.5 * r).min(tail)
}

/// Simplified non-shifted one-step factor for `θ₀ = π/4`, `δ₀ = 1`.
pub fn practical_nonshifted_k1(b: f64) -> f64 {
    let r = ((1.0 - b) / (1.0 + b)).powi(2);
    let tail = if b == 0.0 { f64::INFINITY } else { (1.0 - (3.0 * std::f64::consts::PI / 8.0).sin()) / 4.0 * (1.0 - b).powi(4) / (b * b) };
    (2.0 * (std::f64::consts::PI / 8.0).sin() * r).min(tail)
}

/// Norms entering the one-shot bounds at inner count `k`. The `k`-dependent entries
/// stay `None` when `B = 0`. Shared by both families.
pub fn bound_inputs(problem: &RealInverseProblem, k: u32) -> Result<NormInputs> {
    if k == 0 {
        return Err(OneShotError::InvalidArgument("k must be >= 1".into()));
    }
    let (b, h, m) = (problem.b(), problem.h(), problem.m());
    let mut inputs = NormInputs {
        norm_b: linalg::spectral_norm(b),
        norm_h: linalg::spectral_norm(h),
        norm_m: linalg::spectral_norm(m),
        ..Default::default()
    };
    if b.iter().all(|&v| v == 0.0) {
        return Ok(inputs);
    }
    let tuxt = spectral::tux(b, h, k)?;
    let bk = linalg::matrix_power(b, k as usize);
    inputs.s_bk = Some(spectral::s_functional(&bk, DEFAULT_S_SAMPLES)?);
    inputs.norm_bk = Some(linalg::spectral_norm(&bk));
    inputs.norm_tk = Some(linalg::spectral_norm(&tuxt.t));
    inputs.norm_xk = Some(linalg::spectral_norm(&tuxt.x));
    Ok(inputs)
}

/// Bound for an actual problem. GD kinds get the exact GD bounds. One-shot kinds
/// get the resolvent-based bound, and additionally the closed form when `‖B‖ < 1`;
/// the larger of the two is reported.
pub fn matrix_bound(problem: &RealInverseProblem, method: MethodSpec, params: BoundParams) -> Result<StepBound> {
    if method.kind.is_gd() {
        return matrix_bound_from(problem, method, params, &NormInputs::default());
    }
    params.check(Family::of(method.kind), method.k)?;
    matrix_bound_from(problem, method, params, &bound_inputs(problem, method.k)?)
}

/// [`matrix_bound`] with precomputed [`bound_inputs`] for `method.k`.
pub fn matrix_bound_from(problem: &RealInverseProblem, method: MethodSpec, params: BoundParams, inputs: &NormInputs) -> Result<StepBound> {
    match method.kind {
        MethodKind::UsualGd => return gd_bound(problem),
        MethodKind::ShiftedGd => return shifted_gd_bound(problem),
        _ => {}
    }
    let family = Family::of(method.kind);
    let k = method.k;
    params.check(family, k)?;
    let tag = family.tag();
    let kt = if k == 1 { "k1" } else { "k" };
    let norm_inputs = *inputs;
    let (h2, m2) = (inputs.norm_h * inputs.norm_h, inputs.norm_m * inputs.norm_m);

    let (Some(s), Some(beta), Some(t), Some(x)) = (inputs.s_bk, inputs.norm_bk, inputs.norm_tk, inputs.norm_xk) else {
        if k >= 2 {
            let mut gd = if family == Family::Shifted { shifted_gd_bound(problem)? } else { gd_bound(problem)? };
            gd.formula_id = format!("{tag}-{kt}-b0");
            gd.params = Some(params);
            return Ok(gd);
        }
        let (v, id) = family_factor(family, 1, 0.0, params)?;
        return Ok(StepBound { value: v / (h2 * m2), formula_id: id, params: Some(params), norm_inputs });
    };

    let general = CaseInputs { h2, m2, t, x, s, p: (1.0 + beta) * s * s, q1: beta * s * s, q2: beta * s * s };
    let (gv, gcase) = min_case(&case_values(family, k, general, params));
    let mut best = (gv, format!("{tag}-{kt}-resolvent:{gcase}"));
    if inputs.norm_b < 1.0 {
        let (cv, cid) = family_factor(family, k, inputs.norm_b, params)?;
        let cv = cv / (h2 * m2);
        if cv > best.0 {
            best = (cv, cid);
        }
    }
    Ok(StepBound { value: best.0, formula_id: best.1, params: Some(params), norm_inputs })
}
