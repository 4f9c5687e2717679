//! Reduced coefficients `A_t(x) = Dκ_t(χ_t x) A(χ_t x)` and
//! `V_t(x, z) = κ_t(χ_t x + A(χ_t x) z) − x`, with empirical certification.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::model::ModelSpec;
use crate::error::{Error, Result};
use crate::flow::growth_constant;
use crate::levy::log_grid;
use crate::levy::Regime;
use crate::numerics::{linear_fit, stream_rng};

/// Slack between fitted and target exponents.
pub const EXPONENT_TOLERANCE: f64 = 0.1;
/// Differences below this are treated as exact zeros in exponent fits.
const ZERO_FLOOR: f64 = 1e-12;

pub fn a_t(model: &ModelSpec, t: f64, x: &[f64]) -> Result<DMatrix<f64>> {
    let fwd = model.flow.forward(t, x)?;
    let inv = fwd
        .jacobian
        .try_inverse()
        .ok_or_else(|| Error::numeric("reduction", "flow Jacobian is singular"))?;
    Ok(inv * model.matrix.eval(fwd.point.as_slice()))
}

pub fn v_t(model: &ModelSpec, t: f64, x: &[f64], z: &[f64]) -> Result<DVector<f64>> {
    if z.len() != model.dim() {
        return Err(Error::domain("jump vector has the wrong dimension"));
    }
    let y = model.flow.chi(t, x)?;
    let mut w = vec![0.0; model.dim()];
    model.matrix.apply(y.as_slice(), z, &mut w);
    for (wi, yi) in w.iter_mut().zip(y.iter()) {
        *wi += yi;
    }
    let k = model.flow.kappa(t, &w)?;
    Ok(k - DVector::from_column_slice(x))
}

/// Log–log fit of `|V_t(x, z) − A_t(x) z|` against `|z|`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearizationReport {
    pub t: f64,
    pub x: Vec<f64>,
    pub magnitudes: Vec<f64>,
    pub residuals: Vec<f64>,
    /// `+∞` when every residual is numerically zero.
    #[serde(with = "crate::reduction::coefficients::f64_inf")]
    pub slope: f64,
    /// `max residual / |z|^{γ₃}`.
    pub constant: f64,
    pub target: f64,
    pub pass: bool,
}

pub fn certify_linearization(
    model: &ModelSpec,
    t: f64,
    x: &[f64],
    z_magnitudes: &[f64],
) -> Result<LinearizationReport> {
    if z_magnitudes.is_empty() || z_magnitudes.iter().any(|m| !(*m > 0.0 && *m <= 1.0)) {
        return Err(Error::domain("jump magnitudes must lie in (0, 1]"));
    }
    let d = model.dim();
    let at = a_t(model, t, x)?;
    let gamma3 = model.exponents.gamma3;
    let scale = 1.0 + x.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let mut residuals = Vec::with_capacity(z_magnitudes.len());
    for &m in z_magnitudes {
        let mut worst: f64 = 0.0;
        for k in 0..d {
            for sign in [1.0, -1.0] {
                let mut z = vec![0.0; d];
                z[k] = sign * m;
                let v = v_t(model, t, x, &z)?;
                let lin = &at * DVector::from_column_slice(&z);
                worst = worst.max((v - lin).norm());
            }
        }
        residuals.push(worst);
    }
    let constant = z_magnitudes
        .iter()
        .zip(&residuals)
        .map(|(m, r)| r / m.powf(gamma3))
        .fold(0.0, f64::max);
    let slope = fit_exponent(z_magnitudes, &residuals, ZERO_FLOOR * scale);
    Ok(LinearizationReport {
        t,
        x: x.to_vec(),
        magnitudes: z_magnitudes.to_vec(),
        residuals,
        slope,
        constant,
        target: gamma3,
        pass: slope >= gamma3 - EXPONENT_TOLERANCE,
    })
}

/// Slope of `log r` against `log s` over the nonzero residuals; `+∞` if none.
fn fit_exponent(s: &[f64], r: &[f64], floor: f64) -> f64 {
    let (xs, ys): (Vec<f64>, Vec<f64>) = s
        .iter()
        .zip(r)
        .filter(|(_, r)| **r > floor)
        .map(|(s, r)| (s.ln(), r.ln()))
        .unzip();
    if xs.len() < 2 {
        return f64::INFINITY;
    }
    linear_fit(&xs, &ys).slope
}

/// Points, times and separations used by [`certify_conditions`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SamplePlan {
    pub points: Vec<Vec<f64>>,
    /// Base times for the Hölder-in-t fit.
    pub t_base: Vec<f64>,
    /// Geometric separations in t and x.
    pub deltas: Vec<f64>,
    /// Times at which the growth bounds of `A_t` are checked.
    pub t_values: Vec<f64>,
}

impl SamplePlan {
    pub fn default_for(d: usize, seed: u64) -> Self {
        let mut rng = stream_rng(seed, 0);
        let points = (0..8)
            .map(|_| (0..d).map(|_| rng.random_range(-1.5..1.5)).collect())
            .collect();
        let mut deltas = log_grid(1e-3, 9);
        deltas.iter_mut().for_each(|v| *v *= 0.1);
        Self {
            points,
            t_base: vec![0.0, 0.25, 0.5],
            deltas,
            t_values: vec![-1.0, -0.5, 0.5, 1.0],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionE {
    pub applicable: bool,
    /// `1 + η − β/α`.
    pub margin_ratio: f64,
    /// `η − (1/α − 1/β)`.
    pub margin_gap: f64,
    pub pass: bool,
}

pub fn evaluate_condition_e(regime: Regime, alpha: f64, beta: f64, eta: f64) -> ConditionE {
    let margin_ratio = 1.0 + eta - beta / alpha;
    let margin_gap = eta - (1.0 / alpha - 1.0 / beta);
    ConditionE {
        applicable: regime == Regime::B,
        margin_ratio,
        margin_gap,
        pass: margin_ratio > 0.0 && margin_gap > 0.0,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReductionReport {
    pub condition_e: ConditionE,
    /// `η₂ > max(0, β − 1)`, equivalently `γ₃ > max(1, β)`.
    pub drift_regularity_pass: bool,
    #[serde(with = "crate::reduction::coefficients::f64_inf")]
    pub t_holder_exponent: f64,
    pub t_holder_pass: bool,
    /// Empirical `C₉` in `|A_t − A_s| ≤ C₉ e^{C₉(|t|∨|s|)} |t − s|^{η₁∧η₂}`.
    pub c9: f64,
    #[serde(with = "crate::reduction::coefficients::f64_inf")]
    pub x_holder_exponent: f64,
    pub x_holder_pass: bool,
    /// `|A(x)| ≤ C₃`, `|det A(x)| ≥ C₄`, `|A(x) − A(y)| ≤ C₅|x − y|^{η₁}` on the sample.
    pub matrix_bounds_pass: bool,
    /// `|Db(x)| ≤ C₆` on the sample.
    pub drift_bound_pass: bool,
    /// `|det A_t(x)| ≥ C₄ e^{−C₆ d|t|}` on the sample.
    pub det_lower_bound_pass: bool,
    /// `|A_t(x)| ≤ C₃ e^{C₆|t|}` on the sample.
    pub norm_growth_pass: bool,
    pub pass: bool,
}

pub fn certify_conditions(model: &ModelSpec, plan: &SamplePlan) -> Result<ReductionReport> {
    if plan.points.is_empty() || plan.deltas.is_empty() {
        return Err(Error::domain(
            "sample plan must contain points and separations",
        ));
    }
    let e = model.exponents;
    let gamma = e.gamma1;
    let condition_e = evaluate_condition_e(model.regime, e.alpha, e.beta, gamma);
    let mc = model.matrix.constants();
    let dc = model.drift().constants();
    let d = model.dim();
    let slack = 1e-9;

    // Hölder in t
    let mut diffs_t = vec![0.0f64; plan.deltas.len()];
    let mut c9: f64 = 0.0;
    for &t0 in &plan.t_base {
        for x in &plan.points {
            let a0 = a_t(model, t0, x)?;
            for (k, &dt) in plan.deltas.iter().enumerate() {
                let diff = (a_t(model, t0 + dt, x)? - &a0).norm();
                diffs_t[k] = diffs_t[k].max(diff);
                c9 = c9.max(growth_constant(diff / dt.powf(gamma), t0 + dt));
            }
        }
    }
    let t_holder_exponent = fit_exponent(&plan.deltas, &diffs_t, ZERO_FLOOR);

    // Hölder in x
    let mut diffs_x = vec![0.0f64; plan.deltas.len()];
    let mut matrix_ok = true;
    for &t0 in &plan.t_base {
        for x in &plan.points {
            let a0 = a_t(model, t0, x)?;
            for (k, &dx) in plan.deltas.iter().enumerate() {
                for axis in 0..d {
                    let mut y = x.clone();
                    y[axis] += dx;
                    let diff = (a_t(model, t0, &y)? - &a0).norm();
                    diffs_x[k] = diffs_x[k].max(diff);
                    if t0 == 0.0 {
                        let raw = (model.matrix.eval(&y) - model.matrix.eval(x)).norm();
                        matrix_ok &= raw <= mc.c5 * dx.powf(mc.eta1) + slack;
                    }
                }
            }
        }
    }
    let x_holder_exponent = fit_exponent(&plan.deltas, &diffs_x, ZERO_FLOOR);

    let mut drift_ok = true;
    let mut det_ok = true;
    let mut growth_ok = true;
    for x in &plan.points {
        let a = model.matrix.eval(x);
        matrix_ok &= a.norm() <= mc.c3 + slack && a.determinant().abs() >= mc.c4 - slack;
        drift_ok &= model.drift().jacobian(x).norm() <= dc.c6 + slack;
        for &t in &plan.t_values {
            let at = a_t(model, t, x)?;
            det_ok &= at.determinant().abs()
                >= mc.c4 * (-dc.c6 * d as f64 * t.abs()).exp() * (1.0 - 1e-8);
            growth_ok &= at.norm() <= mc.c3 * (dc.c6 * t.abs()).exp() * (1.0 + 1e-8);
        }
    }

    let drift_regularity_pass = e.eta2 > 0.0_f64.max(e.beta - 1.0);
    let t_holder_pass = t_holder_exponent >= gamma - EXPONENT_TOLERANCE;
    let x_holder_pass = x_holder_exponent >= gamma - EXPONENT_TOLERANCE;
    let pass = (!condition_e.applicable || condition_e.pass)
        && drift_regularity_pass
        && t_holder_pass
        && x_holder_pass
        && matrix_ok
        && drift_ok
        && det_ok
        && growth_ok;
    Ok(ReductionReport {
        condition_e,
        drift_regularity_pass,
        t_holder_exponent,
        t_holder_pass,
        c9,
        x_holder_exponent,
        x_holder_pass,
        matrix_bounds_pass: matrix_ok,
        drift_bound_pass: drift_ok,
        det_lower_bound_pass: det_ok,
        norm_growth_pass: growth_ok,
        pass,
    })
}

/// Serializes infinities as the strings `"inf"`/`"-inf"` so reports stay valid JSON.
pub(crate) mod f64_inf {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str(if *v > 0.0 { "inf" } else { "-inf" })
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) if s == "inf" => Ok(f64::INFINITY),
            Repr::Str(s) if s == "-inf" => Ok(f64::NEG_INFINITY),
            Repr::Str(s) => Err(serde::de::Error::custom(format!("not a number: {s}"))),
        }
    }
}
