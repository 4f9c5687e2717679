//! Generators `Q` of the original equation and `L_t` of the reduced one,
//! evaluated by per-axis principal-value quadrature.

use nalgebra::DVector;

use super::coefficients::v_t;
use super::model::ModelSpec;
use crate::error::{Error, Result};
use crate::levy::StableComponent;
use crate::numerics::Integrator;

/// Lower end of the explicit jump quadrature; below it the symmetric
/// difference is extrapolated quadratically.
pub const INNER_CUTOFF: f64 = 1e-3;
/// Upper end; beyond it the displaced values are replaced by their mean
/// over `(R, 2R)`.
pub const OUTER_CUTOFF: f64 = 1e4;

/// Scalar test function `f(t, y)` with its derivatives.
pub trait TestFunction: Sync {
    fn value(&self, t: f64, y: &[f64]) -> f64;
    fn gradient(&self, t: f64, y: &[f64]) -> Vec<f64>;
    /// `∂_t f`.
    fn time_derivative(&self, t: f64, y: &[f64]) -> f64;
}

/// `f(t, y) = (1 + κ t) φ((y − c)/r)` with the standard bump
/// `φ(u) = exp(−1/(1 − |u|²))` on the unit ball.
#[derive(Debug, Clone)]
pub struct Bump {
    pub center: Vec<f64>,
    pub radius: f64,
    pub time_rate: f64,
}

impl Bump {
    fn parts(&self, y: &[f64]) -> Option<(f64, Vec<f64>)> {
        let r2 = self.radius * self.radius;
        let u: Vec<f64> = y.iter().zip(&self.center).map(|(a, b)| a - b).collect();
        let s = u.iter().map(|v| v * v).sum::<f64>() / r2;
        if s >= 1.0 {
            return None;
        }
        let phi = (-1.0 / (1.0 - s)).exp();
        let g = u
            .iter()
            .map(|ui| phi * (-2.0 * ui / r2) / (1.0 - s).powi(2))
            .collect();
        Some((phi, g))
    }
}

impl TestFunction for Bump {
    fn value(&self, t: f64, y: &[f64]) -> f64 {
        self.parts(y)
            .map_or(0.0, |(p, _)| (1.0 + self.time_rate * t) * p)
    }

    fn gradient(&self, t: f64, y: &[f64]) -> Vec<f64> {
        match self.parts(y) {
            Some((_, g)) => g
                .into_iter()
                .map(|v| (1.0 + self.time_rate * t) * v)
                .collect(),
            None => vec![0.0; y.len()],
        }
    }

    fn time_derivative(&self, _t: f64, y: &[f64]) -> f64 {
        self.parts(y).map_or(0.0, |(p, _)| self.time_rate * p)
    }
}

/// Time-independent function given by closures.
pub struct StaticFunction<F, G> {
    pub f: F,
    pub grad: G,
}

impl<F, G> TestFunction for StaticFunction<F, G>
where
    F: Fn(&[f64]) -> f64 + Sync,
    G: Fn(&[f64]) -> Vec<f64> + Sync,
{
    fn value(&self, _t: f64, y: &[f64]) -> f64 {
        (self.f)(y)
    }
    fn gradient(&self, _t: f64, y: &[f64]) -> Vec<f64> {
        (self.grad)(y)
    }
    fn time_derivative(&self, _t: f64, _y: &[f64]) -> f64 {
        0.0
    }
}

/// `P.V. ∫ (F(v) − F(0)) ν(dv)` for a symmetric stable-type `ν`, with
/// `F(v)` supplied by `displaced`.
fn principal_value<F>(parts: &[StableComponent], mut displaced: F) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let f0 = displaced(0.0)?;
    let nu = |v: f64| parts.iter().map(|s| s.nu(v)).sum::<f64>();
    let mut err = None;
    let mut sym = |v: f64| -> f64 {
        match (displaced(v), displaced(-v)) {
            (Ok(a), Ok(b)) => a + b - 2.0 * f0,
            (Err(e), _) | (_, Err(e)) => {
                err.get_or_insert(e);
                0.0
            }
        }
    };
    let d0 = sym(INNER_CUTOFF);
    let inner: f64 = parts
        .iter()
        .map(|s| {
            d0 / INNER_CUTOFF.powi(2) * s.scale * INNER_CUTOFF.powf(2.0 - s.alpha) / (2.0 - s.alpha)
        })
        .sum();
    let mut breaks = vec![INNER_CUTOFF];
    let mut b = 1e-2;
    while b < OUTER_CUTOFF {
        breaks.push(b);
        b *= 4.0;
    }
    breaks.push(OUTER_CUTOFF);
    let body = Integrator::new(1e-10, 1e-9)
        .with_max_panels(40_000)
        .integrate(|v| sym(v) * nu(v), &breaks)?;
    if let Some(e) = err {
        return Err(e);
    }
    // far field: replace F(±v) on (R, ∞) by its mean over (R, 2R)
    let mut far_err = None;
    let far = Integrator::new(1e-9, 1e-6)
        .with_max_panels(40_000)
        .integrate(
            |v| match (displaced(v), displaced(-v)) {
                (Ok(a), Ok(b)) => a + b,
                (Err(e), _) | (_, Err(e)) => {
                    far_err.get_or_insert(e);
                    0.0
                }
            },
            &[OUTER_CUTOFF, 2.0 * OUTER_CUTOFF],
        )?
        / OUTER_CUTOFF;
    if let Some(e) = far_err {
        return Err(e);
    }
    let outer: f64 = parts
        .iter()
        .map(|s| (far - 2.0 * f0) * s.scale * OUTER_CUTOFF.powf(-s.alpha) / s.alpha)
        .sum();
    Ok(inner + body + outer)
}

fn stable_parts(model: &ModelSpec, k: usize) -> Result<Vec<StableComponent>> {
    model.noise.components[k]
        .stable_parts()
        .ok_or_else(|| Error::domain("generator quadrature needs stable or mixture components"))
}

/// Jump part of `Q`: `Σ_k P.V.∫ (f(x + A(x) e_k v) − f(x)) ν_k(dv)`.
pub fn apply_q_jump(model: &ModelSpec, f: &dyn TestFunction, t: f64, x: &[f64]) -> Result<f64> {
    let d = model.dim();
    let a = model.matrix.eval(x);
    let mut total = 0.0;
    let mut y = vec![0.0; d];
    for k in 0..d {
        let parts = stable_parts(model, k)?;
        total += principal_value(&parts, |v| {
            for i in 0..d {
                y[i] = x[i] + a[(i, k)] * v;
            }
            Ok(f.value(t, &y))
        })?;
    }
    Ok(total)
}

/// `Q f(x) = ∇f(x)·b(x) + Q^{jump} f(x)`, with `f` frozen at time `t`.
pub fn apply_q(model: &ModelSpec, f: &dyn TestFunction, t: f64, x: &[f64]) -> Result<f64> {
    let b = model.drift().eval(&DVector::from_column_slice(x));
    let g = f.gradient(t, x);
    let drift: f64 = g.iter().zip(b.iter()).map(|(a, b)| a * b).sum();
    Ok(drift + apply_q_jump(model, f, t, x)?)
}

/// `L_t f(x) = Σ_k P.V.∫ (f(x + V_t(x, e_k v)) − f(x)) ν_k(dv)`; `s` is the
/// time argument handed to `f`.
pub fn apply_lt(model: &ModelSpec, f: &dyn TestFunction, s: f64, t: f64, x: &[f64]) -> Result<f64> {
    let d = model.dim();
    let mut total = 0.0;
    let mut z = vec![0.0; d];
    let mut y = vec![0.0; d];
    for k in 0..d {
        let parts = stable_parts(model, k)?;
        total += principal_value(&parts, |v| {
            z.iter_mut().for_each(|c| *c = 0.0);
            z[k] = v;
            let disp = v_t(model, t, x, &z)?;
            for i in 0..d {
                y[i] = x[i] + disp[i];
            }
            Ok(f.value(s, &y))
        })?;
    }
    Ok(total)
}

/// Both sides of `∂_t g + Q_x g = (∂_t f + L_t f)(t, κ_t x)` for
/// `g(t, x) = f(t, κ_t x)`.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct TransportIdentity {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

struct Composed<'a> {
    model: &'a ModelSpec,
    f: &'a dyn TestFunction,
}

impl Composed<'_> {
    fn value(&self, t: f64, x: &[f64]) -> Result<f64> {
        let y = self.model.flow.kappa(t, x)?;
        Ok(self.f.value(t, y.as_slice()))
    }
}

pub fn transport_identity(
    model: &ModelSpec,
    f: &dyn TestFunction,
    t: f64,
    x: &[f64],
) -> Result<TransportIdentity> {
    let g = Composed { model, f };
    let h = 1e-4;
    let dt_g = (g.value(t + h, x)? - g.value(t - h, x)?) / (2.0 * h);
    let kfull = model.flow.kappa_full(t, x)?;
    let y = kfull.point.as_slice().to_vec();
    // ∇_x g = Dκ_tᵀ ∇f(t, κ_t x)
    let grad_f = DVector::from_vec(f.gradient(t, &y));
    let grad_g = kfull.jacobian.transpose() * grad_f;
    let b = model.drift().eval(&DVector::from_column_slice(x));
    let drift = grad_g.dot(&b);
    let d = model.dim();
    let a = model.matrix.eval(x);
    let mut jump = 0.0;
    let mut p = vec![0.0; d];
    for k in 0..d {
        let parts = stable_parts(model, k)?;
        jump += principal_value(&parts, |v| {
            for i in 0..d {
                p[i] = x[i] + a[(i, k)] * v;
            }
            g.value(t, &p)
        })?;
    }
    let lhs = dt_g + drift + jump;
    let rhs = f.time_derivative(t, &y) + apply_lt(model, f, t, t, &y)?;
    Ok(TransportIdentity {
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::DriftField;
    use crate::levy::NoiseSpec;
    use crate::reduction::MatrixField;

    fn cauchy_1d(drift: DriftField) -> ModelSpec {
        ModelSpec::new(
            NoiseSpec::unit_stable(&[1.0]).unwrap(),
            drift,
            MatrixField::identity(1),
        )
        .unwrap()
    }

    #[test]
    fn cosine_is_an_eigenfunction() {
        let m = cauchy_1d(DriftField::zero(1));
        let f = StaticFunction {
            f: |y: &[f64]| y[0].cos(),
            grad: |y: &[f64]| vec![-y[0].sin()],
        };
        let q = apply_q(&m, &f, 0.0, &[0.0]).unwrap();
        assert!((q + 1.0).abs() < 1e-6, "{q}");
        let q = apply_q(&m, &f, 0.0, &[0.7]).unwrap();
        assert!((q + 0.7f64.cos()).abs() < 1e-6, "{q}");
    }

    #[test]
    fn constants_and_linear_functions() {
        let m = cauchy_1d(DriftField::linear(nalgebra::DMatrix::from_element(1, 1, 0.5)).unwrap());
        let c = StaticFunction {
            f: |_: &[f64]| 3.0,
            grad: |_: &[f64]| vec![0.0],
        };
        assert_eq!(apply_q(&m, &c, 0.0, &[0.2]).unwrap(), 0.0);
        assert_eq!(apply_lt(&m, &c, 0.0, 0.3, &[0.2]).unwrap(), 0.0);
        let lin = StaticFunction {
            f: |y: &[f64]| 2.0 * y[0],
            grad: |_: &[f64]| vec![2.0],
        };
        let q = apply_q(&m, &lin, 0.0, &[0.8]).unwrap();
        assert!((q - 2.0 * 0.5 * 0.8).abs() < 1e-9, "{q}");
    }

    #[test]
    fn reduced_generator_at_time_zero_is_jump_part() {
        let m = ModelSpec::new(
            NoiseSpec::unit_stable(&[1.5, 1.5]).unwrap(),
            DriftField::tanh_bounded(1.0, 2),
            MatrixField::holder(vec![1.0, 1.0], 0.3, 1.0).unwrap(),
        )
        .unwrap();
        let f = Bump {
            center: vec![0.2, -0.1],
            radius: 1.5,
            time_rate: 0.0,
        };
        let x = [0.1, 0.3];
        let l0 = apply_lt(&m, &f, 0.0, 0.0, &x).unwrap();
        let qj = apply_q_jump(&m, &f, 0.0, &x).unwrap();
        assert!((l0 - qj).abs() < 1e-8);
    }

    #[test]
    fn bump_gradient_matches_differences() {
        let f = Bump {
            center: vec![0.5, -0.5],
            radius: 0.8,
            time_rate: 0.3,
        };
        let y = [0.7, -0.3];
        let g = f.gradient(0.4, &y);
        let h = 1e-6;
        for k in 0..2 {
            let mut p = y;
            p[k] += h;
            let mut m = y;
            m[k] -= h;
            let fd = (f.value(0.4, &p) - f.value(0.4, &m)) / (2.0 * h);
            assert!((fd - g[k]).abs() < 1e-7);
        }
    }
}
