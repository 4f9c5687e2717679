//! Numerical integration of the characteristic flows `χ_t`, `κ_t = χ_{-t}`.

use nalgebra::{DMatrix, DVector};

use super::drift::DriftField;
use crate::error::{Error, Result};
use crate::numerics::{Dopri5, Tolerance};

/// Whether closed-form flows of catalog drifts may replace integration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FlowMethod {
    /// Always integrate the ODE (and its variational equation).
    #[default]
    Integrate,
    /// Use the closed form when the drift provides one.
    PreferExact,
}

/// Flow map at one `(t, x)`.
#[derive(Debug, Clone)]
pub struct FlowPoint {
    pub point: DVector<f64>,
    pub jacobian: DMatrix<f64>,
    pub log_det: f64,
}

#[derive(Debug, Clone)]
pub struct FlowEngine {
    pub drift: DriftField,
    pub tol: Tolerance,
    pub horizon: f64,
    pub method: FlowMethod,
}

impl FlowEngine {
    pub fn new(drift: DriftField) -> Self {
        Self {
            drift,
            tol: Tolerance::default(),
            horizon: 4.0,
            method: FlowMethod::Integrate,
        }
    }

    pub fn with_tolerance(mut self, tol: Tolerance) -> Result<Self> {
        if !(tol.abs > 0.0 && tol.rel > 0.0) {
            return Err(Error::domain("integrator tolerances must be positive"));
        }
        self.tol = tol;
        Ok(self)
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_method(mut self, method: FlowMethod) -> Self {
        self.method = method;
        self
    }

    pub fn dim(&self) -> usize {
        self.drift.dim()
    }

    fn check(&self, t: f64, x: &[f64]) -> Result<()> {
        if !(t.abs() <= self.horizon) {
            return Err(Error::domain(format!(
                "|t| = {} exceeds the flow horizon {}",
                t.abs(),
                self.horizon
            )));
        }
        if x.len() != self.dim() {
            return Err(Error::domain(format!(
                "point has dimension {} but drift has {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// `χ_t(x)` only.
    fn forward_point(&self, t: f64, x: &[f64]) -> Result<DVector<f64>> {
        self.check(t, x)?;
        if self.method == FlowMethod::PreferExact {
            if let Some((y, _)) = self.drift.exact_flow(t, x) {
                return Ok(y);
            }
        }
        let mut y = x.to_vec();
        let drift = &self.drift;
        Dopri5::new(self.tol)
            .integrate(|s, o| drift.eval_into(s, o), &mut y, t)
            .map_err(|e| flow_error(e, t, x))?;
        Ok(DVector::from_vec(y))
    }

    /// `χ_t(x)` with Jacobian `Dχ_t(x)` and `ln det Dχ_t(x)`.
    ///
    /// The Jacobian solves the variational equation `Ṁ = Db(χ) M` and the
    /// log-determinant `ℓ̇ = tr Db(χ)` alongside the flow.
    pub fn forward(&self, t: f64, x: &[f64]) -> Result<FlowPoint> {
        self.check(t, x)?;
        if self.method == FlowMethod::PreferExact {
            if let Some((point, jacobian)) = self.drift.exact_flow(t, x) {
                let log_det = jacobian.determinant().abs().ln();
                return Ok(FlowPoint {
                    point,
                    jacobian,
                    log_det,
                });
            }
        }
        let d = self.dim();
        let mut state = vec![0.0; d + d * d + 1];
        state[..d].copy_from_slice(x);
        for i in 0..d {
            state[d + i * d + i] = 1.0;
        }
        let drift = &self.drift;
        let rhs = |s: &[f64], o: &mut [f64]| {
            let y = &s[..d];
            drift.eval_into(y, &mut o[..d]);
            let j = drift.jacobian(y);
            // M stored row-major
            for r in 0..d {
                for c in 0..d {
                    let mut acc = 0.0;
                    for k in 0..d {
                        acc += j[(r, k)] * s[d + k * d + c];
                    }
                    o[d + r * d + c] = acc;
                }
            }
            o[d + d * d] = j.trace();
        };
        Dopri5::new(self.tol)
            .integrate(rhs, &mut state, t)
            .map_err(|e| flow_error(e, t, x))?;
        Ok(FlowPoint {
            point: DVector::from_column_slice(&state[..d]),
            jacobian: DMatrix::from_row_slice(d, d, &state[d..d + d * d]),
            log_det: state[d + d * d],
        })
    }

    pub fn chi(&self, t: f64, x: &[f64]) -> Result<DVector<f64>> {
        self.forward_point(t, x)
    }

    pub fn kappa(&self, t: f64, x: &[f64]) -> Result<DVector<f64>> {
        self.forward_point(-t, x)
    }

    /// `Dκ_t(x)`.
    pub fn jacobian(&self, t: f64, x: &[f64]) -> Result<DMatrix<f64>> {
        Ok(self.forward(-t, x)?.jacobian)
    }

    /// `det Dκ_t(x) = exp(∫_0^t tr J_s(x) ds)` with `J_s = −Db(κ_s)`.
    pub fn jac_det(&self, t: f64, x: &[f64]) -> Result<f64> {
        Ok(self.forward(-t, x)?.log_det.exp())
    }

    /// `κ_t(x)` together with `Dκ_t(x)` and its log-determinant.
    pub fn kappa_full(&self, t: f64, x: &[f64]) -> Result<FlowPoint> {
        self.forward(-t, x)
    }
}

fn flow_error(e: Error, t: f64, x: &[f64]) -> Error {
    match e {
        Error::Numeric { detail, .. } => Error::numeric(
            "flow",
            format!("integrating to t = {t} from x = {x:?}: {detail}"),
        ),
        other => other,
    }
}
