//! The assembled SDE `dX = b(X) dt + A(X−) dZ`.

use serde::{Deserialize, Serialize};

use super::matrix::MatrixField;
use crate::error::{Error, Result};
use crate::flow::{DriftField, FlowEngine, FlowMethod};
use crate::levy::{condition_e, epsilon0, EpsilonInputs, NoiseSpec, Regime};

/// Exponents derived from the regularity data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exponents {
    pub alpha: f64,
    pub beta: f64,
    pub eta1: f64,
    pub eta2: f64,
    /// `γ₁ = γ₂ = η₁ ∧ η₂`.
    pub gamma1: f64,
    pub gamma2: f64,
    /// `γ₃ = 1 + η₂`.
    pub gamma3: f64,
}

#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub noise: NoiseSpec,
    pub flow: FlowEngine,
    pub matrix: MatrixField,
    pub regime: Regime,
    pub exponents: Exponents,
    /// `None` when the index conditions needed for ε₀ fail.
    pub epsilon0: Option<f64>,
}

impl ModelSpec {
    /// Assembles and validates a model; regime B additionally requires (E).
    pub fn new(noise: NoiseSpec, drift: DriftField, matrix: MatrixField) -> Result<Self> {
        let mut m = Self::new_relaxed(noise, drift, matrix)?;
        if m.regime == Regime::B {
            let e = &m.exponents;
            condition_e(e.alpha, e.beta, e.eta1, e.eta2)?;
        }
        m.epsilon0 = Some(epsilon0(&m.epsilon_inputs())?);
        Ok(m)
    }

    /// Assembles a model without requiring condition (E); ε₀ is left empty
    /// if it cannot be evaluated.
    pub fn new_relaxed(noise: NoiseSpec, drift: DriftField, matrix: MatrixField) -> Result<Self> {
        let d = noise.dim();
        if drift.dim() != d || matrix.dim() != d {
            return Err(Error::domain(format!(
                "dimension mismatch: noise {d}, drift {}, matrix {}",
                drift.dim(),
                matrix.dim()
            )));
        }
        let alpha = noise.alpha();
        let beta = noise.beta();
        let eta1 = matrix.constants().eta1;
        let eta2 = drift.constants().eta2;
        if !(eta2 > 0.0_f64.max(beta - 1.0)) {
            return Err(Error::domain(format!(
                "drift regularity η₂ = {eta2} must exceed max(0, β − 1) = {}",
                0.0_f64.max(beta - 1.0)
            )));
        }
        let gamma = eta1.min(eta2);
        let exponents = Exponents {
            alpha,
            beta,
            eta1,
            eta2,
            gamma1: gamma,
            gamma2: gamma,
            gamma3: 1.0 + eta2,
        };
        let regime = noise.regime();
        let mut m = Self {
            noise,
            flow: FlowEngine::new(drift).with_method(FlowMethod::PreferExact),
            matrix,
            regime,
            exponents,
            epsilon0: None,
        };
        m.epsilon0 = epsilon0(&m.epsilon_inputs()).ok();
        Ok(m)
    }

    pub fn epsilon_inputs(&self) -> EpsilonInputs {
        EpsilonInputs {
            regime: self.regime,
            alpha: self.exponents.alpha,
            beta: self.exponents.beta,
            eta1: self.exponents.eta1,
            eta2: self.exponents.eta2,
            d: self.dim(),
        }
    }

    pub fn dim(&self) -> usize {
        self.noise.dim()
    }

    pub fn drift(&self) -> &DriftField {
        &self.flow.drift
    }

    pub fn with_flow_method(mut self, method: FlowMethod) -> Self {
        self.flow.method = method;
        self
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.flow.horizon = horizon;
        self
    }

    /// Condition (D): the drift is declared bounded.
    pub fn has_bounded_drift(&self) -> bool {
        self.drift().is_bounded()
    }

    /// Linear drift `B` with constant `A`, the setting with exact densities.
    pub fn linear_data(&self) -> Option<(nalgebra::DMatrix<f64>, nalgebra::DMatrix<f64>)> {
        Some((
            self.drift().linear_matrix()?,
            self.matrix.constant_value()?.clone(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_model_is_regime_b_with_positive_epsilon() {
        let m = ModelSpec::new(
            NoiseSpec::unit_stable(&[0.7, 0.9]).unwrap(),
            DriftField::rotation(1.0),
            MatrixField::identity(2),
        )
        .unwrap();
        assert_eq!(m.regime, Regime::B);
        assert!((m.epsilon0.unwrap() - 0.0478).abs() < 1e-4);
        assert_eq!(m.exponents.gamma3, 2.0);
    }

    #[test]
    fn spread_indices_need_relaxed_construction() {
        let make = || {
            (
                NoiseSpec::unit_stable(&[0.4, 0.95]).unwrap(),
                DriftField::rotation(1.0),
                MatrixField::identity(2),
            )
        };
        let (n, d, a) = make();
        assert!(ModelSpec::new(n, d, a).is_err());
        let (n, d, a) = make();
        let m = ModelSpec::new_relaxed(n, d, a).unwrap();
        assert!(m.epsilon0.is_none());
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        assert!(ModelSpec::new(
            NoiseSpec::unit_stable(&[1.0]).unwrap(),
            DriftField::rotation(1.0),
            MatrixField::identity(2),
        )
        .is_err());
    }
}
