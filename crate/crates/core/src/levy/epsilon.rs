//! Residual exponent ε₀ for the principal-density approximation.

use super::measure::Regime;
use crate::error::{Error, Result};

/// Index data entering ε₀.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonInputs {
    pub regime: Regime,
    pub alpha: f64,
    pub beta: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub d: usize,
}

/// The four candidate terms; ε₀ is their minimum.
pub fn epsilon0_terms(p: &EpsilonInputs) -> Result<[f64; 4]> {
    validate(p)?;
    let EpsilonInputs {
        regime,
        alpha: a,
        beta: b,
        eta1,
        eta2,
        d,
    } = *p;
    let eta = eta1.min(eta2);
    let d = d as f64;
    let terms = match regime {
        Regime::A => {
            let q = eta / (b * (1.0 + eta));
            [
                eta * a / (2.0 * (d + 3.0) * b),
                eta * a / (2.0 * (d + 3.0)),
                q / (2.0 + 2.0 / a + q),
                eta2 / (eta2 + b * (1.0 + (d + 1.0) / a)),
            ]
        }
        Regime::B => {
            let q = 1.0 / b - 1.0 / ((1.0 + eta) * a);
            [
                ((1.0 + eta) / b - 1.0 / a) / (2.0 * (d + 3.0) / a),
                (eta - (1.0 / a - 1.0 / b)) / (2.0 * (d + 3.0) / a),
                q / (2.0 + 2.0 / a + 1.0 / b - 1.0 / ((1.0 + eta) * a)),
                (1.0 + eta2 - b / a) / (1.0 + eta2 + b * (1.0 + d / a)),
            ]
        }
    };
    Ok(terms)
}

pub fn epsilon0(p: &EpsilonInputs) -> Result<f64> {
    let t = epsilon0_terms(p)?;
    let e = t.iter().copied().fold(f64::INFINITY, f64::min);
    if !(e > 0.0) {
        return Err(Error::domain(format!(
            "residual exponent is not positive ({e}); index constraints are violated"
        )));
    }
    Ok(e)
}

/// Index condition (E): `β/α < 1 + η` and `1/α − 1/β < η` with `η = η₁ ∧ η₂`.
pub fn condition_e(alpha: f64, beta: f64, eta1: f64, eta2: f64) -> Result<()> {
    let eta = eta1.min(eta2);
    if !(beta / alpha < 1.0 + eta) {
        return Err(Error::domain(format!(
            "condition (E) fails: β/α = {:.6} is not below 1 + η = {:.6}",
            beta / alpha,
            1.0 + eta
        )));
    }
    if !(1.0 / alpha - 1.0 / beta < eta) {
        return Err(Error::domain(format!(
            "condition (E) fails: 1/α − 1/β = {:.6} is not below η = {:.6}",
            1.0 / alpha - 1.0 / beta,
            eta
        )));
    }
    Ok(())
}

fn validate(p: &EpsilonInputs) -> Result<()> {
    if p.d == 0 {
        return Err(Error::domain("dimension must be at least 1"));
    }
    if !(p.alpha > 0.0 && p.alpha <= p.beta && p.beta < 2.0) {
        return Err(Error::domain(format!(
            "indices must satisfy 0 < α ≤ β < 2, got α = {}, β = {}",
            p.alpha, p.beta
        )));
    }
    if !(p.eta1 > 0.0 && p.eta1 <= 1.0) {
        return Err(Error::domain(format!(
            "η₁ must lie in (0, 1], got {}",
            p.eta1
        )));
    }
    if !(p.eta2 > 0.0_f64.max(p.beta - 1.0) && p.eta2 <= 1.0) {
        return Err(Error::domain(format!(
            "drift regularity η₂ = {} must exceed max(0, β − 1) = {} and be at most 1",
            p.eta2,
            0.0_f64.max(p.beta - 1.0)
        )));
    }
    if p.regime == Regime::B {
        condition_e(p.alpha, p.beta, p.eta1, p.eta2)?;
    }
    Ok(())
}
