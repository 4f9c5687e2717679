//! Grid certification of weak scaling conditions for `h` and `ψ`.

use serde::{Deserialize, Serialize};

use super::measure::Component;
use crate::error::{Error, Result};
use crate::numerics::linear_fit;

/// Slack allowed between fitted and requested indices.
pub const INDEX_TOLERANCE: f64 = 0.05;

/// Worst-case constants of the two-sided power bounds over a grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingReport {
    pub alpha: f64,
    pub beta: f64,
    /// `min h(λr)/h(r) · λ^α`.
    pub c1: f64,
    /// `max h(λr)/h(r) · λ^β`.
    pub c2: f64,
    /// `min ψ(λξ)/ψ(ξ) · λ^{-α}` with `ξ = 1/r`, `λ = 1/λ_grid`.
    pub c1_star: f64,
    /// `max ψ(λξ)/ψ(ξ) · λ^{-β}`.
    pub c2_star: f64,
    /// Growth exponent of the worst-case lower ratio as `λ → 0`.
    pub fitted_lower: f64,
    /// Growth exponent of the worst-case upper ratio as `λ → 0`.
    pub fitted_upper: f64,
    pub pass: bool,
}

/// `n` log-spaced points in `[lo, 1]`.
pub fn log_grid(lo: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && n >= 2);
    (0..n)
        .map(|i| lo.powf(1.0 - i as f64 / (n - 1) as f64))
        .collect()
}

/// Default 50-point grids on `[1e-3, 1]`.
pub fn default_grid() -> Vec<f64> {
    log_grid(1e-3, 50)
}

pub fn check_wsc(
    component: &Component,
    alpha: f64,
    beta: f64,
    r_grid: &[f64],
    lambda_grid: &[f64],
) -> Result<ScalingReport> {
    if r_grid.is_empty() || lambda_grid.is_empty() {
        return Err(Error::domain("scaling check needs nonempty r and λ grids"));
    }
    if !(alpha > 0.0 && alpha <= beta && beta <= 2.0) {
        return Err(Error::domain(format!(
            "scaling indices must satisfy 0 < α ≤ β ≤ 2, got α = {alpha}, β = {beta}"
        )));
    }
    if r_grid
        .iter()
        .chain(lambda_grid)
        .any(|v| !(*v > 0.0 && *v <= 1.0))
    {
        return Err(Error::domain("scaling grids must lie in (0, 1]"));
    }
    let mut lambdas: Vec<f64> = lambda_grid.to_vec();
    if !lambdas.contains(&1.0) {
        lambdas.push(1.0);
    }
    lambdas.sort_by(f64::total_cmp);

    let mut c1 = f64::INFINITY;
    let mut c2 = f64::NEG_INFINITY;
    let mut c1s = f64::INFINITY;
    let mut c2s = f64::NEG_INFINITY;
    let mut log_lam = Vec::new();
    let mut log_min = Vec::new();
    let mut log_max = Vec::new();
    for &lam in &lambdas {
        let mut mn = f64::INFINITY;
        let mut mx = f64::NEG_INFINITY;
        for &r in r_grid {
            let ratio = component.pruitt_h(lam * r)? / component.pruitt_h(r)?;
            mn = mn.min(ratio);
            mx = mx.max(ratio);
            let xi = 1.0 / r;
            let lam_s = 1.0 / lam;
            let ratio_s = component.psi(lam_s * xi)? / component.psi(xi)?;
            c1s = c1s.min(ratio_s * lam_s.powf(-alpha));
            c2s = c2s.max(ratio_s * lam_s.powf(-beta));
        }
        c1 = c1.min(mn * lam.powf(alpha));
        c2 = c2.max(mx * lam.powf(beta));
        if lam < 1.0 {
            log_lam.push(-lam.ln());
            log_min.push(mn.ln());
            log_max.push(mx.ln());
        }
    }
    let (fitted_lower, fitted_upper) = if log_lam.len() >= 2 {
        (
            linear_fit(&log_lam, &log_min).slope,
            linear_fit(&log_lam, &log_max).slope,
        )
    } else if log_lam.len() == 1 {
        (log_min[0] / log_lam[0], log_max[0] / log_lam[0])
    } else {
        (alpha, beta)
    };
    let finite = [c1, c2, c1s, c2s].iter().all(|c| c.is_finite() && *c > 0.0);
    let pass = finite
        && c1 <= 1.0
        && 1.0 <= c2
        && fitted_lower >= alpha - INDEX_TOLERANCE
        && fitted_upper <= beta + INDEX_TOLERANCE;
    Ok(ScalingReport {
        alpha,
        beta,
        c1,
        c2,
        c1_star: c1s,
        c2_star: c2s,
        fitted_lower,
        fitted_upper,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::measure::StableComponent;

    #[test]
    fn exact_stable_has_unit_constants() {
        let c = Component::Stable(StableComponent::new(1.3, 0.4).unwrap());
        let g = default_grid();
        let r = check_wsc(&c, 1.3, 1.3, &g, &g).unwrap();
        assert!(r.pass);
        for v in [r.c1, r.c2, r.c1_star, r.c2_star] {
            assert!((v - 1.0).abs() < 1e-9, "{r:?}");
        }
    }

    #[test]
    fn too_large_lower_index_fails() {
        let c = Component::Stable(StableComponent::new(0.5, 1.0).unwrap());
        let g = default_grid();
        let r = check_wsc(&c, 0.7, 0.7, &g, &g).unwrap();
        assert!(!r.pass);
        assert!((r.fitted_lower - 0.5).abs() < 1e-9);
    }

    #[test]
    fn mixture_passes_with_spanning_indices() {
        let c = Component::Mixture {
            parts: vec![
                StableComponent::new(0.5, 1.0).unwrap(),
                StableComponent::new(1.5, 1.0).unwrap(),
            ],
        };
        let g = default_grid();
        let r = check_wsc(&c, 0.5, 1.5, &g, &g).unwrap();
        assert!(r.pass, "{r:?}");
        let r = check_wsc(&c, 0.5, 1.2, &g, &g).unwrap();
        assert!(!r.pass, "{r:?}");
    }

    #[test]
    fn empty_grid_is_rejected() {
        let c = Component::Stable(StableComponent::new(1.0, 1.0).unwrap());
        assert!(check_wsc(&c, 1.0, 1.0, &[], &[0.5]).is_err());
    }
}
