//! Statistics on ensembles: semigroup averages, law comparison, Hölder fits.

use serde::{Deserialize, Serialize};

use super::ensemble::{simulate, PathEnsemble, Scheme, SimConfig};
use crate::error::{Error, Result};
use crate::numerics::{ks_two_sample, KsResult};
use crate::reduction::ModelSpec;

/// Significance level used for the law comparison.
pub const KS_LEVEL: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemigroupEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
    pub excluded: usize,
}

/// Mean and standard error of `f` over the ensemble.
pub fn ensemble_mean<F: Fn(&[f64]) -> f64>(ensemble: &PathEnsemble, f: F) -> SemigroupEstimate {
    let vals: Vec<f64> = ensemble.rows().map(&f).collect();
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = if vals.len() > 1 {
        vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    SemigroupEstimate {
        mean,
        std_error: (var / n).sqrt(),
        samples: vals.len(),
        excluded: ensemble.excluded,
    }
}

/// `U_t f(x)` as an ensemble average; the horizon of `config` is replaced by `t`.
pub fn estimate_semigroup<F: Fn(&[f64]) -> f64>(
    model: &ModelSpec,
    f: F,
    t: f64,
    x: &[f64],
    config: &SimConfig,
) -> Result<SemigroupEstimate> {
    let e = simulate(model, &config.with_horizon(t), x)?;
    Ok(ensemble_mean(&e, f))
}

/// Empirical characteristic function `E exp(i z·X)` with the standard error
/// of each part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCf {
    pub re: f64,
    pub im: f64,
    pub re_se: f64,
    pub im_se: f64,
}

pub fn empirical_cf(ensemble: &PathEnsemble, z: &[f64]) -> EmpiricalCf {
    let phase = |r: &[f64]| r.iter().zip(z).map(|(a, b)| a * b).sum::<f64>();
    let re = ensemble_mean(ensemble, |r| phase(r).cos());
    let im = ensemble_mean(ensemble, |r| phase(r).sin());
    EmpiricalCf {
        re: re.mean,
        im: im.mean,
        re_se: re.std_error,
        im_se: im.std_error,
    }
}

/// Two-sample comparison of the direct and reduced terminal laws.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LawReport {
    pub per_coordinate: Vec<KsResult>,
    pub excluded_direct: usize,
    pub excluded_reduced: usize,
    pub pass: bool,
}

pub fn compare_laws(direct: &PathEnsemble, reduced: &PathEnsemble) -> Result<LawReport> {
    if direct.dim != reduced.dim {
        return Err(Error::domain("ensembles have different dimensions"));
    }
    let per_coordinate: Vec<KsResult> = (0..direct.dim)
        .map(|i| ks_two_sample(&direct.coordinate(i), &reduced.coordinate(i)))
        .collect();
    let pass = per_coordinate.iter().all(|k| k.p_value >= KS_LEVEL);
    Ok(LawReport {
        per_coordinate,
        excluded_direct: direct.excluded,
        excluded_reduced: reduced.excluded,
        pass,
    })
}

/// Simulates both schemes (on independent streams) and compares them.
pub fn law_equivalence(model: &ModelSpec, config: &SimConfig, x0: &[f64]) -> Result<LawReport> {
    let direct = simulate(model, &config.with_scheme(Scheme::Direct), x0)?;
    let reduced = simulate(model, &config.with_scheme(Scheme::Reduced), x0)?;
    compare_laws(&direct, &reduced)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderSample {
    pub t: f64,
    pub distance: f64,
    pub difference: f64,
    /// `|U_t f(x) − U_t f(y)| / (|x−y|^γ t^{−γ′/α} ‖f‖_∞)`.
    pub constant: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HolderReport {
    pub gamma: f64,
    pub gamma_prime: f64,
    pub alpha: f64,
    pub samples: Vec<HolderSample>,
    /// Largest over smallest fitted constant.
    pub spread: f64,
    pub pass: bool,
}

/// Allowed spread of the fitted Hölder constant.
pub const HOLDER_SPREAD: f64 = 2.0;

/// Fits the constant in `|U_t f(x) − U_t f(y)| ≤ c |x−y|^γ t^{−γ′/α} ‖f‖_∞`
/// for `y = x + r e` over the given distances and times. All ensembles share
/// the seed of `config`, so the differences use common random numbers.
#[allow(clippy::too_many_arguments)]
pub fn holder_check<F: Fn(&[f64]) -> f64 + Copy>(
    model: &ModelSpec,
    f: F,
    sup_norm: f64,
    x: &[f64],
    direction: &[f64],
    distances: &[f64],
    times: &[f64],
    gamma: f64,
    gamma_prime: f64,
    config: &SimConfig,
) -> Result<HolderReport> {
    if !(sup_norm > 0.0) {
        return Err(Error::domain("test function must have a positive sup norm"));
    }
    let len = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(len > 0.0) || direction.len() != x.len() {
        return Err(Error::domain(
            "direction must be a nonzero vector of the model dimension",
        ));
    }
    let alpha = model.exponents.alpha;
    let mut samples = Vec::new();
    for &t in times {
        let base = estimate_semigroup(model, f, t, x, config)?;
        for &r in distances {
            let y: Vec<f64> = x
                .iter()
                .zip(direction)
                .map(|(a, e)| a + r * e / len)
                .collect();
            let other = estimate_semigroup(model, f, t, &y, config)?;
            let difference = (other.mean - base.mean).abs();
            samples.push(HolderSample {
                t,
                distance: r,
                difference,
                constant: difference / (r.powf(gamma) * t.powf(-gamma_prime / alpha) * sup_norm),
            });
        }
    }
    let max = samples.iter().map(|s| s.constant).fold(f64::MIN, f64::max);
    let min = samples.iter().map(|s| s.constant).fold(f64::MAX, f64::min);
    let spread = max / min;
    Ok(HolderReport {
        gamma,
        gamma_prime,
        alpha,
        samples,
        spread,
        pass: spread.is_finite() && spread <= HOLDER_SPREAD,
    })
}
