//! Empirical constants for the flow Lipschitz/Hölder bounds and the
//! time-derivative identity `∂_t κ_t(x) = −Dκ_t(x) b(x)`.

use serde::{Deserialize, Serialize};

use super::engine::FlowEngine;
use crate::error::{Error, Result};

/// Step of the central time difference used for the derivative identity.
pub const TIME_STEP: f64 = 5e-4;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowCertificate {
    /// `max |κ_t(x) − κ_t(y)| / |x − y|` over the sample.
    pub lipschitz_ratio: f64,
    /// Smallest `c` with `|κ_t(x) − κ_t(y)| ≤ c e^{c|t|} |x − y|` on the sample.
    pub lipschitz_constant: f64,
    /// `max |Dκ_t(x) − Dκ_t(y)| / |x − y|^{η₂}`.
    pub holder_ratio: f64,
    /// Smallest `c` with `|Dκ_t(x) − Dκ_t(y)| ≤ c e^{c|t|} |x − y|^{η₂}`.
    pub holder_constant: f64,
    /// `max |∂_t κ_t(x) + Dκ_t(x) b(x)|` with the time derivative by central differences.
    pub derivative_residual: f64,
    pub samples: usize,
}

/// Smallest `c ≥ 0` with `c e^{c|t|} ≥ ratio`.
pub fn growth_constant(ratio: f64, t: f64) -> f64 {
    if ratio <= 0.0 {
        return 0.0;
    }
    let t = t.abs();
    if t == 0.0 {
        return ratio;
    }
    // c e^{ct} is increasing; bisection on [0, ratio]
    let (mut lo, mut hi) = (0.0, ratio);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if mid * (mid * t).exp() < ratio {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

pub fn certify_flow_bounds(
    engine: &FlowEngine,
    t_grid: &[f64],
    point_pairs: &[(Vec<f64>, Vec<f64>)],
) -> Result<FlowCertificate> {
    if t_grid.is_empty() || point_pairs.is_empty() {
        return Err(Error::domain("flow certification needs nonempty grids"));
    }
    let eta2 = engine.drift.constants().eta2;
    let mut ts: Vec<f64> = t_grid.to_vec();
    if !ts.contains(&0.0) {
        ts.push(0.0);
    }
    let mut cert = FlowCertificate {
        lipschitz_ratio: 0.0,
        lipschitz_constant: 0.0,
        holder_ratio: 0.0,
        holder_constant: 0.0,
        derivative_residual: 0.0,
        samples: 0,
    };
    for &t in &ts {
        for (x, y) in point_pairs {
            let sep = dist(x, y);
            if sep == 0.0 {
                continue;
            }
            let fx = engine.kappa_full(t, x)?;
            let fy = engine.kappa_full(t, y)?;
            let r = (&fx.point - &fy.point).norm() / sep;
            cert.lipschitz_ratio = cert.lipschitz_ratio.max(r);
            cert.lipschitz_constant = cert.lipschitz_constant.max(growth_constant(r, t));
            let h = (&fx.jacobian - &fy.jacobian).norm() / sep.powf(eta2);
            cert.holder_ratio = cert.holder_ratio.max(h);
            cert.holder_constant = cert.holder_constant.max(growth_constant(h, t));
            cert.samples += 1;

            if t.abs() + TIME_STEP <= engine.horizon {
                let res = derivative_residual(engine, t, x, &fx.jacobian)?;
                cert.derivative_residual = cert.derivative_residual.max(res);
            }
        }
    }
    Ok(cert)
}

/// Pass thresholds of [`flow_suite`].
pub const ROUND_TRIP_TOL: f64 = 1e-8;
pub const JACOBIAN_FD_TOL: f64 = 1e-4;
pub const LIOUVILLE_TOL: f64 = 1e-8;
pub const DERIVATIVE_TOL: f64 = 1e-5;
const FD_STEP: f64 = 1e-4;

/// Worst-case errors of the flow identities over a sample.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowSuiteReport {
    pub drift: String,
    /// `max |κ_t(χ_t(x)) − x|`.
    pub round_trip: f64,
    /// `max |Dκ_t − D_h κ_t| / |Dκ_t|` against central differences.
    pub jacobian_fd: f64,
    /// `max |det Dκ_t − exp(∫ tr J_s ds)| / exp(∫ tr J_s ds)`.
    pub liouville: f64,
    /// `max |∂_t κ_t(x) + Dκ_t(x) b(x)|`.
    pub derivative: f64,
    pub samples: usize,
    pub pass: bool,
}

/// Round trip, Jacobian, Liouville and transport checks at every `(t, x)`.
pub fn flow_suite(
    engine: &FlowEngine,
    t_grid: &[f64],
    points: &[Vec<f64>],
) -> Result<FlowSuiteReport> {
    if t_grid.is_empty() || points.is_empty() {
        return Err(Error::domain("flow suite needs nonempty grids"));
    }
    let mut r = FlowSuiteReport {
        drift: engine.drift.name().to_string(),
        round_trip: 0.0,
        jacobian_fd: 0.0,
        liouville: 0.0,
        derivative: 0.0,
        samples: 0,
        pass: false,
    };
    let d = engine.dim();
    for &t in t_grid {
        for x in points {
            let back = engine.kappa(t, engine.chi(t, x)?.as_slice())?;
            let err = back
                .iter()
                .zip(x)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            r.round_trip = r.round_trip.max(err);

            let fp = engine.kappa_full(t, x)?;
            let mut fd = nalgebra::DMatrix::zeros(d, d);
            for j in 0..d {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[j] += FD_STEP;
                xm[j] -= FD_STEP;
                let col = (engine.kappa(t, &xp)? - engine.kappa(t, &xm)?) / (2.0 * FD_STEP);
                fd.set_column(j, &col);
            }
            r.jacobian_fd = r
                .jacobian_fd
                .max((&fp.jacobian - fd).norm() / fp.jacobian.norm());

            let liouville = fp.log_det.exp();
            r.liouville = r
                .liouville
                .max((fp.jacobian.determinant() - liouville).abs() / liouville);

            if t.abs() + TIME_STEP <= engine.horizon {
                r.derivative = r
                    .derivative
                    .max(derivative_residual(engine, t, x, &fp.jacobian)?);
            }
            r.samples += 1;
        }
    }
    r.pass = r.round_trip <= ROUND_TRIP_TOL
        && r.jacobian_fd <= JACOBIAN_FD_TOL
        && r.liouville <= LIOUVILLE_TOL
        && r.derivative <= DERIVATIVE_TOL;
    Ok(r)
}

fn derivative_residual(
    engine: &FlowEngine,
    t: f64,
    x: &[f64],
    jac: &nalgebra::DMatrix<f64>,
) -> Result<f64> {
    let kp = engine.kappa(t + TIME_STEP, x)?;
    let km = engine.kappa(t - TIME_STEP, x)?;
    let dt = (kp - km) / (2.0 * TIME_STEP);
    let b = engine.drift.eval(&nalgebra::DVector::from_column_slice(x));
    Ok((dt + jac * b).norm())
}

fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::DriftField;
    use nalgebra::DMatrix;

    fn pairs() -> Vec<(Vec<f64>, Vec<f64>)> {
        vec![
            (vec![0.0, 0.0], vec![0.3, -0.1]),
            (vec![1.0, 2.0], vec![1.1, 1.7]),
            (vec![-0.5, 0.4], vec![0.5, 0.4]),
        ]
    }

    #[test]
    fn suite_passes_on_the_tanh_drift() {
        let e = FlowEngine::new(DriftField::tanh_bounded(0.8, 2));
        let pts = vec![vec![0.3, -1.2], vec![2.0, 0.1]];
        let r = flow_suite(&e, &[-1.0, -0.3, 0.4, 1.0], &pts).unwrap();
        assert!(r.pass, "{r:?}");
        assert_eq!(r.samples, 8);
    }

    #[test]
    fn zero_drift_is_isometric_and_exact() {
        let e = FlowEngine::new(DriftField::zero(2));
        let c = certify_flow_bounds(&e, &[-1.0, 0.5, 1.0], &pairs()).unwrap();
        assert!((c.lipschitz_ratio - 1.0).abs() < 1e-14);
        assert_eq!(c.holder_ratio, 0.0);
        assert_eq!(c.derivative_residual, 0.0);
    }

    #[test]
    fn rotation_is_isometric() {
        let e = FlowEngine::new(DriftField::rotation(1.0));
        let c = certify_flow_bounds(&e, &[-1.0, -0.3, 0.4, 1.0], &pairs()).unwrap();
        assert!((c.lipschitz_ratio - 1.0).abs() < 1e-8, "{c:?}");
        assert!(c.derivative_residual < 1e-5);
    }

    #[test]
    fn linear_constant_bounded_by_exponential() {
        let b = DMatrix::from_row_slice(2, 2, &[0.5, 1.0, 0.0, -1.0]);
        let e = FlowEngine::new(DriftField::linear(b.clone()).unwrap());
        let c = certify_flow_bounds(&e, &[-1.0, -0.5, 0.5, 1.0], &pairs()).unwrap();
        let bound = b.clone().exp().norm().max((-b).exp().norm());
        assert!(c.lipschitz_ratio <= bound + 1e-9, "{c:?}");
        assert!(c.derivative_residual < 1e-6, "{c:?}");
    }

    #[test]
    fn growth_constant_inverts() {
        let c = growth_constant(3.0, 0.5);
        assert!((c * (0.5 * c).exp() - 3.0).abs() < 1e-12);
        assert_eq!(growth_constant(2.0, 0.0), 2.0);
    }
}
