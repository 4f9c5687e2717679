//! Exact sampling of symmetric stable increments.

use std::f64::consts::FRAC_PI_2;

use rand::distr::{Distribution, OpenClosed01, StandardUniform};
use rand::Rng;

use super::measure::{Component, NoiseSpec, StableComponent};
use crate::error::{Error, Result};

/// Draw from the symmetric stable law with characteristic function `exp(-|ξ|^α)`
/// (Chambers–Mallows–Stuck transform).
pub fn standard_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let u: f64 = StandardUniform.sample(rng);
    let v = (u - 0.5) * std::f64::consts::PI;
    if v.abs() >= FRAC_PI_2 {
        // u == 0 maps onto the open boundary; redraw
        return standard_stable(alpha, rng);
    }
    if (alpha - 1.0).abs() < 1e-15 {
        return v.tan();
    }
    let e: f64 = OpenClosed01.sample(rng);
    let w = -e.ln();
    if w == 0.0 {
        return standard_stable(alpha, rng);
    }
    let cv = v.cos();
    (alpha * v).sin() / cv.powf(1.0 / alpha)
        * (((1.0 - alpha) * v).cos() / w).powf((1.0 - alpha) / alpha)
}

impl StableComponent {
    /// Increment `Z_{t+dt} − Z_t`.
    pub fn sample_increment<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R) -> f64 {
        self.marginal_scale(dt) * standard_stable(self.alpha, rng)
    }
}

impl Component {
    pub fn sample_increment<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R) -> Result<f64> {
        if !(dt > 0.0) {
            return Err(Error::domain(format!("increment needs dt > 0, got {dt}")));
        }
        match self {
            Component::Stable(s) => Ok(s.sample_increment(dt, rng)),
            Component::Mixture { parts } => {
                Ok(parts.iter().map(|s| s.sample_increment(dt, rng)).sum())
            }
            Component::Tabulated(_) => Err(Error::domain(
                "sampling is only available for stable and mixture components",
            )),
        }
    }
}

impl NoiseSpec {
    pub fn sample_increment<R: Rng + ?Sized>(&self, i: usize, dt: f64, rng: &mut R) -> Result<f64> {
        self.component(i)?.sample_increment(dt, rng)
    }

    /// Fills `out` with one increment per component.
    pub fn sample_vector<R: Rng + ?Sized>(
        &self,
        dt: f64,
        rng: &mut R,
        out: &mut [f64],
    ) -> Result<()> {
        for (c, o) in self.components.iter().zip(out.iter_mut()) {
            *o = c.sample_increment(dt, rng)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{ks_one_sample, ks_two_sample, stream_rng};

    #[test]
    fn cauchy_increments_match_closed_form() {
        let c = StableComponent::unit(1.0).unwrap();
        let mut rng = stream_rng(11, 0);
        let dt = 0.3;
        let xs: Vec<f64> = (0..10_000)
            .map(|_| c.sample_increment(dt, &mut rng))
            .collect();
        let r = ks_one_sample(&xs, |x| 0.5 + (x / dt).atan() / std::f64::consts::PI);
        assert!(r.p_value > 0.01, "{r:?}");
    }

    #[test]
    fn self_similarity() {
        let c = StableComponent::unit(0.6).unwrap();
        let mut rng = stream_rng(5, 1);
        let h: f64 = 0.01;
        let a: Vec<f64> = (0..10_000)
            .map(|_| c.sample_increment(h, &mut rng) / h.powf(1.0 / 0.6))
            .collect();
        let b: Vec<f64> = (0..10_000)
            .map(|_| c.sample_increment(1.0, &mut rng))
            .collect();
        assert!(ks_two_sample(&a, &b).p_value > 0.01);
    }

    #[test]
    fn non_positive_dt_is_rejected() {
        let spec = NoiseSpec::unit_stable(&[1.0]).unwrap();
        let mut rng = stream_rng(0, 0);
        assert!(spec.sample_increment(0, 0.0, &mut rng).is_err());
        assert!(spec.sample_increment(0, -1.0, &mut rng).is_err());
    }
}
