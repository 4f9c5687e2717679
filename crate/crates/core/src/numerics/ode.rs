//! Dormand–Prince 5(4) integrator for autonomous systems on flat slices.

use crate::error::{Error, Result};

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Error tolerances for the adaptive integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs: 1e-10,
            rel: 1e-10,
        }
    }
}

/// Step statistics of one integration.
#[derive(Debug, Clone, Copy, Default)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Dormand–Prince integrator for `y' = f(y)`.
#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub tol: Tolerance,
    pub max_steps: usize,
    pub min_step: f64,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Self {
            tol: Tolerance::default(),
            max_steps: 200_000,
            min_step: 1e-14,
        }
    }
}

impl Dopri5 {
    pub fn new(tol: Tolerance) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }

    /// Advances `y` in place from time 0 to `t_end` (either sign).
    /// `f(y, out)` writes the vector field into `out`.
    pub fn integrate<F>(&self, mut f: F, y: &mut [f64], t_end: f64) -> Result<OdeStats>
    where
        F: FnMut(&[f64], &mut [f64]),
    {
        let mut stats = OdeStats::default();
        if t_end == 0.0 {
            return Ok(stats);
        }
        if !t_end.is_finite() {
            return Err(Error::numeric("ode", "non-finite end time"));
        }
        let n = y.len();
        let dir = t_end.signum();
        let span = t_end.abs();
        let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
        let mut tmp = vec![0.0; n];
        let mut ynew = vec![0.0; n];

        // the integration variable is s = |t|, running 0 -> span
        let mut field = |src: &[f64], out: &mut [f64], stats: &mut OdeStats| {
            f(src, out);
            stats.evaluations += 1;
            if dir < 0.0 {
                out.iter_mut().for_each(|v| *v = -*v);
            }
        };

        field(y, &mut k[0], &mut stats);
        let mut h = self.initial_step(y, &k[0], span);
        let mut s = 0.0;
        let mut fac_old: f64 = 1e-4;
        while s < span {
            if stats.accepted + stats.rejected >= self.max_steps {
                return Err(Error::numeric(
                    "ode",
                    format!("step budget exhausted at t = {}", dir * s),
                ));
            }
            let last = s + h >= span;
            if last {
                h = span - s;
            }
            if h < self.min_step * span.max(1.0) && !last {
                return Err(Error::numeric(
                    "ode",
                    format!("step size underflow ({h:.3e}) at t = {}", dir * s),
                ));
            }
            let (k0, rest) = k.split_at_mut(1);
            let k0 = &k0[0];
            let [k1, k2, k3, k4, k5, k6] = rest else {
                unreachable!()
            };
            for i in 0..n {
                tmp[i] = y[i] + h * A21 * k0[i];
            }
            field(&tmp, k1, &mut stats);
            for i in 0..n {
                tmp[i] = y[i] + h * (A31 * k0[i] + A32 * k1[i]);
            }
            field(&tmp, k2, &mut stats);
            for i in 0..n {
                tmp[i] = y[i] + h * (A41 * k0[i] + A42 * k1[i] + A43 * k2[i]);
            }
            field(&tmp, k3, &mut stats);
            for i in 0..n {
                tmp[i] = y[i] + h * (A51 * k0[i] + A52 * k1[i] + A53 * k2[i] + A54 * k3[i]);
            }
            field(&tmp, k4, &mut stats);
            for i in 0..n {
                tmp[i] = y[i]
                    + h * (A61 * k0[i] + A62 * k1[i] + A63 * k2[i] + A64 * k3[i] + A65 * k4[i]);
            }
            field(&tmp, k5, &mut stats);
            for i in 0..n {
                ynew[i] = y[i]
                    + h * (A71 * k0[i] + A73 * k2[i] + A74 * k3[i] + A75 * k4[i] + A76 * k5[i]);
            }
            field(&ynew, k6, &mut stats);
            let mut err = 0.0;
            for i in 0..n {
                let e = h
                    * (E1 * k0[i] + E3 * k2[i] + E4 * k3[i] + E5 * k4[i] + E6 * k5[i] + E7 * k6[i]);
                let sc = self.tol.abs + self.tol.rel * y[i].abs().max(ynew[i].abs());
                err += (e / sc).powi(2);
            }
            let err = (err / n.max(1) as f64).sqrt();
            if !err.is_finite() || ynew.iter().any(|v| !v.is_finite()) {
                stats.rejected += 1;
                h *= 0.2;
                continue;
            }
            // PI step-size control (Hairer & Wanner, DOPRI5 defaults)
            let fac11 = err.powf(0.17);
            let mut fac = fac11 / fac_old.powf(0.04) / 0.9;
            fac = fac.clamp(0.1, 5.0);
            let h_new = h / fac;
            if err <= 1.0 {
                fac_old = err.max(1e-4);
                stats.accepted += 1;
                s = if last { span } else { s + h };
                y.copy_from_slice(&ynew);
                let (first, tail) = k.split_at_mut(6);
                first[0].copy_from_slice(&tail[0]);
                h = h_new;
            } else {
                stats.rejected += 1;
                h /= (fac11 / 0.9).clamp(1.0, 10.0);
            }
        }
        Ok(stats)
    }

    fn initial_step(&self, y: &[f64], f0: &[f64], span: f64) -> f64 {
        let n = y.len().max(1) as f64;
        let mut d0 = 0.0;
        let mut d1 = 0.0;
        for (yi, fi) in y.iter().zip(f0) {
            let sc = self.tol.abs + self.tol.rel * yi.abs();
            d0 += (yi / sc).powi(2);
            d1 += (fi / sc).powi(2);
        }
        let d0 = (d0 / n).sqrt();
        let d1 = (d1 / n).sqrt();
        let h = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        h.min(span).max(1e-10 * span)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exponential_growth_and_decay() {
        let ode = Dopri5::new(Tolerance {
            abs: 1e-12,
            rel: 1e-12,
        });
        let mut y = [1.0];
        ode.integrate(|y, o| o[0] = 0.7 * y[0], &mut y, 2.0)
            .unwrap();
        assert_relative_eq!(y[0], (1.4f64).exp(), max_relative = 1e-10);
        let mut y = [1.0];
        ode.integrate(|y, o| o[0] = 0.7 * y[0], &mut y, -2.0)
            .unwrap();
        assert_relative_eq!(y[0], (-1.4f64).exp(), max_relative = 1e-10);
    }

    #[test]
    fn harmonic_oscillator_returns_after_period() {
        let ode = Dopri5::default();
        let mut y = [1.0, 0.0];
        let period = 2.0 * std::f64::consts::PI;
        ode.integrate(
            |y, o| {
                o[0] = y[1];
                o[1] = -y[0];
            },
            &mut y,
            period,
        )
        .unwrap();
        assert!((y[0] - 1.0).abs() < 1e-8 && y[1].abs() < 1e-8, "{y:?}");
    }

    #[test]
    fn blow_up_is_reported() {
        let ode = Dopri5::default();
        let mut y = [1.0];
        // y' = y^2 explodes at t = 1
        let r = ode.integrate(|y, o| o[0] = y[0] * y[0], &mut y, 2.0);
        assert!(r.is_err());
    }
}
