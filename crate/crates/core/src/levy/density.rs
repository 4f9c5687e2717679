//! Marginal densities and distribution functions of the noise components.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use super::measure::{Component, NoiseSpec};
use crate::error::{Error, Result};
use crate::numerics::Integrator;

/// `t ψ(Ξ)` at the frequency cutoff; `e^{-30} ≈ 9e-14`.
const CUTOFF_EXPONENT: f64 = 30.0;
/// Above this many half-period panels stable laws switch to the integral
/// representation on `(0, π/2)`.
const MAX_FOURIER_PANELS: f64 = 200.0;
const HARD_PANEL_LIMIT: f64 = 40_000.0;

fn fourier_quad(panels: usize) -> Integrator {
    Integrator::new(1e-14, 1e-11).with_max_panels(4 * panels + 200)
}

/// Frequency where `t ψ(ξ)` reaches the cutoff exponent.
fn frequency_cutoff<F: Fn(f64) -> Result<f64>>(psi: &F, t: f64) -> Result<f64> {
    frequency_cutoff_at(psi, t, CUTOFF_EXPONENT)
}

fn half_period_breaks(x: f64, xi_max: f64, scale_point: f64) -> Vec<f64> {
    let mut breaks = vec![0.0];
    if scale_point > 0.0 && scale_point < xi_max {
        breaks.push(scale_point);
    }
    if x > 0.0 {
        let step = PI / x;
        let mut k = 1.0;
        while k * step < xi_max {
            breaks.push(k * step);
            k += 1.0;
        }
    }
    breaks.push(xi_max);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    breaks
}

/// `(1/π) ∫_0^∞ cos(xξ) e^{-t ψ(ξ)} dξ`.
pub fn fourier_density<F: Fn(f64) -> Result<f64>>(psi: F, t: f64, x: f64) -> Result<f64> {
    let x = x.abs();
    let xi_max = frequency_cutoff(&psi, t)?;
    let panels = x * xi_max / PI;
    if panels > HARD_PANEL_LIMIT {
        return Err(Error::numeric(
            "density",
            format!("cosine transform at x = {x} needs {panels:.0} panels"),
        ));
    }
    let scale_point = frequency_cutoff_at(&psi, t, 1.0).unwrap_or(0.0);
    let breaks = half_period_breaks(x, xi_max, scale_point);
    let mut err = None;
    let v = fourier_quad(breaks.len()).integrate(
        |xi| match psi(xi) {
            Ok(p) => (x * xi).cos() * (-t * p).exp(),
            Err(e) => {
                err.get_or_insert(e);
                0.0
            }
        },
        &breaks,
    )?;
    if let Some(e) = err {
        return Err(e);
    }
    Ok((v / PI).max(0.0))
}

/// `1/2 + (1/π) ∫_0^∞ sin(xξ)/ξ e^{-t ψ(ξ)} dξ`.
pub fn fourier_cdf<F: Fn(f64) -> Result<f64>>(psi: F, t: f64, x: f64) -> Result<f64> {
    if x == 0.0 {
        return Ok(0.5);
    }
    let xi_max = frequency_cutoff(&psi, t)?;
    let panels = x.abs() * xi_max / PI;
    if panels > HARD_PANEL_LIMIT {
        return Err(Error::numeric(
            "density",
            format!("sine transform at x = {x} needs {panels:.0} panels"),
        ));
    }
    let scale_point = frequency_cutoff_at(&psi, t, 1.0).unwrap_or(0.0);
    let breaks = half_period_breaks(x.abs(), xi_max, scale_point);
    let v = fourier_quad(breaks.len()).integrate(
        |xi| {
            let s = if xi == 0.0 { x } else { (x * xi).sin() / xi };
            s * (-t * psi(xi).unwrap_or(f64::INFINITY)).exp()
        },
        &breaks,
    )?;
    // the truncated tail of a sine integral is O(1/(x Ξ)) times e^{-30}
    Ok((0.5 + v / PI).clamp(0.0, 1.0))
}

fn frequency_cutoff_at<F: Fn(f64) -> Result<f64>>(psi: &F, t: f64, level: f64) -> Result<f64> {
    let mut hi = 1.0;
    let mut n = 0;
    while t * psi(hi)? < level {
        hi *= 2.0;
        n += 1;
        if n > 200 {
            return Err(Error::numeric("density", "symbol does not grow"));
        }
    }
    let mut lo = 0.0;
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if t * psi(mid)? < level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// `ln u(θ)` for `u = x^{α/(α-1)} V(θ)`, the integrand variable of the
/// `(0, π/2)` representation of symmetric stable laws.
fn log_u(alpha: f64, log_z: f64, theta: f64) -> f64 {
    let e = alpha / (alpha - 1.0);
    let c = theta.cos();
    let log_v =
        e * (c.ln() - (alpha * theta).sin().ln()) + (((alpha - 1.0) * theta).cos() / c).ln();
    log_z + log_v
}

fn theta_split(alpha: f64, log_z: f64) -> Option<f64> {
    let (mut lo, mut hi) = (1e-12, FRAC_PI_2 - 1e-12);
    let f_lo = log_u(alpha, log_z, lo);
    let f_hi = log_u(alpha, log_z, hi);
    if !(f_lo.is_finite() && f_hi.is_finite()) || f_lo.signum() == f_hi.signum() {
        return None;
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if log_u(alpha, log_z, mid).signum() == f_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

fn zolotarev_integral(alpha: f64, x: f64, f: impl Fn(f64) -> f64) -> Result<f64> {
    let log_z = alpha / (alpha - 1.0) * x.ln();
    let g = |theta: f64| {
        if theta <= 0.0 || theta >= FRAC_PI_2 {
            return 0.0;
        }
        let lu = log_u(alpha, log_z, theta);
        if lu.is_nan() {
            return 0.0;
        }
        f(lu)
    };
    let mut breaks = vec![0.0];
    if let Some(s) = theta_split(alpha, log_z) {
        // The peak width scales with the distance to the nearer endpoint.
        let delta = s.min(FRAC_PI_2 - s);
        let mut left = Vec::new();
        let mut d = delta / 8.0;
        while s - d > 0.0 {
            left.push(s - d);
            d *= 2.0;
        }
        breaks.extend(left.into_iter().rev());
        breaks.push(s);
        let mut d = delta / 8.0;
        while s + d < FRAC_PI_2 {
            breaks.push(s + d);
            d *= 2.0;
        }
    }
    breaks.push(FRAC_PI_2);
    Integrator::new(1e-15, 1e-12)
        .with_max_panels(2000)
        .integrate(g, &breaks)
}

/// Density of the symmetric stable law with characteristic function
/// `exp(-|ξ|^α)`, via its integral representation (α ≠ 1, x ≠ 0).
pub fn stable_pdf_integral(alpha: f64, x: f64) -> Result<f64> {
    let x = x.abs();
    if x == 0.0 || (alpha - 1.0).abs() < 1e-12 {
        return Err(Error::domain(
            "integral representation needs α ≠ 1 and x ≠ 0",
        ));
    }
    let i = zolotarev_integral(alpha, x, |lu| {
        if lu > 700.0 {
            0.0
        } else {
            (lu - lu.exp()).exp()
        }
    })?;
    Ok(alpha / (PI * (alpha - 1.0).abs() * x) * i)
}

/// Distribution function counterpart of [`stable_pdf_integral`].
pub fn stable_cdf_integral(alpha: f64, x: f64) -> Result<f64> {
    if x == 0.0 || (alpha - 1.0).abs() < 1e-12 {
        return Err(Error::domain(
            "integral representation needs α ≠ 1 and x ≠ 0",
        ));
    }
    let i = zolotarev_integral(alpha, x.abs(), |lu| {
        if lu > 700.0 {
            0.0
        } else {
            (-lu.exp()).exp()
        }
    })? / PI;
    let upper = if alpha < 1.0 { 0.5 + i } else { 1.0 - i };
    Ok(if x > 0.0 { upper } else { 1.0 - upper })
}

fn use_integral_form(alpha: f64, x: f64) -> bool {
    let xi_max = CUTOFF_EXPONENT.powf(1.0 / alpha);
    (alpha - 1.0).abs() > 0.02 && x.abs() * xi_max / PI > MAX_FOURIER_PANELS
}

/// Density of the unit-symbol symmetric stable law.
pub fn stable_pdf(alpha: f64, x: f64) -> Result<f64> {
    if (alpha - 1.0).abs() < 1e-15 {
        return Ok(1.0 / (PI * (1.0 + x * x)));
    }
    if use_integral_form(alpha, x) {
        return stable_pdf_integral(alpha, x);
    }
    fourier_density(|xi: f64| Ok(xi.abs().powf(alpha)), 1.0, x)
}

/// Distribution function of the unit-symbol symmetric stable law.
pub fn stable_cdf(alpha: f64, x: f64) -> Result<f64> {
    if (alpha - 1.0).abs() < 1e-15 {
        return Ok(0.5 + x.atan() / PI);
    }
    if use_integral_form(alpha, x) {
        return stable_cdf_integral(alpha, x);
    }
    fourier_cdf(|xi: f64| Ok(xi.abs().powf(alpha)), 1.0, x)
}

/// `g(0) = Γ(1 + 1/α) / π` for the unit-symbol law.
pub fn stable_pdf_at_zero(alpha: f64) -> f64 {
    statrs::function::gamma::gamma(1.0 + 1.0 / alpha) / PI
}

impl Component {
    /// Density of `Z_t` at `x`.
    pub fn density(&self, t: f64, x: f64) -> Result<f64> {
        check_time(t)?;
        match self {
            Component::Stable(s) => {
                let sigma = s.marginal_scale(t);
                Ok(stable_pdf(s.alpha, x / sigma)? / sigma)
            }
            _ => fourier_density(|xi| self.psi(xi), t, x),
        }
    }

    /// Distribution function of `Z_t` at `x`.
    pub fn cdf(&self, t: f64, x: f64) -> Result<f64> {
        check_time(t)?;
        match self {
            Component::Stable(s) => stable_cdf(s.alpha, x / s.marginal_scale(t)),
            _ => fourier_cdf(|xi| self.psi(xi), t, x),
        }
    }

    /// `x` with `P(|Z_t| > x) = p`.
    pub fn tail_quantile(&self, t: f64, p: f64) -> Result<f64> {
        check_time(t)?;
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::domain("tail probability must lie in (0, 1)"));
        }
        let tail = |x: f64| -> Result<f64> { Ok(2.0 * (1.0 - self.cdf(t, x)?)) };
        let mut hi = 1.0;
        while tail(hi)? > p {
            hi *= 2.0;
            if hi > 1e15 {
                return Err(Error::numeric("density", "tail quantile beyond 1e15"));
            }
        }
        let mut lo = 0.0;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if tail(mid)? > p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(hi)
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::domain(format!("time must be positive, got {t}")));
    }
    Ok(())
}

/// Tabulated one-dimensional density.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Density1d {
    pub t: f64,
    pub x: Vec<f64>,
    pub density: Vec<f64>,
    /// Trapezoid integral over the grid.
    pub grid_mass: f64,
    /// Probability of the grid interval under the same inversion.
    pub interval_mass: f64,
}

impl Density1d {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,density\n");
        for (x, d) in self.x.iter().zip(&self.density) {
            s.push_str(&format!("{x:.17e},{d:.17e}\n"));
        }
        s
    }
}

/// Time-`t` marginal density of component `i` on `x_grid`.
pub fn density_1d(spec: &NoiseSpec, i: usize, t: f64, x_grid: &[f64]) -> Result<Density1d> {
    let c = spec.component(i)?;
    check_time(t)?;
    let density = x_grid
        .iter()
        .map(|x| c.density(t, *x))
        .collect::<Result<Vec<_>>>()?;
    let grid_mass = x_grid
        .windows(2)
        .zip(density.windows(2))
        .map(|(x, d)| 0.5 * (x[1] - x[0]) * (d[0] + d[1]))
        .sum();
    let interval_mass = match (x_grid.first(), x_grid.last()) {
        (Some(a), Some(b)) if b > a => c.cdf(t, *b)? - c.cdf(t, *a)?,
        _ => 0.0,
    };
    Ok(Density1d {
        t,
        x: x_grid.to_vec(),
        density,
        grid_mass,
        interval_mass,
    })
}

/// `G̃_t(w) = Π_i g^i_t(w_i)`.
pub fn density_product(spec: &NoiseSpec, t: f64, w: &[f64]) -> Result<f64> {
    check_time(t)?;
    if w.len() != spec.dim() {
        return Err(Error::domain(format!(
            "point has dimension {} but noise has {}",
            w.len(),
            spec.dim()
        )));
    }
    let mut p = 1.0;
    for (c, wi) in spec.components.iter().zip(w) {
        p *= c.density(t, *wi)?;
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::measure::StableComponent;
    use approx::assert_relative_eq;

    #[test]
    fn cauchy_inversion_matches_closed_form() {
        let spec = NoiseSpec::unit_stable(&[1.0]).unwrap();
        let t = 0.7;
        let grid: Vec<f64> = (-100..=100).map(|k| k as f64 * 0.1).collect();
        let c = spec.component(0).unwrap().clone();
        let sup = grid
            .iter()
            .map(|x| {
                let v = fourier_density(|xi| c.psi(xi), t, *x).unwrap();
                (v - t / (PI * (t * t + x * x))).abs()
            })
            .fold(0.0, f64::max);
        assert!(sup < 1e-6, "sup error {sup}");
    }

    #[test]
    fn integral_and_fourier_forms_agree() {
        for alpha in [0.4, 0.7, 0.9, 1.3, 1.8] {
            for x in [0.3, 1.0, 2.5, 6.0] {
                let a = stable_pdf_integral(alpha, x).unwrap();
                let b = fourier_density(|xi: f64| Ok(xi.powf(alpha)), 1.0, x).unwrap();
                assert_relative_eq!(a, b, max_relative = 1e-7);
                let a = stable_cdf_integral(alpha, x).unwrap();
                let b = fourier_cdf(|xi: f64| Ok(xi.powf(alpha)), 1.0, x).unwrap();
                assert_relative_eq!(a, b, max_relative = 1e-7);
            }
        }
    }

    #[test]
    fn value_at_zero_and_tail() {
        for alpha in [0.5, 0.9, 1.5] {
            assert_relative_eq!(
                stable_pdf(alpha, 0.0).unwrap(),
                stable_pdf_at_zero(alpha),
                max_relative = 1e-9
            );
        }
        // P(|X| > x) ~ (2/π) Γ(α) sin(πα/2) x^{-α}
        let alpha = 0.7;
        let x = 1e4;
        let tail = 2.0 * (1.0 - stable_cdf(alpha, x).unwrap());
        let asym = 2.0 / PI
            * statrs::function::gamma::gamma(alpha)
            * (PI * alpha / 2.0).sin()
            * x.powf(-alpha);
        assert_relative_eq!(tail, asym, max_relative = 1e-2);
    }

    #[test]
    fn far_tail_matches_power_law_above_one() {
        // Narrow peak near π/2 in the θ integrand.
        for alpha in [1.2, 1.5, 1.9] {
            let k = statrs::function::gamma::gamma(alpha) * (PI * alpha / 2.0).sin() / PI;
            for x in [1e3, 1e5] {
                let pdf = stable_pdf(alpha, x).unwrap();
                let tail = 1.0 - stable_cdf(alpha, x).unwrap();
                assert_relative_eq!(pdf, alpha * k * x.powf(-alpha - 1.0), max_relative = 3e-4);
                assert_relative_eq!(tail, k * x.powf(-alpha), max_relative = 3e-4);
            }
        }
    }

    #[test]
    fn product_of_cauchy_densities() {
        let spec = NoiseSpec::unit_stable(&[1.0, 1.0]).unwrap();
        let v = density_product(&spec, 1.0, &[0.0, 0.0]).unwrap();
        assert_relative_eq!(v, 1.0 / (PI * PI), max_relative = 1e-9);
        assert!(density_product(&spec, 0.0, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn mixture_density_is_normalised() {
        let c = Component::Mixture {
            parts: vec![
                StableComponent::unit(0.8).unwrap(),
                StableComponent::unit(1.6).unwrap(),
            ],
        };
        let mass = c.cdf(0.5, 20.0).unwrap() - c.cdf(0.5, -20.0).unwrap();
        let q = Integrator::new(1e-10, 1e-9)
            .integrate(
                |x| c.density(0.5, x).unwrap(),
                &[-20.0, -1.0, 0.0, 1.0, 20.0],
            )
            .unwrap();
        assert_relative_eq!(q, mass, max_relative = 1e-6);
    }
}
