//! One-dimensional symmetric Lévy measures and the cylindrical noise built from them.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::numerics::Integrator;

/// Symmetric α-stable measure `ν(dx) = c |x|^{-1-α} dx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableComponent {
    pub alpha: f64,
    pub scale: f64,
}

impl StableComponent {
    pub fn new(alpha: f64, scale: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::domain(format!(
                "stability index outside (0,2): {alpha}"
            )));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::domain(format!("scale must be positive: {scale}")));
        }
        Ok(Self { alpha, scale })
    }

    /// Component whose symbol is exactly `|ξ|^α`.
    pub fn unit(alpha: f64) -> Result<Self> {
        Self::new(alpha, 1.0)?;
        Ok(Self {
            alpha,
            scale: 1.0 / symbol_factor(alpha),
        })
    }

    /// `c'` in `ψ(ξ) = c' |ξ|^α`.
    pub fn symbol_constant(&self) -> f64 {
        self.scale * symbol_factor(self.alpha)
    }

    pub fn psi(&self, xi: f64) -> f64 {
        if xi == 0.0 {
            return 0.0;
        }
        self.symbol_constant() * xi.abs().powf(self.alpha)
    }

    pub fn pruitt_h(&self, r: f64) -> f64 {
        4.0 * self.scale / (self.alpha * (2.0 - self.alpha)) * r.powf(-self.alpha)
    }

    /// Lévy density at `|x| = v > 0`.
    pub fn nu(&self, v: f64) -> f64 {
        self.scale * v.abs().powf(-1.0 - self.alpha)
    }

    /// Scale of the time-`t` marginal relative to the unit-symbol law.
    pub fn marginal_scale(&self, t: f64) -> f64 {
        (t * self.symbol_constant()).powf(1.0 / self.alpha)
    }
}

/// `∫ (1 - cos x) |x|^{-1-α} dx = π / (Γ(1+α) sin(πα/2))`.
pub fn symbol_factor(alpha: f64) -> f64 {
    if (alpha - 1.0).abs() < 1e-15 {
        return PI;
    }
    PI / (gamma(1.0 + alpha) * (PI * alpha / 2.0).sin())
}

/// Symmetric Lévy density tabulated on `(0, R]` with a power-law tail beyond `R`.
///
/// Between knots the density is interpolated linearly in log–log coordinates;
/// below the first knot the first segment's power law is continued.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedMeasure {
    pub knots: Vec<f64>,
    pub values: Vec<f64>,
    pub tail_exponent: f64,
}

#[derive(Debug, Clone, Copy)]
struct PowerSegment {
    a: f64,
    b: f64,
    k: f64,
    p: f64,
}

impl TabulatedMeasure {
    pub fn new(knots: Vec<f64>, values: Vec<f64>, tail_exponent: f64) -> Result<Self> {
        if knots.len() < 2 || knots.len() != values.len() {
            return Err(Error::domain(
                "tabulated measure needs at least two knots with matching values",
            ));
        }
        if knots[0] <= 0.0 || knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain(
                "knots must be positive and strictly increasing",
            ));
        }
        if values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::domain("tabulated density values must be positive"));
        }
        if !(tail_exponent > 0.0) {
            return Err(Error::domain("tail exponent must be positive"));
        }
        let m = Self {
            knots,
            values,
            tail_exponent,
        };
        if m.segments()[0].p <= -3.0 {
            return Err(Error::domain(
                "density too singular at the origin: x² ν(x) is not integrable",
            ));
        }
        Ok(m)
    }

    /// Tabulates a stable measure, useful for cross-checks.
    pub fn from_stable(s: &StableComponent, knots: Vec<f64>) -> Result<Self> {
        let values = knots.iter().map(|x| s.nu(*x)).collect();
        Self::new(knots, values, s.alpha)
    }

    fn segments(&self) -> Vec<PowerSegment> {
        let n = self.knots.len();
        let mut segs = Vec::with_capacity(n + 1);
        let p0 = (self.values[1] / self.values[0]).ln() / (self.knots[1] / self.knots[0]).ln();
        segs.push(PowerSegment {
            a: 0.0,
            b: self.knots[0],
            k: self.values[0] / self.knots[0].powf(p0),
            p: p0,
        });
        for i in 0..n - 1 {
            let (x0, x1) = (self.knots[i], self.knots[i + 1]);
            let p = (self.values[i + 1] / self.values[i]).ln() / (x1 / x0).ln();
            segs.push(PowerSegment {
                a: x0,
                b: x1,
                k: self.values[i] / x0.powf(p),
                p,
            });
        }
        let r = self.knots[n - 1];
        let p = -1.0 - self.tail_exponent;
        segs.push(PowerSegment {
            a: r,
            b: f64::INFINITY,
            k: self.values[n - 1] / r.powf(p),
            p,
        });
        segs
    }

    pub fn nu(&self, v: f64) -> f64 {
        let v = v.abs();
        for s in self.segments() {
            if v <= s.b {
                return s.k * v.powf(s.p);
            }
        }
        unreachable!()
    }

    pub fn pruitt_h(&self, r: f64) -> f64 {
        // h(r) = 2 ∫_0^∞ min(1, v²/r²) ν(v) dv
        let mut total = 0.0;
        for s in self.segments() {
            let lo_hi = (s.a, s.b.min(r));
            if lo_hi.1 > lo_hi.0 {
                total += power_integral(s.k / (r * r), s.p + 2.0, lo_hi.0, lo_hi.1);
            }
            let lo_hi = (s.a.max(r), s.b);
            if lo_hi.1 > lo_hi.0 {
                total += power_integral(s.k, s.p, lo_hi.0, lo_hi.1);
            }
        }
        2.0 * total
    }

    pub fn psi(&self, xi: f64) -> Result<f64> {
        let xi = xi.abs();
        if xi == 0.0 {
            return Ok(0.0);
        }
        let segs = self.segments();
        let quad = Integrator::new(1e-14, 1e-11).with_max_panels(20_000);
        let mut total = 0.0;
        // finite part: the origin segment and the tabulated range
        let r = *self.knots.last().unwrap();
        let period = 2.0 * PI / xi;
        let cap = r.max(64.0 * period);
        for s in &segs {
            let b = s.b.min(cap);
            if b <= s.a {
                continue;
            }
            let f = |v: f64| 2.0 * (0.5 * xi * v).sin().powi(2) * s.k * v.powf(s.p);
            let mut breaks = vec![s.a];
            let mut x = (s.a / period).floor() * period + period;
            while x < b && breaks.len() < 50_000 {
                breaks.push(x);
                x += period;
            }
            breaks.push(b);
            total += quad.integrate(f, &breaks)?;
        }
        // beyond the cap the oscillating part averages out to within O(cap^{-1-a}/ξ)
        let tail = segs.last().unwrap();
        let a = -1.0 - tail.p;
        total += tail.k * cap.powf(-a) / a;
        Ok(2.0 * total)
    }

    /// Local scaling indices of `h` over `r ∈ [1e-3, 1]`.
    pub fn index_range(&self) -> (f64, f64) {
        let rs: Vec<f64> = (0..=30)
            .map(|i| 10f64.powf(-3.0 + 0.1 * i as f64))
            .collect();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for w in rs.windows(2) {
            let s = -(self.pruitt_h(w[1]) / self.pruitt_h(w[0])).ln() / (w[1] / w[0]).ln();
            lo = lo.min(s);
            hi = hi.max(s);
        }
        (lo.clamp(1e-6, 2.0 - 1e-6), hi.clamp(1e-6, 2.0 - 1e-6))
    }
}

/// `∫_a^b k v^p dv` (with `b` possibly infinite).
fn power_integral(k: f64, p: f64, a: f64, b: f64) -> f64 {
    if (p + 1.0).abs() < 1e-14 {
        return k * (b / a).ln();
    }
    let q = p + 1.0;
    let fb = if b.is_infinite() { 0.0 } else { b.powf(q) };
    let fa = if a == 0.0 { 0.0 } else { a.powf(q) };
    k * (fb - fa) / q
}

/// One scalar noise component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Component {
    Stable(StableComponent),
    /// Sum of independent stable measures.
    Mixture {
        parts: Vec<StableComponent>,
    },
    Tabulated(TabulatedMeasure),
}

impl From<StableComponent> for Component {
    fn from(s: StableComponent) -> Self {
        Component::Stable(s)
    }
}

impl Component {
    pub fn psi(&self, xi: f64) -> Result<f64> {
        match self {
            Component::Stable(s) => Ok(s.psi(xi)),
            Component::Mixture { parts } => Ok(parts.iter().map(|s| s.psi(xi)).sum()),
            Component::Tabulated(m) => m.psi(xi),
        }
    }

    pub fn pruitt_h(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::domain(format!(
                "Pruitt function needs r > 0, got {r}"
            )));
        }
        Ok(match self {
            Component::Stable(s) => s.pruitt_h(r),
            Component::Mixture { parts } => parts.iter().map(|s| s.pruitt_h(r)).sum(),
            Component::Tabulated(m) => m.pruitt_h(r),
        })
    }

    pub fn nu(&self, v: f64) -> f64 {
        match self {
            Component::Stable(s) => s.nu(v),
            Component::Mixture { parts } => parts.iter().map(|s| s.nu(v)).sum(),
            Component::Tabulated(m) => m.nu(v),
        }
    }

    /// Smallest and largest scaling index of the component.
    pub fn index_range(&self) -> (f64, f64) {
        match self {
            Component::Stable(s) => (s.alpha, s.alpha),
            Component::Mixture { parts } => parts
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
                    (lo.min(s.alpha), hi.max(s.alpha))
                }),
            Component::Tabulated(m) => m.index_range(),
        }
    }

    pub fn as_stable(&self) -> Option<&StableComponent> {
        match self {
            Component::Stable(s) => Some(s),
            _ => None,
        }
    }

    /// Stable parts together with the weight in `ψ = Σ c'_j |ξ|^{α_j}`.
    pub(crate) fn stable_parts(&self) -> Option<Vec<StableComponent>> {
        match self {
            Component::Stable(s) => Some(vec![*s]),
            Component::Mixture { parts } => Some(parts.clone()),
            Component::Tabulated(_) => None,
        }
    }
}

/// Regime of a cylindrical noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// All components share one symbol.
    A,
    /// Components differ.
    B,
}

/// Cylindrical noise `Z = (Z¹, …, Z^d)` with independent components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub components: Vec<Component>,
}

impl NoiseSpec {
    pub fn new(components: Vec<Component>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::domain("noise needs at least one component"));
        }
        for c in &components {
            match c {
                Component::Stable(s) => {
                    StableComponent::new(s.alpha, s.scale)?;
                }
                Component::Mixture { parts } => {
                    if parts.is_empty() {
                        return Err(Error::domain("empty mixture component"));
                    }
                    for s in parts {
                        StableComponent::new(s.alpha, s.scale)?;
                    }
                }
                Component::Tabulated(_) => {}
            }
        }
        Ok(Self { components })
    }

    pub fn stable(parts: &[StableComponent]) -> Result<Self> {
        Self::new(parts.iter().copied().map(Component::from).collect())
    }

    /// Unit-symbol stable noise with the given indices.
    pub fn unit_stable(alphas: &[f64]) -> Result<Self> {
        let parts = alphas
            .iter()
            .map(|a| StableComponent::unit(*a))
            .collect::<Result<Vec<_>>>()?;
        Self::stable(&parts)
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, i: usize) -> Result<&Component> {
        self.components.get(i).ok_or_else(|| {
            Error::domain(format!(
                "component index {i} out of range for dimension {}",
                self.dim()
            ))
        })
    }

    pub fn regime(&self) -> Regime {
        let first = &self.components[0];
        if self.components.iter().all(|c| c == first) {
            Regime::A
        } else {
            Regime::B
        }
    }

    /// Global lower index α (minimum over components).
    pub fn alpha(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.index_range().0)
            .fold(f64::INFINITY, f64::min)
    }

    /// Global upper index β (maximum over components).
    pub fn beta(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.index_range().1)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn char_exponent(&self, i: usize, xi: f64) -> Result<f64> {
        self.component(i)?.psi(xi)
    }

    pub fn pruitt_h(&self, i: usize, r: f64) -> Result<f64> {
        self.component(i)?.pruitt_h(r)
    }

    /// All components stable, or an error naming the first that is not.
    pub fn stable_components(&self) -> Result<Vec<StableComponent>> {
        self.components
            .iter()
            .enumerate()
            .map(|(i, c)| {
                c.as_stable().copied().ok_or_else(|| {
                    Error::domain(format!("component {i} is not a pure stable measure"))
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn unit_symbol_constants() {
        for a in [0.3, 0.7, 1.0, 1.5, 1.9] {
            assert_relative_eq!(
                StableComponent::unit(a).unwrap().psi(2.0),
                2f64.powf(a),
                max_relative = 1e-13
            );
        }
        // Cauchy: c = 1/π gives ψ = |ξ|
        assert_relative_eq!(
            StableComponent::unit(1.0).unwrap().scale,
            1.0 / PI,
            max_relative = 1e-15
        );
    }

    #[test]
    fn symbol_matches_defining_integral() {
        // ψ(ξ) = 2 ∫_0^∞ (1 - cos ξv) c v^{-1-α} dv by quadrature
        let s = StableComponent::new(0.7, 1.3).unwrap();
        let quad = Integrator::new(1e-12, 1e-10).with_max_panels(100_000);
        let xi = 1.7;
        let mut breaks = vec![0.0];
        for k in 1..=400 {
            breaks.push(k as f64 * 2.0 * PI / xi);
        }
        let body = quad
            .integrate(|v| 2.0 * (1.0 - (xi * v).cos()) * s.nu(v), &breaks)
            .unwrap();
        let cap = *breaks.last().unwrap();
        let tail = 2.0 * s.scale * cap.powf(-s.alpha) / s.alpha;
        assert_relative_eq!(body + tail, s.psi(xi), max_relative = 1e-4);
    }

    #[test]
    fn pruitt_closed_form() {
        let s = StableComponent::new(1.0, 1.0).unwrap();
        assert_relative_eq!(s.pruitt_h(1.0), 4.0);
        assert_relative_eq!(s.pruitt_h(2.0), 2.0);
        let c = Component::Stable(s);
        assert!(c.pruitt_h(0.0).is_err());
        assert!(c.pruitt_h(-1.0).is_err());
    }

    #[test]
    fn tabulated_stable_agrees_with_closed_form() {
        let s = StableComponent::new(0.8, 0.6).unwrap();
        let knots: Vec<f64> = (0..=20)
            .map(|i| 10f64.powf(-3.0 + 0.15 * i as f64))
            .collect();
        let m = TabulatedMeasure::from_stable(&s, knots).unwrap();
        for r in [1e-2, 0.1, 0.5, 1.0, 7.0] {
            assert_relative_eq!(m.pruitt_h(r), s.pruitt_h(r), max_relative = 1e-12);
        }
        assert_relative_eq!(m.psi(1.3).unwrap(), s.psi(1.3), max_relative = 1e-4);
        let (lo, hi) = m.index_range();
        assert!((lo - 0.8).abs() < 1e-9 && (hi - 0.8).abs() < 1e-9);
    }

    #[test]
    fn regime_and_indices() {
        let a = NoiseSpec::unit_stable(&[1.0, 1.0]).unwrap();
        assert_eq!(a.regime(), Regime::A);
        let b = NoiseSpec::unit_stable(&[0.7, 0.9]).unwrap();
        assert_eq!(b.regime(), Regime::B);
        assert_eq!((b.alpha(), b.beta()), (0.7, 0.9));
        assert!(NoiseSpec::unit_stable(&[2.5]).is_err());
        assert!(NoiseSpec::new(vec![]).is_err());
        assert!(b.char_exponent(2, 1.0).is_err());
    }
}
