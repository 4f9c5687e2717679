//! Exact transition densities for `b(x) = Bx` with constant `A`.
//!
//! The characteristic exponent is `Φ(ξ) = ∫_0^t Σ_k ψ_k(v_k(u)·ξ) du` with
//! `v_k(u) = e^{Bu} A e_k`. For stable parts `Φ(ρ e_θ) = Σ_p W_p(θ) ρ^{α_p}`,
//! and the radial Fourier integral is evaluated along the ray `ρ = r e^{iφ}`,
//! where the integrand decays without oscillating.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{GaussLegendre, Integrator};
use crate::reduction::ModelSpec;

/// Hermite cells per unit of `t` used for the curves `v_k(u)`.
const CURVE_CELLS: usize = 64;
/// Decay exponent at which the radial integral is truncated.
const RADIAL_CUTOFF: f64 = 50.0;
/// Ratio of consecutive radial panel ends beyond the unit-decay radius.
const RADIAL_RATIO: f64 = 1.6;
/// Gauss–Legendre order on each radial panel.
const RADIAL_ORDER: usize = 10;
/// Chebyshev degree of the angular weight tables.
const TABLE_DEGREE: usize = 48;

#[derive(Debug, Clone, Copy)]
struct Part {
    /// Coordinate of the noise component this part belongs to.
    k: usize,
    alpha: f64,
    /// `c'` in `ψ(ξ) = c' |ξ|^α`.
    constant: f64,
}

/// `u ↦ v(u) = e^{Bu} A e_k` on `[0, t]` as a piecewise cubic Hermite curve.
#[derive(Debug, Clone)]
struct Curve {
    h: f64,
    /// Values and derivatives at the cell ends, `d` entries each.
    values: Vec<DVector<f64>>,
    slopes: Vec<DVector<f64>>,
}

impl Curve {
    fn new(b: &DMatrix<f64>, start: DVector<f64>, t: f64) -> Self {
        let cells = ((CURVE_CELLS as f64) * t.max(1.0)).ceil() as usize;
        let h = t / cells as f64;
        let step = (b * h).exp();
        let mut values = Vec::with_capacity(cells + 1);
        let mut v = start;
        for _ in 0..=cells {
            values.push(v.clone());
            v = &step * v;
        }
        let slopes = values.iter().map(|v| b * v).collect();
        Self { h, values, slopes }
    }

    fn cells(&self) -> usize {
        self.values.len() - 1
    }

    fn end(&self) -> f64 {
        self.h * self.cells() as f64
    }

    /// `e·v(u)` for a direction `e`.
    fn project(&self, e: &[f64], u: f64) -> f64 {
        let j = ((u / self.h).floor() as usize).min(self.cells() - 1);
        let x = (u - j as f64 * self.h) / self.h;
        let dot = |v: &DVector<f64>| v.iter().zip(e).map(|(a, b)| a * b).sum::<f64>();
        let (p0, p1) = (dot(&self.values[j]), dot(&self.values[j + 1]));
        let (m0, m1) = (
            dot(&self.slopes[j]) * self.h,
            dot(&self.slopes[j + 1]) * self.h,
        );
        let x2 = x * x;
        let x3 = x2 * x;
        (2.0 * x3 - 3.0 * x2 + 1.0) * p0
            + (x3 - 2.0 * x2 + x) * m0
            + (-2.0 * x3 + 3.0 * x2) * p1
            + (x3 - x2) * m1
    }

    /// Sign changes of `u ↦ e·v(u)` on `[0, t]`.
    fn roots(&self, e: &[f64]) -> Vec<f64> {
        let mut roots = Vec::new();
        let mut prev = self.project(e, 0.0);
        for j in 1..=self.cells() {
            let u = j as f64 * self.h;
            let cur = self.project(e, u.min(self.end()));
            if prev.signum() != cur.signum() {
                let (mut lo, mut hi) = (u - self.h, u);
                let mut flo = prev;
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    let fm = self.project(e, mid);
                    if fm == 0.0 {
                        lo = mid;
                        hi = mid;
                        break;
                    }
                    if fm.signum() == flo.signum() {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                }
                roots.push(0.5 * (lo + hi));
            }
            prev = cur;
        }
        roots
    }
}

/// `g(x) = sin²(πx/2)` applied twice; flat to third order at both ends.
fn cluster(x: f64) -> (f64, f64) {
    let g = |x: f64| (0.5 * PI * x).sin().powi(2);
    let dg = |x: f64| 0.5 * PI * (PI * x).sin();
    let inner = g(x);
    (g(inner), dg(inner) * dg(x))
}

fn uncluster(y: f64) -> f64 {
    let ginv = |y: f64| y.clamp(0.0, 1.0).sqrt().asin() * 2.0 / PI;
    ginv(ginv(y))
}

/// `θ ↦ W_p(θ)` between consecutive kinks, interpolated in `x` with
/// `θ = lo + (hi − lo) cluster(x)`, which smooths the cusps at the kinks.
#[derive(Debug, Clone)]
struct WeightTable {
    breaks: Vec<f64>,
    /// Per interval, per node, the weights of every part.
    values: Vec<Vec<Vec<f64>>>,
    nodes: Vec<f64>,
}

impl WeightTable {
    fn new<F: Fn(&[f64]) -> Vec<f64>>(breaks: Vec<f64>, weights: F) -> Self {
        let n = TABLE_DEGREE;
        let nodes: Vec<f64> = (0..=n)
            .map(|j| 0.5 * (1.0 - (PI * j as f64 / n as f64).cos()))
            .collect();
        let values = breaks
            .windows(2)
            .map(|w| {
                nodes
                    .iter()
                    .map(|x| {
                        let th = w[0] + (w[1] - w[0]) * cluster(*x).0;
                        weights(&[th.cos(), th.sin()])
                    })
                    .collect()
            })
            .collect();
        Self {
            breaks,
            values,
            nodes,
        }
    }

    fn eval(&self, theta: f64, out: &mut [f64]) {
        let last = self.breaks.len() - 2;
        let i = self
            .breaks
            .partition_point(|b| *b <= theta)
            .saturating_sub(1)
            .min(last);
        let (lo, hi) = (self.breaks[i], self.breaks[i + 1]);
        let x = uncluster((theta - lo) / (hi - lo));
        let n = self.nodes.len() - 1;
        out.iter_mut().for_each(|o| *o = 0.0);
        let mut den = 0.0;
        for (j, (node, vals)) in self.nodes.iter().zip(&self.values[i]).enumerate() {
            let diff = x - node;
            if diff == 0.0 {
                out.copy_from_slice(vals);
                out.iter_mut().for_each(|o| *o = o.max(0.0));
                return;
            }
            let mut c = if j % 2 == 0 { 1.0 } else { -1.0 } / diff;
            if j == 0 || j == n {
                c *= 0.5;
            }
            den += c;
            for (o, v) in out.iter_mut().zip(vals) {
                *o += c * v;
            }
        }
        out.iter_mut().for_each(|o| *o = (*o / den).max(0.0));
    }
}

/// Panel ends `0, 1/8, 1/4, 1/2, 1, q, q², …` reaching the radius where a
/// pure `r^α` decay passes the cutoff.
fn radial_template(alpha_min: f64) -> Vec<f64> {
    let top = RADIAL_CUTOFF.powf(1.0 / alpha_min);
    let mut t = vec![0.0, 0.125, 0.25, 0.5, 1.0];
    while *t.last().unwrap() < top {
        let next = t.last().unwrap() * RADIAL_RATIO;
        t.push(next);
    }
    t
}

/// Exact density of `X_t` started at `x` for a linear model.
#[derive(Debug, Clone)]
pub struct LinearOracle {
    t: f64,
    center: Vec<f64>,
    parts: Vec<Part>,
    curves: Vec<Curve>,
    /// Directions at which some `W_p` is not smooth (2D only).
    kinks: Vec<f64>,
    /// Angle of the integration ray in the complex plane.
    phi: f64,
    gl: GaussLegendre,
    radial_gl: GaussLegendre,
    /// Radial panel ends in units of the unit-decay radius.
    template: Vec<f64>,
    /// Angular weights in 2D.
    table: Option<WeightTable>,
    /// Weights in 1D.
    w1d: Vec<f64>,
    peak: f64,
}

impl LinearOracle {
    pub fn new(model: &ModelSpec, t: f64, x: &[f64]) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::domain(format!("time must be positive, got {t}")));
        }
        let (b, a) = model.linear_data().ok_or_else(|| {
            Error::domain("exact densities need a linear drift and a constant matrix")
        })?;
        let d = model.dim();
        if d > 2 {
            return Err(Error::domain("exact densities are implemented for d ≤ 2"));
        }
        let mut parts = Vec::new();
        for k in 0..d {
            let stable = model.noise.components[k].stable_parts().ok_or_else(|| {
                Error::domain("exact densities need stable or mixture components")
            })?;
            for s in stable {
                parts.push(Part {
                    k,
                    alpha: s.alpha,
                    constant: s.symbol_constant(),
                });
            }
        }
        let curves: Vec<Curve> = (0..d)
            .map(|k| Curve::new(&b, a.column(k).into_owned(), t))
            .collect();
        let mut kinks = Vec::new();
        if d == 2 {
            for c in &curves {
                for v in [&c.values[0], &c.values[c.cells()]] {
                    if v.norm() > 0.0 {
                        kinks.push((v[1].atan2(v[0]) + PI / 2.0).rem_euclid(PI));
                    }
                }
            }
        }
        let beta = parts.iter().map(|p| p.alpha).fold(0.0, f64::max);
        let parts_min_alpha = parts.iter().map(|p| p.alpha).fold(f64::INFINITY, f64::min);
        let center = model.flow.chi(t, x)?.as_slice().to_vec();
        let mut oracle = Self {
            t,
            center,
            parts,
            curves,
            kinks,
            phi: (PI / (4.0 * beta)).min(PI / 2.0),
            gl: GaussLegendre::new(16),
            radial_gl: GaussLegendre::new(RADIAL_ORDER),
            template: radial_template(parts_min_alpha),
            table: None,
            w1d: Vec::new(),
            peak: 0.0,
        };
        if d == 1 {
            oracle.w1d = oracle.weights(&[1.0]);
        } else {
            let mut breaks = vec![0.0, PI];
            breaks.extend(oracle.kinks.iter().copied());
            breaks.sort_by(f64::total_cmp);
            breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
            oracle.table = Some(WeightTable::new(breaks, |e| oracle.weights(e)));
        }
        let m = oracle.center.clone();
        oracle.peak = oracle.density_with_tolerance(&m, 0.0)?;
        Ok(oracle)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// `e^{Bt} x`, the center of the law.
    pub fn center(&self) -> &[f64] {
        &self.center
    }

    /// Density at the center.
    pub fn peak(&self) -> f64 {
        self.peak
    }

    /// `W_p(θ)` for direction `e`: `c'_p ∫_0^t |e·v_k(u)|^{α_p} du`.
    fn weights(&self, e: &[f64]) -> Vec<f64> {
        let mut roots_cache: Vec<Option<Vec<f64>>> = vec![None; self.curves.len()];
        self.parts
            .iter()
            .map(|p| {
                let curve = &self.curves[p.k];
                let roots = roots_cache[p.k].get_or_insert_with(|| curve.roots(e));
                let mut pts = Vec::with_capacity(roots.len() + 2);
                pts.push(0.0);
                pts.extend_from_slice(roots);
                pts.push(curve.end());
                let mut total = 0.0;
                for w in pts.windows(2) {
                    let (lo, hi) = (w[0], w[1]);
                    if roots.is_empty() {
                        total +=
                            self.gl
                                .integrate(|u| curve.project(e, u).abs().powf(p.alpha), lo, hi);
                    } else {
                        // u = lo + (hi − lo)(3x² − 2x³) flattens the |·|^α cusps at the roots
                        total += self.gl.integrate(
                            |x| {
                                let u = lo + (hi - lo) * x * x * (3.0 - 2.0 * x);
                                curve.project(e, u).abs().powf(p.alpha) * 6.0 * x * (1.0 - x)
                            },
                            0.0,
                            1.0,
                        ) * (hi - lo);
                    }
                }
                p.constant * total
            })
            .collect()
    }

    /// `Φ(ξ)`.
    pub fn exponent(&self, xi: &[f64]) -> Result<f64> {
        if xi.len() != self.center.len() {
            return Err(Error::domain("frequency has the wrong dimension"));
        }
        let rho = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rho == 0.0 {
            return Ok(0.0);
        }
        let e: Vec<f64> = xi.iter().map(|v| v / rho).collect();
        let w = self.weights(&e);
        Ok(self
            .parts
            .iter()
            .zip(&w)
            .map(|(p, wp)| wp * rho.powf(p.alpha))
            .sum())
    }

    /// `E exp(i ξ·X_t)` as `(re, im)`.
    pub fn char_function(&self, xi: &[f64]) -> Result<(f64, f64)> {
        let modulus = (-self.exponent(xi)?).exp();
        let phase: f64 = xi.iter().zip(&self.center).map(|(a, b)| a * b).sum();
        Ok((modulus * phase.cos(), modulus * phase.sin()))
    }

    /// Total decay exponent along the ray at radius `r`.
    fn decay(&self, r: f64, s: f64, w: &[f64]) -> f64 {
        r * s * self.phi.sin()
            + self
                .parts
                .iter()
                .zip(w)
                .map(|(p, wp)| wp * r.powf(p.alpha) * (p.alpha * self.phi).cos())
                .sum::<f64>()
    }

    fn radius_at(&self, level: f64, s: f64, w: &[f64]) -> f64 {
        let (mut lo, mut hi) = (1e-300_f64.ln(), 1e300_f64.ln());
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if self.decay(mid.exp(), s, w) < level {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-10 {
                break;
            }
        }
        (0.5 * (lo + hi)).exp()
    }

    /// `Re[e^{i n φ} ∫_0^∞ r^{n−1} exp(i r s e^{iφ} − Σ W_p r^{α_p} e^{iα_p φ}) dr]`
    /// for `n = d`; equals `∫_0^∞ ρ^{d−1} cos(ρ s) e^{−Σ W_p ρ^{α_p}} dρ`.
    fn radial(&self, s: f64, w: &[f64]) -> f64 {
        let s = s.abs();
        let d = self.center.len() as i32;
        let (sin_phi, cos_phi) = self.phi.sin_cos();
        let r1 = self.radius_at(1.0, s, w);
        let rot: Vec<(f64, f64, f64)> = self
            .parts
            .iter()
            .zip(w)
            .map(|(p, wp)| {
                let (sa, ca) = (p.alpha * self.phi).sin_cos();
                (p.alpha, wp * ca, wp * sa)
            })
            .collect();
        let (sn, cn) = (d as f64 * self.phi).sin_cos();
        let integrand = |r: f64| {
            // exponent = i r s e^{iφ} − Σ W r^α e^{iαφ}
            let mut re = -r * s * sin_phi;
            let mut im = r * s * cos_phi;
            let lr = r.ln();
            for &(alpha, wc, ws) in &rot {
                let ra = (alpha * lr).exp();
                re -= wc * ra;
                im -= ws * ra;
            }
            let m = re.exp() * r.powi(d - 1);
            let (si, ci) = im.sin_cos();
            m * (cn * ci - sn * si)
        };
        self.template
            .windows(2)
            .map(|b| self.radial_gl.integrate(integrand, r1 * b[0], r1 * b[1]))
            .sum()
    }

    /// Density at `y`, with absolute tolerance `abs_tol` (0 selects a
    /// tolerance relative to the peak).
    pub fn density_with_tolerance(&self, y: &[f64], abs_tol: f64) -> Result<f64> {
        if y.len() != self.center.len() {
            return Err(Error::domain("point has the wrong dimension"));
        }
        let tol = if abs_tol > 0.0 {
            abs_tol
        } else {
            1e-12 * self.peak.max(1e-300)
        };
        match self.center.len() {
            1 => Ok(self.radial(y[0] - self.center[0], &self.w1d) / PI),
            _ => {
                let dy = [y[0] - self.center[0], y[1] - self.center[1]];
                let mut breaks = vec![0.0, PI];
                breaks.extend(self.kinks.iter().copied());
                if dy[0] != 0.0 || dy[1] != 0.0 {
                    breaks.push((dy[1].atan2(dy[0]) + PI / 2.0).rem_euclid(PI));
                }
                breaks.sort_by(f64::total_cmp);
                breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
                let norm = 2.0 * PI * PI;
                let table = self
                    .table
                    .as_ref()
                    .expect("planar oracle has a weight table");
                let q = Integrator::new(tol * norm / (breaks.len() - 1) as f64, 1e-10)
                    .with_max_panels(2000);
                let mut w = vec![0.0; self.parts.len()];
                let mut total = 0.0;
                for iv in breaks.windows(2) {
                    let (lo, len) = (iv[0], iv[1] - iv[0]);
                    let r = q.integrate_raw(
                        |x| {
                            let (g, dg) = cluster(x);
                            let theta = lo + len * g;
                            table.eval(theta, &mut w);
                            len * dg * self.radial(theta.cos() * dy[0] + theta.sin() * dy[1], &w)
                        },
                        &[0.0, 1.0],
                    );
                    total += r.value;
                }
                if !total.is_finite() {
                    return Err(Error::numeric("density", "non-finite density integral"));
                }
                Ok(total / norm)
            }
        }
    }

    pub fn density(&self, y: &[f64]) -> Result<f64> {
        self.density_with_tolerance(y, 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityMethod {
    Principal,
    ExactLinear,
    Empirical,
}

/// Density values on a rectangular grid; the last axis varies fastest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityGrid {
    pub axes: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub t: f64,
    pub x: Vec<f64>,
    pub method: DensityMethod,
}

impl DensityGrid {
    /// Validates the axes and evaluates `f` at every node in a fixed order.
    pub fn evaluate<F>(
        axes: Vec<Vec<f64>>,
        t: f64,
        x: &[f64],
        method: DensityMethod,
        f: F,
    ) -> Result<Self>
    where
        F: Fn(&[f64]) -> Result<f64> + Sync,
    {
        if axes.is_empty() || axes.iter().any(|a| a.is_empty()) {
            return Err(Error::domain("grid needs at least one node per axis"));
        }
        if axes.iter().any(|a| a.windows(2).any(|w| !(w[1] > w[0]))) {
            return Err(Error::domain("grid axes must be strictly increasing"));
        }
        let nodes = Self::node_count(&axes);
        let values = (0..nodes)
            .into_par_iter()
            .map(|i| f(&Self::node_of(&axes, i)))
            .collect::<Result<Vec<f64>>>()?;
        Ok(Self {
            axes,
            values,
            t,
            x: x.to_vec(),
            method,
        })
    }

    fn node_count(axes: &[Vec<f64>]) -> usize {
        axes.iter().map(Vec::len).product()
    }

    fn node_of(axes: &[Vec<f64>], mut i: usize) -> Vec<f64> {
        let mut y = vec![0.0; axes.len()];
        for (k, a) in axes.iter().enumerate().rev() {
            y[k] = a[i % a.len()];
            i /= a.len();
        }
        y
    }

    pub fn node(&self, i: usize) -> Vec<f64> {
        Self::node_of(&self.axes, i)
    }

    /// Trapezoid integral of the tabulated values.
    pub fn integral(&self) -> f64 {
        let weights: Vec<Vec<f64>> = self
            .axes
            .iter()
            .map(|a| {
                let n = a.len();
                (0..n)
                    .map(|i| {
                        let left = if i > 0 { a[i] - a[i - 1] } else { 0.0 };
                        let right = if i + 1 < n { a[i + 1] - a[i] } else { 0.0 };
                        0.5 * (left + right)
                    })
                    .collect()
            })
            .collect();
        let mut total = 0.0;
        for (i, v) in self.values.iter().enumerate() {
            let mut w = 1.0;
            let mut j = i;
            for (k, a) in self.axes.iter().enumerate().rev() {
                w *= weights[k][j % a.len()];
                j /= a.len();
            }
            total += w * v;
        }
        total
    }

    /// `y_1,...,y_d,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for k in 1..=self.axes.len() {
            out.push_str(&format!("y_{k},"));
        }
        out.push_str("value\n");
        for (i, v) in self.values.iter().enumerate() {
            for y in self.node(i) {
                out.push_str(&format!("{y:e},"));
            }
            out.push_str(&format!("{v:e}\n"));
        }
        out
    }

    pub fn metadata(&self) -> serde_json::Value {
        serde_json::json!({
            "t": self.t,
            "x": self.x,
            "method": self.method,
            "shape": self.axes.iter().map(Vec::len).collect::<Vec<_>>(),
        })
    }
}

/// Exact density of a linear model on a grid.
pub fn exact_density_linear(
    model: &ModelSpec,
    t: f64,
    x: &[f64],
    axes: Vec<Vec<f64>>,
) -> Result<DensityGrid> {
    let oracle = LinearOracle::new(model, t, x)?;
    DensityGrid::evaluate(axes, t, x, DensityMethod::ExactLinear, |y| {
        oracle.density(y)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::DriftField;
    use crate::levy::{density_product, NoiseSpec};
    use crate::reduction::MatrixField;

    fn linear_1d(lambda: f64, alpha: f64) -> ModelSpec {
        ModelSpec::new(
            NoiseSpec::unit_stable(&[alpha]).unwrap(),
            DriftField::linear(DMatrix::from_element(1, 1, lambda)).unwrap(),
            MatrixField::identity(1),
        )
        .unwrap()
    }

    #[test]
    fn cauchy_with_linear_drift_matches_closed_form() {
        let (lambda, t, x0) = (1.0, 0.5, 0.7);
        let oracle = LinearOracle::new(&linear_1d(lambda, 1.0), t, &[x0]).unwrap();
        let center = (lambda * t).exp() * x0;
        let scale = ((lambda * t).exp() - 1.0) / lambda;
        let mut worst: f64 = 0.0;
        for i in 0..=400 {
            let y = center - 20.0 + 0.1 * i as f64;
            let exact = scale / (PI * (scale * scale + (y - center).powi(2)));
            worst = worst.max((oracle.density(&[y]).unwrap() - exact).abs());
        }
        assert!(worst < 1e-9, "sup error {worst}");
    }

    #[test]
    fn time_zero_exponent_is_zero() {
        let oracle = LinearOracle::new(&linear_1d(-0.5, 1.3), 0.2, &[0.0]).unwrap();
        assert_eq!(oracle.exponent(&[0.0]).unwrap(), 0.0);
        assert_eq!(oracle.char_function(&[0.0]).unwrap(), (1.0, 0.0));
    }

    #[test]
    fn driftless_planar_model_is_a_warped_product() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, -0.2, 0.8]);
        let model = ModelSpec::new(
            NoiseSpec::unit_stable(&[0.8, 1.4]).unwrap(),
            DriftField::linear(DMatrix::zeros(2, 2)).unwrap(),
            MatrixField::constant(a.clone()).unwrap(),
        )
        .unwrap();
        let t = 0.3;
        let oracle = LinearOracle::new(&model, t, &[0.5, -0.5]).unwrap();
        let inv = a.clone().try_inverse().unwrap();
        let det = a.determinant().abs();
        for y in [[0.5, -0.5], [0.7, -0.2], [-1.0, 2.0], [3.0, 0.1]] {
            let w = &inv * DVector::from_vec(vec![y[0] - 0.5, y[1] + 0.5]);
            let expected = density_product(&model.noise, t, w.as_slice()).unwrap() / det;
            let got = oracle.density(&y).unwrap();
            assert!((got - expected).abs() < 1e-6, "{y:?}: {got} vs {expected}");
        }
    }

    #[test]
    fn rotation_exponent_matches_direct_quadrature() {
        let model = ModelSpec::new(
            NoiseSpec::unit_stable(&[0.7, 0.9]).unwrap(),
            DriftField::rotation(1.0),
            MatrixField::identity(2),
        )
        .unwrap();
        let t = 0.4;
        let oracle = LinearOracle::new(&model, t, &[1.0, 0.0]).unwrap();
        for (rho, theta) in [(1.0, 0.3), (5.0, 1.7), (2.0, 1.6)] {
            // (e^{Bᵀu} ξ) = ρ (cos(θ−u), sin(θ−u))
            let direct = Integrator::new(1e-14, 1e-12)
                .integrate(
                    |u: f64| {
                        let (s, c) = (theta - u).sin_cos();
                        (rho * c).abs().powf(0.7) + (rho * s).abs().powf(0.9)
                    },
                    &[
                        0.0,
                        (theta - PI / 2.0).clamp(0.0, t),
                        theta.clamp(0.0, t),
                        t,
                    ],
                )
                .unwrap();
            let got = oracle
                .exponent(&[rho * theta.cos(), rho * theta.sin()])
                .unwrap();
            assert!((got - direct).abs() < 1e-8 * direct, "{got} vs {direct}");
        }
    }

    #[test]
    fn grid_rejects_unsorted_axes() {
        let r = DensityGrid::evaluate(
            vec![vec![0.0, 0.0]],
            1.0,
            &[0.0],
            DensityMethod::Principal,
            |_| Ok(1.0),
        );
        assert!(r.is_err());
    }
}
