//! Adaptive Gauss–Kronrod and fixed Gauss–Legendre quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

// 7-point Gauss / 15-point Kronrod abscissae and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Result of a quadrature call.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Single 15-point Kronrod panel: returns (kronrod, |kronrod - gauss|).
pub fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = fc * WGK[7];
    let mut rg = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        rk += WGK[j] * s;
        if j % 2 == 1 {
            rg += WG[j / 2] * s;
        }
    }
    (rk * h, ((rk - rg) * h).abs())
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive Gauss–Kronrod integrator (bisect the worst panel).
#[derive(Debug, Clone, Copy)]
pub struct Integrator {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for Integrator {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_panels: 4000,
        }
    }
}

impl Integrator {
    pub fn new(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }

    pub fn with_max_panels(mut self, n: usize) -> Self {
        self.max_panels = n;
        self
    }

    /// Integrates over the consecutive intervals defined by `breaks`
    /// (at least two points, increasing or decreasing), never reporting
    /// failure; `converged` says whether tolerances were met.
    pub fn integrate_raw<F: FnMut(f64) -> f64>(&self, mut f: F, breaks: &[f64]) -> QuadResult {
        assert!(breaks.len() >= 2, "quadrature needs at least one interval");
        let mut heap = BinaryHeap::new();
        let mut evaluations = 0;
        for w in breaks.windows(2) {
            if w[0] == w[1] {
                continue;
            }
            let (value, error) = gk15(&mut f, w[0], w[1]);
            evaluations += 15;
            heap.push(Panel {
                a: w[0],
                b: w[1],
                value,
                error,
            });
        }
        let mut total: f64 = heap.iter().map(|p| p.value).sum();
        let mut err: f64 = heap.iter().map(|p| p.error).sum();
        let mut frozen_value = 0.0;
        let mut frozen_error = 0.0;
        loop {
            let target = self.abs_tol.max(self.rel_tol * total.abs());
            if err <= target || heap.len() + 1 > self.max_panels {
                break;
            }
            let Some(worst) = heap.pop() else { break };
            let mid = 0.5 * (worst.a + worst.b);
            if (worst.b - worst.a).abs() <= 8.0 * f64::EPSILON * mid.abs().max(f64::MIN_POSITIVE)
                || mid == worst.a
                || mid == worst.b
            {
                // panel cannot be split any further
                frozen_value += worst.value;
                frozen_error += worst.error;
                total = frozen_value + heap.iter().map(|p| p.value).sum::<f64>();
                err = frozen_error + heap.iter().map(|p| p.error).sum::<f64>();
                if heap.is_empty() {
                    break;
                }
                continue;
            }
            let (v1, e1) = gk15(&mut f, worst.a, mid);
            let (v2, e2) = gk15(&mut f, mid, worst.b);
            evaluations += 30;
            total += v1 + v2 - worst.value;
            err += e1 + e2 - worst.error;
            heap.push(Panel {
                a: worst.a,
                b: mid,
                value: v1,
                error: e1,
            });
            heap.push(Panel {
                a: mid,
                b: worst.b,
                value: v2,
                error: e2,
            });
        }
        // resum to shed accumulated cancellation in the running totals
        let value = frozen_value + heap.iter().map(|p| p.value).sum::<f64>();
        let abs_error = frozen_error + heap.iter().map(|p| p.error).sum::<f64>();
        let target = self.abs_tol.max(self.rel_tol * value.abs());
        QuadResult {
            value,
            abs_error,
            evaluations,
            converged: abs_error <= target * 10.0,
        }
    }

    /// Like [`Integrator::integrate_raw`] but reports non-convergence as an error.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, f: F, breaks: &[f64]) -> Result<f64> {
        let r = self.integrate_raw(f, breaks);
        if !r.value.is_finite() {
            return Err(Error::numeric("quadrature", "non-finite integral"));
        }
        if !r.converged {
            return Err(Error::numeric(
                "quadrature",
                format!(
                    "no convergence on [{}, {}]: value {:.6e}, error estimate {:.3e}",
                    breaks[0],
                    breaks[breaks.len() - 1],
                    r.value,
                    r.abs_error
                ),
            ));
        }
        Ok(r.value)
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Fixed Gauss–Legendre rule mapped onto an interval.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        let (nodes, weights) = gauss_legendre(n);
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// (node, weight) pairs mapped to [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (c + h * x, h * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn legendre_rule_is_exact_for_polynomials() {
        let gl = GaussLegendre::new(8);
        // degree 15 is the limit for 8 nodes
        let v = gl.integrate(|x| x.powi(14) + 3.0 * x.powi(3), -1.0, 1.0);
        assert_relative_eq!(v, 2.0 / 15.0, max_relative = 1e-13);
        let w: f64 = gauss_legendre(32).1.iter().sum();
        assert_relative_eq!(w, 2.0, max_relative = 1e-14);
    }

    #[test]
    fn kronrod_handles_endpoint_singularity() {
        let q = Integrator::new(1e-13, 1e-11);
        let v = q.integrate(|x: f64| x.powf(-0.5), &[0.0, 1.0]).unwrap();
        assert_relative_eq!(v, 2.0, max_relative = 1e-9);
    }

    #[test]
    fn kronrod_with_breakpoints() {
        let q = Integrator::default();
        let v = q.integrate(|x: f64| x.abs(), &[-1.0, 0.0, 2.0]).unwrap();
        assert_relative_eq!(v, 2.5, max_relative = 1e-12);
        let v = q
            .integrate(|x: f64| (-x * x).exp(), &[-10.0, 10.0])
            .unwrap();
        assert_relative_eq!(v, std::f64::consts::PI.sqrt(), max_relative = 1e-11);
    }

    #[test]
    fn reversed_interval_changes_sign() {
        let q = Integrator::default();
        let v = q.integrate(|x: f64| x.cos(), &[1.0, 0.0]).unwrap();
        assert_relative_eq!(v, -(1.0f64.sin()), max_relative = 1e-12);
    }

    #[test]
    fn non_convergence_is_an_error() {
        let q = Integrator::new(1e-14, 1e-14).with_max_panels(3);
        assert!(q
            .integrate(|x: f64| (50.0 * x).sin().abs(), &[0.0, 10.0])
            .is_err());
    }
}
