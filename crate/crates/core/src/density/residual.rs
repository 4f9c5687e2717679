//! L¹ distance between the transition density and the principal density.
//!
//! Integrals run in noise coordinates `y = χ_t(x) + A w` on a tensor grid of
//! Gauss–Legendre panels in `v`, where `w_i = σ_i sinh v`. The distance uses
//! `∫|u − ũ| = 2 − 2∫ min(u, ũ)`, so mass outside the box and at skipped
//! nodes can only shift the result by a known amount.

use std::collections::HashMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::oracle::LinearOracle;
use super::principal::PrincipalKernel;
use crate::error::{Error, Result};
use crate::numerics::{linear_fit, quantile, GaussLegendre};
use crate::reduction::ModelSpec;
use crate::sim::{simulate, PathEnsemble, SimConfig};

/// Principal mass allowed outside the box in two or more dimensions.
pub const TRUNCATION_DEFICIT: f64 = 1e-3;
/// Principal mass allowed outside the box in one dimension.
pub const FINE_DEFICIT: f64 = 1e-8;
/// Principal mass of grid nodes that may be left unevaluated (two or more
/// dimensions; one-dimensional grids are evaluated in full).
pub const SKIP_BUDGET: f64 = 1e-3;
/// Smallest acceptable principal mass on the grid.
pub const MIN_BOX_MASS: f64 = 0.99;
/// A lower bracket end below this counts as a zero residual.
pub const ZERO_RESIDUAL_SLACK: f64 = 1e-6;
/// Allowed shortfall of the fitted slope below ε₀.
pub const SLOPE_SLACK: f64 = 0.02;

const PANEL_ORDER: usize = 4;
/// Kernel support in bandwidths.
const KERNEL_REACH: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ResidualMethod {
    /// Exact density of a linear model.
    Oracle,
    /// Gaussian kernel estimate from a simulated ensemble.
    MonteCarlo { config: SimConfig },
}

/// One L¹ residual with its bracket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub t: f64,
    /// Midpoint of `[lower, upper]`.
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    /// Principal mass outside the box.
    pub deficit: f64,
    /// Principal mass at nodes where `u` was not evaluated.
    pub skipped: f64,
    pub evaluations: usize,
}

/// Tensor grid in noise coordinates with the principal density tabulated.
struct NoiseGrid {
    /// Per axis: nodes `w` and quadrature weights in `w`.
    nodes: Vec<Vec<f64>>,
    weights: Vec<Vec<f64>>,
    /// Per axis: one-dimensional noise densities at the nodes.
    marginals: Vec<Vec<f64>>,
}

impl NoiseGrid {
    fn new(model: &ModelSpec, t: f64, deficit: f64, panel_width: f64) -> Result<Self> {
        let d = model.dim();
        let per_axis = 1.0 - (1.0 - deficit).powf(1.0 / d as f64);
        let gl = GaussLegendre::new(PANEL_ORDER);
        let mut nodes = Vec::with_capacity(d);
        let mut weights = Vec::with_capacity(d);
        let mut marginals = Vec::with_capacity(d);
        for c in &model.noise.components {
            let sigma = c.tail_quantile(t, 0.5)?;
            let reach = c.tail_quantile(t, per_axis)?;
            let v_max = (reach / sigma).asinh();
            let panels = ((2.0 * v_max / panel_width).ceil() as usize).max(2);
            let h = 2.0 * v_max / panels as f64;
            let mut w = Vec::new();
            let mut q = Vec::new();
            for k in 0..panels {
                let lo = -v_max + k as f64 * h;
                for (v, gw) in gl.mapped(lo, lo + h) {
                    w.push(sigma * v.sinh());
                    q.push(gw * sigma * v.cosh());
                }
            }
            let g = w
                .iter()
                .map(|x| c.density(t, *x))
                .collect::<Result<Vec<_>>>()?;
            nodes.push(w);
            weights.push(q);
            marginals.push(g);
        }
        Ok(Self {
            nodes,
            weights,
            marginals,
        })
    }

    fn shape(&self) -> Vec<usize> {
        self.nodes.iter().map(Vec::len).collect()
    }

    fn index(&self, mut i: usize) -> Vec<usize> {
        let shape = self.shape();
        let mut idx = vec![0; shape.len()];
        for k in (0..shape.len()).rev() {
            idx[k] = i % shape[k];
            i /= shape[k];
        }
        idx
    }

    fn flat(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(self.shape())
            .fold(0, |acc, (i, n)| acc * n + i)
    }

    /// The node reflected through the center; the grid is symmetric.
    fn mirror(&self, i: usize) -> usize {
        let shape = self.shape();
        let idx: Vec<usize> = self
            .index(i)
            .iter()
            .zip(&shape)
            .map(|(k, n)| n - 1 - k)
            .collect();
        self.flat(&idx)
    }

    fn point(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter()
            .enumerate()
            .map(|(k, i)| self.nodes[k][*i])
            .collect()
    }

    fn weight(&self, idx: &[usize]) -> f64 {
        idx.iter()
            .enumerate()
            .map(|(k, i)| self.weights[k][*i])
            .product()
    }

    fn principal(&self, idx: &[usize]) -> f64 {
        idx.iter()
            .enumerate()
            .map(|(k, i)| self.marginals[k][*i])
            .product()
    }
}

/// `∫ |u − ũ|` where `u(y, ũ(y))` is a density in `y`. With `symmetric`,
/// `u` is assumed even about the center and evaluated on half the grid.
fn l1_on_grid<U>(
    model: &ModelSpec,
    kernel: &PrincipalKernel,
    plan: GridPlan,
    symmetric: bool,
    u: U,
) -> Result<Residual>
where
    U: Fn(&[f64], f64) -> Result<f64> + Sync,
{
    let t = kernel.t;
    let grid = NoiseGrid::new(model, t, plan.deficit, plan.width)?;
    let total: usize = grid.shape().iter().product();
    // (representative node, multiplicity, principal mass of the class)
    let mut classes: Vec<(usize, f64, f64)> = Vec::with_capacity(total);
    for i in 0..total {
        let j = if symmetric { grid.mirror(i) } else { i };
        if j < i {
            continue;
        }
        let idx = grid.index(i);
        let mult = if j == i { 1.0 } else { 2.0 };
        classes.push((i, mult, mult * grid.weight(&idx) * grid.principal(&idx)));
    }
    let box_mass: f64 = classes.iter().map(|c| c.2).sum();
    if box_mass < MIN_BOX_MASS {
        return Err(Error::accuracy(format!(
            "grid holds principal mass {box_mass:.6}, below {MIN_BOX_MASS}"
        )));
    }
    classes.sort_by(|a, b| a.2.total_cmp(&b.2));
    let mut skipped = 0.0;
    let mut first_kept = classes.len();
    for (k, c) in classes.iter().enumerate() {
        if skipped + c.2 > plan.skip {
            first_kept = k;
            break;
        }
        skipped += c.2;
    }
    let kept = &classes[first_kept..];
    let det = kernel.det();
    let overlaps = kept
        .par_iter()
        .map(|&(i, mult, _)| {
            let idx = grid.index(i);
            let w = grid.point(&idx);
            let principal = grid.principal(&idx);
            let y: Vec<f64> = (&kernel.matrix * nalgebra::DVector::from_column_slice(&w))
                .iter()
                .zip(&kernel.center)
                .map(|(a, c)| a + c)
                .collect();
            let value = det * u(&y, principal / det)?;
            Ok(mult * grid.weight(&idx) * value.min(principal))
        })
        .collect::<Result<Vec<f64>>>()?;
    let overlap: f64 = overlaps.iter().sum();
    let deficit = (1.0 - box_mass).max(0.0);
    let upper = 2.0 - 2.0 * overlap;
    let lower = upper - 2.0 * (deficit + skipped);
    Ok(Residual {
        t,
        value: (0.5 * (lower + upper)).max(0.0),
        lower,
        upper,
        deficit,
        skipped,
        evaluations: kept.len(),
    })
}

/// Box deficit, skip budget and panel width in `v`.
#[derive(Debug, Clone, Copy)]
struct GridPlan {
    deficit: f64,
    skip: f64,
    width: f64,
}

impl GridPlan {
    fn for_dim(d: usize) -> Self {
        if d == 1 {
            Self {
                deficit: FINE_DEFICIT,
                skip: 0.0,
                width: 0.05,
            }
        } else {
            Self {
                deficit: TRUNCATION_DEFICIT,
                skip: SKIP_BUDGET,
                width: 1.0,
            }
        }
    }
}

/// Gaussian kernel density estimate with per-axis bandwidth
/// `IQR_i N^{−1/(d+4)}`.
#[derive(Debug, Clone)]
pub struct Kde {
    samples: Vec<Vec<f64>>,
    bandwidth: Vec<f64>,
    cells: HashMap<Vec<i64>, Vec<usize>>,
}

impl Kde {
    pub fn new(ensemble: &PathEnsemble) -> Result<Self> {
        let n = ensemble.len();
        let d = ensemble.dim;
        if n < 2 {
            return Err(Error::domain("kernel estimate needs at least two samples"));
        }
        let factor = (n as f64).powf(-1.0 / (d as f64 + 4.0));
        let bandwidth = (0..d)
            .map(|i| {
                let c = ensemble.coordinate(i);
                let iqr = quantile(&c, 0.75) - quantile(&c, 0.25);
                if iqr > 0.0 {
                    Ok(iqr * factor)
                } else {
                    Err(Error::domain("ensemble has zero interquartile range"))
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        let samples: Vec<Vec<f64>> = ensemble.rows().map(<[f64]>::to_vec).collect();
        let mut cells: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
        for (j, s) in samples.iter().enumerate() {
            cells.entry(Self::cell(&bandwidth, s)).or_default().push(j);
        }
        Ok(Self {
            samples,
            bandwidth,
            cells,
        })
    }

    fn cell(bandwidth: &[f64], y: &[f64]) -> Vec<i64> {
        y.iter()
            .zip(bandwidth)
            .map(|(v, h)| (v / (KERNEL_REACH * h)).floor() as i64)
            .collect()
    }

    pub fn bandwidth(&self) -> &[f64] {
        &self.bandwidth
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        let d = y.len();
        let home = Self::cell(&self.bandwidth, y);
        let norm: f64 = self
            .bandwidth
            .iter()
            .map(|h| h * (2.0 * PI).sqrt())
            .product();
        let mut total = 0.0;
        let mut offset = vec![-1_i64; d];
        loop {
            let key: Vec<i64> = home
                .iter()
                .zip(&offset)
                .map(|(a, b)| a.saturating_add(*b))
                .collect();
            if let Some(members) = self.cells.get(&key) {
                for &j in members {
                    let q: f64 = self.samples[j]
                        .iter()
                        .zip(y)
                        .zip(&self.bandwidth)
                        .map(|((s, v), h)| ((s - v) / h).powi(2))
                        .sum();
                    total += (-0.5 * q).exp();
                }
            }
            let mut k = 0;
            while k < d && offset[k] == 1 {
                offset[k] = -1;
                k += 1;
            }
            if k == d {
                break;
            }
            offset[k] += 1;
        }
        total / (norm * self.samples.len() as f64)
    }
}

/// L¹ distance between the transition density of `X_t` started at `x` and
/// `ũ_t(x, ·)`.
pub fn residual_l1(
    model: &ModelSpec,
    t: f64,
    x: &[f64],
    method: &ResidualMethod,
) -> Result<Residual> {
    let kernel = PrincipalKernel::principal(model, t, x)?;
    let plan = GridPlan::for_dim(model.dim());
    match method {
        ResidualMethod::Oracle => {
            let oracle = LinearOracle::new(model, t, x)?;
            let floor = 1e-8 * oracle.peak();
            l1_on_grid(model, &kernel, plan, true, |y, principal| {
                oracle.density_with_tolerance(y, (1e-4 * principal).max(floor))
            })
        }
        ResidualMethod::MonteCarlo { config } => {
            let ensemble = simulate(model, &config.with_horizon(t), x)?;
            let kde = Kde::new(&ensemble)?;
            l1_on_grid(model, &kernel, plan, false, |y, _| Ok(kde.eval(y)))
        }
    }
}

/// L¹ distance between `ǔ_t(x, ·)` and `ũ_t(x, ·)`.
pub fn principal_gap_l1(model: &ModelSpec, t: f64, x: &[f64]) -> Result<Residual> {
    let kernel = PrincipalKernel::principal(model, t, x)?;
    let check = PrincipalKernel::simplified(model, t, x)?;
    l1_on_grid(
        model,
        &kernel,
        GridPlan::for_dim(model.dim()),
        false,
        |y, _| check.eval(model, y),
    )
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResidualFit {
    pub t_list: Vec<f64>,
    pub residuals: Vec<f64>,
    pub brackets: Vec<Residual>,
    /// Log-log least-squares slope; absent when every residual is zero.
    pub slope: Option<f64>,
    pub epsilon0: f64,
    /// Every residual bracket contains zero, so the bound holds trivially.
    pub trivial: bool,
    pub pass: bool,
}

/// Fits `log residual` against `log t`; passes iff the slope is at least
/// `ε₀ − 0.02`.
pub fn fit_residual_exponent(
    model: &ModelSpec,
    x: &[f64],
    t_list: &[f64],
    method: &ResidualMethod,
) -> Result<ResidualFit> {
    if t_list.len() < 4 {
        return Err(Error::domain("the residual fit needs at least four times"));
    }
    if t_list.iter().any(|t| !(*t > 0.0 && *t <= 1.0)) {
        return Err(Error::domain("fit times must lie in (0, 1]"));
    }
    let mut ts = t_list.to_vec();
    ts.sort_by(f64::total_cmp);
    if ts.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::domain("fit times must be distinct"));
    }
    let epsilon0 = model
        .epsilon0
        .ok_or_else(|| Error::domain("the model has no residual exponent ε₀"))?;
    let brackets = ts
        .iter()
        .map(|t| residual_l1(model, *t, x, method))
        .collect::<Result<Vec<_>>>()?;
    let residuals: Vec<f64> = brackets.iter().map(|r| r.value).collect();
    let trivial = brackets.iter().all(|r| r.lower <= ZERO_RESIDUAL_SLACK);
    let slope = if trivial {
        None
    } else {
        if residuals.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::numeric(
                "residual fit",
                "degenerate fit: some residuals are not positive",
            ));
        }
        let lt: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
        let lr: Vec<f64> = residuals.iter().map(|r| r.ln()).collect();
        Some(linear_fit(&lt, &lr).slope)
    };
    let pass = trivial || slope.is_some_and(|s| s >= epsilon0 - SLOPE_SLACK);
    Ok(ResidualFit {
        t_list: ts,
        residuals,
        brackets,
        slope,
        epsilon0,
        trivial,
        pass,
    })
}
