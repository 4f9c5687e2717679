//! The principal density: a flow-shifted, matrix-warped product of the
//! one-dimensional noise densities.

use nalgebra::{DMatrix, DVector};

use super::oracle::{DensityGrid, DensityMethod};
use crate::error::{Error, Result};
use crate::levy::density_product;
use crate::numerics::Integrator;
use crate::reduction::ModelSpec;

/// Frozen data of `y ↦ ũ_t(x, y)`: the center `χ_t(x)`, the matrix the
/// noise is warped by, and its inverse.
#[derive(Debug, Clone)]
pub struct PrincipalKernel {
    pub t: f64,
    pub center: Vec<f64>,
    pub matrix: DMatrix<f64>,
    inverse: DMatrix<f64>,
    det: f64,
}

impl PrincipalKernel {
    fn build(model: &ModelSpec, t: f64, x: &[f64], at: &[f64]) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::domain(format!("time must be positive, got {t}")));
        }
        let center = model.flow.chi(t, x)?.as_slice().to_vec();
        let matrix = model.matrix.eval(if at.is_empty() { &center } else { at });
        let det = matrix.determinant().abs();
        let inverse = matrix
            .clone()
            .try_inverse()
            .filter(|_| det > 0.0 && det.is_finite())
            .ok_or_else(|| Error::domain("jump matrix is singular; condition (C4) fails"))?;
        Ok(Self {
            t,
            center,
            matrix,
            inverse,
            det,
        })
    }

    /// `ũ_t(x, ·)` with `A(χ_t(x))`.
    pub fn principal(model: &ModelSpec, t: f64, x: &[f64]) -> Result<Self> {
        Self::build(model, t, x, &[])
    }

    /// `ǔ_t(x, ·)` with `A(x)`; needs the drift to be declared bounded.
    pub fn simplified(model: &ModelSpec, t: f64, x: &[f64]) -> Result<Self> {
        if !model.has_bounded_drift() {
            return Err(Error::domain(
                "the simplified principal part needs a bounded drift; condition (D) is not declared",
            ));
        }
        Self::build(model, t, x, x)
    }

    pub fn det(&self) -> f64 {
        self.det
    }

    /// `A⁻¹(y − center)`.
    pub fn to_noise(&self, y: &[f64]) -> Vec<f64> {
        let d = DVector::from_iterator(y.len(), y.iter().zip(&self.center).map(|(a, b)| a - b));
        (&self.inverse * d).as_slice().to_vec()
    }

    pub fn eval(&self, model: &ModelSpec, y: &[f64]) -> Result<f64> {
        if y.len() != self.center.len() {
            return Err(Error::domain("point has the wrong dimension"));
        }
        Ok(density_product(&model.noise, self.t, &self.to_noise(y))? / self.det)
    }
}

/// `ũ_t(x, y) = G̃_t(A⁻¹(χ_t x)(y − χ_t x)) / |det A(χ_t x)|`.
pub fn principal_density(model: &ModelSpec, t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
    PrincipalKernel::principal(model, t, x)?.eval(model, y)
}

/// `ǔ_t(x, y) = G̃_t(A⁻¹(x)(y − χ_t x)) / |det A(x)|`.
pub fn principal_density_check(model: &ModelSpec, t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
    PrincipalKernel::simplified(model, t, x)?.eval(model, y)
}

/// `ũ_t(x, ·)` on a grid.
pub fn principal_density_grid(
    model: &ModelSpec,
    t: f64,
    x: &[f64],
    axes: Vec<Vec<f64>>,
) -> Result<DensityGrid> {
    let k = PrincipalKernel::principal(model, t, x)?;
    DensityGrid::evaluate(axes, t, x, DensityMethod::Principal, |y| k.eval(model, y))
}

/// Tail probability per axis left outside the integration box.
const MASS_TAIL: f64 = 1e-7;

/// Mass of `ũ_t(x, ·)` found by nested adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrincipalMass {
    pub t: f64,
    /// Integral over the noise-coordinate box.
    pub mass: f64,
    /// Upper bound on the mass outside the box.
    pub outside: f64,
    pub evaluations: usize,
}

/// `∫ ũ_t(x, y) dy` over `y = χ_t(x) + A w` with each `w_i` in the box
/// holding all but [`MASS_TAIL`] of its marginal, integrating adaptively in
/// `v` with `w_i = σ_i sinh v`.
pub fn principal_mass(model: &ModelSpec, t: f64, x: &[f64], rel_tol: f64) -> Result<PrincipalMass> {
    let kernel = PrincipalKernel::principal(model, t, x)?;
    let d = model.dim();
    let mut axes = Vec::with_capacity(d);
    for c in &model.noise.components {
        let sigma = c.tail_quantile(t, 0.5)?;
        let reach = c.tail_quantile(t, MASS_TAIL)?;
        axes.push((sigma, (reach / sigma).asinh()));
    }
    let q = Integrator::new(0.0, rel_tol).with_max_panels(400);
    let mut evaluations = 0;
    let mut failure = None;
    let mut w = vec![0.0; d];
    let mass = nested(
        model,
        &kernel,
        &axes,
        &q,
        0,
        &mut w,
        &mut evaluations,
        &mut failure,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(PrincipalMass {
        t,
        mass: mass * kernel.det(),
        outside: 1.0 - (1.0 - MASS_TAIL).powi(d as i32),
        evaluations,
    })
}

#[allow(clippy::too_many_arguments)]
fn nested(
    model: &ModelSpec,
    kernel: &PrincipalKernel,
    axes: &[(f64, f64)],
    q: &Integrator,
    k: usize,
    w: &mut Vec<f64>,
    evaluations: &mut usize,
    failure: &mut Option<Error>,
) -> f64 {
    let (sigma, v_max) = axes[k];
    let r = q.integrate_raw(
        |v| {
            if failure.is_some() {
                return 0.0;
            }
            w[k] = sigma * v.sinh();
            let jac = sigma * v.cosh();
            if k + 1 < axes.len() {
                return jac * nested(model, kernel, axes, q, k + 1, w, evaluations, failure);
            }
            *evaluations += 1;
            let y: Vec<f64> = (&kernel.matrix * DVector::from_column_slice(w))
                .iter()
                .zip(&kernel.center)
                .map(|(a, c)| a + c)
                .collect();
            match kernel.eval(model, &y) {
                Ok(u) => jac * u,
                Err(e) => {
                    *failure = Some(e);
                    0.0
                }
            }
        },
        &[-v_max, 0.0, v_max],
    );
    if !r.converged && failure.is_none() {
        *failure = Some(Error::numeric(
            "principal mass",
            format!("axis {k} did not reach relative tolerance {}", q.rel_tol),
        ));
    }
    r.value
}
