//! Drift fields `b: ℝ^d → ℝ^d` with derivative oracles and declared constants.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

type FieldFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
type JacobianFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

/// `max |d/dx sech²(x)| = 4 / (3√3)`.
const SECH2_LIPSCHITZ: f64 = 0.769_800_358_919_501;

/// Serializable description of a catalog drift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DriftSpec {
    Zero {
        dim: usize,
    },
    /// `b(x) = B x`, `B` given row by row.
    Linear {
        matrix: Vec<Vec<f64>>,
    },
    /// `b(x) = ω (−x₂, x₁)` in the plane.
    Rotation {
        #[serde(default = "one")]
        omega: f64,
    },
    /// `b_i(x) = a tanh(x_i)`.
    TanhBounded {
        a: f64,
        dim: usize,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Clone)]
enum Kind {
    Zero,
    Linear(DMatrix<f64>),
    Rotation(f64),
    Tanh(f64),
    Custom {
        field: FieldFn,
        jacobian: Option<JacobianFn>,
    },
}

/// Regularity constants of a drift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftConstants {
    /// Bound on the Frobenius norm `|Db|`.
    pub c6: f64,
    /// Hölder constant of `Db`.
    pub c7: f64,
    /// Hölder exponent of `Db`.
    pub eta2: f64,
    /// Bound on `|b|` when the drift is bounded.
    pub c8: Option<f64>,
}

/// A drift with its derivative and constants.
#[derive(Clone)]
pub struct DriftField {
    name: String,
    dim: usize,
    kind: Kind,
    constants: DriftConstants,
}

impl fmt::Debug for DriftField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DriftField")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("constants", &self.constants)
            .finish()
    }
}

impl DriftField {
    pub fn zero(dim: usize) -> Self {
        Self {
            name: "zero".into(),
            dim,
            kind: Kind::Zero,
            constants: DriftConstants {
                c6: 0.0,
                c7: 0.0,
                eta2: 1.0,
                c8: Some(0.0),
            },
        }
    }

    pub fn linear(b: DMatrix<f64>) -> Result<Self> {
        if !b.is_square() || b.nrows() == 0 {
            return Err(Error::domain("linear drift needs a nonempty square matrix"));
        }
        let c6 = b.norm();
        let bounded = if c6 == 0.0 { Some(0.0) } else { None };
        Ok(Self {
            name: "linear".into(),
            dim: b.nrows(),
            kind: Kind::Linear(b),
            constants: DriftConstants {
                c6,
                c7: 0.0,
                eta2: 1.0,
                c8: bounded,
            },
        })
    }

    pub fn rotation(omega: f64) -> Self {
        Self {
            name: "rotation".into(),
            dim: 2,
            kind: Kind::Rotation(omega),
            constants: DriftConstants {
                c6: omega.abs() * std::f64::consts::SQRT_2,
                c7: 0.0,
                eta2: 1.0,
                c8: if omega == 0.0 { Some(0.0) } else { None },
            },
        }
    }

    pub fn tanh_bounded(a: f64, dim: usize) -> Self {
        Self {
            name: "tanh_bounded".into(),
            dim,
            kind: Kind::Tanh(a),
            constants: DriftConstants {
                c6: a.abs() * (dim as f64).sqrt(),
                c7: a.abs() * SECH2_LIPSCHITZ,
                eta2: 1.0,
                c8: Some(a.abs() * (dim as f64).sqrt()),
            },
        }
    }

    /// Arbitrary field; without `jacobian` the derivative falls back to
    /// central finite differences.
    pub fn custom<F>(
        name: &str,
        dim: usize,
        field: F,
        jacobian: Option<JacobianFn>,
        constants: DriftConstants,
    ) -> Self
    where
        F: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            dim,
            kind: Kind::Custom {
                field: Arc::new(field),
                jacobian,
            },
            constants,
        }
    }

    pub fn from_spec(spec: &DriftSpec) -> Result<Self> {
        match spec {
            DriftSpec::Zero { dim } => {
                if *dim == 0 {
                    return Err(Error::domain("drift dimension must be positive"));
                }
                Ok(Self::zero(*dim))
            }
            DriftSpec::Linear { matrix } => Self::linear(matrix_from_rows(matrix)?),
            DriftSpec::Rotation { omega } => Ok(Self::rotation(*omega)),
            DriftSpec::TanhBounded { a, dim } => {
                if *dim == 0 {
                    return Err(Error::domain("drift dimension must be positive"));
                }
                Ok(Self::tanh_bounded(*a, *dim))
            }
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn constants(&self) -> DriftConstants {
        self.constants
    }

    pub fn with_constants(mut self, constants: DriftConstants) -> Self {
        self.constants = constants;
        self
    }

    /// Whether condition (D) (bounded drift) is declared.
    pub fn is_bounded(&self) -> bool {
        self.constants.c8.is_some()
    }

    /// The matrix `B` when `b(x) = Bx`.
    pub fn linear_matrix(&self) -> Option<DMatrix<f64>> {
        match &self.kind {
            Kind::Zero => Some(DMatrix::zeros(self.dim, self.dim)),
            Kind::Linear(b) => Some(b.clone()),
            Kind::Rotation(w) => Some(DMatrix::from_row_slice(2, 2, &[0.0, -w, *w, 0.0])),
            _ => None,
        }
    }

    pub fn has_analytic_jacobian(&self) -> bool {
        !matches!(self.kind, Kind::Custom { jacobian: None, .. })
    }

    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        match &self.kind {
            Kind::Zero => out.iter_mut().for_each(|v| *v = 0.0),
            Kind::Linear(b) => {
                for i in 0..self.dim {
                    out[i] = (0..self.dim).map(|j| b[(i, j)] * x[j]).sum();
                }
            }
            Kind::Rotation(w) => {
                out[0] = -w * x[1];
                out[1] = w * x[0];
            }
            Kind::Tanh(a) => {
                for (o, xi) in out.iter_mut().zip(x) {
                    *o = a * xi.tanh();
                }
            }
            Kind::Custom { field, .. } => field(x, out),
        }
    }

    pub fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim);
        self.eval_into(x.as_slice(), out.as_mut_slice());
        out
    }

    /// `Db(x)`, analytic where available.
    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        match &self.kind {
            Kind::Zero => DMatrix::zeros(self.dim, self.dim),
            Kind::Linear(b) => b.clone(),
            Kind::Rotation(w) => DMatrix::from_row_slice(2, 2, &[0.0, -w, *w, 0.0]),
            Kind::Tanh(a) => DMatrix::from_diagonal(&DVector::from_iterator(
                self.dim,
                x.iter().map(|xi| a / xi.cosh().powi(2)),
            )),
            Kind::Custom {
                jacobian: Some(j), ..
            } => j(x),
            Kind::Custom { jacobian: None, .. } => self.fd_jacobian(x),
        }
    }

    /// Central differences with step `1e-6 (1 + |x|)`.
    pub fn fd_jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let d = self.dim;
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let h = 1e-6 * (1.0 + norm);
        let mut jac = DMatrix::zeros(d, d);
        let mut xp = x.to_vec();
        let mut fp = vec![0.0; d];
        let mut fm = vec![0.0; d];
        for j in 0..d {
            xp[j] = x[j] + h;
            self.eval_into(&xp, &mut fp);
            xp[j] = x[j] - h;
            self.eval_into(&xp, &mut fm);
            xp[j] = x[j];
            for i in 0..d {
                jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        jac
    }

    /// Closed-form forward flow `χ_t(x)` and its Jacobian, when known.
    pub fn exact_flow(&self, t: f64, x: &[f64]) -> Option<(DVector<f64>, DMatrix<f64>)> {
        let d = self.dim;
        match &self.kind {
            Kind::Zero => Some((DVector::from_column_slice(x), DMatrix::identity(d, d))),
            Kind::Linear(b) => {
                let m = (b * t).exp();
                Some((&m * DVector::from_column_slice(x), m))
            }
            Kind::Rotation(w) => {
                let (s, c) = (w * t).sin_cos();
                let m = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
                Some((&m * DVector::from_column_slice(x), m))
            }
            Kind::Tanh(a) => {
                let (y, dy): (Vec<f64>, Vec<f64>) =
                    x.iter().map(|&xi| tanh_flow(xi, a * t)).unzip();
                Some((
                    DVector::from_vec(y),
                    DMatrix::from_diagonal(&DVector::from_vec(dy)),
                ))
            }
            Kind::Custom { .. } => None,
        }
    }
}

/// Scalar flow of `ẋ = a tanh(x)` over time `t` given `at = a t`:
/// `sinh(y) = e^{at} sinh(x)`, evaluated in log form so large `|x|` does not
/// overflow. Returns `(y, dy/dx)`.
fn tanh_flow(x: f64, at: f64) -> (f64, f64) {
    let ax = x.abs();
    let y = if ax > 30.0 {
        let z = ax + at;
        if z > 30.0 {
            z + (-(-2.0 * ax).exp()).ln_1p()
        } else {
            (0.5 * z.exp() * -(-2.0 * ax).exp_m1()).asinh()
        }
    } else {
        (ax.sinh() * at.exp()).asinh()
    };
    let dy = (ax + at - y).exp() * (1.0 + (-2.0 * ax).exp()) / (1.0 + (-2.0 * y).exp());
    (y.copysign(x), dy)
}

pub(crate) fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::domain("matrix must be square and nonempty"));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn analytic_jacobians_match_differences() {
        let x = [0.3, -1.2];
        for drift in [
            DriftField::rotation(1.3),
            DriftField::tanh_bounded(0.8, 2),
            DriftField::linear(DMatrix::from_row_slice(2, 2, &[0.5, -1.0, 0.2, -0.3])).unwrap(),
        ] {
            let a = drift.jacobian(&x);
            let f = drift.fd_jacobian(&x);
            assert!((a - f).amax() < 1e-8, "{}", drift.name());
        }
    }

    #[test]
    fn tanh_flow_is_finite_for_huge_arguments() {
        let drift = DriftField::tanh_bounded(1.0, 1);
        for x in [800.0, -1e6, 1e15] {
            for t in [-0.5, 0.5] {
                let (y, jac) = drift.exact_flow(t, &[x]).unwrap();
                assert_relative_eq!(y[0], x + t * x.signum(), max_relative = 1e-14);
                assert_relative_eq!(jac[(0, 0)], 1.0, epsilon = 1e-12);
            }
        }
        let (y, jac) = drift.exact_flow(0.3, &[35.0]).unwrap();
        let (yb, jb) = drift.exact_flow(-0.3, &[y[0]]).unwrap();
        assert_relative_eq!(yb[0], 35.0, epsilon = 1e-12);
        assert_relative_eq!(jac[(0, 0)] * jb[(0, 0)], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn tanh_closed_form_solves_the_ode() {
        let drift = DriftField::tanh_bounded(0.7, 1);
        let x = [0.4];
        let h = 1e-5;
        let (yp, _) = drift.exact_flow(0.5 + h, &x).unwrap();
        let (ym, _) = drift.exact_flow(0.5 - h, &x).unwrap();
        let (y, _) = drift.exact_flow(0.5, &x).unwrap();
        let deriv = (yp[0] - ym[0]) / (2.0 * h);
        assert_relative_eq!(deriv, 0.7 * y[0].tanh(), max_relative = 1e-8);
    }

    #[test]
    fn spec_round_trip() {
        let spec = DriftSpec::Linear {
            matrix: vec![vec![1.0, 0.0], vec![0.0, -2.0]],
        };
        let json = serde_json::to_string(&spec).unwrap();
        let back: DriftSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(spec, back);
        let d = DriftField::from_spec(&back).unwrap();
        assert_eq!(d.dim(), 2);
        assert!(DriftField::from_spec(&DriftSpec::Linear {
            matrix: vec![vec![1.0, 0.0]]
        })
        .is_err());
    }
}
