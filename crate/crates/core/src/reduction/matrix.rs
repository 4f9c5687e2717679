//! Jump coefficient fields `A: ℝ^d → ℝ^{d×d}`.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::drift::matrix_from_rows;

type MatrixFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

/// Serializable description of a catalog matrix field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MatrixSpec {
    Identity {
        dim: usize,
    },
    Constant {
        matrix: Vec<Vec<f64>>,
    },
    /// `A(x) = diag(base_i + amp · min(1, |x_i|)^{η₁})`.
    Holder {
        base: Vec<f64>,
        amp: f64,
        eta1: f64,
    },
}

/// Bounds declared for a matrix field (Frobenius norms).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatrixConstants {
    /// `|A(x)| ≤ C₃`.
    pub c3: f64,
    /// `|det A(x)| ≥ C₄`.
    pub c4: f64,
    /// `|A(x) − A(y)| ≤ C₅ |x − y|^{η₁}`.
    pub c5: f64,
    pub eta1: f64,
}

#[derive(Clone)]
enum Kind {
    Constant(DMatrix<f64>),
    Holder { base: Vec<f64>, amp: f64, eta1: f64 },
    Custom(MatrixFn),
}

#[derive(Clone)]
pub struct MatrixField {
    name: String,
    dim: usize,
    kind: Kind,
    constants: MatrixConstants,
}

impl fmt::Debug for MatrixField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MatrixField")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("constants", &self.constants)
            .finish()
    }
}

impl MatrixField {
    pub fn identity(dim: usize) -> Self {
        let mut m = Self::constant(DMatrix::identity(dim, dim)).expect("identity is invertible");
        m.name = "identity".into();
        m
    }

    pub fn constant(a: DMatrix<f64>) -> Result<Self> {
        if !a.is_square() || a.nrows() == 0 {
            return Err(Error::domain("matrix field needs a nonempty square matrix"));
        }
        let det = a.determinant();
        if det == 0.0 || !det.is_finite() {
            return Err(Error::domain("constant matrix is singular"));
        }
        Ok(Self {
            name: "constant".into(),
            dim: a.nrows(),
            constants: MatrixConstants {
                c3: a.norm(),
                c4: det.abs(),
                c5: 0.0,
                eta1: 1.0,
            },
            kind: Kind::Constant(a),
        })
    }

    pub fn holder(base: Vec<f64>, amp: f64, eta1: f64) -> Result<Self> {
        if base.is_empty() || base.iter().any(|b| !(*b > 0.0)) {
            return Err(Error::domain("Hölder field needs positive base diagonal"));
        }
        if !(amp >= 0.0) {
            return Err(Error::domain("Hölder amplitude must be nonnegative"));
        }
        if !(eta1 > 0.0 && eta1 <= 1.0) {
            return Err(Error::domain(format!("η₁ must lie in (0, 1], got {eta1}")));
        }
        let d = base.len();
        let c3 = base.iter().map(|b| (b + amp).powi(2)).sum::<f64>().sqrt();
        let c4 = base.iter().product();
        Ok(Self {
            name: "holder".into(),
            dim: d,
            constants: MatrixConstants {
                c3,
                c4,
                c5: amp * (d as f64).sqrt(),
                eta1,
            },
            kind: Kind::Holder { base, amp, eta1 },
        })
    }

    pub fn custom<F>(name: &str, dim: usize, f: F, constants: MatrixConstants) -> Self
    where
        F: Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            dim,
            kind: Kind::Custom(Arc::new(f)),
            constants,
        }
    }

    pub fn from_spec(spec: &MatrixSpec) -> Result<Self> {
        match spec {
            MatrixSpec::Identity { dim } => {
                if *dim == 0 {
                    return Err(Error::domain("matrix dimension must be positive"));
                }
                Ok(Self::identity(*dim))
            }
            MatrixSpec::Constant { matrix } => Self::constant(matrix_from_rows(matrix)?),
            MatrixSpec::Holder { base, amp, eta1 } => Self::holder(base.clone(), *amp, *eta1),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn constants(&self) -> MatrixConstants {
        self.constants
    }

    pub fn with_constants(mut self, constants: MatrixConstants) -> Self {
        self.constants = constants;
        self
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.kind, Kind::Constant(_))
    }

    pub fn constant_value(&self) -> Option<&DMatrix<f64>> {
        match &self.kind {
            Kind::Constant(a) => Some(a),
            _ => None,
        }
    }

    pub fn eval(&self, x: &[f64]) -> DMatrix<f64> {
        match &self.kind {
            Kind::Constant(a) => a.clone(),
            Kind::Holder { base, amp, eta1 } => DMatrix::from_fn(self.dim, self.dim, |i, j| {
                if i == j {
                    base[i] + amp * x[i].abs().min(1.0).powf(*eta1)
                } else {
                    0.0
                }
            }),
            Kind::Custom(f) => f(x),
        }
    }

    /// `A(x) v` without allocating a matrix for the catalog fields.
    pub fn apply(&self, x: &[f64], v: &[f64], out: &mut [f64]) {
        match &self.kind {
            Kind::Holder { base, amp, eta1 } => {
                for i in 0..self.dim {
                    out[i] = (base[i] + amp * x[i].abs().min(1.0).powf(*eta1)) * v[i];
                }
            }
            Kind::Constant(a) => {
                for i in 0..self.dim {
                    out[i] = (0..self.dim).map(|j| a[(i, j)] * v[j]).sum();
                }
            }
            Kind::Custom(f) => {
                let a = f(x);
                for i in 0..self.dim {
                    out[i] = (0..self.dim).map(|j| a[(i, j)] * v[j]).sum();
                }
            }
        }
    }

    pub fn inverse(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let a = self.eval(x);
        a.try_inverse()
            .ok_or_else(|| Error::domain(format!("A(x) is singular at x = {x:?}")))
    }
}
