//! Euler schemes for the original and the reduced equation.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::stream_rng;
use crate::reduction::ModelSpec;

/// Samples whose norm exceeds this are excluded and counted.
pub const OVERFLOW_NORM: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// `X ← X + b(X) h + A(X) ΔZ`.
    Direct,
    /// `X* ← X* + V_s(X*, ΔZ)` for `s` from `−t` to `0`, started at `χ_t(x)`.
    Reduced,
}

impl Scheme {
    fn stream_bit(self) -> u64 {
        match self {
            Scheme::Direct => 0,
            Scheme::Reduced => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub step: f64,
    pub horizon: f64,
    pub samples: usize,
    pub seed: u64,
    pub scheme: Scheme,
}

impl SimConfig {
    pub fn new(step: f64, horizon: f64, samples: usize, seed: u64, scheme: Scheme) -> Result<Self> {
        let c = Self {
            step,
            horizon,
            samples,
            seed,
            scheme,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || !self.horizon.is_finite() {
            return Err(Error::domain(format!(
                "step must be positive, got {}",
                self.step
            )));
        }
        if self.step > self.horizon * (1.0 + 1e-12) {
            return Err(Error::domain(format!(
                "step {} exceeds horizon {}",
                self.step, self.horizon
            )));
        }
        if self.samples == 0 {
            return Err(Error::domain("sample count must be at least 1"));
        }
        Ok(())
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }

    /// Step sizes covering `[0, horizon]`; the last one absorbs the remainder.
    pub fn step_sizes(&self) -> Vec<f64> {
        let n = ((self.horizon / self.step) - 1e-9).ceil().max(1.0) as usize;
        let mut steps = vec![self.step; n];
        steps[n - 1] = self.horizon - self.step * (n - 1) as f64;
        steps
    }
}

/// Terminal values of a simulated ensemble.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathEnsemble {
    pub config: SimConfig,
    pub x0: Vec<f64>,
    pub dim: usize,
    /// Sample ids that were kept, in increasing order.
    pub ids: Vec<u64>,
    /// Row-major terminal values, one row per kept id.
    pub values: Vec<f64>,
    /// Samples dropped for overflow.
    pub excluded: usize,
}

impl PathEnsemble {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }

    pub fn coordinate(&self, i: usize) -> Vec<f64> {
        self.rows().map(|r| r[i]).collect()
    }

    pub fn excluded_fraction(&self) -> f64 {
        self.excluded as f64 / self.config.samples as f64
    }

    /// `sample_id,x_1,...,x_d`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sample_id");
        for i in 1..=self.dim {
            out.push_str(&format!(",x_{i}"));
        }
        out.push('\n');
        for (id, row) in self.ids.iter().zip(self.rows()) {
            out.push_str(&id.to_string());
            for v in row {
                out.push(',');
                out.push_str(&format!("{v:e}"));
            }
            out.push('\n');
        }
        out
    }

    /// Metadata written next to the CSV.
    pub fn sidecar(&self) -> serde_json::Value {
        serde_json::json!({
            "config": self.config,
            "x0": self.x0,
            "seed": self.config.seed,
            "rng": "chacha8, stream = 2 * sample_id + scheme bit (direct 0, reduced 1)",
            "kept": self.len(),
            "excluded": self.excluded,
        })
    }
}

/// Precomputed per-step maps for the reduced scheme on linear drifts.
struct LinearSteps {
    forward: Vec<DMatrix<f64>>,
    backward: Vec<DMatrix<f64>>,
}

fn mat_vec(m: &DMatrix<f64>, v: &[f64], out: &mut [f64]) {
    for (i, o) in out.iter_mut().enumerate() {
        *o = (0..v.len()).map(|j| m[(i, j)] * v[j]).sum();
    }
}

fn overflowed(x: &[f64]) -> bool {
    let n2: f64 = x.iter().map(|v| v * v).sum();
    !(n2.sqrt() <= OVERFLOW_NORM)
}

struct Stepper<'a> {
    model: &'a ModelSpec,
    config: SimConfig,
    steps: Vec<f64>,
    linear: Option<LinearSteps>,
}

impl<'a> Stepper<'a> {
    fn new(model: &'a ModelSpec, config: SimConfig) -> Self {
        let steps = config.step_sizes();
        let linear = match (config.scheme, model.drift().linear_matrix()) {
            (Scheme::Reduced, Some(b)) => {
                let mut s = -config.horizon;
                let mut forward = Vec::with_capacity(steps.len());
                let mut backward = Vec::with_capacity(steps.len());
                for h in &steps {
                    forward.push((&b * s).exp());
                    backward.push((&b * -s).exp());
                    s += h;
                }
                Some(LinearSteps { forward, backward })
            }
            _ => None,
        };
        Self {
            model,
            config,
            steps,
            linear,
        }
    }

    /// Runs one sample; `None` when it overflowed.
    fn run(&self, x0: &[f64], id: u64) -> Result<Option<Vec<f64>>> {
        let m = self.model;
        let d = m.dim();
        let mut rng = stream_rng(
            self.config.seed,
            (id << 1) | self.config.scheme.stream_bit(),
        );
        let mut dz = vec![0.0; d];
        let mut a = vec![0.0; d];
        let mut b = vec![0.0; d];
        let mut x = match self.config.scheme {
            Scheme::Direct => x0.to_vec(),
            Scheme::Reduced => m.flow.chi(self.config.horizon, x0)?.as_slice().to_vec(),
        };
        let mut s = -self.config.horizon;
        for (k, &h) in self.steps.iter().enumerate() {
            m.noise.sample_vector(h, &mut rng, &mut dz)?;
            match self.config.scheme {
                Scheme::Direct => {
                    m.drift().eval_into(&x, &mut b);
                    m.matrix.apply(&x, &dz, &mut a);
                    for i in 0..d {
                        x[i] += b[i] * h + a[i];
                    }
                }
                Scheme::Reduced => {
                    if let Some(lin) = &self.linear {
                        mat_vec(&lin.forward[k], &x, &mut b);
                        m.matrix.apply(&b, &dz, &mut a);
                        for i in 0..d {
                            a[i] += b[i];
                        }
                        mat_vec(&lin.backward[k], &a, &mut x);
                    } else {
                        let y = m.flow.chi(s, &x)?;
                        m.matrix.apply(y.as_slice(), &dz, &mut a);
                        for i in 0..d {
                            a[i] += y[i];
                        }
                        if overflowed(&a) {
                            return Ok(None);
                        }
                        x.copy_from_slice(m.flow.kappa(s, &a)?.as_slice());
                    }
                }
            }
            if overflowed(&x) {
                return Ok(None);
            }
            s += h;
        }
        Ok(Some(x))
    }
}

/// Simulates with the scheme named in `config`.
pub fn simulate(model: &ModelSpec, config: &SimConfig, x0: &[f64]) -> Result<PathEnsemble> {
    config.validate()?;
    if x0.len() != model.dim() {
        return Err(Error::domain(format!(
            "initial point has dimension {} but the model has {}",
            x0.len(),
            model.dim()
        )));
    }
    let stepper = Stepper::new(model, *config);
    let results: Vec<Result<Option<Vec<f64>>>> = (0..config.samples as u64)
        .into_par_iter()
        .map(|id| stepper.run(x0, id))
        .collect();
    let mut ids = Vec::with_capacity(config.samples);
    let mut values = Vec::with_capacity(config.samples * model.dim());
    let mut excluded = 0;
    for (id, r) in results.into_iter().enumerate() {
        match r? {
            Some(x) => {
                ids.push(id as u64);
                values.extend_from_slice(&x);
            }
            None => excluded += 1,
        }
    }
    Ok(PathEnsemble {
        config: *config,
        x0: x0.to_vec(),
        dim: model.dim(),
        ids,
        values,
        excluded,
    })
}

pub fn simulate_direct(model: &ModelSpec, config: &SimConfig, x0: &[f64]) -> Result<PathEnsemble> {
    simulate(model, &config.with_scheme(Scheme::Direct), x0)
}

pub fn simulate_reduced(model: &ModelSpec, config: &SimConfig, x0: &[f64]) -> Result<PathEnsemble> {
    simulate(model, &config.with_scheme(Scheme::Reduced), x0)
}
