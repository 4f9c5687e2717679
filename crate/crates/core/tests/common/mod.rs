#![allow(dead_code)]

use std::path::PathBuf;

use levyflow::cli::{load_config, ModelConfig};
use levyflow::reduction::ModelSpec;

pub const PRESETS: [&str; 6] = [
    "cauchy_1d",
    "linear_1d",
    "linear_2d_constant",
    "rotation",
    "tanh_holder",
    "zero_constant_2d",
];

pub fn preset_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../presets")
        .join(format!("{name}.json"))
}

pub fn preset(name: &str) -> (ModelConfig, ModelSpec) {
    let cfg = load_config(preset_path(name)).unwrap();
    let model = cfg.build().unwrap();
    (cfg, model)
}

/// Symmetric Cauchy law with the given center and scale.
pub fn cauchy_pdf(x: f64, center: f64, scale: f64) -> f64 {
    let u = (x - center) / scale;
    1.0 / (std::f64::consts::PI * scale * (1.0 + u * u))
}

pub fn cauchy_cdf(x: f64, center: f64, scale: f64) -> f64 {
    0.5 + ((x - center) / scale).atan() / std::f64::consts::PI
}

/// `exp(M)` by a plain Taylor series with scaling and squaring.
pub fn expm_series(m: &nalgebra::DMatrix<f64>) -> nalgebra::DMatrix<f64> {
    let n = m.nrows();
    let norm = m.norm();
    let mut s = 0;
    while norm / 2f64.powi(s) > 0.5 {
        s += 1;
    }
    let a = m / 2f64.powi(s);
    let mut term = nalgebra::DMatrix::identity(n, n);
    let mut sum = term.clone();
    for k in 1..30 {
        term = &term * &a / k as f64;
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}
