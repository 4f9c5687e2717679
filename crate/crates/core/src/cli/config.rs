//! JSON model configurations.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::flow::{DriftField, DriftSpec};
use crate::levy::{condition_e, Component, NoiseSpec, Regime, StableComponent};
use crate::reduction::{MatrixField, MatrixSpec, ModelSpec};

/// One noise component; without `scale` the symbol is exactly `|ξ|^α`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseEntry {
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
}

/// Constants declared in place of the catalog defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeclaredConstants {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c3: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c4: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c5: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c6: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c7: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c8: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub noise: Vec<NoiseEntry>,
    pub drift: DriftSpec,
    pub matrix: MatrixSpec,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default)]
    pub constants: DeclaredConstants,
    /// Require condition (D), a bounded drift.
    #[serde(default)]
    pub bounded_drift: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn default_horizon() -> f64 {
    1.0
}

/// Reads, parses and validates a configuration file.
pub fn load_config(path: impl AsRef<Path>) -> Result<ModelConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config(path.display().to_string(), format!("cannot read file: {e}")))?;
    let cfg = ModelConfig::parse(&text)?;
    cfg.build()?;
    Ok(cfg)
}

fn positive(path: &str, v: Option<f64>, condition: &str) -> Result<()> {
    match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => Err(Error::config(
            path,
            format!("condition {condition} needs a positive finite constant, got {x}"),
        )),
        _ => Ok(()),
    }
}

impl ModelConfig {
    /// Parses JSON text; errors carry the field path and the position.
    pub fn parse(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            Error::config(
                path,
                format!("{inner} (line {}, column {})", inner.line(), inner.column()),
            )
        })
    }

    /// Canonical JSON with defaults filled in and keys sorted.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_value(self)
            .expect("configs are plain data")
            .to_string()
    }

    pub fn to_pretty_json(&self) -> String {
        serde_json::to_string_pretty(&serde_json::to_value(self).expect("configs are plain data"))
            .expect("values serialize")
    }

    /// SHA-256 of the canonical JSON, hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_canonical_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn dim(&self) -> usize {
        self.noise.len()
    }

    pub fn start_point(&self) -> Vec<f64> {
        self.x0.clone().unwrap_or_else(|| vec![0.0; self.dim()])
    }

    fn noise_spec(&self) -> Result<NoiseSpec> {
        if self.noise.is_empty() {
            return Err(Error::config("noise", "at least one component is required"));
        }
        let mut parts = Vec::with_capacity(self.noise.len());
        for (i, n) in self.noise.iter().enumerate() {
            let c = match n.scale {
                None => StableComponent::unit(n.alpha),
                Some(s) => StableComponent::new(n.alpha, s),
            };
            let c = c.map_err(|e| {
                let field = if n.alpha > 0.0 && n.alpha < 2.0 {
                    "scale"
                } else {
                    "alpha"
                };
                Error::config(format!("noise[{i}].{field}"), strip_domain(e))
            })?;
            parts.push(Component::from(c));
        }
        NoiseSpec::new(parts).map_err(|e| Error::config("noise", strip_domain(e)))
    }

    /// Assembles the model, checking every cross-field constraint.
    pub fn build(&self) -> Result<ModelSpec> {
        let noise = self.noise_spec()?;
        let d = noise.dim();
        let k = &self.constants;

        let mut drift = DriftField::from_spec(&self.drift)
            .map_err(|e| Error::config("drift", strip_domain(e)))?;
        if drift.dim() != d {
            return Err(Error::config(
                "drift",
                format!("drift has dimension {} but the noise has {d}", drift.dim()),
            ));
        }
        let mut matrix = MatrixField::from_spec(&self.matrix)
            .map_err(|e| Error::config("matrix", strip_domain(e)))?;
        if matrix.dim() != d {
            return Err(Error::config(
                "matrix",
                format!(
                    "matrix has dimension {} but the noise has {d}",
                    matrix.dim()
                ),
            ));
        }

        for (path, v) in [
            ("constants.c3", k.c3),
            ("constants.c4", k.c4),
            ("constants.c5", k.c5),
            ("constants.c6", k.c6),
            ("constants.c7", k.c7),
        ] {
            positive(path, v, "(C)")?;
        }
        positive("constants.c8", k.c8, "(D)")?;
        if let Some(e1) = k.eta1 {
            if !(e1 > 0.0 && e1 <= 1.0) {
                return Err(Error::config(
                    "constants.eta1",
                    format!("condition (C) needs η₁ in (0, 1], got {e1}"),
                ));
            }
        }

        let mut mc = matrix.constants();
        mc.c3 = k.c3.unwrap_or(mc.c3);
        mc.c4 = k.c4.unwrap_or(mc.c4);
        mc.c5 = k.c5.unwrap_or(mc.c5);
        mc.eta1 = k.eta1.unwrap_or(mc.eta1);
        matrix = matrix.with_constants(mc);

        let mut dc = drift.constants();
        dc.c6 = k.c6.unwrap_or(dc.c6);
        dc.c7 = k.c7.unwrap_or(dc.c7);
        dc.eta2 = k.eta2.unwrap_or(dc.eta2);
        if k.c8.is_some() || self.bounded_drift {
            if !drift.is_bounded() {
                let path = if k.c8.is_some() {
                    "constants.c8"
                } else {
                    "bounded_drift"
                };
                return Err(Error::config(
                    path,
                    format!(
                        "condition (D) needs a bounded drift but `{}` is unbounded",
                        drift.name()
                    ),
                ));
            }
            dc.c8 = k.c8.or(dc.c8);
        }
        drift = drift.with_constants(dc);

        let beta = noise.beta();
        let floor = 0.0_f64.max(beta - 1.0);
        if !(dc.eta2 > floor) {
            let path = if k.eta2.is_some() {
                "constants.eta2"
            } else {
                "drift"
            };
            return Err(Error::config(
                path,
                format!(
                    "condition (C) needs η₂ > max(0, β − 1) = {floor}, got η₂ = {}",
                    dc.eta2
                ),
            ));
        }
        if noise.regime() == Regime::B {
            condition_e(noise.alpha(), beta, mc.eta1, dc.eta2)
                .map_err(|e| Error::config("noise", strip_domain(e)))?;
        }

        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::config(
                "horizon",
                format!("horizon must be positive and finite, got {}", self.horizon),
            ));
        }
        if let Some(x0) = &self.x0 {
            if x0.len() != d || x0.iter().any(|v| !v.is_finite()) {
                return Err(Error::config(
                    "x0",
                    format!("start point must have {d} finite coordinates"),
                ));
            }
        }

        ModelSpec::new(noise, drift, matrix)
            .map(|m| m.with_horizon(self.horizon))
            .map_err(|e| Error::config("", strip_domain(e)))
    }
}

fn strip_domain(e: Error) -> String {
    match e {
        Error::Domain(m) => m,
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cauchy() -> &'static str {
        r#"{"noise": [{"alpha": 1}], "drift": {"kind": "zero", "dim": 1},
            "matrix": {"kind": "identity", "dim": 1}}"#
    }

    #[test]
    fn minimal_cauchy_config_is_regime_a() {
        let m = ModelConfig::parse(cauchy()).unwrap().build().unwrap();
        assert_eq!(m.regime, Regime::A);
        assert_eq!(m.dim(), 1);
    }

    #[test]
    fn bad_index_names_the_field() {
        let text = cauchy().replace("\"alpha\": 1", "\"alpha\": 2.5");
        let err = ModelConfig::parse(&text).unwrap().build().unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("noise[0].alpha"), "{msg}");
        assert!(msg.contains("stability index outside (0,2)"), "{msg}");
    }

    #[test]
    fn parse_errors_carry_path_and_position() {
        let text = cauchy().replace("\"alpha\": 1", "\"alpha\": \"one\"");
        let msg = ModelConfig::parse(&text).unwrap_err().to_string();
        assert!(
            msg.contains("noise[0].alpha") && msg.contains("line 1"),
            "{msg}"
        );
        let msg = ModelConfig::parse(r#"{"noise": [], "drift": {"kind": "zero", "dim": 1}, "matrix": {"kind": "identity", "dim": 1}, "colour": 1}"#)
            .unwrap_err()
            .to_string();
        assert!(msg.contains("colour"), "{msg}");
    }

    #[test]
    fn constraint_violations_name_the_condition() {
        let spread = r#"{"noise": [{"alpha": 0.4}, {"alpha": 0.95}],
            "drift": {"kind": "rotation"}, "matrix": {"kind": "identity", "dim": 2}}"#;
        let msg = ModelConfig::parse(spread)
            .unwrap()
            .build()
            .unwrap_err()
            .to_string();
        assert!(msg.contains("(E)") && msg.contains("`noise`"), "{msg}");

        let rough = r#"{"noise": [{"alpha": 1.5}], "drift": {"kind": "zero", "dim": 1},
            "matrix": {"kind": "identity", "dim": 1}, "constants": {"eta2": 0.3}}"#;
        let msg = ModelConfig::parse(rough)
            .unwrap()
            .build()
            .unwrap_err()
            .to_string();
        assert!(
            msg.contains("(C)") && msg.contains("constants.eta2"),
            "{msg}"
        );

        let unbounded = r#"{"noise": [{"alpha": 1}], "drift": {"kind": "linear", "matrix": [[1]]},
            "matrix": {"kind": "identity", "dim": 1}, "bounded_drift": true}"#;
        let msg = ModelConfig::parse(unbounded)
            .unwrap()
            .build()
            .unwrap_err()
            .to_string();
        assert!(msg.contains("(D)"), "{msg}");
    }

    #[test]
    fn hash_ignores_key_order_and_defaults() {
        let a = ModelConfig::parse(cauchy()).unwrap();
        let b = ModelConfig::parse(
            r#"{"matrix": {"dim": 1, "kind": "identity"}, "horizon": 1.0,
                "drift": {"dim": 1, "kind": "zero"}, "noise": [{"alpha": 1.0}]}"#,
        )
        .unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = ModelConfig::parse(&a.to_pretty_json()).unwrap();
        assert_eq!(a, c);
        assert_eq!(a.hash(), c.hash());
    }
}
