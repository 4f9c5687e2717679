//! Command dispatch.

use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::config::ModelConfig;
use super::manifest::{RunManifest, Verdict};
use crate::density::{
    exact_density_linear, fit_residual_exponent, principal_density_grid, principal_mass,
    rotation_regime_check, DensityGrid, ResidualMethod,
};
use crate::error::{Error, InModule, Result};
use crate::flow::{certify_flow_bounds, flow_suite, FlowMethod};
use crate::levy::{check_wsc, default_grid, epsilon0_terms, log_grid};
use crate::numerics::stream_rng;
use crate::reduction::{certify_conditions, certify_linearization, ModelSpec, SamplePlan};
use crate::sim::{compare_laws, simulate, PathEnsemble, Scheme, SimConfig};

/// Seed used by commands that sample points but do not simulate.
pub const DEFAULT_POINT_SEED: u64 = 0;
/// Largest excluded fraction a single ensemble may have.
pub const MAX_EXCLUDED: f64 = 0.01;
/// Allowed deviation of the principal density's total mass from 1.
pub const MASS_SLACK: f64 = 1e-3;
const MASS_QUAD_TOL: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimMode {
    Direct,
    Reduced,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityMode {
    Principal,
    Oracle,
    ResidualFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    Scaling,
    FlowCertify {
        points: usize,
    },
    ReduceCertify,
    Simulate {
        mode: SimMode,
        samples: usize,
        step: f64,
        t: f64,
    },
    Density {
        mode: DensityMode,
        t_list: Vec<f64>,
        /// Nodes per axis for tabulated densities.
        grid_points: usize,
        /// Half-width of the tabulation box around `χ_t(x)`.
        half_width: f64,
        /// Ensemble size for a Monte Carlo residual fit; the oracle otherwise.
        monte_carlo: Option<usize>,
        step: f64,
    },
    ExampleRotation {
        alpha1: f64,
        alpha2: f64,
        t_list: Vec<f64>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Scaling => "scaling",
            Command::FlowCertify { .. } => "flow-certify",
            Command::ReduceCertify => "reduce-certify",
            Command::Simulate { .. } => "simulate",
            Command::Density { .. } => "density",
            Command::ExampleRotation { .. } => "example-rotation",
        }
    }

    fn needs_config(&self) -> bool {
        !matches!(self, Command::ExampleRotation { .. })
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub seed: Option<u64>,
    pub x0: Option<Vec<f64>>,
}

/// Outputs collected in memory and written once every computation is done.
#[derive(Default)]
struct Outputs {
    files: Vec<(String, String)>,
    verdicts: Vec<Verdict>,
}

impl Outputs {
    fn file(&mut self, name: impl Into<String>, body: String) {
        self.files.push((name.into(), body));
    }

    fn json(&mut self, name: impl Into<String>, value: &impl Serialize) -> Result<()> {
        let body = serde_json::to_string_pretty(value)?;
        self.file(name, body + "\n");
        Ok(())
    }

    fn verdict(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.verdicts.push(Verdict::new(name, pass, detail));
    }
}

/// Runs `command`, writes its outputs and `manifest.json` into
/// `opts.out_dir` and returns the manifest.
pub fn run(
    command: &Command,
    config: Option<&ModelConfig>,
    opts: &RunOptions,
) -> Result<RunManifest> {
    let config = match (command.needs_config(), config) {
        (true, None) => {
            return Err(Error::config(
                "config",
                format!("`{}` needs a model config", command.name()),
            ))
        }
        (_, c) => c,
    };
    let model = config.map(|c| c.build()).transpose()?;
    let x0 = match (&opts.x0, config) {
        (Some(x), _) => Some(x.clone()),
        (None, Some(c)) => Some(c.start_point()),
        (None, None) => None,
    };
    if let (Some(x), Some(m)) = (&x0, &model) {
        if x.len() != m.dim() {
            return Err(Error::config(
                "x0",
                format!(
                    "start point has {} coordinates but the model has {}",
                    x.len(),
                    m.dim()
                ),
            ));
        }
    }
    let seed = opts.seed.or(config.and_then(|c| c.seed));

    let mut out = Outputs::default();
    let used_seed = match command {
        Command::Scaling => {
            scaling(model.as_ref().expect("checked"), &mut out)?;
            None
        }
        Command::FlowCertify { points } => {
            let s = seed.unwrap_or(DEFAULT_POINT_SEED);
            flow_certify(model.as_ref().expect("checked"), *points, s, &mut out)?;
            Some(s)
        }
        Command::ReduceCertify => {
            let s = seed.unwrap_or(DEFAULT_POINT_SEED);
            let m = model.as_ref().expect("checked");
            reduce_certify(m, x0.as_deref().expect("checked"), s, &mut out)?;
            Some(s)
        }
        Command::Simulate {
            mode,
            samples,
            step,
            t,
        } => {
            let s = require_seed(seed)?;
            let cfg = SimConfig::new(*step, *t, *samples, s, Scheme::Direct).in_module("sim")?;
            let m = model.as_ref().expect("checked");
            simulate_cmd(m, x0.as_deref().expect("checked"), cfg, *mode, &mut out)?;
            Some(s)
        }
        Command::Density {
            mode,
            t_list,
            grid_points,
            half_width,
            monte_carlo,
            step,
        } => {
            let m = model.as_ref().expect("checked");
            let x = x0.as_deref().expect("checked");
            match mode {
                DensityMode::ResidualFit => {
                    let method = match monte_carlo {
                        None => ResidualMethod::Oracle,
                        Some(n) => {
                            let horizon = t_list.iter().copied().fold(0.0, f64::max);
                            let s = require_seed(seed)?;
                            ResidualMethod::MonteCarlo {
                                config: SimConfig::new(*step, horizon, *n, s, Scheme::Direct)
                                    .in_module("sim")?,
                            }
                        }
                    };
                    residual_fit(m, x, t_list, &method, &mut out)?;
                    monte_carlo.and(seed)
                }
                _ => {
                    density_grids(m, x, t_list, *mode, *grid_points, *half_width, &mut out)?;
                    None
                }
            }
        }
        Command::ExampleRotation {
            alpha1,
            alpha2,
            t_list,
        } => {
            example_rotation(*alpha1, *alpha2, t_list, &mut out)?;
            None
        }
    };

    write_outputs(command, config, used_seed, out, &opts.out_dir)
}

fn require_seed(seed: Option<u64>) -> Result<u64> {
    seed.ok_or_else(|| {
        Error::config(
            "seed",
            "simulation commands need an explicit seed (config `seed` or --seed)",
        )
    })
}

fn write_outputs(
    command: &Command,
    config: Option<&ModelConfig>,
    seed: Option<u64>,
    out: Outputs,
    dir: &Path,
) -> Result<RunManifest> {
    std::fs::create_dir_all(dir)?;
    let mut names = Vec::with_capacity(out.files.len());
    for (name, body) in &out.files {
        std::fs::write(dir.join(name), body)?;
        names.push(name.clone());
    }
    let pass = out.verdicts.iter().all(|v| v.pass);
    let manifest = RunManifest {
        command: command.name().to_string(),
        config_hash: config.map(ModelConfig::hash),
        seed,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        outputs: names,
        verdicts: out.verdicts,
        pass,
    };
    std::fs::write(
        dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)? + "\n",
    )?;
    Ok(manifest)
}

fn scaling(model: &ModelSpec, out: &mut Outputs) -> Result<()> {
    let grid = default_grid();
    let mut reports = Vec::new();
    for (i, c) in model.noise.components.iter().enumerate() {
        let (a, b) = c.index_range();
        let r = check_wsc(c, a, b, &grid, &grid).in_module("levy")?;
        out.verdict(
            format!("wsc[{i}]"),
            r.pass,
            format!(
                "fitted indices {:.4}..{:.4} against {a}..{b}",
                r.fitted_lower, r.fitted_upper
            ),
        );
        reports.push(r);
    }
    let inputs = model.epsilon_inputs();
    let terms = epsilon0_terms(&inputs).ok();
    out.verdict(
        "epsilon0",
        model.epsilon0.is_some(),
        match model.epsilon0 {
            Some(e) => format!("ε₀ = {e}"),
            None => "ε₀ is undefined for these indices".into(),
        },
    );
    out.json(
        "scaling.json",
        &json!({
            "regime": model.regime,
            "alpha": inputs.alpha,
            "beta": inputs.beta,
            "eta1": inputs.eta1,
            "eta2": inputs.eta2,
            "dim": inputs.d,
            "epsilon0": model.epsilon0,
            "epsilon0_terms": terms,
            "components": reports,
        }),
    )
}

fn flow_certify(model: &ModelSpec, points: usize, seed: u64, out: &mut Outputs) -> Result<()> {
    if points == 0 {
        return Err(Error::config(
            "points",
            "flow certification needs at least one point",
        ));
    }
    let engine = model.flow.clone().with_method(FlowMethod::Integrate);
    let d = engine.dim();
    let horizon = engine.horizon.min(1.0);
    let mut rng = stream_rng(seed, 0);
    let xs: Vec<Vec<f64>> = (0..points)
        .map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect();
    let ts: Vec<f64> = (0..=10).map(|k| horizon * (k as f64 / 5.0 - 1.0)).collect();
    let suite = flow_suite(&engine, &ts, &xs).in_module("flow")?;
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = xs
        .iter()
        .map(|x| {
            let y = x.iter().map(|v| v + rng.random_range(-0.5..0.5)).collect();
            (x.clone(), y)
        })
        .collect();
    let cert = certify_flow_bounds(&engine, &ts, &pairs).in_module("flow")?;
    out.verdict(
        "flow_suite",
        suite.pass,
        format!(
            "round trip {:.2e}, Jacobian {:.2e}, Liouville {:.2e}, ∂tκ {:.2e}",
            suite.round_trip, suite.jacobian_fd, suite.liouville, suite.derivative
        ),
    );

    let mut csv = String::from("t");
    for prefix in ["x", "chi", "kappa"] {
        for k in 1..=d {
            csv.push_str(&format!(",{prefix}_{k}"));
        }
    }
    csv.push_str(",jac_det\n");
    for &t in &ts {
        for x in &xs {
            let chi = engine.chi(t, x).in_module("flow")?;
            let kp = engine.kappa_full(t, x).in_module("flow")?;
            csv.push_str(&format!("{t:e}"));
            for v in x.iter().chain(chi.iter()).chain(kp.point.iter()) {
                csv.push_str(&format!(",{v:e}"));
            }
            csv.push_str(&format!(",{:e}\n", kp.log_det.exp()));
        }
    }
    out.json(
        "flow.json",
        &json!({ "suite": suite, "certificate": cert, "t_grid": ts }),
    )?;
    out.file("flow_points.csv", csv);
    Ok(())
}

fn reduce_certify(model: &ModelSpec, x0: &[f64], seed: u64, out: &mut Outputs) -> Result<()> {
    let plan = SamplePlan::default_for(model.dim(), seed);
    let report = certify_conditions(model, &plan).in_module("reduction")?;
    let t = 0.5_f64.min(model.flow.horizon);
    let lin = certify_linearization(model, t, x0, &log_grid(1e-3, 7)).in_module("reduction")?;
    let e = &report.condition_e;
    let detail = if e.applicable {
        format!(
            "(E) margins {:.4} and {:.4}; C₉ ≈ {:.4}",
            e.margin_ratio, e.margin_gap, report.c9
        )
    } else {
        format!("(E) not applicable; C₉ ≈ {:.4}", report.c9)
    };
    out.verdict("conditions", report.pass, detail);
    out.verdict(
        "linearization",
        lin.pass,
        format!("slope {:.4} against γ₃ = {:.4}", lin.slope, lin.target),
    );
    out.json(
        "reduction.json",
        &json!({ "conditions": report, "linearization": lin, "plan": plan }),
    )
}

fn ensemble_files(e: &PathEnsemble, tag: &str, out: &mut Outputs) -> Result<()> {
    out.file(format!("ensemble_{tag}.csv"), e.to_csv());
    out.json(format!("ensemble_{tag}.json"), &e.sidecar())
}

fn simulate_cmd(
    model: &ModelSpec,
    x0: &[f64],
    cfg: SimConfig,
    mode: SimMode,
    out: &mut Outputs,
) -> Result<()> {
    let run = |scheme| simulate(model, &cfg.with_scheme(scheme), x0).in_module("sim");
    match mode {
        SimMode::Direct | SimMode::Reduced => {
            let (scheme, tag) = if mode == SimMode::Direct {
                (Scheme::Direct, "direct")
            } else {
                (Scheme::Reduced, "reduced")
            };
            let e = run(scheme)?;
            out.verdict(
                format!("{tag}_ensemble"),
                e.excluded_fraction() <= MAX_EXCLUDED,
                format!("{} of {} samples excluded", e.excluded, cfg.samples),
            );
            ensemble_files(&e, tag, out)
        }
        SimMode::Both => {
            let direct = run(Scheme::Direct)?;
            let reduced = run(Scheme::Reduced)?;
            let law = compare_laws(&direct, &reduced).in_module("sim")?;
            for (i, k) in law.per_coordinate.iter().enumerate() {
                out.verdict(
                    format!("ks[{i}]"),
                    k.p_value >= crate::sim::KS_LEVEL,
                    format!("D = {:.5}, p = {:.4}", k.statistic, k.p_value),
                );
            }
            ensemble_files(&direct, "direct", out)?;
            ensemble_files(&reduced, "reduced", out)?;
            out.json("law_report.json", &law)
        }
    }
}

fn grid_axes(center: &[f64], half_width: f64, n: usize) -> Vec<Vec<f64>> {
    center
        .iter()
        .map(|c| {
            (0..n)
                .map(|k| c - half_width + 2.0 * half_width * k as f64 / (n - 1) as f64)
                .collect()
        })
        .collect()
}

fn density_grids(
    model: &ModelSpec,
    x: &[f64],
    t_list: &[f64],
    mode: DensityMode,
    n: usize,
    half_width: f64,
    out: &mut Outputs,
) -> Result<()> {
    if n < 2 || !(half_width > 0.0) {
        return Err(Error::config(
            "grid",
            "grids need at least two nodes and a positive half-width",
        ));
    }
    let tag = if mode == DensityMode::Oracle {
        "oracle"
    } else {
        "principal"
    };
    for &t in t_list {
        let center = model.flow.chi(t, x).in_module("flow")?;
        let axes = grid_axes(center.as_slice(), half_width, n);
        let grid: DensityGrid = if mode == DensityMode::Oracle {
            exact_density_linear(model, t, x, axes)
        } else {
            principal_density_grid(model, t, x, axes)
        }
        .in_module("density")?;
        let mass = grid.integral();
        let ok = grid.values.iter().all(|v| v.is_finite() && *v >= 0.0);
        out.verdict(format!("{tag}_t{t}"), ok, format!("grid mass {mass:.6}"));
        out.file(format!("density_{tag}_t{t}.csv"), grid.to_csv());
        let mut meta = grid.metadata();
        meta["grid_mass"] = json!(mass);
        if mode == DensityMode::Principal {
            let total = principal_mass(model, t, x, MASS_QUAD_TOL).in_module("density")?;
            out.verdict(
                format!("mass_t{t}"),
                (total.mass - 1.0).abs() <= MASS_SLACK,
                format!(
                    "adaptive mass {:.8} ({} evaluations)",
                    total.mass, total.evaluations
                ),
            );
            meta["mass"] = json!(total.mass);
        }
        out.json(format!("density_{tag}_t{t}.json"), &meta)?;
    }
    Ok(())
}

fn residual_fit(
    model: &ModelSpec,
    x: &[f64],
    t_list: &[f64],
    method: &ResidualMethod,
    out: &mut Outputs,
) -> Result<()> {
    let fit = fit_residual_exponent(model, x, t_list, method).in_module("density")?;
    let detail = match fit.slope {
        Some(s) => format!("slope {s:.4} against ε₀ = {:.4}", fit.epsilon0),
        None => "all residuals vanish".into(),
    };
    out.verdict("residual_exponent", fit.pass, detail);
    let mut csv = String::from("t,value,lower,upper\n");
    for b in &fit.brackets {
        csv.push_str(&format!(
            "{:e},{:e},{:e},{:e}\n",
            b.t, b.value, b.lower, b.upper
        ));
    }
    out.file("residuals.csv", csv);
    out.json(
        "residual_fit.json",
        &json!({ "method": method, "fit": fit }),
    )
}

fn example_rotation(a1: f64, a2: f64, t_list: &[f64], out: &mut Outputs) -> Result<()> {
    let r = rotation_regime_check(a1, a2, t_list).in_module("density")?;
    out.verdict(
        "regime",
        r.agrees,
        format!(
            "observed {}, predicted {}, spread {:.3}, slope {:.4}",
            r.observed, r.predicted, r.spread, r.slope
        ),
    );
    let mut csv = String::from("t,p0,ratio\n");
    for ((t, p), q) in r.t_list.iter().zip(&r.p0).zip(&r.ratios) {
        csv.push_str(&format!("{t:e},{p:e},{q:e}\n"));
    }
    out.file("rotation_ratios.csv", csv);
    out.json("rotation_regime.json", &r)
}

/// Parses `a,b,c`, a range `lo:hi` (lo, the 1-2-5 ladder strictly between,
/// hi) or `lo:hi:n` (n log-spaced points).
pub fn parse_times(text: &str) -> Result<Vec<f64>> {
    let bad = |m: String| Error::config("t", m);
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| bad(format!("`{s}` is not a number")))
    };
    let parts: Vec<&str> = text.split(':').collect();
    let ts = match parts.as_slice() {
        [_] => text.split(',').map(num).collect::<Result<Vec<_>>>()?,
        [lo, hi] => {
            let (lo, hi) = (num(lo)?, num(hi)?);
            if !(lo > 0.0 && hi > lo) {
                return Err(bad(format!("range needs 0 < lo < hi, got {lo}:{hi}")));
            }
            let mut v = vec![lo];
            let (k0, k1) = (lo.log10().floor() as i32, hi.log10().ceil() as i32);
            for k in k0..=k1 {
                for m in [1, 2, 5] {
                    let x: f64 = format!("{m}e{k}").parse().expect("literal");
                    if x > lo * (1.0 + 1e-9) && x < hi * (1.0 - 1e-9) {
                        v.push(x);
                    }
                }
            }
            v.push(hi);
            v
        }
        [lo, hi, n] => {
            let (lo, hi) = (num(lo)?, num(hi)?);
            let n: usize = n
                .trim()
                .parse()
                .map_err(|_| bad(format!("`{n}` is not a point count")))?;
            if !(lo > 0.0 && hi > lo && n >= 2) {
                return Err(bad(format!(
                    "range needs 0 < lo < hi and n ≥ 2, got {text}"
                )));
            }
            log_grid(lo / hi, n).into_iter().map(|v| v * hi).collect()
        }
        _ => return Err(bad(format!("cannot parse time list `{text}`"))),
    };
    if ts.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
        return Err(bad(format!("times must be positive, got {ts:?}")));
    }
    Ok(ts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn time_lists() {
        assert_eq!(parse_times("0.2,0.1").unwrap(), vec![0.2, 0.1]);
        assert_eq!(
            parse_times("0.02:0.3").unwrap(),
            vec![0.02, 0.05, 0.1, 0.2, 0.3]
        );
        let g = parse_times("0.01:1:3").unwrap();
        assert!((g[1] - 0.1).abs() < 1e-15 && g.len() == 3);
        assert!(parse_times("0.3:0.02").is_err());
        assert!(parse_times("a,b").is_err());
        assert!(parse_times("-1").is_err());
    }

    #[test]
    fn missing_config_and_seed_are_reported() {
        let opts = RunOptions::default();
        let err = run(&Command::Scaling, None, &opts).unwrap_err();
        assert!(err.to_string().contains("needs a model config"));
        let cfg = ModelConfig::parse(
            r#"{"noise": [{"alpha": 1}], "drift": {"kind": "zero", "dim": 1},
                "matrix": {"kind": "identity", "dim": 1}}"#,
        )
        .unwrap();
        let cmd = Command::Simulate {
            mode: SimMode::Direct,
            samples: 10,
            step: 0.1,
            t: 0.5,
        };
        let err = run(&cmd, Some(&cfg), &opts).unwrap_err();
        assert!(err.to_string().contains("explicit seed"));
    }
}
