use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};
use levyflow::cli::{
    configure_threads, load_config, parse_times, run, Command, DensityMode, RunOptions, SimMode,
};
use levyflow::Error;

/// Drift reduction toolkit for SDEs driven by cylindrical stable noise.
///
/// The worker thread count is read from LEVYFLOW_THREADS.
#[derive(Parser)]
#[command(name = "levyflow", version)]
struct Cli {
    /// Model configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for reports, tables and the manifest.
    #[arg(long, global = true, default_value = "levyflow-out")]
    out: PathBuf,
    /// Master seed; overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Start point, comma separated; overrides the config `x0`.
    #[arg(
        long,
        global = true,
        value_delimiter = ',',
        allow_negative_numbers = true
    )]
    x0: Option<Vec<f64>>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Validate a config and print its canonical form, hash and ε₀.
    CheckConfig,
    /// Weak-scaling diagnostics per component and ε₀.
    Scaling,
    /// Flow identities and growth constants on random points.
    FlowCertify {
        #[arg(long, default_value_t = 20)]
        points: usize,
    },
    /// Conditions on the reduced coefficients and the linearization order.
    ReduceCertify,
    /// Terminal ensembles of the original and/or reduced equation.
    Simulate(SimulateArgs),
    /// Principal or exact densities on a grid, or the residual exponent fit.
    Density(DensityArgs),
    /// On-diagonal regime of the planar rotation model.
    ExampleRotation {
        /// Indices α₁,α₂.
        #[arg(long, value_delimiter = ',', num_args = 1)]
        alphas: Vec<f64>,
        /// Times: a,b,c or lo:hi or lo:hi:n.
        #[arg(long)]
        t: String,
    },
}

#[derive(Args)]
#[command(group(ArgGroup::new("scheme").required(true).args(["direct", "reduced", "both"])))]
struct SimulateArgs {
    #[arg(long)]
    direct: bool,
    #[arg(long)]
    reduced: bool,
    /// Both schemes plus per-coordinate two-sample KS tests.
    #[arg(long)]
    both: bool,
    #[arg(long, default_value_t = 20_000)]
    n: usize,
    #[arg(long, default_value_t = 1e-3)]
    h: f64,
    #[arg(long, default_value_t = 0.5)]
    t: f64,
}

#[derive(Args)]
#[command(group(ArgGroup::new("what").required(true).args(["principal", "oracle", "residual_fit"])))]
struct DensityArgs {
    #[arg(long)]
    principal: bool,
    /// Exact density (linear drift, constant matrix).
    #[arg(long)]
    oracle: bool,
    #[arg(long)]
    residual_fit: bool,
    /// Times: a,b,c or lo:hi or lo:hi:n.
    #[arg(long)]
    t: String,
    #[arg(long, default_value_t = 101)]
    grid: usize,
    #[arg(long, default_value_t = 5.0)]
    half_width: f64,
    /// Use a simulated ensemble of this size instead of the exact oracle.
    #[arg(long)]
    monte_carlo: Option<usize>,
    #[arg(long, default_value_t = 1e-3)]
    h: f64,
}

fn command(cmd: &Cmd) -> Result<Command, Error> {
    Ok(match cmd {
        Cmd::CheckConfig => unreachable!("handled before dispatch"),
        Cmd::Scaling => Command::Scaling,
        Cmd::FlowCertify { points } => Command::FlowCertify { points: *points },
        Cmd::ReduceCertify => Command::ReduceCertify,
        Cmd::Simulate(a) => Command::Simulate {
            mode: if a.both {
                SimMode::Both
            } else if a.reduced {
                SimMode::Reduced
            } else {
                SimMode::Direct
            },
            samples: a.n,
            step: a.h,
            t: a.t,
        },
        Cmd::Density(a) => Command::Density {
            mode: if a.principal {
                DensityMode::Principal
            } else if a.oracle {
                DensityMode::Oracle
            } else {
                DensityMode::ResidualFit
            },
            t_list: parse_times(&a.t)?,
            grid_points: a.grid,
            half_width: a.half_width,
            monte_carlo: a.monte_carlo,
            step: a.h,
        },
        Cmd::ExampleRotation { alphas, t } => {
            let [a1, a2] = alphas.as_slice() else {
                return Err(Error::Config {
                    path: "alphas".into(),
                    message: format!("expected two indices, got {alphas:?}"),
                });
            };
            Command::ExampleRotation {
                alpha1: *a1,
                alpha2: *a2,
                t_list: parse_times(t)?,
            }
        }
    })
}

fn check_config(cli: &Cli) -> Result<(), Error> {
    let path = cli.config.as_ref().ok_or_else(|| Error::Config {
        path: "config".into(),
        message: "check-config needs --config".into(),
    })?;
    let cfg = load_config(path)?;
    let model = cfg.build()?;
    let summary = serde_json::json!({
        "hash": cfg.hash(),
        "regime": model.regime,
        "alpha": model.exponents.alpha,
        "beta": model.exponents.beta,
        "epsilon0": model.epsilon0,
        "config": serde_json::to_value(&cfg)?,
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = (|| -> Result<bool, Error> {
        configure_threads()?;
        if matches!(cli.command, Cmd::CheckConfig) {
            check_config(&cli)?;
            return Ok(true);
        }
        let cmd = command(&cli.command)?;
        let cfg = cli.config.as_ref().map(load_config).transpose()?;
        let opts = RunOptions {
            out_dir: cli.out.clone(),
            seed: cli.seed,
            x0: cli.x0.clone(),
        };
        let manifest = run(&cmd, cfg.as_ref(), &opts)?;
        for v in &manifest.verdicts {
            println!(
                "{} {}: {}",
                if v.pass { "PASS" } else { "FAIL" },
                v.name,
                v.detail
            );
        }
        println!("manifest: {}", cli.out.join("manifest.json").display());
        let failing = manifest.failing();
        if !failing.is_empty() {
            let names: Vec<&str> = failing.iter().map(|v| v.name.as_str()).collect();
            eprintln!("failing checks: {}", names.join(", "));
        }
        Ok(manifest.pass)
    })();
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
