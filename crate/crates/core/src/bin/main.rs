use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use storage_cfa::experiment::{self, ExperimentConfig};
use storage_cfa::sim::rollout;
use storage_cfa::{Error, PolicyFamily, PolicySpec, Result};

#[derive(Parser, Debug)]
#[command(name = "storage-cfa", version, about = "Tune lookahead storage policies under rolling wind forecasts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Single forecast noise level, replacing the configured list.
    #[arg(long = "rho-e", global = true)]
    rho_e: Option<f64>,
    /// Policy family: benchmark, const, lkup or exp.
    #[arg(long, global = true)]
    policy: Option<PolicyFamily>,
    /// Held-out evaluation paths.
    #[arg(long, global = true)]
    paths: Option<usize>,
    /// Optimizer iterations.
    #[arg(long, global = true)]
    iters: Option<usize>,
    /// Paired evaluations per optimizer iteration.
    #[arg(long, global = true)]
    batch: Option<usize>,
    /// Master seed; the path seed for `simulate`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Roll one policy over one forecast path and dump the trajectory.
    Simulate {
        /// Comma-separated policy parameters; neutral values when omitted.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        theta: Option<Vec<f64>>,
    },
    /// Grid search over the constant parameterization.
    Grid,
    /// Per-coordinate sweeps of the lookup parameterization.
    Coord,
    /// Tune a parameterization with the smoothed zeroth-order search.
    Tune,
    /// Consolidate result summaries in a directory.
    Report {
        /// Results directory; defaults to --out or the configured output.
        dir: Option<PathBuf>,
    },
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(r) = common.rho_e {
        cfg.rho_e = vec![r];
    }
    if let Some(f) = common.policy {
        cfg.family = f;
    }
    if let Some(p) = common.paths {
        cfg.paths = p;
    }
    if let Some(n) = common.iters {
        cfg.sang.iters = n;
    }
    if let Some(m) = common.batch {
        cfg.sang.batch = m;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(o) = &common.out {
        cfg.out = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn simulate(cfg: &ExperimentConfig, theta: Option<Vec<f64>>) -> Result<()> {
    let rho = match cfg.rho_e.as_slice() {
        [r] => *r,
        [] => 0.0,
        _ => {
            return Err(Error::Config(
                "simulate takes one noise level; pass --rho-e".into(),
            ))
        }
    };
    let scenario = cfg.load_scenario()?.with_rho(rho);
    let h = scenario.params.lookahead_h;
    let mut spec = PolicySpec::neutral(cfg.family, h);
    if let Some(t) = theta.or_else(|| cfg.theta.clone()) {
        spec = spec.with_theta(t);
    }
    let tr = rollout(&spec, &scenario, cfg.seed)?;
    fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
    let path = cfg.out.join(format!("{}.csv", cfg.id.as_deref().unwrap_or("simulate")));
    let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    tr.write_csv(file)?;
    println!(
        "{} seed={} rho_e={rho} total_cost={} -> {}",
        spec.family,
        tr.seed,
        tr.total_cost,
        path.display()
    );
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Report { dir } => {
            let dir = match dir.or(cli.common.out.clone()) {
                Some(d) => d,
                None => load_config(&cli.common)?.out,
            };
            let rep = experiment::report(&dir)?;
            print!("{}", fs::read_to_string(&rep.text_path).map_err(|e| Error::io(&rep.text_path, e))?);
            Ok(())
        }
        Command::Simulate { theta } => simulate(&load_config(&cli.common)?, theta),
        Command::Grid => {
            let cfg = load_config(&cli.common)?;
            for r in experiment::run_grid(&cfg)? {
                let best = &r.rows[r.argmin];
                println!(
                    "rho_e={} argmin theta={} dF={:+.5} held-out dF={:+.5} ({} paths)",
                    r.rho_e, best.theta, best.delta_f, r.held_out.delta_f, r.held_out.paths
                );
            }
            Ok(())
        }
        Command::Coord => {
            let cfg = load_config(&cli.common)?;
            for r in experiment::run_coord(&cfg)? {
                let argmins: Vec<String> = r.curves.iter().map(|c| c.argmin_theta().to_string()).collect();
                println!("rho_e={} coordinate argmins: {}", r.rho_e, argmins.join(" "));
            }
            Ok(())
        }
        Command::Tune => {
            let cfg = load_config(&cli.common)?;
            for r in experiment::run_tune(&cfg)? {
                let idx = r.sang.as_ref().map_or(0, |s| s.r);
                println!(
                    "rho_e={} {} R={idx} held-out dF={:+.5} evals={} (+{} monitoring)",
                    r.rho_e, r.family, r.held_out.delta_f, r.optimizer_evals, r.monitor_evals
                );
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
