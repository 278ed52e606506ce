use std::path::PathBuf;

use acns_core::harness::experiments::{self, rates_csv};
use acns_core::harness::RunConfig;
use acns_core::schemes::SchemeKind;
use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

/// Allen–Cahn–Navier–Stokes phase-field solver.
#[derive(Debug, Parser)]
#[command(name = "acns", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one simulation from a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `scheme.kind`.
        #[arg(long)]
        scheme: Option<SchemeKind>,
        /// Overrides `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides `init.seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Temporal refinement study with Cauchy differences.
    Converge {
        #[arg(long)]
        scheme: SchemeKind,
        #[arg(long, default_value_t = 4)]
        levels: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Wall-time comparison of the three schemes.
    Bench {
        #[arg(long)]
        out: PathBuf,
        /// Each scheme keeps its fastest of this many runs.
        #[arg(long, default_value_t = 1)]
        rounds: usize,
    },
    /// Print a built-in config (spinodal, bubble, relax, converge).
    Preset { name: String },
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Run {
            config,
            scheme,
            out,
            seed,
        } => {
            let mut cfg = RunConfig::load(&config).with_context(|| format!("loading {}", config.display()))?;
            if let Some(s) = scheme {
                cfg.scheme.kind = s;
            }
            if let Some(o) = out {
                cfg.output.dir = o;
            }
            if let Some(s) = seed {
                cfg.init.seed = s;
            }
            let dir = cfg.output.dir.clone();
            let s = experiments::run_config(&cfg, Some(&dir), |_, _| {})?;
            let last = s.rows.last().expect("at least the initial row");
            println!(
                "{} steps of {} in {:.2}s; W = {:.6e} at t = {}; output in {}",
                cfg.n_steps(),
                cfg.scheme.kind,
                s.seconds,
                last.w,
                last.t,
                dir.display()
            );
        }
        Command::Converge { scheme, levels, out } => {
            let rows = experiments::converge(scheme, levels, Some(&out))?;
            print!("{}", rates_csv(&rows));
        }
        Command::Bench { out, rounds } => {
            let rows = experiments::bench(rounds, Some(&out))?;
            println!("case,scheme,steps,seconds,relative_to_cnlfac");
            for r in rows {
                println!("{},{},{},{:.3},{:.3}", r.case, r.scheme, r.steps, r.seconds, r.relative);
            }
        }
        Command::Preset { name } => {
            let cfg = match name.as_str() {
                "spinodal" => RunConfig::spinodal(),
                "bubble" => RunConfig::bubble(),
                "relax" => RunConfig::relax(),
                "converge" => RunConfig::convergence(1, SchemeKind::Cnlfac),
                other => anyhow::bail!("unknown preset '{other}'"),
            };
            print!("{}", cfg.to_flat());
        }
    }
    Ok(())
}
