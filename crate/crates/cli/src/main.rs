use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mrle_harness::{emit_outputs, Experiment, ExperimentConfig, HarnessError, Result};

/// Monte Carlo checks of regularized likelihood estimators.
#[derive(Parser)]
#[command(name = "mrle", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation and write replicates.csv, report.json and plots/.
    Sim {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to the config's output_dir.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Check a config file without running it.
    ValidateConfig { path: PathBuf },
    /// Print the version.
    Version,
}

/// Exit code for a completed run with oracle-bound violations.
const VIOLATION: u8 = 3;

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Version => {
            println!("mrle {}", env!("CARGO_PKG_VERSION"));
            Ok(0)
        }
        Command::ValidateConfig { path } => {
            let (cfg, base) = ExperimentConfig::load(&path)?;
            cfg.validate(&base)?;
            println!("{}: ok", path.display());
            Ok(0)
        }
        Command::Sim {
            config,
            out,
            seed,
            reps,
            workers,
        } => {
            let (mut cfg, base) = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(r) = reps {
                cfg.replicates = r;
            }
            if let Some(w) = workers {
                cfg.workers = w;
            }
            let out = match (out, &cfg.output_dir) {
                (Some(o), _) => o,
                (None, Some(o)) => base.join(o),
                (None, None) => {
                    return Err(HarnessError::Config(
                        "no output directory: pass --out or set output_dir".into(),
                    ))
                }
            };
            let experiment = Experiment::new(cfg, &base)?;
            let report = experiment.run()?;
            emit_outputs(&report, &out)?;
            let a = &report.aggregates;
            println!(
                "{} replicates ({} failed); oracle bound held in {}/{} r-condition replicates",
                a.replicates, a.failed, a.oracle_passed, a.oracle_checked
            );
            if let Some(c) = &a.coverage {
                println!(
                    "coverage {:.4} vs guaranteed {:.4} (threshold {:.4}): {}",
                    c.empirical,
                    c.guaranteed,
                    c.threshold,
                    if c.pass { "pass" } else { "fail" }
                );
            }
            println!("wrote {}", out.display());
            if report.has_violations() {
                eprintln!("oracle-bound violations in replicates {:?}", a.violations);
                return Ok(VIOLATION);
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
