//! Command-line front end: `run`, `validate` and `selftest`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fse_sim::config::{ScenarioConfig, ScenarioKind};
use fse_sim::runner::run_to_dir;
use fse_sim::selftest;

const THREADS_ENV: &str = "FSE_SIM_THREADS";

#[derive(Parser)]
#[command(name = "fse-sim", version, about = "FBMC-OQAM massive MIMO link simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its CSV and metadata sidecar.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the scenario kind named in the config.
        #[arg(long)]
        scenario: Option<ScenarioKind>,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        /// Override the number of channel realizations.
        #[arg(long)]
        trials: Option<usize>,
        /// Worker threads (0 = automatic). FSE_SIM_THREADS takes precedence.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Parse and check a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the built-in oracle checks.
    Selftest,
}

fn threads_from_env() -> Result<Option<usize>, String> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| format!("{THREADS_ENV}={v:?} is not a thread count")),
        Err(_) => Ok(None),
    }
}

fn load(path: &PathBuf) -> Result<ScenarioConfig, String> {
    let config =
        ScenarioConfig::load(path).map_err(|e| format!("{}: {e}", path.display()))?;
    config.validate().map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(config)
}

fn execute(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Run {
            config,
            scenario,
            seed,
            out,
            trials,
            threads,
        } => {
            let mut cfg = load(&config)?;
            if let Some(kind) = scenario {
                cfg.scenario.name = kind;
            }
            if let Some(seed) = seed {
                cfg.run.master_seed = seed;
            }
            if let Some(trials) = trials {
                cfg.run.realizations = trials;
            }
            if let Some(t) = threads_from_env()?.or(threads) {
                cfg.run.threads = t;
            }
            cfg.validate().map_err(|e| e.to_string())?;
            let (_, outputs) =
                run_to_dir(&cfg, cfg.run.threads, &out).map_err(|e| e.to_string())?;
            println!("{}", outputs.csv.display());
            println!("{}", outputs.metadata.display());
            Ok(())
        }
        Command::Validate { config } => {
            let cfg = load(&config)?;
            println!("{}: ok ({})", config.display(), cfg.scenario.name);
            Ok(())
        }
        Command::Selftest => {
            let checks = selftest::run_all().map_err(|e| e.to_string())?;
            let mut failed = 0;
            for c in &checks {
                let tag = if c.passed { "PASS" } else { "FAIL" };
                println!("{tag}  {}  ({})", c.name, c.detail);
                failed += usize::from(!c.passed);
            }
            if failed == 0 {
                Ok(())
            } else {
                Err(format!("{failed} of {} checks failed", checks.len()))
            }
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
