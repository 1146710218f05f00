use std::path::PathBuf;

use clap::{Parser, Subcommand};

use msqp_sim::harness::{self, config::Overrides, config::Scenario, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "msqp-sim",
    version,
    about = "Multi-subband sensing waveform simulator: builds sequences, runs \
             seeded Monte Carlo scenarios, emits CSV result rows"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario config and emit result rows as CSV.
    Run {
        /// TOML scenario config.
        config: PathBuf,
        /// Override the config's base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's trial count.
        #[arg(long)]
        trials: Option<u64>,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Shrink sequence lengths and block counts by this factor in
        /// (0, 1] for quick smoke runs.
        #[arg(long)]
        scale: Option<f64>,
    },
    /// Parse and validate a config, reporting every issue at once.
    Validate {
        /// TOML scenario config.
        config: PathBuf,
    },
    /// List the available scenarios.
    ListScenarios,
}

fn main() {
    if let Err(e) = dispatch(Cli::parse()) {
        let kind = match &e {
            msqp_sim::Error::Config { .. } => "config",
            msqp_sim::Error::Io { .. } => "io",
            _ => "invalid-argument",
        };
        eprintln!("{}", serde_json::json!({ "error": e.to_string(), "kind": kind }));
        std::process::exit(1);
    }
}

fn dispatch(cli: Cli) -> msqp_sim::Result<()> {
    match cli.command {
        Command::Run { config, seed, trials, out, scale } => {
            let mut cfg = ExperimentConfig::from_path(&config)?;
            cfg.apply(&Overrides { seed, trials, scale });
            let rows = harness::run(&cfg)?;
            match out {
                Some(path) => harness::write_rows(&rows, path)?,
                None => harness::emit_csv(&rows, std::io::stdout().lock())?,
            }
            Ok(())
        }
        Command::Validate { config } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            cfg.validate()?;
            println!("ok: {} x{} trials, seed {}", cfg.scenario.id(), cfg.trials, cfg.base_seed);
            Ok(())
        }
        Command::ListScenarios => {
            for s in Scenario::all() {
                println!("{:<14} {}", s.id(), s.describe());
            }
            Ok(())
        }
    }
}
