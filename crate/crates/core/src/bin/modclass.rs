use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use modclass::harness::{run_experiment, ExperimentConfig};
use modclass::Error;

#[derive(Parser)]
#[command(
    name = "modclass",
    version,
    about = "Monte Carlo modulation classification experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its result table as CSV.
    Run {
        /// Config file of `section.key = value` lines; applied on top of the preset.
        #[arg(long, required_unless_present = "preset")]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long, value_parser = ["fig3", "fig4", "fig5", "fig6", "fig7"])]
        preset: Option<String>,
    },
}

fn load_config(config: Option<&PathBuf>, preset: Option<&str>) -> Result<ExperimentConfig, Error> {
    let mut cfg = match preset {
        Some(p) => ExperimentConfig::preset(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(path) = config {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.apply_text(&text)
            .map_err(|e| Error::Config(format!("{}: {}", path.display(), e)))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let Command::Run {
        config,
        out,
        threads,
        preset,
    } = Cli::parse().command;

    let cfg = match load_config(config.as_ref(), preset.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if threads == Some(0) {
        eprintln!("error: --threads must be at least 1");
        return ExitCode::from(1);
    }

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        pool = pool.num_threads(n);
    }
    let result = pool
        .build()
        .map_err(|e| Error::InvalidArgument(e.to_string()))
        .and_then(|pool| pool.install(|| run_experiment(&cfg)))
        .and_then(|output| {
            output.write(&out)?;
            Ok(output)
        });
    match result {
        Ok(output) => {
            let errored = output.errored();
            if errored > 0 {
                eprintln!("note: {errored} trial(s) ended in an error and were counted as incorrect");
            }
            ExitCode::SUCCESS
        }
        Err(Error::Config(msg)) => {
            eprintln!("error: config error: {msg}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
