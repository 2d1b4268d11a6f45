use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use glioma_control::io::{parse_config, run, Mode, RunStatus};

/// Forward, adjoint, optimization and verification runs for the controlled
/// tumor growth model.
#[derive(Debug, Parser)]
#[command(name = "glioma-control", version)]
struct Cli {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured mode (forward, adjoint, optimize, verify).
    #[arg(long)]
    mode: Option<Mode>,
    /// Overrides the configured output directory.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut config = match parse_config(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(mode) = cli.mode {
        config.mode = mode;
    }
    if let Some(dir) = cli.output_dir {
        config.output_dir = dir;
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    match run(&config) {
        Ok(manifest) => {
            println!(
                "{:?} run finished in {:.2} s, {} files in {}",
                manifest.mode,
                manifest.wall_time_seconds,
                manifest.files.len(),
                config.output_dir.display()
            );
            match (manifest.status, manifest.checks_passed) {
                (RunStatus::Complete, Some(false)) => {
                    eprintln!("verification checks failed; see verification_report.json");
                    ExitCode::from(1)
                }
                _ => ExitCode::SUCCESS,
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
