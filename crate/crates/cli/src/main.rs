mod config;
mod run;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use config::{ConfigError, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "motives",
    version,
    about = "Disclosure experiments with hidden seller motives"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        /// Artifact directory; overrides `output.dir`.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Worker threads for parallel sections (defaults to all cores).
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long, default_value = "warn")]
        log_level: log::LevelFilter,
    },
}

/// 2 for bad input, 3 for numerical failures, 1 for anything else.
fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ConfigError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<motives_core::Error>() {
        Some(
            motives_core::Error::NonConvergence { .. }
            | motives_core::Error::Budget(_)
            | motives_core::Error::Consistency(_),
        ) => 3,
        Some(_) => 2,
        None => 1,
    }
}

fn run(config: PathBuf, out_dir: Option<PathBuf>, threads: Option<usize>) -> Result<()> {
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    let cfg = ExperimentConfig::load(&config)?;
    let out = run::out_dir(&cfg, out_dir.as_deref());
    let kind = cfg.kind.as_str();
    let mut runner = run::Runner::new(cfg, out);
    let lines = runner.run()?;
    // A closed stdout (e.g. piped into `head`) must not fail the run.
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{kind}");
    for l in lines {
        let _ = writeln!(out, "  {l}");
    }
    for p in runner.written() {
        let _ = writeln!(out, "  wrote {}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Command::Run {
        config,
        out_dir,
        threads,
        log_level,
    } = cli.command;
    env_logger::Builder::new().filter_level(log_level).init();
    match run(config, out_dir, threads) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
