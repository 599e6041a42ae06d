use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use mems_bifurcate::cli_io::{exit_code, read_config, run_subcommand, Subcommand};
use mems_bifurcate::Execution;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Trace,
    Minimal,
    Spectrum,
    Extremal,
    Pohozaev,
    Certificate,
    Oracle,
}

impl Command {
    fn subcommand(self) -> Subcommand {
        match self {
            Command::Trace => Subcommand::Trace,
            Command::Minimal => Subcommand::Minimal,
            Command::Spectrum => Subcommand::Spectrum,
            Command::Extremal => Subcommand::Extremal,
            Command::Pohozaev => Subcommand::Pohozaev,
            Command::Certificate => Subcommand::Certificate,
            Command::Oracle => Subcommand::Oracle,
        }
    }
}

/// Branch tracing, spectra and Pohozaev checks for the radial MEMS equation.
#[derive(Debug, Parser)]
#[command(name = "mems-bifurcate", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Run configuration (`[section]` headers, `key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run batch work on one thread.
    #[arg(long)]
    sequential: bool,
}

#[cfg(feature = "parallel")]
fn configure_threads() {
    let Ok(raw) = std::env::var("MEMS_BIFURCATE_THREADS") else {
        return;
    };
    match raw.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                eprintln!("warning: could not size the thread pool: {e}");
            }
        }
        _ => eprintln!("warning: ignoring MEMS_BIFURCATE_THREADS={raw:?}"),
    }
}

#[cfg(not(feature = "parallel"))]
fn configure_threads() {}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    configure_threads();
    let cfg = match read_config(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e) as u8);
        }
    };
    let out = cli.out.unwrap_or_else(|| PathBuf::from(&cfg.out_dir));
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    let cmd = cli.command.subcommand();
    match run_subcommand(cmd, &cfg, &out, exec) {
        Ok(outcome) => {
            println!("{}: {}", cmd.name(), outcome.summary);
            for p in &outcome.artifacts {
                println!("  wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}: {e}", cmd.name());
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
