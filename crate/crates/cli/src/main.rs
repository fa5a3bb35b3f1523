//! `crosstraffic`: turn packet traces into cross-traffic profiles, replay
//! them against a shaped bottleneck and score the results.

mod cmd;
mod config;
mod error;
mod io;
mod manifest;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, Parser, Subcommand};

use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "crosstraffic", version, about)]
struct Cli {
    /// Flat TOML file of default flag values for the chosen subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Packet trace → profile JSONL.
    Transform(cmd::transform::TransformArgs),
    /// Add profile JSONL files to an indexed store.
    Ingest(cmd::transform::IngestArgs),
    /// Query a store.
    Select(cmd::select::SelectArgs),
    /// Scale or filter profiles to fit under a rate.
    Trim(cmd::prep::TrimArgs),
    /// Stratified sample by ON/OFF toggle count.
    Sample(cmd::prep::SampleArgs),
    /// Replay one profile against a bottleneck next to a bulk TCP flow.
    Simulate(cmd::simulate::SimulateArgs),
    /// Trace comparison metrics.
    #[command(subcommand)]
    Eval(cmd::eval::EvalCommand),
    /// Transform, select, trim, sample, simulate a grid and evaluate.
    Run(cmd::run::RunArgs),
}

fn config_path(argv: &[OsString]) -> Option<PathBuf> {
    let mut it = argv.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Some(PathBuf::from(v));
        }
    }
    None
}

fn dispatch(command: &Command) -> Result<()> {
    match command {
        Command::Transform(a) => cmd::transform::execute(a).map(drop),
        Command::Ingest(a) => cmd::transform::ingest(a).map(drop),
        Command::Select(a) => cmd::select::execute(a).map(drop),
        Command::Trim(a) => cmd::prep::trim(a).map(drop),
        Command::Sample(a) => cmd::prep::sample(a).map(drop),
        Command::Simulate(a) => cmd::simulate::execute(a),
        Command::Eval(c) => cmd::eval::execute(c),
        Command::Run(a) => cmd::run::execute(a),
    }
}

fn run(argv: Vec<OsString>) -> Result<()> {
    let argv = match config_path(&argv) {
        Some(path) => config::inject(&Cli::command(), argv, &path)?,
        None => argv,
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return Ok(());
        }
        Err(e) => {
            let msg = e.render().to_string();
            let msg = msg.trim_end();
            return Err(CliError::invalid(msg.strip_prefix("error: ").unwrap_or(msg)));
        }
    };
    dispatch(&cli.command)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(std::env::args_os().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
