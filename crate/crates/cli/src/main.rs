mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;
use log::LevelFilter;

use args::{Cli, Command};

/// Evaluation-policy failures (exit 1) versus everything else (exit 2).
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<dlp_eval_core::Error>() {
        Some(dlp_eval_core::Error::EmptyCandidateSet { .. }) => 1,
        Some(dlp_eval_core::Error::NoUsableBatches) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => LevelFilter::Warn,
        1 => LevelFilter::Info,
        _ => LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .format_timestamp(None)
        .init();

    let result = match &cli.command {
        Command::Stats(a) => commands::stats(a),
        Command::Split(a) => commands::split(a),
        Command::Bd(a) => commands::bd(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Sample(a) => commands::sample(a),
        Command::Eval(a) => commands::eval(a),
        Command::Metrics(a) => commands::metrics(a),
        Command::Plot(a) => commands::plot(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
