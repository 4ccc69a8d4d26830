use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod bd;
mod correlate;
mod manifest;
mod optimize;
mod report;
mod scores;
mod simulate;
mod table;

use manifest::Run;

#[derive(Parser, Debug)]
#[command(
    name = "lambdatune",
    version,
    about = "Per-clip lambda tuning and quality analytics"
)]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Seed for simulated fixtures.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Search (k1, k2) per clip.
    Optimize(optimize::Args),
    /// BD-rate, BD-quality and bitrate savings between two curve files.
    Bd(bd::Args),
    /// Screening, MOS/DMOS and subject-model recovery.
    Scores(scores::Args),
    /// Correlation of objective metrics with subjective scores.
    Correlate(correlate::Args),
    /// Rate-quality plots and a summary table.
    Report(report::Args),
    /// Write a seeded synthetic dataset.
    Simulate(simulate::Args),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Optimize(_) => "optimize",
            Command::Bd(_) => "bd",
            Command::Scores(_) => "scores",
            Command::Correlate(_) => "correlate",
            Command::Report(_) => "report",
            Command::Simulate(_) => "simulate",
        }
    }
}

pub struct Globals {
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
}

/// Error chain on one line, skipping causes already quoted by their parent.
fn describe(e: &anyhow::Error) -> String {
    let mut text = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if !text.contains(&msg) {
            if !text.is_empty() {
                text.push_str(": ");
            }
            text.push_str(&msg);
        }
    }
    text
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(if cli.verbose {
            log::LevelFilter::Debug
        } else {
            log::LevelFilter::Warn
        })
        .parse_default_env()
        .init();

    let globals = Globals {
        config: cli.config,
        out: cli.out,
        seed: cli.seed,
    };
    let mut run = Run::start(cli.command.name());
    let outcome = match &cli.command {
        Command::Optimize(a) => optimize::run(&globals, a, &mut run),
        Command::Bd(a) => bd::run(&globals, a, &mut run),
        Command::Scores(a) => scores::run(&globals, a, &mut run),
        Command::Correlate(a) => correlate::run(&globals, a, &mut run),
        Command::Report(a) => report::run(&globals, a, &mut run),
        Command::Simulate(a) => simulate::run(&globals, a, &mut run),
    };
    let code = match outcome {
        Ok(flagged) => u8::from(flagged) * 2,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            1
        }
    };
    if let Err(e) = run.finish(&globals.out, code) {
        eprintln!("error: {e:#}");
        return ExitCode::from(1);
    }
    ExitCode::from(code)
}
