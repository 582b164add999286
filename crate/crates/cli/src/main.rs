//! `spreadlab` command-line front end.

mod commands;
mod error;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{CliError, EXIT_INVALID, EXIT_OK};

#[derive(Debug, Parser)]
#[command(name = "spreadlab", version, about = "Well-spreadness checks, certificates and regression lower-bound experiments")]
struct Cli {
    /// Master seed; every random stream is forked from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Report file, written atomically. Without it only the summary line is printed.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a design matrix (Gaussian, hard construction, planted or counterexample).
    Gen(commands::GenArgs),
    /// Decide or search for violations of (m, δ)-spreadness of a column span.
    SpreadCheck(commands::SpreadArgs),
    /// Degree-4 spectral certificate of well-spreadness.
    Certify(commands::CertifyArgs),
    /// KL divergence between shifted symmetric geometric laws.
    Kl(commands::KlArgs),
    /// Fano lower bound for a hard construction.
    Fano(commands::FanoArgs),
    /// Low-degree likelihood-ratio norm.
    Lowdeg(commands::LowdegArgs),
    /// Degree-4 distinguishing experiment, null versus planted.
    Distinguish(commands::DistinguishArgs),
    /// Regression simulation on Gaussian or hard designs.
    Regress(commands::RegressArgs),
    /// Spark of a rational matrix and the reduction consistency check.
    Spark(commands::SparkArgs),
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("SPREADLAB_THREADS") else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("SPREADLAB_THREADS = {raw:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let seed = cli.seed;
    let (name, params, outcome) = match &cli.command {
        Command::Gen(a) => ("gen", serde_json::to_value(a)?, commands::gen(a, seed)?),
        Command::SpreadCheck(a) => ("spread-check", serde_json::to_value(a)?, commands::spread_check(a, seed)?),
        Command::Certify(a) => ("certify", serde_json::to_value(a)?, commands::certify(a)?),
        Command::Kl(a) => ("kl", serde_json::to_value(a)?, commands::kl(a)?),
        Command::Fano(a) => ("fano", serde_json::to_value(a)?, commands::fano(a, seed)?),
        Command::Lowdeg(a) => ("lowdeg", serde_json::to_value(a)?, commands::lowdeg(a)?),
        Command::Distinguish(a) => ("distinguish", serde_json::to_value(a)?, commands::distinguish(a, seed)?),
        Command::Regress(a) => ("regress", serde_json::to_value(a)?, commands::regress(a, seed)?),
        Command::Spark(a) => ("spark", serde_json::to_value(a)?, commands::spark(a)?),
    };
    let config = serde_json::json!({
        "subcommand": name,
        "params": params,
        "seed": seed,
        "output": cli.output,
        "format": cli.format,
    });
    let report = report::Report {
        subcommand: name,
        config,
        seed,
        method: outcome.method,
        result: outcome.result,
        table: outcome.table,
    };
    if let Some(path) = &cli.output {
        let bytes = match cli.format {
            Format::Json => report.to_json()?,
            Format::Csv => report.to_csv()?,
        };
        report::write_atomic(path, &bytes)?;
    }
    println!("{name}: {}", outcome.summary);
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::from(EXIT_OK as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
