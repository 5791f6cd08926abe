//! `unispread`: command-line runs of the transport and spread experiments.
//!
//! Exit status: 0 on success, 1 on invalid input, 2 when the solver cannot
//! produce a result (no transport exists, or size/quantum caps are hit).

mod commands;
mod options;

use std::fs;
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde::Serialize;

use options::Options;

#[derive(Parser)]
#[command(
    name = "unispread",
    version,
    about = "Bottleneck transport distances and the shift criterion"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a point set from a spec.
    Gen(Options),
    /// Bottleneck distance between two inputs (point files or grid JSON).
    Dist(Options),
    /// Distance to the lattice alpha Z^d.
    LatticeDist(Options),
    /// Distance to the uniform measure beta * Lebesgue.
    LebesgueDist(Options),
    /// Tra(nu, nu^z) over a grid of shifts.
    ShiftSweep(Options),
    /// Averaged shift plans and their distance to the configuration.
    Cesaro(Options),
    /// Optimal shift plan read as an index bijection.
    Bijection(Options),
    /// Distance trend over growing windows.
    Growth(Options),
    /// Lattice and Lebesgue distances side by side.
    VerifyChain(Options),
}

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Solver(String),
}

impl From<unispread::Error> for CliError {
    fn from(e: unispread::Error) -> Self {
        use unispread::Error::*;
        match e {
            QuantumOverflow { .. } | SizeCap { .. } | CountMismatch { .. } | InvalidPlan(_) => {
                CliError::Solver(e.to_string())
            }
            _ => CliError::Validation(e.to_string()),
        }
    }
}

#[derive(Serialize)]
struct Envelope<'a> {
    schema_version: u32,
    command: &'a str,
    report: &'a serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    generated_at: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time_ms: Option<f64>,
}

fn run(name: &str, opts: Options, start: Instant) -> Result<(), CliError> {
    let opts = opts.resolve(name)?;
    let outcome = match name {
        "gen" => commands::gen(&opts),
        "dist" => commands::dist(&opts),
        "lattice-dist" => commands::lattice_dist(&opts),
        "lebesgue-dist" => commands::lebesgue_dist(&opts),
        "shift-sweep" => commands::shift_sweep_cmd(&opts),
        "cesaro" => commands::cesaro(&opts),
        "bijection" => commands::bijection(&opts),
        "growth" => commands::growth(&opts),
        "verify-chain" => commands::verify_chain_cmd(&opts),
        _ => unreachable!("clap only yields known commands"),
    }?;
    let elapsed = start.elapsed();

    let text = match &outcome.raw {
        Some(raw) => raw.clone(),
        None => {
            let envelope = Envelope {
                schema_version: unispread::SCHEMA_VERSION,
                command: name,
                report: &outcome.report,
                generated_at: (!opts.canonical).then(|| {
                    SystemTime::now()
                        .duration_since(UNIX_EPOCH)
                        .map(|d| d.as_secs())
                        .unwrap_or(0)
                }),
                wall_time_ms: (!opts.canonical).then_some(elapsed.as_secs_f64() * 1e3),
            };
            let mut s = serde_json::to_string_pretty(&envelope).map_err(unispread::Error::from)?;
            s.push('\n');
            s
        }
    };
    let write = |path: &std::path::Path, body: &str| {
        fs::write(path, body).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    };
    if let Some((path, body)) = &outcome.extra {
        write(path, body)?;
    }
    let mut summary = format!(
        "{name}: value={} error_bound={} time={:.1}ms",
        outcome.value,
        outcome.error_bound,
        elapsed.as_secs_f64() * 1e3
    );
    if let Some(note) = &outcome.note {
        summary.push(' ');
        summary.push_str(note);
    }
    match &opts.out {
        Some(path) => {
            write(path, &text)?;
            println!("{summary}");
        }
        None => {
            print!("{text}");
            eprintln!("{summary}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let start = Instant::now();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let (name, opts) = match cli.command {
        Command::Gen(o) => ("gen", o),
        Command::Dist(o) => ("dist", o),
        Command::LatticeDist(o) => ("lattice-dist", o),
        Command::LebesgueDist(o) => ("lebesgue-dist", o),
        Command::ShiftSweep(o) => ("shift-sweep", o),
        Command::Cesaro(o) => ("cesaro", o),
        Command::Bijection(o) => ("bijection", o),
        Command::Growth(o) => ("growth", o),
        Command::VerifyChain(o) => ("verify-chain", o),
    };
    match run(name, opts, start) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Solver(msg)) => {
            eprintln!("solver error: {msg}");
            ExitCode::from(2)
        }
    }
}
