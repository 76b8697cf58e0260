//! `cavity-bands`: runs one experiment and writes its output next to a run manifest.
//!
//! Exit codes: 0 success, 1 configuration or I/O error, 2 numerical failure.

mod config;
mod output;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use serde_json::Value;

use config::{Command, Flags, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "cavity-bands", version, about = "Bloch bands of a crystal coupled to a cavity mode")]
#[command(allow_negative_numbers = true)]
struct Cli {
    /// Experiment to run; may instead come from the config file.
    command: Option<Command>,
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; a `<output>.manifest.json` is written next to it.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    #[command(flatten)]
    flags: Flags,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let resolved = match configure(cli) {
        Ok(r) => r,
        Err((output, e)) => {
            eprintln!("error: {e:#}");
            if let Some(out) = output {
                let _ = output::write_manifest(&out, &Value::Null, "config_error", Some(&format!("{e:#}")), Value::Null);
            }
            return ExitCode::from(1);
        }
    };
    let config = serde_json::to_value(&resolved.config).expect("config serializes");
    let out = &resolved.output;
    match run::run(&resolved) {
        Ok(product) => {
            if let Err(e) = output::write_output(out, &product.body) {
                eprintln!("error: {e:#}");
                return ExitCode::from(1);
            }
            let (status, code) = if product.failure.is_some() { ("numerical_failure", 2) } else { ("ok", 0) };
            if let Some(reason) = &product.failure {
                eprintln!("numerical failure: {reason}");
            }
            if let Err(e) = output::write_manifest(out, &config, status, product.failure.as_deref(), product.summary) {
                eprintln!("error: {e:#}");
                return ExitCode::from(1);
            }
            ExitCode::from(code)
        }
        Err(e) => {
            let (status, code) = match e {
                cavity_bands::Error::InvalidParameter(_) | cavity_bands::Error::DimensionTooLarge { .. } => ("config_error", 1),
                _ => ("numerical_failure", 2),
            };
            eprintln!("error: {e}");
            let _ = output::write_manifest(out, &config, status, Some(&e.to_string()), Value::Null);
            ExitCode::from(code)
        }
    }
}

type Failure = (Option<PathBuf>, anyhow::Error);

fn configure(cli: Cli) -> Result<config::Resolved, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path).map_err(|e| (cli.output.clone(), e))?,
        None => RunConfig::default(),
    };
    if cli.command.is_some() {
        cfg.command = cli.command;
    }
    if cli.output.is_some() {
        cfg.output_path = cli.output.clone();
    }
    if cli.threads.is_some() {
        cfg.threads = cli.threads;
    }
    let out_hint = cfg.output_path.clone();
    cfg.apply(cli.flags).map_err(|e| (out_hint.clone(), e))?;
    let resolved = cfg.resolve().map_err(|e| (out_hint.clone(), e))?;
    if let Some(n) = resolved.config.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| (Some(resolved.output.clone()), anyhow::Error::new(e)))?;
    }
    Ok(resolved)
}
