use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use padp_core::harness::diagnostics::{
    load_toml, run_cover_diag, run_fingerprint_diag, run_norms_diag, CoverDiagConfig, FingerprintDiagConfig,
    NormsDiagConfig,
};
use padp_core::harness::{
    emit_plot, fit_scaling, overlay_series, run_sweep, run_sweep_to, summarize, Axis, SweepConfig, TrialRecord,
};
use padp_core::rates::{rate_report, RateQuery};
use padp_core::Error;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "padp", version, about = "Public-data-assisted private learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every cell of a config in memory and print per-cell summaries.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a sweep, writing CSV (and the configured plot).
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's `output`.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Overrides the config's `threads`.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Evaluate the rate calculators for a query (inline JSON or a file).
    Rates {
        #[arg(long)]
        query: String,
    },
    /// Structural diagnostics.
    Diagnose {
        #[arg(value_enum)]
        which: Diagnostic,
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Diagnostic {
    Fingerprint,
    Cover,
    Norms,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::ConfigInvalid(_) | Error::InvalidParameter(_) | Error::Json(_) => 2,
        _ => 3,
    }
}

fn print(v: &impl serde::Serialize) -> Result<(), Error> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn fits(cfg: &SweepConfig, records: &[TrialRecord]) -> Value {
    let Some(axis) = cfg.fit else {
        return Value::Null;
    };
    let mut out = serde_json::Map::new();
    for m in &cfg.methods {
        let v = match fit_scaling(records, axis, |r| r.method == *m) {
            Ok(f) => json!({ "slope": f.slope, "stderr": f.stderr, "intercept": f.intercept }),
            Err(e) => json!({ "error": e.kind() }),
        };
        out.insert(m.to_string(), v);
    }
    json!({ "axis": axis.name(), "methods": out })
}

fn read_query(arg: &str) -> Result<RateQuery, Error> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        std::fs::read_to_string(Path::new(arg))
            .map_err(|e| Error::ConfigInvalid(format!("cannot read query file {arg}: {e}")))?
    };
    Ok(serde_json::from_str(&text)?)
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { config } => {
            let cfg = SweepConfig::load(&config)?;
            let records = run_sweep(&cfg)?;
            print(&json!({ "cells": summarize(&records), "fit": fits(&cfg, &records) }))
        }
        Command::Sweep {
            config,
            output,
            threads,
        } => {
            let mut cfg = SweepConfig::load(&config)?;
            if let Some(t) = threads {
                cfg.threads = t;
            }
            let path = output
                .or_else(|| cfg.output.clone())
                .ok_or_else(|| Error::ConfigInvalid("no output path (set `output` or pass --output)".into()))?;
            let file = File::create(&path)?;
            let records = run_sweep_to(&cfg, BufWriter::new(file))?;
            if let Some(plot) = &cfg.plot {
                let axis = cfg.fit.unwrap_or(Axis::NPub);
                emit_plot(&records, axis, &overlay_series(&cfg, axis)?, plot)?;
            }
            print(&json!({
                "output": path,
                "rows": records.len(),
                "cells": summarize(&records),
                "fit": fits(&cfg, &records),
            }))
        }
        Command::Rates { query } => {
            let q = read_query(&query)?;
            print(&rate_report(&q)?)
        }
        Command::Diagnose { which, config } => match which {
            Diagnostic::Fingerprint => print(&run_fingerprint_diag(&load_toml::<FingerprintDiagConfig>(&config)?)?),
            Diagnostic::Cover => print(&run_cover_diag(&load_toml::<CoverDiagConfig>(&config)?)?),
            Diagnostic::Norms => print(&run_norms_diag(&load_toml::<NormsDiagConfig>(&config)?)?),
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
