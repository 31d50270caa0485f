//! Command-line front end.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fecsim_core::metrics::compute_metrics;
use fecsim_core::netsim::run;
use fecsim_core::scenario::ScenarioConfig;

use crate::config::{extract_overrides, LoadError, Settings};
use crate::report::{write_metrics, write_summary};
use crate::sweep::{sweep, Axis, SweepPlan};
use crate::trace_csv::write_trace;

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_TRUNCATED: u8 = 3;

/// Packet-level erasure-coding and rate-control experiments.
///
/// Any scenario key can be overridden with `--<dotted.key>=<value>`, for
/// example `--reliability.rho=0.2`.
#[derive(Debug, Parser)]
#[command(name = "fecsim", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one scenario.
    Run {
        config: PathBuf,
        /// Per-packet trace CSV.
        #[arg(long)]
        out: Option<PathBuf>,
        /// One-row metrics CSV; printed to stdout when omitted.
        #[arg(long)]
        metrics: Option<PathBuf>,
        /// Derive all RNG seeds from this base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Summarize a run that ended early instead of failing.
        #[arg(long)]
        allow_partial: bool,
    },
    /// Run a scenario over a list of values for one parameter.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        axis: String,
        /// Comma-separated; may be empty.
        #[arg(long, default_value = "", allow_hyphen_values = true)]
        values: String,
        #[arg(long, default_value_t = 1)]
        reps: u64,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Base seed; replicate i uses base + i. Defaults to the forward
        /// channel seed of the scenario.
        #[arg(long)]
        seed: Option<u64>,
        /// Summary CSV; printed to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        allow_partial: bool,
    },
    /// Check a scenario file and print provisioning warnings.
    Validate { config: PathBuf },
}

fn load(path: &Path, overrides: &[(String, String)]) -> Result<ScenarioConfig, LoadError> {
    let mut settings = Settings::load(path)?;
    for (k, v) in overrides {
        settings.set(k, v)?;
    }
    let (scenario, warnings) = settings.scenario()?;
    for w in warnings {
        eprintln!("warning: {}", w.0);
    }
    Ok(scenario)
}

fn output(path: &Option<PathBuf>) -> std::io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args(args: Vec<String>) -> ExitCode {
    if !fecsim_core::gf256::tables_consistent() {
        return fail(1, "GF(2^8) tables failed their self-check");
    }
    let (args, overrides) = extract_overrides(args);
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { 0 });
        }
    };
    match cli.command {
        Command::Validate { config } => match load(&config, &overrides) {
            Ok(s) => {
                println!("ok: {} ({})", s.name, s.mode_label());
                ExitCode::SUCCESS
            }
            Err(e) => fail(EXIT_CONFIG, e),
        },
        Command::Run {
            config,
            out,
            metrics,
            seed,
            allow_partial,
        } => {
            let mut s = match load(&config, &overrides) {
                Ok(s) => s,
                Err(e) => return fail(EXIT_CONFIG, e),
            };
            if let Some(seed) = seed {
                s = s.with_seed(seed);
            }
            let trace = run(&s);
            if let Some(p) = &out {
                if let Err(e) = output(&Some(p.clone())).map_err(csv::Error::from).and_then(|w| write_trace(&trace, w)) {
                    return fail(1, e);
                }
            }
            if let Some(f) = &trace.failure {
                eprintln!("run truncated at {:.6} s: {} ({})", f.at.as_secs_f64(), f.kind.as_str(), f.detail);
                if !allow_partial {
                    return ExitCode::from(EXIT_TRUNCATED);
                }
            }
            let m = match compute_metrics(&trace, s.deadline, allow_partial) {
                Ok(m) => m,
                Err(e) => return fail(1, e),
            };
            match output(&metrics).map_err(csv::Error::from).and_then(|w| write_metrics(&m, w)) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => fail(1, e),
            }
        }
        Command::Sweep {
            config,
            axis,
            values,
            reps,
            jobs,
            seed,
            out,
            allow_partial,
        } => {
            let s = match load(&config, &overrides) {
                Ok(s) => s,
                Err(e) => return fail(EXIT_CONFIG, e),
            };
            let axis = match Axis::parse(&axis) {
                Ok(a) => a,
                Err(e) => return fail(EXIT_CONFIG, e),
            };
            let values: Vec<String> = values.split(',').map(str::trim).filter(|v| !v.is_empty()).map(String::from).collect();
            let plan = SweepPlan {
                axis,
                values,
                reps,
                base_seed: seed.unwrap_or(s.channel_forward.seed),
                jobs,
            };
            let result = match sweep(&s, &plan) {
                Ok(r) => r,
                Err(e @ crate::sweep::SweepError::Metrics { .. }) => return fail(1, e),
                Err(e) => return fail(EXIT_CONFIG, e),
            };
            if let Err(e) = output(&out).map_err(csv::Error::from).and_then(|w| write_summary(&result.rows, w)) {
                return fail(1, e);
            }
            for (v, rep) in &result.truncated {
                eprintln!("truncated: {}={v} rep {rep}", axis.name());
            }
            if !result.truncated.is_empty() && !allow_partial {
                return ExitCode::from(EXIT_TRUNCATED);
            }
            ExitCode::SUCCESS
        }
    }
}
