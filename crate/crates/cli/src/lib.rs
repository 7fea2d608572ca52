//! Command-line front end. Every number in a report comes from a
//! `soliton_core` operation; this crate parses flags, applies overrides,
//! fans sweeps out over a worker pool and writes JSON/CSV artifacts.

mod commands;
pub mod output;
pub mod report;

use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use soliton_core::{
    AnsatzError, DynamicsError, FeasibilityError, FieldError, ValidationError, Variant,
};
use thiserror::Error;

use output::OutputSink;
pub use report::{Check, Outcome, OutputFile, RunReport, Timings};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error(transparent)]
    Ansatz(#[from] AnsatzError),
    #[error(transparent)]
    Feasibility(#[from] FeasibilityError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError<f64>),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("serialization: {0}")]
    Serialize(serde_json::Error),
    #[error("csv: {0}")]
    Csv(String),
}

impl CliError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) | Self::Config(_) | Self::Validation(_) => 2,
            _ => 1,
        }
    }
}

/// Inclusive integer range written `a..b` or a single `n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CountRange {
    pub start: usize,
    pub end: usize,
}

impl CountRange {
    pub fn iter(&self) -> RangeInclusive<usize> {
        self.start..=self.end
    }
}

impl FromStr for CountRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse = |x: &str| {
            x.trim()
                .parse::<usize>()
                .map_err(|e| format!("bad count {x:?}: {e}"))
        };
        let (start, end) = match s.split_once("..") {
            Some((a, b)) => (parse(a)?, parse(b.trim_start_matches('='))?),
            None => {
                let n = parse(s)?;
                (n, n)
            }
        };
        if start == 0 || start > end {
            return Err(format!("range {s:?} must satisfy 1 <= start <= end"));
        }
        Ok(Self { start, end })
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "soliton-lab",
    version,
    about = "Gaussian soliton construction, verification and sweeps"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// Universe configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Lagrangian variant: cross or weak.
    #[arg(long, global = true)]
    pub variant: Option<Variant>,
    /// Points per grid axis.
    #[arg(long, global = true)]
    pub grid_points: Option<usize>,
    /// Half-width of a symmetric grid; default is six packet widths.
    #[arg(long, global = true)]
    pub grid_span: Option<f64>,
    /// Evaluation times, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub times: Option<Vec<f64>>,
    /// Directory for report and data files.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all processors).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Seed for point-cloud sampling.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Overrides `hbar`.
    #[arg(long, global = true)]
    pub hbar: Option<f64>,
    /// Overrides `c_abs`.
    #[arg(long, global = true)]
    pub cabs: Option<f64>,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Build the closed-form solution for the configured roster.
    Construct,
    /// Pointwise residuals of both equations of motion.
    Verify {
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Energy by quadrature against the closed form.
    Energy {
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 0.0)]
        t: f64,
    },
    /// Roster exclusion rules and the k-reduction.
    Feasibility,
    /// Free/oscillator mixing adjudication.
    Mixing,
    /// Width and internal energy of identical free particles against n.
    MachianSweep {
        #[arg(long)]
        n: CountRange,
        #[arg(long, default_value_t = 1.0)]
        m: f64,
    },
    /// Time-evolve the configured solution.
    Evolve {
        #[arg(long, default_value_t = 0.5)]
        horizon: f64,
        #[arg(long)]
        dt: Option<f64>,
        /// Switch the phase coupling off.
        #[arg(long)]
        linear: bool,
        #[arg(long, default_value_t = 1)]
        record_every: usize,
        /// Write a state file every this many steps.
        #[arg(long)]
        snapshot_every: Option<usize>,
        #[arg(long, default_value_t = 1e-3)]
        tol_deviation: f64,
        #[arg(long, default_value_t = 1e-8)]
        tol_norm: f64,
        #[arg(long, default_value_t = 1e-6)]
        tol_energy: f64,
    },
    /// Evolve a perturbed free soliton and track its distance from the exact one.
    Perturb {
        /// Relative change of the width `s`.
        #[arg(long, conflicts_with = "perturb_a")]
        perturb_s: Option<f64>,
        /// Relative change of the phase curvature `a`.
        #[arg(long)]
        perturb_a: Option<f64>,
        #[arg(long, default_value_t = 0.5)]
        horizon: f64,
        #[arg(long)]
        dt: Option<f64>,
    },
}

/// Result of a command before it is wrapped into a report.
#[derive(Default)]
pub(crate) struct CommandOutput {
    pub config_hash: Option<String>,
    pub checks: Vec<Check>,
    pub results: serde_json::Value,
}

/// Parses `args` (program name first) and runs the command.
pub fn execute<I, S>(args: I) -> RunReport
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let args: Vec<std::ffi::OsString> = args.into_iter().map(Into::into).collect();
    let echo: Vec<String> = args
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    match Cli::try_parse_from(&args) {
        Ok(cli) => run(cli, echo),
        Err(e) => failure(echo, None, &CliError::Usage(e.to_string()), 0.0),
    }
}

/// Runs a parsed command line. `echo` is recorded verbatim in the report.
pub fn run(cli: Cli, echo: Vec<String>) -> RunReport {
    let start = Instant::now();
    let outcome = run_in_pool(&cli);
    let elapsed = start.elapsed().as_secs_f64();
    let mut report = match outcome {
        Ok((out, sink)) => {
            let pass = out.checks.iter().all(|c| c.pass);
            RunReport {
                command: echo,
                config_hash: out.config_hash,
                outcome: if pass {
                    Outcome::Passed
                } else {
                    Outcome::ChecksFailed
                },
                exit_code: if pass { 0 } else { 1 },
                error: None,
                checks: out.checks,
                results: out.results,
                outputs: sink.manifest,
                timings: Timings {
                    wall_seconds: elapsed,
                },
            }
        }
        Err(e) => failure(echo, None, &e, elapsed),
    };
    if let Some(dir) = &cli.common.out {
        if let Err(e) = write_report(dir, &report) {
            report = failure(
                report.command.clone(),
                report.config_hash.clone(),
                &e,
                elapsed,
            );
        }
    }
    report
}

fn run_in_pool(cli: &Cli) -> Result<(CommandOutput, OutputSink), CliError> {
    let mut sink = OutputSink::new(cli.common.out.as_deref())?;
    let go = |sink: &mut OutputSink| commands::dispatch(&cli.common, &cli.command, sink);
    let out = match cli.common.workers {
        Some(0) => return Err(CliError::Usage("--workers must be >= 1".into())),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| CliError::Usage(format!("worker pool: {e}")))?
            .install(|| go(&mut sink))?,
        None => go(&mut sink)?,
    };
    Ok((out, sink))
}

fn failure(
    echo: Vec<String>,
    config_hash: Option<String>,
    e: &CliError,
    elapsed: f64,
) -> RunReport {
    RunReport {
        command: echo,
        config_hash,
        outcome: Outcome::Error,
        exit_code: e.exit_code(),
        error: Some(e.to_string()),
        checks: Vec::new(),
        results: serde_json::Value::Null,
        outputs: Vec::new(),
        timings: Timings {
            wall_seconds: elapsed,
        },
    }
}

fn write_report(dir: &Path, report: &RunReport) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = dir.join("report.json");
    let mut text = serde_json::to_vec_pretty(report).map_err(CliError::Serialize)?;
    text.push(b'\n');
    std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn count_range_parses() {
        assert_eq!(
            "1..64".parse::<CountRange>().unwrap(),
            CountRange { start: 1, end: 64 }
        );
        assert_eq!(
            "3".parse::<CountRange>().unwrap(),
            CountRange { start: 3, end: 3 }
        );
        assert_eq!("2..=4".parse::<CountRange>().unwrap().iter().count(), 3);
        assert!("0..3".parse::<CountRange>().is_err());
        assert!("5..2".parse::<CountRange>().is_err());
    }

    #[test]
    fn parse_errors_exit_with_two() {
        let r = execute(["soliton-lab", "verify", "--grid-points", "many"]);
        assert_eq!(r.exit_code, 2);
        assert_eq!(r.outcome, Outcome::Error);
    }
}
