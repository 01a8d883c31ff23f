//! `enlarge`: configuration-driven experiments with JSON reports, CSV
//! curves and Matrix Market operators.

pub mod commands;
pub mod config;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::Parser;
use enlarge_core::enlargement::Verdict;
use enlarge_core::par::Execution;
use enlarge_core::Error;

use config::{parse_override, Command, RunConfig};
use report::RunReport;

/// Exit codes.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const INTERNAL: i32 = 1;
    pub const CHECKS_FAILED: i32 = 2;
    pub const INFEASIBLE: i32 = 3;
    pub const CONFIG: i32 = 4;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Infeasible(String),
    #[error("{0}")]
    Internal(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Infeasible(m) => CliError::Infeasible(m),
            Error::InvalidInput(_) | Error::DomainTooSmall { .. } => CliError::Config(e.to_string()),
            other => CliError::Internal(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::Infeasible(_) => exit::INFEASIBLE,
            CliError::Internal(_) => exit::INTERNAL,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "enlarge", version, about = "Decay estimates transferred to enlarged weighted spaces")]
pub struct Cli {
    /// Optional when the configuration file names one.
    #[arg(value_enum)]
    pub command: Option<Command>,
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; 1 runs sequentially.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Tolerance override, repeatable.
    #[arg(long = "tolerance", value_name = "KEY=VAL", value_parser = parse_override)]
    pub tolerances: Vec<(String, f64)>,
    /// Problem definition for the fp-* commands.
    #[arg(long)]
    pub problem: Option<PathBuf>,
    /// Instance manifest for enlarge-check.
    #[arg(long)]
    pub instance: Option<PathBuf>,
}

impl Cli {
    /// The configuration file (if any) with flags layered on top.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match (&self.config, self.command) {
            (Some(path), _) => RunConfig::load(path)?,
            (None, Some(c)) => RunConfig::new(c),
            (None, None) => return Err(CliError::Config("give a command or --config".into())),
        };
        if let Some(c) = self.command.filter(|&c| c != cfg.command) {
            return Err(CliError::Config(format!(
                "config is for `{}` but `{}` was requested",
                cfg.command.name(),
                c.name()
            )));
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.output = o.clone();
        }
        for (k, v) in &self.tolerances {
            cfg.tolerances.insert(k.clone(), *v);
        }
        if let Some(p) = &self.problem {
            cfg.problem = Some(config::ProblemRef::Path(p.clone()));
        }
        if let Some(p) = &self.instance {
            cfg.instance = Some(p.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Run one configuration and write its report. Returns the report so that
/// callers can map it to an exit code.
pub fn run(cfg: RunConfig, exec: Execution) -> Result<RunReport, CliError> {
    std::fs::create_dir_all(&cfg.output)?;
    let report = match cfg.command {
        Command::Testbed => commands::testbed::run_testbed(&cfg, exec)?,
        Command::EnlargeCheck => commands::testbed::run_enlarge_check(&cfg, exec)?,
        Command::FpSpectrum | Command::FpDecay | Command::FpResolventScan => commands::fp::run_fp(&cfg, exec)?,
    };
    report.write(&cfg.output)?;
    Ok(report)
}

pub fn verdict_code(v: Verdict) -> i32 {
    if v.passed() {
        exit::PASS
    } else {
        exit::CHECKS_FAILED
    }
}

fn execute(cli: &Cli) -> Result<RunReport, CliError> {
    let cfg = cli.resolve()?;
    match cli.jobs {
        Some(0) => Err(CliError::Config("--jobs must be at least 1".into())),
        Some(1) => run(cfg, Execution::Sequential),
        #[cfg(feature = "parallel")]
        Some(j) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(j)
                .build()
                .map_err(|e| CliError::Internal(e.to_string()))?;
            pool.install(|| run(cfg, Execution::Parallel))
        }
        _ => run(cfg, Execution::Parallel),
    }
}

/// Parse arguments, run, print the summary and return the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { exit::CONFIG } else { exit::PASS };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(report) => {
            print!("{}", report.summary());
            if report.notes.contains_key("infeasible") {
                exit::INFEASIBLE
            } else {
                verdict_code(report.verdict)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
