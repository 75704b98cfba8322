//! Argument parsing and dispatch.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{ExperimentConfig, Overrides};
use crate::error::{CliError, CliResult};
use crate::suites::{self, SuiteSummary};

/// Environment variable capping the number of Monte Carlo workers.
pub const THREADS_ENV: &str = "INTEGRATORLAB_THREADS";

/// Every pass flag was true.
pub const EXIT_PASS: i32 = 0;
/// The suite ran and at least one check failed.
pub const EXIT_FAIL: i32 = 1;
/// Bad arguments or configuration.
pub const EXIT_USAGE: i32 = 2;
/// The suite could not run to completion.
pub const EXIT_ERROR: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "integratorlab", version, about = "Verification suites for Gaussian integrators and their local time")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate paths, compare Var x(t) with sigma^2(t), optionally dump paths.
    Simulate(CommonArgs),
    /// Monte Carlo local-time profile and the occupation formula.
    Localtime(CommonArgs),
    /// Kernel norms of the chaos expansion of local time.
    Chaos(CommonArgs),
    /// Clark representations of f(w(1)) and of Wiener local time.
    Clark(CommonArgs),
    /// Duality checks of both local-time representations.
    Duality(CommonArgs),
    /// All acceptance checks, scaled to the configuration.
    VerifyAll(CommonArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// `key = value` file; flags override its entries.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// wiener, bridge, fbm or projection.
    #[arg(long)]
    op: Option<String>,
    /// Hurst-type exponent for fbm, in (0.5, 1).
    #[arg(long)]
    alpha: Option<f64>,
    /// Grid cells on [0, 1].
    #[arg(long)]
    steps: Option<usize>,
    /// Monte Carlo paths.
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated levels.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    u: Option<Vec<f64>>,
    /// End time, a grid point in (0, 1].
    #[arg(long)]
    t: Option<f64>,
    /// Smoothing variance of the local-time estimator.
    #[arg(long)]
    eps: Option<f64>,
    /// Comma-separated test directions: one, sign, ramp.
    #[arg(long, value_delimiter = ',')]
    h: Option<Vec<String>>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the first N paths as (t, w, x) tables.
    #[arg(long, value_name = "N")]
    dump_paths: Option<usize>,
}

impl CommonArgs {
    fn config(self) -> CliResult<ExperimentConfig> {
        let file = match &self.config {
            Some(path) => Overrides::from_file(path)?,
            None => Overrides::default(),
        };
        let flags = Overrides {
            op: self.op,
            alpha: self.alpha,
            steps: self.steps,
            paths: self.paths,
            seed: self.seed,
            u: self.u,
            t: self.t,
            eps: self.eps,
            h: self.h,
            out: self.out,
            dump_paths: self.dump_paths,
        };
        ExperimentConfig::from_overrides(file.layered(flags))
    }
}

fn execute(command: Command) -> CliResult<SuiteSummary> {
    let (suite, args): (fn(&ExperimentConfig) -> CliResult<SuiteSummary>, CommonArgs) = match command {
        Command::Simulate(a) => (suites::simulate, a),
        Command::Localtime(a) => (suites::localtime, a),
        Command::Chaos(a) => (suites::chaos, a),
        Command::Clark(a) => (suites::clark, a),
        Command::Duality(a) => (suites::duality, a),
        Command::VerifyAll(a) => (suites::verify_all, a),
    };
    let cfg = args.config()?;
    suite(&cfg)
}

fn worker_cap() -> CliResult<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Config(format!("{THREADS_ENV} must be a positive integer, got '{v}'"))),
        },
    }
}

#[cfg(feature = "parallel")]
fn with_workers(command: Command) -> CliResult<SuiteSummary> {
    match worker_cap()? {
        None => execute(command),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(format!("cannot start {n} workers: {e}")))?
            .install(|| execute(command)),
    }
}

#[cfg(not(feature = "parallel"))]
fn with_workers(command: Command) -> CliResult<SuiteSummary> {
    worker_cap()?;
    execute(command)
}

/// Parses `argv` (program name first), runs the suite and returns the exit code.
/// The summary goes to `out`, diagnostics to `err`.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(rendered.as_bytes()) } else { out.write_all(rendered.as_bytes()) };
            return code;
        }
    };
    match with_workers(cli.command) {
        Ok(summary) => {
            for line in &summary.lines {
                let _ = writeln!(out, "{line}");
            }
            let _ = writeln!(out, "{}", if summary.pass { "ALL PASS" } else { "SOME CHECKS FAILED" });
            if summary.pass {
                EXIT_PASS
            } else {
                EXIT_FAIL
            }
        }
        Err(e @ CliError::Config(_)) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_ERROR
        }
    }
}

/// [`run_with`] on the process streams.
pub fn run_subcommand<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(argv, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}
