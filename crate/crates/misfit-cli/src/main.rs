//! `misfit`: bounds, estimators and Monte Carlo experiments for parameter
//! estimation under model misspecification.
//!
//! Exit codes: 0 success, 64 parse error, 65 domain error, 70 numeric
//! failure, 71 regularity (A1/A2) failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use misfit_core::ErrorClass;

pub const EXIT_PARSE: u8 = 64;
pub const EXIT_DOMAIN: u8 = 65;
pub const EXIT_NUMERIC: u8 = 70;
pub const EXIT_REGULARITY: u8 = 71;

#[derive(Parser, Debug)]
#[command(
    name = "misfit",
    version,
    about = "Parameter estimation under model misspecification: misspecified \
             Cramér-Rao bounds, mismatched ML/Bayes estimators, and a seeded \
             Monte Carlo harness"
)]
struct Cli {
    /// TOML configuration file; command-line flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Master seed for all randomized work.
    #[arg(long, global = true, env = "MISFIT_SEED")]
    seed: Option<u64>,

    /// Cap on worker threads (default: machine parallelism). Results never
    /// depend on this.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Output CSV path; a `.meta.json` sidecar is written next to it.
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args, Debug, Default, Clone)]
pub struct ModelFlags {
    /// Model pair: `gaussian-wrong-mean` | `ar1-power` | `complex-t-scatter`.
    #[arg(long)]
    model: Option<String>,

    /// True mean (gaussian-wrong-mean).
    #[arg(long, allow_negative_numbers = true)]
    mu_bar: Option<f64>,

    /// True variance / power (gaussian-wrong-mean, ar1-power).
    #[arg(long, allow_negative_numbers = true)]
    sigma2_bar: Option<f64>,

    /// One-lag correlation (ar1-power).
    #[arg(long, allow_negative_numbers = true)]
    rho: Option<f64>,

    /// Observation dimension (ar1-power, complex-t-scatter).
    #[arg(short = 'N', long)]
    n: Option<usize>,

    /// Shape of the t texture (complex-t-scatter).
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<f64>,

    /// Scale of the t texture (complex-t-scatter).
    #[arg(long, allow_negative_numbers = true)]
    eta: Option<f64>,

    /// Scatter matrix: `identity` | `ar1:<rho>` (complex-t-scatter).
    #[arg(long)]
    scatter: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Pseudo-true parameter, sandwich matrices, MCRB/LB/CRB report.
    Bound {
        #[command(flatten)]
        model: ModelFlags,
        /// Sample count the bound is evaluated at.
        #[arg(short = 'M', long)]
        m: Option<usize>,
        /// Evaluation route: `closed` | `quadrature` | `mc`.
        #[arg(long)]
        method: Option<String>,
    },
    /// Run one estimator on freshly sampled data.
    Estimate {
        #[command(flatten)]
        model: ModelFlags,
        /// Observations to draw.
        #[arg(short = 'M', long)]
        m: Option<usize>,
        /// Estimator: `closed` | `numeric` | `cmml`.
        #[arg(long)]
        estimator: Option<String>,
    },
    /// Sweep a hyperparameter: repeated trials plus bounds per grid point.
    Sweep {
        #[command(flatten)]
        model: ModelFlags,
        /// Hyperparameter to sweep (mu_bar, sigma2_bar, rho, lambda, eta).
        #[arg(long)]
        param: Option<String>,
        /// Grid: `start:stop:step` or comma-separated values.
        #[arg(long)]
        grid: Option<String>,
        /// Observations per trial.
        #[arg(short = 'M', long)]
        m: Option<usize>,
        /// Trials per grid point.
        #[arg(long)]
        trials: Option<usize>,
        /// Bound route: `closed` | `quadrature` | `mc`.
        #[arg(long)]
        method: Option<String>,
        /// Estimator: `closed` | `numeric` | `bayes`.
        #[arg(long)]
        estimator: Option<String>,
        /// Prior for the bayes estimator: `inv-gamma:<a>,<b>` | `flat:<lo>,<hi>`.
        #[arg(long)]
        prior: Option<String>,
    },
    /// Estimation error versus sample size.
    Consistency {
        #[command(flatten)]
        model: ModelFlags,
        /// Sample-size grid: `start:stop:step` or comma-separated.
        #[arg(long)]
        grid: Option<String>,
        /// Trials per sample size.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Posterior summaries and a concentration table over sample sizes.
    Bayes {
        #[command(flatten)]
        model: ModelFlags,
        /// Sample-size grid: `start:stop:step` or comma-separated.
        #[arg(long)]
        grid: Option<String>,
        /// Prior: `inv-gamma:<a>,<b>` | `flat:<lo>,<hi>`.
        #[arg(long)]
        prior: Option<String>,
    },
    /// Run the acceptance checks; one pass/fail line per criterion.
    Acceptance,
}

/// Uniform error type carrying an exit class.
pub enum CliError {
    Parse(String),
    Core(misfit_core::Error),
    Io(String),
}

impl From<misfit_core::Error> for CliError {
    fn from(e: misfit_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) => EXIT_PARSE,
            CliError::Io(_) => EXIT_NUMERIC,
            CliError::Core(e) => match e.class() {
                ErrorClass::Domain => EXIT_DOMAIN,
                ErrorClass::Numeric => EXIT_NUMERIC,
                ErrorClass::Regularity => EXIT_REGULARITY,
            },
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Parse(m) => format!("parse error: {m}"),
            CliError::Core(e) => e.to_string(),
            CliError::Io(m) => format!("i/o error: {m}"),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // Help and version are not errors.
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprintln!("{e}");
            return ExitCode::from(EXIT_PARSE);
        }
    };
    match commands::dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("misfit: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
