//! `cohdist` command-line front end.
//!
//! Exit codes: 0 success, 1 self-test failure, 2 parse/layout/domain errors,
//! 3 numerical or solver failures, 4 violated preconditions, witnesses or guards.

mod commands;
mod input;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cohdist::Error;

#[derive(Parser)]
#[command(name = "cohdist", version, about = "Coherence distillation and incoherent randomness extraction at desk scale")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Clone, Debug)]
pub struct SearchArgs {
    /// Secrecy target; overrides "eps" in the protocol file.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Allow sampled two-universal hashing above the exhaustive register limit.
    #[arg(long)]
    pub sampled_hash: bool,
    /// Seed for the sampled hash family.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Subcommand)]
pub enum Command {
    /// D, V, D_H, D_max and second-order estimates of a pair {"rho", "sigma"}.
    Entropy {
        pair: PathBuf,
        /// Comma-separated ε values.
        #[arg(long, value_delimiter = ',', default_value = "0.1")]
        eps: Vec<f64>,
        /// Comma-separated copy numbers for the second-order estimates.
        #[arg(long = "n", value_delimiter = ',')]
        n: Vec<usize>,
    },
    /// Hypothesis-testing divergence with the optimal test summary.
    Dh {
        pair: PathBuf,
        #[arg(long)]
        eps: f64,
    },
    /// Unassisted extraction: preprocessing, dephasing, hashing.
    Protocol {
        protocol: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
        /// Also report the min-entropy hashing bounds at (ε, η); identity preprocessing only.
        #[arg(long)]
        eta: Option<f64>,
    },
    /// Distiller built from an extraction of the state.
    Distill {
        protocol: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Assisted extraction with preprocessing AB → A'B'; Bob's output is hashed.
    AssistedExtract {
        protocol: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// QIP distiller AB → L from a hash of Bob's register.
    AssistedDistill {
        protocol: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Extraction with preprocessing AB → C and nothing left with Alice.
    AltExtract {
        protocol: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Exact n-copy values, sandwich bounds and the second-order estimate.
    Sweep {
        state: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long = "n", value_delimiter = ',', required = true)]
        n: Vec<usize>,
        /// Dephase only this factor (assisted reference) instead of all of them.
        #[arg(long)]
        assisted: Option<String>,
        /// Largest dense tensor-power dimension.
        #[arg(long, default_value_t = cohdist::linalg::MAX_DIM)]
        max_dim: usize,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// ε lower bound above the distillable rate, with the log n term dropped.
    StrongConverse {
        state: PathBuf,
        #[arg(long)]
        rate: f64,
        #[arg(long = "n", value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Identities between a pure (R, A, B) state's B-dephasing and ρ_AB.
    VerifyRelations {
        state: PathBuf,
        #[arg(long, default_value_t = 0.6)]
        eps: f64,
        #[arg(long, default_value_t = 0.02)]
        delta: f64,
    },
    /// Seeded run of every invariant check; prints a JSON report.
    Selftest {
        #[arg(long, default_value_t = cohdist::validation::DEFAULT_SEED)]
        seed: u64,
        /// Reduced instance counts.
        #[arg(long)]
        quick: bool,
        /// Marks the given check as failed, to exercise the failure path.
        #[arg(long, hide = true)]
        inject_failure: Option<u8>,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse(_) | Error::Layout(_) | Error::Dimension(_) | Error::Domain(_) => 2,
        Error::Numerical(_) | Error::Solver(_) | Error::InfiniteDivergence(_) => 3,
        Error::Precondition(_) | Error::Witness(_) | Error::Guard(_) => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(out) => {
            print!("{}", out.stdout);
            if out.success {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("cohdist: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
