//! `lextensor` command-line tool.
//!
//! Modes and indices are 1-based in arguments and messages. Results go to
//! standard output (or `--output`), diagnostics to standard error.
//! Exit codes: 0 success, 1 identity check failed, 2 usage or parse error,
//! 3 numeric or definiteness error.

mod commands;
mod format;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::commands::CliError;
use crate::format::Format;

#[derive(Parser)]
#[command(
    name = "lextensor",
    version,
    about = "Dense tensors in lexicographic layout: unfoldings, models, array normal laws"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the vectorization of each tensor in a file.
    Vec {
        input: PathBuf,
        /// Column-major (first index fastest) order instead of lexicographic.
        #[arg(long)]
        classic: bool,
    },
    /// Print the mode-k unfolding, one matrix row per line.
    Unfold {
        input: PathBuf,
        #[arg(long, value_name = "K")]
        mode: usize,
        /// Use the permute-then-reshape construction.
        #[arg(long)]
        oracle: bool,
    },
    /// Run the identity checks and print one report line per identity.
    Verify {
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Identity to run (T1..T17, APP-A); repeatable. Default: all.
        #[arg(long = "id", value_name = "ID")]
        ids: Vec<String>,
        /// Inject a deliberate bug to confirm the checks catch it.
        #[arg(long, value_enum, default_value = "none")]
        mutation: MutationArg,
    },
    /// CP model from factor matrices A_1 … A_N (n_i × R).
    Cp {
        #[arg(required = true, value_name = "FACTOR")]
        factors: Vec<PathBuf>,
        #[command(flatten)]
        view: ModelView,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Tucker model from a core tensor and factor matrices U_i (n_i × R_i).
    Tucker {
        #[arg(long)]
        core: PathBuf,
        #[arg(required = true, value_name = "FACTOR")]
        factors: Vec<PathBuf>,
        #[command(flatten)]
        view: ModelView,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Array normal law with mean M and covariances Σ_1 … Σ_N.
    An {
        #[arg(long)]
        mean: PathBuf,
        /// Covariance for the next mode; give one per mode, in order.
        #[arg(long = "cov", required = true, value_name = "FILE")]
        covs: Vec<PathBuf>,
        #[command(flatten)]
        action: AnAction,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct ModelView {
    /// Mode-k unfolding.
    #[arg(long, value_name = "K")]
    unfold: Option<usize>,
    /// Vectorization.
    #[arg(long)]
    vec: bool,
    /// Full tensor as a tensor-file record.
    #[arg(long)]
    reconstruct: bool,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct AnAction {
    /// Draw N samples, written as consecutive tensor records.
    #[arg(long, value_name = "N")]
    sample: Option<usize>,
    /// Log-density of each tensor in FILE.
    #[arg(long, value_name = "FILE")]
    logpdf: Option<PathBuf>,
    /// Matrix normal parameters of the mode-k unfolding.
    #[arg(long, value_name = "K")]
    unfold_law: Option<usize>,
}

#[derive(Args)]
struct OutputArgs {
    /// Write tensor output here instead of standard output.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum MutationArg {
    None,
    /// Reverse Kronecker/Khatri-Rao factor order.
    Swap,
    /// Transpose the analytic Jacobian.
    Transpose,
    /// Duplicate an operator-basis element.
    Duplicate,
}

impl From<MutationArg> for lextensor::harness::Mutation {
    fn from(m: MutationArg) -> Self {
        use lextensor::harness::Mutation;
        match m {
            MutationArg::None => Mutation::None,
            MutationArg::Swap => Mutation::FactorOrderSwap,
            MutationArg::Transpose => Mutation::TransposedJacobian,
            MutationArg::Duplicate => Mutation::DuplicateBasisElement,
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (bytes, output) = match cli.command {
        Command::Vec { input, classic } => (commands::vec(&input, classic)?, None),
        Command::Unfold { input, mode, oracle } => (commands::unfold(&input, mode, oracle)?, None),
        Command::Verify { trials, seed, tol, ids, mutation } => {
            let (text, failed) = commands::verify(trials, seed, tol, &ids, mutation.into())?;
            emit(&text, None)?;
            return if failed == 0 { Ok(()) } else { Err(CliError::ChecksFailed(failed)) };
        }
        Command::Cp { factors, view, output } => {
            let model = commands::load_cp(&factors)?;
            (commands::cp(&model, view.into(), output.format)?, output.output)
        }
        Command::Tucker { core, factors, view, output } => {
            let model = commands::load_tucker(&core, &factors)?;
            (commands::tucker(&model, view.into(), output.format)?, output.output)
        }
        Command::An { mean, covs, action, seed, output } => {
            let law = commands::load_law(&mean, &covs)?;
            let bytes = match (action.sample, action.logpdf, action.unfold_law) {
                (Some(n), _, _) => commands::sample(&law, n, seed, output.format)?,
                (_, Some(x), _) => commands::logpdf(&law, &x)?,
                (_, _, Some(k)) => commands::unfold_law(&law, k)?,
                _ => unreachable!("clap requires one action"),
            };
            (bytes, output.output)
        }
    };
    emit(&bytes, output.as_deref())
}

fn emit(bytes: &[u8], path: Option<&std::path::Path>) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| CliError::Io { path: p.display().to_string(), source: e }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Io { path: "<stdout>".into(), source: e })
        }
    }
}

impl From<ModelView> for commands::View {
    fn from(v: ModelView) -> Self {
        match (v.unfold, v.vec) {
            (Some(k), _) => commands::View::Unfold(k),
            (None, true) => commands::View::Vec,
            _ => commands::View::Reconstruct,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lextensor: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
