use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use opdilate::cli::{self, Options, DEFAULT_TRIALS};

#[derive(Parser)]
#[command(name = "opdilate", version, about = "Kolmogorov decompositions and KSGNS dilations over finite-dimensional C*-algebras")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Residual tolerance for every reconstruction and law check
    #[arg(long)]
    tol: Option<f64>,
    /// Seed for sampled checks
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of random probes per sampled check
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    trials: usize,
}

impl Common {
    fn options(&self) -> Options {
        Options {
            tol: self.tol,
            seed: self.seed,
            trials: self.trials,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Positivity of a kernel, complete positivity of a map, or atom positivity of a measure
    Check {
        /// Instance file, or a directory of instance files
        path: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Minimal decomposition or dilation with its verification report
    Dilate {
        path: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Dominating measure and densities of a measure instance
    Density {
        path: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// JSON file with {"weights": [...]} or {"dominating": [...]}
        #[arg(long)]
        weights: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Re-verify a result file against its instance
    Verify { instance: PathBuf, result: PathBuf },
}

fn main() -> ExitCode {
    let args = Cli::parse();
    let code = match &args.command {
        Command::Check { path, out, common } => cli::cmd_check(path, out.as_deref(), &common.options()),
        Command::Dilate { path, out, common } => cli::cmd_dilate(path, out.as_deref(), &common.options()),
        Command::Density {
            path,
            out,
            weights,
            common,
        } => cli::cmd_density(path, weights.as_deref(), out.as_deref(), &common.options()),
        Command::Verify { instance, result } => cli::cmd_verify(instance, result),
    };
    ExitCode::from(code as u8)
}
