mod commands;
mod config;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "carleman", version, about = "Weight sequences, entire multipliers and convolution factorization")]
pub struct Cli {
    /// key = value settings file; command-line flags take precedence
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for randomized sampling
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct WeightArgs {
    /// Named sequence, e.g. gevrey:1
    #[arg(long)]
    pub preset: Option<String>,
    /// File with one log M_p per line
    #[arg(long, conflicts_with = "preset")]
    pub table: Option<PathBuf>,
    /// Table length for presets
    #[arg(long)]
    pub pmax: Option<usize>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct GridArgs {
    /// Grid half-width L
    #[arg(long = "grid-l")]
    pub grid_l: Option<f64>,
    /// Grid point count (power of two)
    #[arg(long = "grid-n")]
    pub grid_n: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Tabulate the associated function on a log grid
    Nu {
        #[command(flatten)]
        weight: WeightArgs,
        #[arg(long)]
        tmin: Option<f64>,
        #[arg(long)]
        tmax: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        /// Also tabulate the regularized weight and eta
        #[arg(long)]
        regularized: bool,
        /// Report the log-log slope over the upper four decades
        #[arg(long = "fit-slope")]
        fit_slope: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Growth conditions of a weight sequence
    Check {
        #[command(flatten)]
        weight: WeightArgs,
        /// Largest index examined
        #[arg(long)]
        range: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Regularized weight, comparison constant and the almost-Lipschitz check
    Regularize {
        #[command(flatten)]
        weight: WeightArgs,
        /// Number of random pairs in [0, 100]^2
        #[arg(long)]
        pairs: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Calibrate the entire multiplier and sweep tube bounds
    Multiplier {
        #[command(flatten)]
        weight: WeightArgs,
        /// Tube half-width (repeatable)
        #[arg(long)]
        tube: Vec<f64>,
        /// Real range [-re_max, re_max]
        #[arg(long = "re-max")]
        re_max: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
        /// Tube CSV; with several tubes the half-width is appended to the file stem
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Factorize sampled functions f = psi * (g * f)
    Factorize {
        #[command(flatten)]
        weight: WeightArgs,
        #[command(flatten)]
        grid: GridArgs,
        /// auto or a positive number
        #[arg(long)]
        h: Option<String>,
        /// CSV input with columns x, re[, im] (repeatable; several inputs form a family)
        #[arg(long)]
        input: Vec<PathBuf>,
        /// gaussian, translates or scaled
        #[arg(long, conflicts_with = "input")]
        builtin: Option<String>,
        /// CSV output for u; with several inputs the member index is appended to the file stem
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long = "psi-out")]
        psi_out: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
