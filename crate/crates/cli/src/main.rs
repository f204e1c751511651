mod commands;
mod error;
mod pgm;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::settings::SolverFlags;

#[derive(Debug, Parser)]
#[command(name = "onred", version, about = "Batch and online RED solvers for coded-diffraction phase retrieval")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a coded-diffraction measurement set from an image.
    Simulate(SimulateArgs),
    /// Run one solver on a measurement set.
    Run(RunArgs),
    /// Run a grid of step sizes and minibatch sizes over several seeds.
    Sweep(SweepArgs),
    /// Report SNR and normalized accuracy for finished runs.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Built-in phantom, e.g. shepp32 or checker32.
    #[arg(long, conflicts_with = "image", required_unless_present = "image")]
    pub phantom: Option<String>,
    /// Ground-truth image (binary PGM, 8- or 16-bit).
    #[arg(long)]
    pub image: Option<PathBuf>,
    /// Number of measurements.
    #[arg(long = "I", default_value_t = 6)]
    pub count: usize,
    /// Input SNR in dB, or `inf` for noiseless data.
    #[arg(long, default_value = "25")]
    pub snr: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output measurement file.
    #[arg(long)]
    pub out: PathBuf,
    /// Ground-truth PGM output [default: <out>.truth.pgm].
    #[arg(long)]
    pub truth_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Measurement file written by `simulate`.
    pub measurements: PathBuf,
    #[command(flatten)]
    pub solver: SolverFlags,
    /// Ground truth, for SNR in the trace.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Output prefix; writes <out>.trace.csv, <out>.pgm and <out>.json.
    #[arg(long, default_value = "run")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Measurement file written by `simulate`.
    pub measurements: PathBuf,
    /// Comma-separated step-size multipliers.
    #[arg(long, value_delimiter = ',', required = true)]
    pub gammas: Vec<f64>,
    /// Comma-separated minibatch sizes.
    #[arg(long = "Bs", value_delimiter = ',', required = true)]
    pub minibatches: Vec<usize>,
    /// Seeds as an inclusive range `a..b` or a comma list.
    #[arg(long, default_value = "0")]
    pub seeds: String,
    #[command(flatten)]
    pub solver: SolverFlags,
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, default_value = "sweep")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Reconstruction PGM.
    #[arg(long, requires = "truth")]
    pub recon: Option<PathBuf>,
    /// Ground-truth PGM.
    #[arg(long, requires = "recon")]
    pub truth: Option<PathBuf>,
    /// Trace CSV.
    #[arg(long, required_unless_present = "recon")]
    pub trace: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    let result = match cli.command {
        Command::Simulate(args) => commands::simulate(&args),
        Command::Run(args) => commands::run(&args),
        Command::Sweep(args) => commands::sweep(&args),
        Command::Eval(args) => commands::eval(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}
