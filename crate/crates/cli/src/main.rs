//! `mufide`: benchmarks, training, prediction and hyperparameter search for
//! bi-fidelity regression from the command line.

mod commands;
mod io;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Failure class of a command, mapped to the process exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitKind {
    Usage,
    Data,
    Numerical,
}

impl ExitKind {
    fn code(self) -> u8 {
        match self {
            ExitKind::Usage => 2,
            ExitKind::Data => 3,
            ExitKind::Numerical => 4,
        }
    }
}

impl fmt::Display for ExitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExitKind::Usage => "usage error",
            ExitKind::Data => "data error",
            ExitKind::Numerical => "numerical failure",
        })
    }
}

fn classify(err: &anyhow::Error) -> ExitKind {
    if let Some(kind) = err.downcast_ref::<ExitKind>() {
        return *kind;
    }
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<mufide::Error>() {
            return match e {
                mufide::Error::InvalidConfig(_) | mufide::Error::InvalidPlan(_) => ExitKind::Usage,
                e if e.is_numerical() => ExitKind::Numerical,
                _ => ExitKind::Data,
            };
        }
    }
    ExitKind::Data
}

#[derive(Parser)]
#[command(
    name = "mufide",
    version,
    about = "Multi-fidelity regression with neural networks and co-kriging"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a benchmark case and write report, metrics and prediction grids.
    Bench(BenchArgs),
    /// Fit a model to HF and LF CSV files.
    Train(TrainArgs),
    /// Predict HF outputs for the rows of a CSV file.
    Predict(PredictArgs),
    /// Search hyperparameters and write the trial history.
    Hpo(HpoArgs),
}

#[derive(Args, Clone, Debug)]
pub struct SearchArgs {
    /// Trials per model.
    #[arg(long, default_value_t = 60, value_parser = clap::value_parser!(u64).range(1..))]
    pub budget: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Epochs of every training stage [default: 20000, 3000 for 20-D benchmark].
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Epoch cap while scoring trials [default: same as --epochs].
    #[arg(long)]
    pub trial_epochs: Option<usize>,
    /// `loocv` or `kfold:K` [default: LOOCV up to 10 HF samples, else kfold:5].
    #[arg(long)]
    pub cv: Option<String>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Case number (1-4) or name.
    #[arg(long)]
    pub case: String,
    /// Comma-separated model names [default depends on the case].
    #[arg(long, value_delimiter = ',')]
    pub models: Option<Vec<String>>,
    #[command(flatten)]
    pub search: SearchArgs,
    #[arg(long, default_value = "mufide-out")]
    pub out: PathBuf,
    #[arg(long)]
    pub n_hf: Option<usize>,
    #[arg(long)]
    pub n_lf: Option<usize>,
    #[arg(long)]
    pub n_test: Option<usize>,
    /// 20-D benchmark at 5000 HF, 30000 LF and one million test points.
    #[arg(long)]
    pub full_scale: bool,
}

#[derive(Args, Debug)]
pub struct DataArgs {
    /// HF samples: columns x1..xd, y.
    #[arg(long)]
    pub hf: PathBuf,
    /// LF samples: columns x1..xd, y.
    #[arg(long)]
    pub lf: PathBuf,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Architecture; required unless --config is given.
    #[arg(long, required_unless_present = "config")]
    pub model: Option<String>,
    /// Configuration JSON written by `mufide hpo`; skips the search.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Model file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Training report [default: <out stem>.report.json].
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Trial history [default: <out stem>.trials.jsonl; not written with --config].
    #[arg(long)]
    pub trials: Option<PathBuf>,
    /// Observation noise standard deviation of GP models [default: 1e-5].
    #[arg(long)]
    pub noise_std: Option<f64>,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    /// Model file written by `mufide train`.
    #[arg(long)]
    pub model: PathBuf,
    /// Input rows: x1..xd (a trailing `y` column is carried through).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct HpoArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub model: String,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Trial history (JSON lines).
    #[arg(long)]
    pub trials_out: PathBuf,
    /// Best configuration, usable as `train --config` [default: <trials stem>.best.json].
    #[arg(long)]
    pub best_out: Option<PathBuf>,
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("MUFIDE_THREADS") {
        let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            anyhow::anyhow!("MUFIDE_THREADS must be a positive integer, got `{v}`").context(ExitKind::Usage)
        })?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Bench(a) => commands::bench(&a),
        Command::Train(a) => commands::train(&a),
        Command::Predict(a) => commands::predict(&a),
        Command::Hpo(a) => commands::hpo(&a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = classify(&e);
            eprintln!("mufide: {e:#}");
            ExitCode::from(kind.code())
        }
    }
}
