//! `radioclass` command-line front end.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use radioclass::ErrorClass;

#[derive(Debug, Parser)]
#[command(name = "radioclass", version, about = "Landing/takeoff intent classification of pilot radio calls")]
pub struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic labeled corpus.
    Datagen(DatagenArgs),
    /// Extract and cache spectral and/or TF-IDF features.
    Featurize(FeaturizeArgs),
    /// Write an augmented copy of a corpus (originals plus one copy per technique).
    Augment(AugmentArgs),
    /// Train one model on the training split and save it.
    Train(TrainArgs),
    /// Evaluate models on the held-out split and write a metrics report.
    Evaluate(EvalArgs),
    /// Compare every model with and without training-set augmentation.
    Ablate(EvalArgs),
    /// Render a saved report as a table and plot-data files.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct DatagenArgs {
    #[arg(long)]
    pub n: Option<usize>,
    /// Fraction of takeoff clips.
    #[arg(long)]
    pub balance: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// RMS of the pink background noise.
    #[arg(long)]
    pub noise_level: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Clone, Default)]
pub struct DenoiseArgs {
    /// Leading STFT frames used for the noise estimate.
    #[arg(long)]
    pub noise_frames: Option<usize>,
    /// Odd moving-average width over frames.
    #[arg(long)]
    pub smooth_width: Option<usize>,
    /// Skip spectral subtraction.
    #[arg(long)]
    pub no_denoise: bool,
}

#[derive(Debug, Args, Clone, Default)]
pub struct AsrArgs {
    /// Transcript source: `sidecar` (<id>.txt next to the WAV) or `http`.
    #[arg(long)]
    pub asr: Option<String>,
    #[arg(long, env = "RADIOCLASS_ASR_ENDPOINT")]
    pub asr_endpoint: Option<String>,
    #[arg(long)]
    pub asr_timeout_ms: Option<u64>,
    /// Fail on a missing transcript instead of warning.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct FeaturizeArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// `textual`, `spectral` or `both`.
    #[arg(long, default_value = "both")]
    pub pipeline: String,
    /// `log-mel` or `mel`.
    #[arg(long)]
    pub variant: Option<String>,
    #[command(flatten)]
    pub denoise: DenoiseArgs,
    #[command(flatten)]
    pub asr: AsrArgs,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub stretch_factor: Option<f64>,
    #[arg(long)]
    pub noise_factor: Option<f64>,
    #[arg(long)]
    pub max_shift: Option<f64>,
    #[arg(long)]
    pub no_stretch: bool,
    #[arg(long)]
    pub no_noise: bool,
    #[arg(long)]
    pub no_shift: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub pipeline: Option<String>,
    #[arg(long)]
    pub variant: Option<String>,
    /// Output directory for `model.json` (and `tfidf.json` for the textual route).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub train_frac: Option<f64>,
    /// Train on the augmented training split.
    #[arg(long)]
    pub augment: bool,
    #[command(flatten)]
    pub denoise: DenoiseArgs,
    #[command(flatten)]
    pub asr: AsrArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Comma-separated model kinds.
    #[arg(long, value_delimiter = ',')]
    pub model: Vec<String>,
    /// Comma-separated pipelines (`textual`, `spectral`, `spectral/mel`, ...).
    #[arg(long, value_delimiter = ',')]
    pub pipeline: Vec<String>,
    #[arg(long)]
    pub variant: Option<String>,
    /// Report CSV path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub train_frac: Option<f64>,
    /// Run the grid under this many consecutive seeds and add a mean/sd summary.
    #[arg(long)]
    pub repeats: Option<usize>,
    /// Directory for (f1, mcc), (auroc, aupr) and metric-matrix CSVs.
    #[arg(long)]
    pub plot_data: Option<PathBuf>,
    /// Evaluate with training-set augmentation (evaluate only).
    #[arg(long)]
    pub augment: bool,
    /// Std of Gaussian noise added to the preprocessed test clips.
    #[arg(long)]
    pub test_noise: Option<f64>,
    #[command(flatten)]
    pub denoise: DenoiseArgs,
    #[command(flatten)]
    pub asr: AsrArgs,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Report CSV written by `evaluate` or `ablate`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub plot_data: Option<PathBuf>,
}

fn exit_code(class: ErrorClass) -> u8 {
    match class {
        ErrorClass::Config => 2,
        ErrorClass::Data => 3,
        ErrorClass::Numeric => 4,
        ErrorClass::Asr => 5,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.class()))
        }
    }
}
