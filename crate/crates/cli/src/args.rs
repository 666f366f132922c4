use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "litcal",
    version,
    about = "Calibrate language-model confidence with a logit-bias head and compare against baselines",
    after_help = "Every flag may also be set in the --config file, either at the top level or in a \
                  section named after the subcommand (e.g. [train-litcab]). Flags on the command line \
                  win. Log level comes from LITCAL_LOG (default: warn)."
)]
pub struct Cli {
    /// TOML file supplying values for any flag
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic train/eval dataset (train.jsonl, eval.jsonl and sidecars)
    Simulate(SimulateArgs),
    /// Train a logit-bias head (head.lchd, train_log.csv)
    TrainLitcab(TrainLitcabArgs),
    /// Fit a temperature-scaling baseline (temperature.lcts)
    FitTemperature(FitTemperatureArgs),
    /// Train a P(IK) probe on first-token hidden states (probe.lcpk)
    TrainPik(TrainPikArgs),
    /// Write per-generation confidences (scores.csv)
    Score(ScoreArgs),
    /// Compute calibration metrics on labeled generations (report.csv, predictions.csv)
    Evaluate(EvaluateArgs),
    /// Score paragraph claims with recorded judge responses (claim_predictions.csv)
    Claims(ClaimsArgs),
    /// Build a reliability report from a predictions file (reliability.csv, optional reliability.svg)
    Report(ReportArgs),
}

impl Command {
    /// Config-file section consulted before top-level keys.
    pub fn section(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::TrainLitcab(_) => "train-litcab",
            Command::FitTemperature(_) => "fit-temperature",
            Command::TrainPik(_) => "train-pik",
            Command::Score(_) => "score",
            Command::Evaluate(_) => "evaluate",
            Command::Claims(_) => "claims",
            Command::Report(_) => "report",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutArgs {
    /// Output directory, created if absent [default: .]
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct DatasetArgs {
    /// Record file (JSON lines)
    #[arg(long, value_name = "FILE")]
    pub dataset: Option<PathBuf>,
    /// Tensor sidecar [default: the record file with extension .lcab]
    #[arg(long, value_name = "FILE")]
    pub sidecar: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CalibratorKind {
    None,
    Litcab,
    Temperature,
    Pik,
}

#[derive(Debug, Clone, Args)]
pub struct CalibratorArgs {
    /// Confidence method [default: none]
    #[arg(long, value_enum)]
    pub calibrator: Option<CalibratorKind>,
    /// Head checkpoint, for --calibrator litcab
    #[arg(long, value_name = "FILE")]
    pub head: Option<PathBuf>,
    /// Temperature checkpoint, for --calibrator temperature
    #[arg(long, value_name = "FILE")]
    pub temperature: Option<PathBuf>,
    /// Probe checkpoint, for --calibrator pik
    #[arg(long, value_name = "FILE")]
    pub probe: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SelectiveArgs {
    /// Coverage percentages for acc@q [default: 30,50,60,100]
    #[arg(long, value_delimiter = ',', value_name = "Q")]
    pub q: Option<Vec<f64>>,
    /// Accuracy thresholds for cov@p [default: 0,0.3,0.5,0.6,0.8,0.9]
    #[arg(long, value_delimiter = ',', value_name = "P")]
    pub p: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub out: OutArgs,
    /// Generator settings (TOML); flags below override it
    #[arg(long, value_name = "FILE")]
    pub toy_config: Option<PathBuf>,
    /// Generator seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of questions [default: 200]
    #[arg(long)]
    pub n_questions: Option<usize>,
    /// Logit boost on negatives; 0 gives a calibrated base model [default: 1.0]
    #[arg(long)]
    pub strength: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TrainLitcabArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    #[command(flatten)]
    pub out: OutArgs,
    /// Questions per minibatch [default: 128]
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Learning rate [default: 1e-5]
    #[arg(long)]
    pub lr: Option<f64>,
    /// Maximum epochs [default: 50]
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Epochs without validation improvement before stopping [default: 5]
    #[arg(long)]
    pub patience: Option<usize>,
    /// Share of questions held out for early stopping; 0 stops on training loss [default: 0.2]
    #[arg(long)]
    pub val_fraction: Option<f64>,
    /// Shuffle and split seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct FitTemperatureArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    #[command(flatten)]
    pub out: OutArgs,
    /// Step size on log T [default: 0.5]
    #[arg(long)]
    pub lr: Option<f64>,
    /// Gradient steps [default: 2000]
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Minibatch size [default: every labeled generation]
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Minibatch seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct TrainPikArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    #[command(flatten)]
    pub out: OutArgs,
    /// Step size on standardized features [default: 0.5]
    #[arg(long)]
    pub lr: Option<f64>,
    /// Gradient steps [default: 2000]
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Minibatch size [default: every labeled generation]
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Minibatch seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    #[command(flatten)]
    pub calibrator: CalibratorArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    #[command(flatten)]
    pub calibrator: CalibratorArgs,
    #[command(flatten)]
    pub selective: SelectiveArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct ClaimsArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    #[command(flatten)]
    pub calibrator: CalibratorArgs,
    /// Recorded judge responses (JSON lines)
    #[arg(long, value_name = "FILE")]
    pub judge_fixtures: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Predictions file (id,confidence,correct)
    #[arg(long, value_name = "FILE")]
    pub predictions: Option<PathBuf>,
    #[command(flatten)]
    pub selective: SelectiveArgs,
    /// Also write reliability.svg
    #[arg(long)]
    pub svg: bool,
    #[command(flatten)]
    pub out: OutArgs,
}
