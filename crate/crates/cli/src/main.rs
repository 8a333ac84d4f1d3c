//! `regrow`: synthesize data, train the reference classifier, grow
//! segmentations, run the dense baseline, tune thresholds and evaluate.

mod commands;
mod config;
mod spec;

use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use crate::spec::ClassifierSpec;

#[derive(Parser, Debug)]
#[command(name = "regrow", version, about, args_override_self = true)]
struct Cli {
    /// key=value file whose entries act as flags; command-line flags win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate synthetic vessel images with truth and RoI masks.
    Synth(SynthArgs),
    /// Train the reference classifier on a dataset directory.
    Train(TrainArgs),
    /// Segment one image by region growing.
    Grow(GrowArgs),
    /// Segment by thresholding a probability map everywhere in the RoI.
    Baseline(BaselineArgs),
    /// Score predicted masks against ground truth.
    Eval(EvalArgs),
    /// Pick the best threshold per metric on validation images.
    Tune(TuneArgs),
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Output dataset directory (images/, masks/, roi/).
    #[arg(long)]
    pub out: PathBuf,
    /// Number of images.
    #[arg(long, default_value_t = 20)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 512)]
    pub height: usize,
    #[arg(long, default_value_t = 512)]
    pub width: usize,
    /// Vessel trees per image.
    #[arg(long, default_value_t = 1)]
    pub trees: usize,
    /// Chance per step that a walker forks.
    #[arg(long, default_value_t = 0.04)]
    pub branch_prob: f64,
    /// Smallest trunk diameter in pixels.
    #[arg(long, default_value_t = 1.0)]
    pub min_width: f64,
    /// Largest trunk diameter in pixels.
    #[arg(long, default_value_t = 4.0)]
    pub max_width: f64,
    /// Standard deviation of the Gaussian noise.
    #[arg(long, default_value_t = 0.05)]
    pub noise: f64,
}

#[derive(Args, Debug, Clone)]
pub struct SplitArgs {
    /// Validation images drawn from the dataset.
    #[arg(long = "val", default_value_t = 3)]
    pub n_val: usize,
    /// Comma-separated image ids to leave out.
    #[arg(long, default_value = "")]
    pub exclude: String,
    /// Seed of the train/validation split.
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Dataset directory.
    #[arg(long)]
    pub data: PathBuf,
    /// Where to write the model.
    #[arg(long)]
    pub model_out: PathBuf,
    /// Loss history CSV; defaults to <model-out>.history.csv.
    #[arg(long)]
    pub history: Option<PathBuf>,
    #[command(flatten)]
    pub split: SplitArgs,
    #[arg(long, default_value_t = 50)]
    pub epochs: usize,
    #[arg(long, default_value_t = 64)]
    pub batch_size: usize,
    #[arg(long = "lr", default_value_t = 0.5)]
    pub learning_rate: f64,
    /// Loss multiplier on ground-truth contours and adjacent background.
    #[arg(long, default_value_t = 5.0)]
    pub boundary_weight: f64,
    /// Training tiles per neighborhood foreground count, each epoch.
    #[arg(long, default_value_t = 200)]
    pub samples_per_count: usize,
    /// Validation tiles per neighborhood foreground count.
    #[arg(long, default_value_t = 50)]
    pub val_samples_per_count: usize,
    /// Skip the class-balanced pre-training epoch.
    #[arg(long)]
    pub no_pretrain: bool,
    #[arg(long, default_value_t = 2000)]
    pub pretrain_samples: usize,
    /// Skip rotations and brightness/contrast changes.
    #[arg(long)]
    pub no_augment: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Input tile side.
    #[arg(long, default_value_t = 80)]
    pub tile_size: usize,
    /// Output neighborhood side.
    #[arg(long, default_value_t = 3)]
    pub out_size: usize,
    /// Pooling cells per tile side.
    #[arg(long, default_value_t = 8)]
    pub pool_grid: usize,
    /// Raw centre window side (odd, 0 to disable).
    #[arg(long, default_value_t = 5)]
    pub center_window: usize,
}

#[derive(Args, Debug, Clone)]
pub struct EngineArgs {
    /// Average vote a pixel must exceed to join the mask.
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    /// Random seed pixels drawn from the RoI.
    #[arg(long, default_value_t = 10_000)]
    pub seeds: usize,
    /// Pixels per classifier call.
    #[arg(long, default_value_t = 100)]
    pub batch_size: usize,
    /// Seed for seed-pixel sampling.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Stop after this many iterations (default: pixel count).
    #[arg(long)]
    pub max_iterations: Option<usize>,
    /// Input tile side for oracle and pmap classifiers.
    #[arg(long, default_value_t = 80)]
    pub tile_size: usize,
    /// Output neighborhood side for oracle and pmap classifiers.
    #[arg(long, default_value_t = 3)]
    pub out_size: usize,
}

#[derive(Args, Debug)]
pub struct GrowArgs {
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long)]
    pub roi: PathBuf,
    /// oracle:<mask> | pmap:<file> | model:<file>
    #[arg(long)]
    pub classifier: ClassifierSpec,
    #[command(flatten)]
    pub engine: EngineArgs,
    /// Output mask (PGM).
    #[arg(long)]
    pub out: PathBuf,
    /// Directory for per-iteration masks iter_0001.pgm, ...
    #[arg(long)]
    pub snapshots: Option<PathBuf>,
    /// Average-vote map (PMAP).
    #[arg(long)]
    pub votes: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BaselineArgs {
    #[arg(long)]
    pub pmap: PathBuf,
    #[arg(long)]
    pub roi: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Directory of predicted masks.
    #[arg(long)]
    pub pred: PathBuf,
    /// Directory of ground-truth masks.
    #[arg(long)]
    pub gt: PathBuf,
    /// Directory of RoI masks; the whole image when omitted.
    #[arg(long)]
    pub roi: Option<PathBuf>,
    /// Keep only the largest 8-connected object of each prediction.
    #[arg(long)]
    pub keep_largest: bool,
    /// Report both post-processings.
    #[arg(long, conflicts_with = "keep_largest")]
    pub both: bool,
    /// Method name written to the CSV.
    #[arg(long, default_value = "pred")]
    pub method: String,
    /// Output CSV.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct TuneArgs {
    /// Dataset directory.
    #[arg(long)]
    pub data: PathBuf,
    /// oracle | pmap:<dir> | model:<file>
    #[arg(long)]
    pub classifier: ClassifierSpec,
    /// grow (region growing) or baseline (dense threshold, pmap only).
    #[arg(long, default_value = "grow")]
    pub method: String,
    /// Comma-separated subset of dice,jaccard,mssd.
    #[arg(long, default_value = "dice,jaccard,mssd")]
    pub metric: String,
    /// Thresholds as a comma list or start:stop:step.
    #[arg(long, default_value = "0.05:0.95:0.05")]
    pub grid: String,
    #[arg(long)]
    pub keep_largest: bool,
    /// Use the validation part of this split instead of every image.
    #[arg(long)]
    pub use_split: bool,
    #[command(flatten)]
    pub split: SplitArgs,
    #[command(flatten)]
    pub engine: EngineArgs,
    /// Report CSV (metric,threshold,score).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    let args = config::expand_config(std::env::args_os().collect())?;
    let cli = Cli::parse_from(args);
    match cli.command {
        Command::Synth(a) => commands::synth(&a),
        Command::Train(a) => commands::train(&a),
        Command::Grow(a) => commands::grow(&a),
        Command::Baseline(a) => commands::baseline(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::Tune(a) => commands::tune(&a),
    }
}
