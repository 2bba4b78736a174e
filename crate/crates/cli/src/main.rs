//! `gdm`: motion segmentation from two-view correspondences.

mod commands;
mod input;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "gdm", version, about = "Segment point correspondences by global dimension minimization")]
struct Cli {
    /// Worker threads for parallel restarts (all cores by default).
    #[arg(long, global = true, env = "GDM_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Segment a correspondence file and write a JSON report.
    Segment(SegmentArgs),
    /// Write a synthetic two-view scene as a labeled correspondence file.
    Generate(GenerateArgs),
    /// Compare two label files.
    Eval(EvalArgs),
    /// Outlier ROC curve over a range of distance thresholds.
    Roc(RocArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum EmbeddingArg {
    Nonlinear,
    Linear,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutlierArg {
    None,
    Naive,
    KnownFraction,
    ModelReassign,
}

#[derive(Args)]
struct Tuning {
    /// Number of motions.
    #[arg(long, env = "GDM_K")]
    k: Option<usize>,
    #[arg(long, env = "GDM_EPSILON", default_value_t = 0.35)]
    epsilon: f64,
    #[arg(long, env = "GDM_P", default_value_t = 15.0)]
    p: f64,
    #[arg(long, env = "GDM_RESTARTS", default_value_t = 10)]
    restarts: usize,
    #[arg(long, env = "GDM_GRAD_ITERS", default_value_t = 30)]
    grad_iters: usize,
    #[arg(long, env = "GDM_GENETIC_PASSES", default_value_t = 10)]
    genetic_passes: usize,
    #[arg(long, env = "GDM_STEP", default_value_t = 0.3)]
    step: f64,
    #[arg(long, env = "GDM_MERGE_CANDIDATES", default_value_t = 100)]
    merge_candidates: usize,
    #[arg(long, env = "GDM_EMBEDDING", value_enum, default_value = "nonlinear")]
    embedding: EmbeddingArg,
    /// Center and scale each view before embedding.
    #[arg(long, env = "GDM_NORMALIZE")]
    normalize: bool,
    #[arg(long, env = "GDM_OUTLIER_MODE", value_enum, default_value = "none")]
    outlier_mode: OutlierArg,
    /// Outlier cost for naive mode.
    #[arg(long, env = "GDM_ALPHA", default_value_t = 0.01)]
    alpha: f64,
    /// Fraction of points rejected before refitting.
    #[arg(long, env = "GDM_FRACTION", default_value_t = 0.20)]
    fraction: f64,
    /// Distance beyond which a point is an outlier in model-reassign mode.
    #[arg(long, env = "GDM_KAPPA", default_value_t = 0.05)]
    kappa: f64,
    /// Per-cluster threshold `mean + R * std` of residuals instead of --kappa.
    #[arg(long, env = "GDM_ADAPTIVE_KAPPA", value_name = "R")]
    adaptive_kappa: Option<f64>,
    /// Random seed; drawn at random and echoed in the report when absent.
    #[arg(long, env = "GDM_SEED")]
    seed: Option<u64>,
}

#[derive(Args)]
struct SegmentArgs {
    /// Correspondence file: x,y,x2,y2[,label] per row.
    input: PathBuf,
    #[command(flatten)]
    tuning: Tuning,
    /// Run configuration echoed by an earlier report (or a bare config object).
    /// Tuning flags are ignored when given.
    #[arg(long, conflicts_with = "k")]
    config: Option<PathBuf>,
    /// Report destination; standard output by default.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Also write one label per line, 0 for outliers.
    #[arg(long)]
    labels_out: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    /// Points per rigid body, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [40usize, 40])]
    bodies: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Gaussian noise on image coordinates.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Random correspondences appended to the scene.
    #[arg(long, default_value_t = 0)]
    outliers: usize,
    /// Place each body's points on a plane.
    #[arg(long)]
    coplanar: bool,
    #[arg(long, default_value_t = 1.0)]
    focal: f64,
    /// Destination; standard output by default.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Also write the true labels, one per line.
    #[arg(long)]
    labels_out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Predicted labels, one per line, 0 for outliers.
    #[arg(long)]
    pred: PathBuf,
    /// True labels in the same format.
    #[arg(long)]
    truth: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum CurveFormat {
    Json,
    Csv,
}

#[derive(Args)]
struct RocArgs {
    /// Labeled correspondence file.
    input: PathBuf,
    #[command(flatten)]
    tuning: Tuning,
    /// Thresholds to evaluate, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0])]
    kappa_grid: Vec<f64>,
    #[arg(long, value_enum, default_value = "json")]
    format: CurveFormat,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::FAILURE;
        }
    }
    let outcome = match cli.command {
        Command::Segment(args) => commands::segment(args),
        Command::Generate(args) => commands::generate(args),
        Command::Eval(args) => commands::eval(args),
        Command::Roc(args) => commands::roc(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
