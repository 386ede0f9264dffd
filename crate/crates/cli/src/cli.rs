//! Argument definitions.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use spart::extraction::BoxStrategy;

#[derive(Parser)]
#[command(
    name = "spart",
    version,
    about = "Point-annotation to oriented-box pseudo-label pipeline"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Generate a synthetic scene: image, annotations, score maps, oracle map
    Synth(SynthArgs),
    /// Dense sample assignment from an image and point annotations
    Assign(AssignArgs),
    /// Extract pseudo boxes from a score map and point annotations
    Extract(ExtractArgs),
    /// Score pseudo boxes (and optionally an assignment map) against ground truth
    Eval(EvalArgs),
    /// Scene generation, assignment, extraction, and evaluation in one run
    Pipeline(PipelineArgs),
    /// Grid sweep over growth tolerance, score threshold, and annotation offset
    Sweep(SweepArgs),
}

/// Scene parameters shared by synth, pipeline, and sweep.
#[derive(Args, Debug, Default)]
pub struct SceneOverrides {
    /// Scene RNG seed
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub height: Option<usize>,
    /// Annotation offset fraction in [0, 1)
    #[arg(long)]
    pub offset_fraction: Option<f64>,
    /// Gaussian noise sigma on the rendered image
    #[arg(long)]
    pub image_noise: Option<f64>,
    /// Gaussian blur sigma (pixels) on the score maps
    #[arg(long)]
    pub blur: Option<f64>,
    /// Gaussian noise sigma on the score maps
    #[arg(long)]
    pub semantic_noise: Option<f64>,
}

#[derive(Args)]
pub struct SynthArgs {
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
    /// TOML config file; flags override its values
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub scene: SceneOverrides,
}

#[derive(Args)]
pub struct AssignArgs {
    /// Input image: PGM (P5/P6) or float container
    #[arg(long)]
    pub image: PathBuf,
    /// Point annotations JSON
    #[arg(long)]
    pub points: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Positive radius in pixels
    #[arg(long)]
    pub tau_plus: Option<f64>,
    /// Region-growing intensity tolerance
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Disable boundary-as-negative demotion
    #[arg(long)]
    pub no_boundary_negatives: bool,
    /// Disable grown-region positives
    #[arg(long)]
    pub no_growing_positives: bool,
    /// Sample-grid stride: the image is mean-pooled by this factor and the
    /// assignment map is emitted at the strided resolution
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum StrategyArg {
    PcaMinmax,
    MinareaRect,
}

impl From<StrategyArg> for BoxStrategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::PcaMinmax => BoxStrategy::PcaMinmax,
            StrategyArg::MinareaRect => BoxStrategy::MinareaRect,
        }
    }
}

#[derive(Args)]
pub struct ExtractArgs {
    /// Score-map container
    #[arg(long)]
    pub semantic: PathBuf,
    #[arg(long)]
    pub points: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Score threshold on normalized channels
    #[arg(long)]
    pub tau: Option<f64>,
    /// Region-growing score tolerance
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Strategy for classes missing from the config's strategy table
    #[arg(long)]
    pub default_strategy: Option<StrategyArg>,
    /// Stride of the score map relative to the annotation coordinates:
    /// annotations are scaled down into map cells and the recovered boxes
    /// scaled back up to annotation pixels
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    /// Write an overlay PGM of masks and boxes
    #[arg(long)]
    pub overlay: bool,
}

#[derive(Args)]
pub struct EvalArgs {
    /// Predicted boxes JSON
    #[arg(long)]
    pub pred: PathBuf,
    /// Ground-truth boxes JSON
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Predicted assignment map (requires --oracle-map)
    #[arg(long, requires = "oracle_map")]
    pub pred_map: Option<PathBuf>,
    /// Oracle assignment map (requires --pred-map)
    #[arg(long, requires = "pred_map")]
    pub oracle_map: Option<PathBuf>,
}

#[derive(Args)]
pub struct PipelineArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Run on an existing scene directory (as written by `synth`) instead of
    /// generating one
    #[arg(
        long,
        conflicts_with_all = [
            "seed", "width", "height", "offset_fraction",
            "image_noise", "blur", "semantic_noise",
        ]
    )]
    pub scene_dir: Option<PathBuf>,
    #[command(flatten)]
    pub scene: SceneOverrides,
    /// Score threshold on normalized channels
    #[arg(long)]
    pub tau: Option<f64>,
    /// Extraction region-growing tolerance
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Assignment region-growing tolerance
    #[arg(long)]
    pub assign_tolerance: Option<f64>,
    /// Write an overlay PGM of masks and boxes
    #[arg(long)]
    pub overlay: bool,
}

#[derive(Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Extraction growth tolerances to sweep
    #[arg(long, value_delimiter = ',', required = true)]
    pub tolerances: Vec<f64>,
    /// Score thresholds to sweep
    #[arg(long, value_delimiter = ',', required = true)]
    pub taus: Vec<f64>,
    /// Annotation offset fractions to sweep
    #[arg(long, value_delimiter = ',', required = true)]
    pub offsets: Vec<f64>,
    /// Scenes per grid cell
    #[arg(long, default_value_t = 10)]
    pub scenes: usize,
    /// Base scene seed; scene i uses seed + i
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}
