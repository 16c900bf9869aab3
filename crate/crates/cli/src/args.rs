use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::png::{AlphaSource, BitDepth};

#[derive(Debug, Parser)]
#[command(
    name = "fgest",
    version,
    about = "Foreground and background color estimation for alpha matting"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate foreground (and background) colors from an image and matte.
    Estimate(EstimateArgs),
    /// Composite a foreground or raw image over a new background.
    Compose(ComposeArgs),
    /// Compare an estimated foreground against ground truth.
    Metrics(MetricsArgs),
    /// Build white-point corrected ground truth from linear captures.
    PrepDataset(PrepArgs),
    /// Time the estimators over a ladder of image sizes.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Multilevel,
    Closedform,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Multilevel => "multilevel",
            Method::Closedform => "closedform",
        }
    }
}

#[derive(Debug, Args)]
pub struct MatteArgs {
    #[arg(long)]
    pub alpha: PathBuf,
    #[arg(long, value_enum, default_value_t = AlphaSource::GrayPng)]
    pub alpha_source: AlphaSource,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    /// Alpha-gradient weight of the multilevel solver.
    #[arg(long, allow_negative_numbers = true)]
    pub omega: Option<f64>,
    /// Regularizer of the multilevel solver.
    #[arg(long, allow_negative_numbers = true)]
    pub eps_r: Option<f64>,
    /// Gradient weight offset of the closed-form solver.
    #[arg(long, allow_negative_numbers = true)]
    pub eps_cf: Option<f64>,
    /// Relative residual at which the closed-form solver stops.
    #[arg(long, allow_negative_numbers = true)]
    pub residual_tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub image: PathBuf,
    #[command(flatten)]
    pub matte: MatteArgs,
    #[arg(long)]
    pub out_fg: PathBuf,
    #[arg(long)]
    pub out_bg: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Method::Multilevel)]
    pub method: Method,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, value_enum, default_value_t = BitDepth::Sixteen)]
    pub bit_depth: BitDepth,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("front").required(true).args(["fg", "image"]))]
#[command(group = clap::ArgGroup::new("back").required(true).args(["bg", "bg_color"]))]
pub struct ComposeArgs {
    /// Estimated foreground.
    #[arg(long)]
    pub fg: Option<PathBuf>,
    /// Observed image, composited as is.
    #[arg(long)]
    pub image: Option<PathBuf>,
    #[command(flatten)]
    pub matte: MatteArgs,
    #[arg(long)]
    pub bg: Option<PathBuf>,
    /// Solid background as `R,G,B` in `[0, 1]`.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub bg_color: Option<Vec<f64>>,
    #[arg(long)]
    pub out: PathBuf,
    /// Blend the input without any color estimation.
    #[arg(long)]
    pub naive: bool,
    #[arg(long, value_enum, default_value_t = BitDepth::Sixteen)]
    pub bit_depth: BitDepth,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(long)]
    pub est: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    #[command(flatten)]
    pub matte: MatteArgs,
    /// Gaussian standard deviation of the gradient metric, in pixels.
    #[arg(long, allow_negative_numbers = true)]
    pub sigma: Option<f64>,
    /// Also write the record as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PrepArgs {
    #[arg(long)]
    pub fg_linear: PathBuf,
    #[arg(long)]
    pub img_linear: PathBuf,
    #[arg(long)]
    pub img_srgb: PathBuf,
    #[arg(long)]
    pub out_fg: PathBuf,
    #[arg(long)]
    pub out_img: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
    #[arg(long, value_enum, default_value_t = BitDepth::Sixteen)]
    pub bit_depth: BitDepth,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub image: PathBuf,
    #[command(flatten)]
    pub matte: MatteArgs,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Method::Multilevel, Method::Closedform])]
    pub methods: Vec<Method>,
    /// Target sizes in megapixels.
    #[arg(long, value_delimiter = ',', default_values_t = [0.0625, 0.25, 1.0, 4.0])]
    pub sizes: Vec<f64>,
    #[arg(long, default_value_t = 3)]
    pub reps: usize,
    #[arg(long)]
    pub csv: PathBuf,
    /// Closed-form runs whose estimated footprint exceeds this are skipped.
    #[arg(long, default_value_t = 2048)]
    pub cf_memory_limit_mb: u64,
}
