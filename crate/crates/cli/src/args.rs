use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "rntk",
    version,
    about = "Recurrent neural tangent kernels for variable-length time series"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the labeled two-class ODE dataset as JSON lines.
    Generate(GenerateArgs),
    /// Compute a kernel or distance matrix from a sequence file.
    Gram(GramArgs),
    /// Kernel PCA on a kernel matrix.
    Pca(PcaArgs),
    /// t-SNE on a distance matrix.
    Tsne(TsneArgs),
    /// Class-separation metrics of a labeled embedding.
    Eval(EvalArgs),
    /// SVG scatter plot of a 2-D embedding.
    Plot(PlotArgs),
    /// Run the full four-panel experiment and check the separation thresholds.
    #[command(name = "reproduce-figure1")]
    ReproduceFigure1(ReproduceArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SpreadArg {
    Variance,
    StdDev,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub n_per_class: usize,
    #[arg(long, default_value_t = 30)]
    pub length: usize,
    #[arg(long, default_value_t = 0.2)]
    pub drop_prob: f64,
    #[arg(long, default_value_t = 1.0)]
    pub t_start: f64,
    #[arg(long, default_value_t = 1.0)]
    pub t_step: f64,
    /// RK4 steps between consecutive samples.
    #[arg(long, default_value_t = 100)]
    pub substeps: usize,
    /// Initial value x(t_start).
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub x0: f64,
    /// Initial slope x'(t_start).
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub v0: f64,
    /// How the second parameter of each class Gaussian is read.
    #[arg(long, value_enum, default_value_t = SpreadArg::Variance)]
    pub spread: SpreadArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GramMode {
    RntkKernel,
    RntkDistance,
    EuclidPadded,
}

#[derive(Debug, Clone, Args)]
pub struct KernelParamArgs {
    #[arg(long, default_value_t = 2.0)]
    pub sigma_w: f64,
    #[arg(long, default_value_t = 0.316)]
    pub sigma_u: f64,
    #[arg(long, default_value_t = 1e-5)]
    pub sigma_b: f64,
}

#[derive(Debug, Args)]
pub struct GramArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = GramMode::RntkKernel)]
    pub mode: GramMode,
    #[command(flatten)]
    pub params: KernelParamArgs,
}

#[derive(Debug, Args)]
pub struct PcaArgs {
    /// Kernel matrix CSV.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub components: usize,
    /// Sequence file whose labels are attached to the embedding by id.
    #[arg(long)]
    pub labels: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TsneArgs {
    /// Distance matrix CSV.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 30.0)]
    pub perplexity: f64,
    #[arg(long, default_value_t = 1000)]
    pub iterations: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Sequence file whose labels are attached to the embedding by id.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Loss trace CSV; defaults to `<out>.loss.csv`.
    #[arg(long)]
    pub loss_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Labeled embedding CSV.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Metrics JSON; printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed for k-means initialization.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "")]
    pub title: String,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    /// Output directory for every intermediate and final artifact.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 30.0)]
    pub perplexity: f64,
    #[arg(long, default_value_t = 1000)]
    pub iterations: usize,
    #[command(flatten)]
    pub params: KernelParamArgs,
}
