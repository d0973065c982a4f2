use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Infer coupling graphs between observed dynamical systems.
#[derive(Debug, Parser)]
#[command(name = "netinfer", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a dataset and its ground-truth graph from a model config.
    Simulate(SimulateArgs),
    /// Score a given graph against a dataset.
    Score(ScoreArgs),
    /// Search for the best-scoring graph.
    Infer(InferArgs),
    /// Compare an inferred graph with the truth.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// JSON model config.
    #[arg(long)]
    pub config: PathBuf,
    /// Directory for data.csv, truth.dot, config.json and the manifest.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the config sample count.
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScoreArg {
    Te,
    Tea,
    Tee,
    Aic,
    Bic,
    Ml,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorArg {
    #[value(alias = "discrete-plugin")]
    Discrete,
    LinearGaussian,
    BoxKernel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SurrogateMethodArg {
    Permutation,
    Bootstrap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SearchArg {
    Exhaustive,
    Greedy,
}

#[derive(Debug, Clone, Args)]
pub struct ScoringArgs {
    /// CSV dataset with a header row.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value_t = ScoreArg::Tee)]
    pub score: ScoreArg,
    /// Significance level for tea and tee.
    #[arg(long, default_value_t = 0.95)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value_t = EstimatorArg::Discrete)]
    pub estimator: EstimatorArg,
    /// Bins per column for the discrete estimator; one value or one per column.
    #[arg(long, value_delimiter = ',', default_value = "6")]
    pub bins: Vec<usize>,
    /// Box half-width for the box-kernel estimator.
    #[arg(long)]
    pub width: Option<f64>,
    /// Embedding dimension; one value or one per column.
    #[arg(long, value_delimiter = ',', default_value = "2")]
    pub kappa: Vec<usize>,
    /// Embedding delay; one value or one per column.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub tau: Vec<usize>,
    /// Surrogates per vertex for tee.
    #[arg(long, default_value_t = 100)]
    pub surrogates: usize,
    #[arg(long, value_enum, default_value_t = SurrogateMethodArg::Permutation)]
    pub surrogate_method: SurrogateMethodArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub scoring: ScoringArgs,
    /// DOT graph to score.
    #[arg(long)]
    pub graph: PathBuf,
    /// Also write report.json and a manifest here.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Print the JSON report instead of the table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[command(flatten)]
    pub scoring: ScoringArgs,
    #[arg(long, value_enum, default_value_t = SearchArg::Exhaustive)]
    pub search: SearchArg,
    /// Random restarts for greedy search.
    #[arg(long, default_value_t = 0)]
    pub restarts: usize,
    /// Parent cap per vertex; 3 for te, unlimited otherwise.
    #[arg(long)]
    pub max_parents: Option<usize>,
    /// Directory for graph.dot, report.json and the manifest.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub inferred: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
    /// Also write metrics.json and a manifest here.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}
