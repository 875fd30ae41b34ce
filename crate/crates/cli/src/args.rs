use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

const ALGORITHMS: &str = "\
Algorithms (--algo):
  serial    Serial-Rank. Fiedler vector of the Laplacian of S = (n11' + CC')/2.
  cserial   C-Serial-Rank. Serial-Rank on S + lambda*K, K a kernel on covariates.
  svd       SVD-Rank. Top singular vectors of the centred comparison matrix HC.
  svdn      SVD-Norm-Rank. As svd on the degree-normalised matrix D^-1 C.
  svdc      SVDCov-Rank. Linear scores r = H Phi beta maximising |C' r| subject
            to beta' Phi' H Phi beta = 1. Predicts unseen items.
  svdk      SVDKCov-Rank. Kernel scores r = HK alpha maximising |C' r| subject
            to alpha' KHK alpha = 1. Predicts unseen items.
  svdkfair  SVDKFair-Rank. svdk with CC' replaced by CC' - (fair_lambda/n^2) G,
            G a kernel on the sensitive columns. Predicts unseen items.
  kcca      KCCA-Rank. Kernel canonical correlation between covariates and
            comparison rows; keeps the side with fewer upsets. Predicts unseen
            items from the covariate side.
  rc        Rank centrality on the similarity-based win-probability proxy.";

#[derive(Debug, Parser)]
#[command(
    name = "covrank",
    version,
    about = "Spectral ranking from pairwise comparisons with item covariates"
)]
pub struct Cli {
    /// Seed for every random choice (CV folds, simulation, permutations).
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,

    /// More logging (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rank the items of a comparisons file.
    #[command(after_help = ALGORITHMS)]
    Rank(RankArgs),
    /// Score unseen items with a saved model.
    Predict(PredictArgs),
    /// Write a synthetic dataset.
    Simulate(SimulateArgs),
    /// Benchmark algorithms over a grid of synthetic noise levels.
    #[command(after_help = ALGORITHMS)]
    Sweep(SweepArgs),
    /// Cross-validate the hyperparameters of one algorithm.
    #[command(after_help = ALGORITHMS)]
    Cv(CvArgs),
    /// Backward feature elimination by HSIC.
    SelectFeatures(SelectArgs),
    /// Permutation test of dependence between covariates and comparisons.
    HsicTest(HsicArgs),
    /// Fairness trade-off of SVDKFair-Rank over a range of penalty weights.
    Fair(FairArgs),
    /// Repeated train/test splits: train on some items, predict the rest.
    #[command(after_help = ALGORITHMS)]
    Holdout(HoldoutArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Auto,
    Ordinal,
    Cardinal,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Comparisons CSV with header `i,j,outcome`.
    #[arg(long)]
    pub comparisons: PathBuf,

    /// Features CSV with header `id,<name>,...`.
    #[arg(long)]
    pub features: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = KindArg::Auto)]
    pub kind: KindArg,

    /// Feature columns to treat as sensitive (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub sensitive: Vec<String>,
}

#[derive(Debug, Args, Clone)]
pub struct HyperArgs {
    /// C-Serial-Rank kernel weight (absolute).
    #[arg(long)]
    pub lambda: Option<f64>,

    /// RBF lengthscale of the covariate kernel.
    #[arg(long, conflicts_with = "linear")]
    pub lengthscale: Option<f64>,

    /// Use a linear covariate kernel instead of RBF.
    #[arg(long)]
    pub linear: bool,

    /// KCCA regulariser.
    #[arg(long)]
    pub epsilon: Option<f64>,

    /// SVDKFair-Rank penalty weight.
    #[arg(long)]
    pub fair_lambda: Option<f64>,

    /// RBF lengthscale of the sensitive-attribute kernel.
    #[arg(long)]
    pub sensitive_lengthscale: Option<f64>,

    /// Cross-validation folds for hyperparameters left unset.
    #[arg(long, default_value_t = 10)]
    pub folds: usize,

    /// Skip cross-validation and use default hyperparameters.
    #[arg(long)]
    pub no_cv: bool,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    #[command(flatten)]
    pub data: DataArgs,

    #[arg(long)]
    pub algo: String,

    #[command(flatten)]
    pub hyper: HyperArgs,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Model JSON written by `rank`.
    #[arg(long)]
    pub model: PathBuf,

    /// Features CSV of the items to score.
    #[arg(long)]
    pub features: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseArg {
    None,
    Flip,
    Ero,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 200)]
    pub n: usize,

    /// Probability that a pair is compared.
    #[arg(long, default_value_t = 0.05)]
    pub sparsity: f64,

    /// Skill noise not explained by the covariate.
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,

    #[arg(long, value_enum, default_value_t = NoiseArg::None)]
    pub noise: NoiseArg,

    /// Flip probability or ERO replacement probability.
    #[arg(long, default_value_t = 0.0)]
    pub level: f64,

    /// Comparison type (default: cardinal for ERO, ordinal otherwise).
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, default_value_t = 200)]
    pub n: usize,

    #[arg(long, default_value_t = 0.05)]
    pub sparsity: f64,

    #[arg(long, value_enum, default_value_t = NoiseArg::Flip)]
    pub noise: NoiseArg,

    /// Comparison type (default: cardinal for ERO, ordinal otherwise).
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,

    /// Noise levels (comma separated).
    #[arg(long, value_delimiter = ',', default_value = "0,0.1,0.2,0.3,0.4")]
    pub levels: Vec<f64>,

    /// Skill noise levels (comma separated).
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub sigmas: Vec<f64>,

    /// Repetitions per cell.
    #[arg(long, default_value_t = 20)]
    pub seeds: usize,

    /// Algorithms (comma separated).
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "serial,cserial,svd,svdn,svdc,svdk,kcca,rc"
    )]
    pub algos: Vec<String>,

    #[command(flatten)]
    pub hyper: HyperArgs,

    /// Record wall-clock time per run (makes the report non-reproducible).
    #[arg(long)]
    pub timing: bool,

    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[command(flatten)]
    pub data: DataArgs,

    #[arg(long)]
    pub algo: String,

    #[command(flatten)]
    pub hyper: HyperArgs,

    /// λ multipliers of n / trace(K) (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub lambda_grid: Vec<f64>,

    /// Lengthscale multipliers of the median distance (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub lengthscale_grid: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub data: DataArgs,

    /// Number of features to keep.
    #[arg(long)]
    pub k: usize,

    /// Fraction of the remaining features dropped per step.
    #[arg(long, default_value_t = 0.1)]
    pub drop_fraction: f64,
}

#[derive(Debug, Args)]
pub struct HsicArgs {
    #[command(flatten)]
    pub data: DataArgs,

    /// Feature columns to test (comma separated; default all non-sensitive).
    #[arg(long, value_delimiter = ',')]
    pub columns: Vec<String>,

    #[arg(long, default_value_t = 500)]
    pub permutations: usize,

    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
}

#[derive(Debug, Args)]
pub struct FairArgs {
    #[command(flatten)]
    pub data: DataArgs,

    /// Penalty weights to evaluate (comma separated).
    #[arg(long, value_delimiter = ',', default_value = "0,1,10,100,1000,10000")]
    pub fair_lambdas: Vec<f64>,

    #[command(flatten)]
    pub hyper: HyperArgs,
}

#[derive(Debug, Args)]
pub struct HoldoutArgs {
    #[command(flatten)]
    pub data: DataArgs,

    /// Optional `id,r_true` CSV; enables Kendall's tau on the test items.
    #[arg(long)]
    pub truth: Option<PathBuf>,

    #[arg(long, value_delimiter = ',', default_value = "svdc,svdk,kcca")]
    pub algos: Vec<String>,

    #[arg(long, default_value_t = 20)]
    pub repeats: usize,

    /// Fraction of items used for training.
    #[arg(long, default_value_t = 0.7)]
    pub split: f64,

    #[command(flatten)]
    pub hyper: HyperArgs,

    #[arg(long)]
    pub timing: bool,

    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}
