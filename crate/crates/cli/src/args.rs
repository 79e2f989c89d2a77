use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "marginlab", version, about = "Margin-based generalization bounds for combined classifiers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run AdaBoost on a CSV dataset and emit the trace and final classifier.
    Boost(BoostArgs),
    /// Evaluate a margin bound for a classifier on a dataset.
    Bounds(BoundsArgs),
    /// Boost on a dataset and report γ-margins and γ-bounds per round.
    Gamma(GammaArgs),
    /// Estimate the Rademacher or Gaussian complexity of a function class.
    Complexity(ComplexityArgs),
    /// Fit the convergence rate of the Lévy distance on the projection class.
    LevyRate(LevyRateArgs),
    /// Penalized selection among candidate networks.
    NnSelect(NnSelectArgs),
    /// Replicated boosting experiment on the intervals problem.
    Intervals(IntervalsArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// CSV file: label in the first column, features after it.
    #[arg(long)]
    pub data: PathBuf,
    /// Skip one header row.
    #[arg(long)]
    pub header: bool,
}

#[derive(Debug, Args)]
pub struct SeedArg {
    /// Master seed; the MARGINLAB_SEED environment variable overrides it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Weak {
    Stump,
    Interval,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ClassKind {
    Stumps,
    Intervals,
    HullStumps,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Kind {
    Rademacher,
    Gaussian,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Variant {
    T2,
    T4,
    T11,
    Adaboost,
}

#[derive(Debug, Args)]
pub struct BoostArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 50)]
    pub rounds: usize,
    #[arg(long, value_enum, default_value_t = Weak::Stump)]
    pub weak: Weak,
    /// Clamp on the weighted error; defaults to 1/(2n).
    #[arg(long)]
    pub e_clamp: Option<f64>,
    #[command(flatten)]
    pub seed: SeedArg,
    /// Directory for trace.json and classifier.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ComplexitySource {
    /// Use this complexity value instead of estimating it.
    #[arg(long)]
    pub rn: Option<f64>,
    /// Use the closed form C·sqrt(V/n) with this VC dimension.
    #[arg(long, conflicts_with = "rn")]
    pub vc: Option<u32>,
    /// Constant C of the closed form.
    #[arg(long, default_value_t = 1.0)]
    pub vc_constant: f64,
    /// Class whose complexity is estimated.
    #[arg(long, value_enum, default_value_t = ClassKind::Stumps)]
    pub class: ClassKind,
    #[arg(long, value_enum, default_value_t = Kind::Rademacher)]
    pub kind: Kind,
    #[arg(long, default_value_t = 2000)]
    pub draws: usize,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value_t = Variant::T2)]
    pub variant: Variant,
    /// Voting classifier JSON (t2, t4).
    #[arg(long)]
    pub classifier: Option<PathBuf>,
    /// Boosting trace JSON (adaboost; also usable for t2 and t4).
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Score CSV with one column per class (t11).
    #[arg(long)]
    pub scores: Option<PathBuf>,
    /// Number of classes (t11).
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long, default_value_t = 2.0)]
    pub t: f64,
    #[command(flatten)]
    pub complexity: ComplexitySource,
    #[command(flatten)]
    pub seed: SeedArg,
    /// Directory for report.json and curves.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GammaArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Comma-separated γ values in (0, 1].
    #[arg(long, value_delimiter = ',', default_value = "1,0.8,0.667")]
    pub gamma: Vec<f64>,
    #[arg(long, default_value_t = 50)]
    pub rounds: usize,
    #[arg(long, value_enum, default_value_t = Weak::Stump)]
    pub weak: Weak,
    /// Reporting constant C_γ.
    #[arg(long, default_value_t = 1.0)]
    pub c_gamma: f64,
    #[command(flatten)]
    pub seed: SeedArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ComplexityArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value_t = ClassKind::Stumps)]
    pub class: ClassKind,
    #[arg(long, value_enum, default_value_t = Kind::Rademacher)]
    pub kind: Kind,
    #[arg(long, default_value_t = 2000)]
    pub draws: usize,
    /// Also enumerate all 2^n sign vectors (n <= 14).
    #[arg(long)]
    pub exact: bool,
    #[command(flatten)]
    pub seed: SeedArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LevyRateArgs {
    #[arg(long, default_value_t = 2.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 100)]
    pub nmin: usize,
    #[arg(long, default_value_t = 100_000)]
    pub nmax: usize,
    #[arg(long, default_value_t = 7)]
    pub npoints: usize,
    #[arg(long, default_value_t = 20)]
    pub reps: usize,
    /// Keep only the first K coordinates; all coordinates when omitted.
    #[arg(long)]
    pub k_max: Option<u64>,
    #[command(flatten)]
    pub seed: SeedArg,
    /// Directory for report.json and curves.csv.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct NnSelectArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Directory of network JSON files; candidates are taken in file-name order.
    #[arg(long)]
    pub nets: PathBuf,
    #[arg(long, default_value_t = 3.0)]
    pub alpha: f64,
    /// Use this G_n(H) instead of estimating it over the stump class.
    #[arg(long)]
    pub gn: Option<f64>,
    #[arg(long, default_value_t = 2000)]
    pub draws: usize,
    #[command(flatten)]
    pub seed: SeedArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IntervalsArgs {
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    #[arg(long, default_value_t = 50)]
    pub rounds: usize,
    #[arg(long, default_value_t = 200)]
    pub reps: usize,
    #[arg(long, value_delimiter = ',', default_value = "1,0.8,0.667")]
    pub gammas: Vec<f64>,
    #[arg(long, default_value_t = 2.0)]
    pub t: f64,
    /// Label-flip probability.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Monte Carlo draws for the per-replicate complexity estimate.
    #[arg(long, default_value_t = 500)]
    pub draws: usize,
    #[arg(long, value_enum, default_value_t = Weak::Stump)]
    pub weak: Weak,
    /// Also run the γ-margin ratio experiment and write ratios.json.
    #[arg(long)]
    pub ratios: bool,
    #[command(flatten)]
    pub seed: SeedArg,
    /// Directory for report.json and curves.csv.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}
