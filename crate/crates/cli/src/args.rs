use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "tsrecon", version, about = "Time-series diagnostics and proxy reconstruction")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Seed for every random draw (fixture generation).
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Result format written to stdout.
    #[arg(long, global = true, value_enum, default_value_t = OutFormat::Json)]
    pub out: OutFormat,

    /// Also draw the main series or correlogram as SVG.
    #[arg(long, global = true, value_name = "PATH.svg")]
    pub plot: Option<PathBuf>,

    /// Write the run manifest here (with --out csv it otherwise goes to stderr).
    #[arg(long, global = true, value_name = "PATH.json")]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutFormat {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Lag-d difference of a series.
    Diff(DiffArgs),
    /// Sample autocorrelation with white-noise bounds.
    Acf(AcfArgs),
    /// Exact-likelihood ARMA fit (fixed order or AICc search) with residual diagnostics.
    FitArma(FitArgs),
    /// Whitened residuals under a fitted ARMA model.
    Whiten(FitArgs),
    /// Cross-correlation of a covariate (or panel component) with a response.
    Ccf(CcfArgs),
    /// Principal components of a proxy panel.
    Pca(PcaArgs),
    /// MDL piecewise-autoregressive segmentation.
    Segment(SegmentArgs),
    /// Rank covariate lags by cross-correlation.
    Lagscan(LagscanArgs),
    /// Regression on lagged covariates with ARMA errors.
    Transfer(TransferArgs),
    /// Block holdout evaluation of a lagged regression against a baseline.
    Holdout(HoldoutArgs),
    /// Generate seeded synthetic fixtures as CSV files.
    Simulate(SimulateArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Diff(_) => "diff",
            Command::Acf(_) => "acf",
            Command::FitArma(_) => "fit-arma",
            Command::Whiten(_) => "whiten",
            Command::Ccf(_) => "ccf",
            Command::Pca(_) => "pca",
            Command::Segment(_) => "segment",
            Command::Lagscan(_) => "lagscan",
            Command::Transfer(_) => "transfer",
            Command::Holdout(_) => "holdout",
            Command::Simulate(_) => "simulate",
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SeriesInput {
    /// CSV with a `year` column and one or more value columns.
    #[arg(long)]
    pub input: PathBuf,
    /// Value column (default: the first).
    #[arg(long)]
    pub column: Option<String>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DiffArgs {
    #[command(flatten)]
    pub series: SeriesInput,
    #[arg(long, default_value_t = 1)]
    pub lag: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AcfArgs {
    #[command(flatten)]
    pub series: SeriesInput,
    /// Apply lag-1 differencing this many times first.
    #[arg(long, default_value_t = 0)]
    pub difference: usize,
    #[arg(long, default_value_t = 40)]
    pub max_lag: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitArgs {
    #[command(flatten)]
    pub series: SeriesInput,
    #[arg(long, default_value_t = 0)]
    pub difference: usize,
    /// Fixed AR order; with --q, skips the order search.
    #[arg(long, requires = "q")]
    pub p: Option<usize>,
    #[arg(long, requires = "p")]
    pub q: Option<usize>,
    #[arg(long, default_value_t = 3)]
    pub p_max: usize,
    #[arg(long, default_value_t = 3)]
    pub q_max: usize,
    /// Ljung–Box lags (default min(20, n/4)).
    #[arg(long)]
    pub lb_lags: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CovariateSource {
    /// Covariate CSV.
    #[arg(long)]
    pub covariate: Option<PathBuf>,
    #[arg(long)]
    pub covariate_column: Option<String>,
    /// Proxy panel CSV; its principal-component score is the covariate.
    #[arg(long, conflicts_with = "covariate")]
    pub panel: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub pca_component: usize,
    /// Standardize proxies before PCA.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub standardize: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Prewhiten {
    Raw,
    X,
    Both,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CcfArgs {
    #[arg(long)]
    pub response: PathBuf,
    #[arg(long)]
    pub column: Option<String>,
    #[command(flatten)]
    pub source: CovariateSource,
    /// Difference both series this many times first.
    #[arg(long, default_value_t = 0)]
    pub difference: usize,
    #[arg(long, default_value_t = 40)]
    pub max_lag: usize,
    #[arg(long, value_enum, default_value_t = Prewhiten::X)]
    pub prewhiten: Prewhiten,
    #[arg(long, default_value_t = 3)]
    pub p_max: usize,
    #[arg(long, default_value_t = 2)]
    pub q_max: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PcaArgs {
    #[arg(long)]
    pub panel: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub standardize: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SegmentArgs {
    #[command(flatten)]
    pub series: SeriesInput,
    #[arg(long, default_value_t = 0)]
    pub difference: usize,
    #[arg(long, default_value_t = 3)]
    pub max_breaks: usize,
    #[arg(long, default_value_t = 2)]
    pub max_order: usize,
    #[arg(long, default_value_t = 10)]
    pub min_seg_len: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LagscanArgs {
    #[arg(long)]
    pub response: PathBuf,
    #[arg(long)]
    pub column: Option<String>,
    #[command(flatten)]
    pub source: CovariateSource,
    #[arg(long, default_value_t = 20)]
    pub max_lag: usize,
    /// Skip prewhitening of the covariate.
    #[arg(long)]
    pub raw: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ModelSpecArgs {
    #[arg(long)]
    pub response: PathBuf,
    #[arg(long)]
    pub column: Option<String>,
    #[command(flatten)]
    pub source: CovariateSource,
    /// Regression offsets: response_t on covariate_{t+offset} (e.g. -3 uses the value 3 steps earlier).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub offsets: Vec<i64>,
    /// Covariate name used in the printed equation.
    #[arg(long, default_value = "x")]
    pub label: String,
    #[arg(long, default_value_t = 0)]
    pub p: usize,
    #[arg(long, default_value_t = 0)]
    pub q: usize,
    #[arg(long)]
    pub no_intercept: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TransferArgs {
    #[command(flatten)]
    pub model: ModelSpecArgs,
    /// Also predict over FROM:TO (years).
    #[arg(long, value_name = "FROM:TO")]
    pub predict: Option<String>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct HoldoutArgs {
    #[command(flatten)]
    pub model: ModelSpecArgs,
    /// Held-out year range FROM:TO; repeat for several blocks.
    #[arg(long = "block", value_name = "FROM:TO", required = true)]
    pub blocks: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FixtureKind {
    Arma,
    WalkNoise,
    Transfer,
    LagPanel,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub kind: FixtureKind,
    /// Directory for the generated CSV files.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 150)]
    pub n: usize,
    #[arg(long, default_value_t = 1850)]
    pub start: i64,
    /// AR coefficients (arma; covariate model for transfer; factor for lag-panel).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub ar: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub ma: Vec<f64>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub mean: f64,
    #[arg(long, default_value_t = 1.0)]
    pub variance: f64,
    #[arg(long, default_value_t = 0.02)]
    pub step_sd: f64,
    #[arg(long, default_value_t = 1.0)]
    pub noise_sd: f64,
    #[arg(long)]
    pub lag: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub coef: Option<f64>,
    #[arg(long, default_value_t = 50)]
    pub proxies: usize,
}
