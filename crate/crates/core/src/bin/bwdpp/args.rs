use std::path::PathBuf;

use bwdpp::cpd::QualityTransform;
use bwdpp::metrics::{Metric, MetricOptions};
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

#[derive(Debug, Parser)]
#[command(name = "bwdpp", version, about = "Block-wise DPP MAP inference and DPP change-point detection")]
pub struct Cli {
    /// JSON file supplying defaults for any flag; command-line values win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Leave wall-clock fields out of every output.
    #[arg(long, global = true)]
    pub no_timing: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic kernel, Gaussian series or Poisson event stream.
    Gen(GenArgs),
    /// Run MAP inference on a kernel.
    Map(MapArgs),
    /// Detect change points in a series or an event stream.
    Detect(DetectArgs),
    /// Score a detection report against ground truth.
    Eval(EvalArgs),
    /// Compare block-wise inference with full-kernel greedy on synthetic kernels.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GenKind {
    Kernel,
    Gaussian,
    Poisson,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapMode {
    Full,
    Blockwise,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    Greedy,
    Exhaustive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GreedyVariant {
    /// First pick is the largest diagonal entry.
    Verbatim,
    /// First pick must itself increase the determinant.
    InitialGain,
    Both,
}

/// Synthetic kernel shape, shared by `gen --kind kernel` and `bench`.
#[derive(Clone, Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelShape {
    /// Number of items.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub block_min: Option<usize>,
    #[arg(long)]
    pub block_max: Option<usize>,
    /// Corner sizes to draw from, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub overlaps: Option<Vec<usize>>,
    #[arg(long)]
    pub feature_dim: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub kind: GenKind,
    /// Output CSV; the partition or truth JSON goes next to it.
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSON list of segments (Gaussian or rate segments, depending on kind).
    #[arg(long)]
    pub segments: Option<PathBuf>,
    #[command(flatten)]
    pub shape: KernelShape,
}

#[derive(Debug, Args)]
pub struct MapArgs {
    #[arg(long)]
    pub kernel: PathBuf,
    #[arg(long, value_enum, default_value = "blockwise")]
    pub mode: MapMode,
    #[arg(long)]
    pub gamma: Option<usize>,
    #[arg(long, value_enum, default_value = "greedy")]
    pub solver: Solver,
    #[arg(long)]
    pub require_initial_gain: bool,
    /// Also run exhaustive search on the full kernel (at most 20 items).
    #[arg(long)]
    pub oracle: bool,
    /// Output JSON; stdout when absent.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

/// Detection settings. Every field may also come from the `detect` block of
/// the config file.
#[derive(Clone, Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectSettings {
    #[arg(short = 'w', long)]
    pub window: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub gamma: Option<usize>,
    #[arg(long, value_parser = parse_metric)]
    pub metric: Option<Metric>,
    #[arg(long)]
    pub eps_zero: Option<f64>,
    #[arg(long)]
    pub quality_min_segment: Option<f64>,
    #[arg(long)]
    pub event_step: Option<f64>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub require_initial_gain: Option<bool>,
    #[arg(skip)]
    pub quality: Option<QualityTransform>,
    #[arg(skip)]
    pub metric_options: Option<MetricOptions>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("input").required(true).args(["series", "events"])))]
pub struct DetectArgs {
    /// Time series CSV.
    #[arg(long)]
    pub series: Option<PathBuf>,
    /// Event time CSV.
    #[arg(long)]
    pub events: Option<PathBuf>,
    #[command(flatten)]
    pub settings: DetectSettings,
    /// Output JSON; stdout when absent.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Write the dissimilarity profile as CSV (t, d).
    #[arg(long)]
    pub dump_profile: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Detection report JSON.
    #[arg(long)]
    pub report: PathBuf,
    /// Truth JSON written by `gen`.
    #[arg(long)]
    pub truth: PathBuf,
    /// Matching tolerance; defaults to the report's window.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Sweep σ and write ROC points; needs the input data.
    #[arg(long, requires = "sigma_grid")]
    pub roc: bool,
    /// `a:b:n`, n geometrically spaced values from a to b.
    #[arg(long, value_parser = parse_sigma_grid)]
    pub sigma_grid: Option<SigmaGrid>,
    #[arg(long, conflicts_with = "events")]
    pub series: Option<PathBuf>,
    #[arg(long)]
    pub events: Option<PathBuf>,
    /// Output JSON; stdout when absent. The ROC CSV goes next to it.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchSettings {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub kernels: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    pub gammas: Option<Vec<usize>>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub repetitions: Option<u64>,
    #[arg(long, value_enum)]
    pub greedy: Option<GreedyVariant>,
    #[command(flatten)]
    #[serde(flatten)]
    pub shape: KernelShape,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub settings: BenchSettings,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output JSON; the per-γ CSV goes next to it.
    #[arg(short, long, default_value = "bench.json")]
    pub output: PathBuf,
}

fn parse_metric(s: &str) -> Result<Metric, String> {
    s.parse::<Metric>().map_err(|e| e.to_string())
}

// Keeps `5:640:8` printing as 5, 10, 20, ... rather than 39.99999999999999.
fn round_sig(x: f64) -> f64 {
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// Values parsed from `a:b:n`.
#[derive(Clone, Debug, PartialEq)]
pub struct SigmaGrid(pub Vec<f64>);

pub fn parse_sigma_grid(s: &str) -> Result<SigmaGrid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, n] = parts.as_slice() else {
        return Err(format!("expected a:b:n, got '{s}'"));
    };
    let a: f64 = a.parse().map_err(|_| format!("bad grid start '{a}'"))?;
    let b: f64 = b.parse().map_err(|_| format!("bad grid end '{b}'"))?;
    let n: usize = n.parse().map_err(|_| format!("bad grid count '{n}'"))?;
    if !(a > 0.0 && b >= a && a.is_finite() && b.is_finite()) || n == 0 {
        return Err("grid needs 0 < a <= b and n >= 1".into());
    }
    if n == 1 {
        return Ok(SigmaGrid(vec![a]));
    }
    let r = (b / a).ln() / (n - 1) as f64;
    Ok(SigmaGrid(
        (0..n)
            .map(|k| if k + 1 == n { b } else { round_sig(a * (r * k as f64).exp()) })
            .collect(),
    ))
}
