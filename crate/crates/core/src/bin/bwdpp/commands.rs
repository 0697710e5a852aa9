use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use bwdpp::cpd::{
    detect_event_changes, detect_with_profile, generate_piecewise_gaussian, generate_poisson_events, DetectionConfig,
    DetectionReport, GaussianSegment, RateSegment,
};
use bwdpp::eval::{benchmark_map, evaluate, roc_sweep, roc_sweep_events, BenchOptions, EvalReport, MapBenchReport, RocPoint};
use bwdpp::io;
use bwdpp::kernel::{gamma_partition, generate_synthetic_kernel, DppKernel, SyntheticKernelSpec, DEFAULT_EPS_ZERO};
use bwdpp::map::{
    bwdpp_map, exhaustive_map, log_prob_unnormalized, Exhaustive, Greedy, GreedyOptions, SubSolver,
    EXHAUSTIVE_MAX_N,
};
use bwdpp::metrics::Metric;
use serde::{Deserialize, Serialize};

use crate::args::{
    BenchArgs, BenchSettings, DetectArgs, DetectSettings, EvalArgs, GenArgs, GenKind, GreedyVariant, KernelShape,
    MapArgs, MapMode, Solver,
};

pub enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<bwdpp::Error> for Failure {
    fn from(e: bwdpp::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

pub type Outcome = Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Contents of the `--config` file.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub kernel: KernelShape,
    pub detect: DetectSettings,
    pub bench: BenchSettings,
    pub gamma: Option<usize>,
    pub tol: Option<f64>,
    pub sigma_grid: Option<Vec<f64>>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, Failure> {
        match path {
            None => Ok(Self::default()),
            Some(p) => io::load_json(p).map_err(|e| usage(format!("config {}: {e}", p.display()))),
        }
    }
}

pub struct RunContext {
    pub config: RunConfig,
    pub timing: bool,
}

/// Ground-truth change times as written next to generated data.
#[derive(Debug, Serialize, Deserialize)]
struct TruthFile {
    #[serde(serialize_with = "serialize_times")]
    changes: Vec<f64>,
}

fn serialize_times<S: serde::Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(xs.len()))?;
    for &x in xs {
        if x.fract() == 0.0 && x.abs() < 9e15 {
            seq.serialize_element(&(x as i64))?;
        } else {
            seq.serialize_element(&x)?;
        }
    }
    seq.end()
}

/// `dir/name.csv` → `dir/name.<suffix>`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    path.with_extension(suffix)
}

fn emit<T: Serialize>(output: Option<&Path>, value: &T) -> anyhow::Result<()> {
    match output {
        Some(p) => io::save_json(p, value).with_context(|| format!("writing {}", p.display()))?,
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            io::write_json(&mut lock, value)?;
            lock.flush()?;
        }
    }
    Ok(())
}

impl KernelShape {
    fn or(self, file: &KernelShape) -> KernelShape {
        KernelShape {
            n: self.n.or(file.n),
            block_min: self.block_min.or(file.block_min),
            block_max: self.block_max.or(file.block_max),
            overlaps: self.overlaps.or_else(|| file.overlaps.clone()),
            feature_dim: self.feature_dim.or(file.feature_dim),
        }
    }

    fn spec(&self, seed: u64) -> SyntheticKernelSpec {
        let d = SyntheticKernelSpec::default();
        SyntheticKernelSpec {
            n: self.n.unwrap_or(d.n),
            block_size_range: [
                self.block_min.unwrap_or(d.block_size_range[0]),
                self.block_max.unwrap_or(d.block_size_range[1]),
            ],
            overlap_choices: self.overlaps.clone().unwrap_or(d.overlap_choices),
            feature_dim: self.feature_dim.unwrap_or(d.feature_dim),
            seed,
        }
    }
}

fn default_gaussian_segments() -> Vec<GaussianSegment> {
    (0..10)
        .map(|k| GaussianSegment::univariate(200, if k % 2 == 0 { 0.0 } else { 3.0 }, 1.0))
        .collect()
}

fn default_rate_segments() -> Vec<RateSegment> {
    vec![
        RateSegment { duration: 500.0, rate: 1.0 },
        RateSegment { duration: 500.0, rate: 5.0 },
    ]
}

pub fn gen(args: GenArgs, ctx: &RunContext) -> Outcome {
    let seed = args.seed.or(ctx.config.seed).unwrap_or(0);
    let out = &args.output;
    match args.kind {
        GenKind::Kernel => {
            if args.segments.is_some() {
                return Err(usage("--segments does not apply to --kind kernel"));
            }
            let spec = args.shape.or(&ctx.config.kernel).spec(seed);
            spec.validate().map_err(|e| usage(e.to_string()))?;
            let (kernel, partition) = generate_synthetic_kernel(&spec)?;
            io::save_matrix(out, kernel.matrix())?;
            io::save_json(&sibling(out, "partition.json"), &partition)?;
        }
        GenKind::Gaussian => {
            let segs: Vec<GaussianSegment> = match &args.segments {
                Some(p) => io::load_json(p).with_context(|| format!("reading segments {}", p.display()))?,
                None => default_gaussian_segments(),
            };
            let (x, truth) = generate_piecewise_gaussian(seed, &segs)?;
            io::save_series(out, &x)?;
            let changes = truth.iter().map(|&t| t as f64).collect();
            io::save_json(&sibling(out, "truth.json"), &TruthFile { changes })?;
        }
        GenKind::Poisson => {
            let segs: Vec<RateSegment> = match &args.segments {
                Some(p) => io::load_json(p).with_context(|| format!("reading segments {}", p.display()))?,
                None => default_rate_segments(),
            };
            let (events, changes) = generate_poisson_events(seed, &segs)?;
            io::save_events(out, &events)?;
            io::save_json(&sibling(out, "truth.json"), &TruthFile { changes })?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct BlockOutput {
    range: [usize; 2],
    selected: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ms: Option<f64>,
}

#[derive(Serialize)]
struct InferenceOutput {
    mode: &'static str,
    solver: &'static str,
    n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma: Option<usize>,
    selected: Vec<usize>,
    /// `null` when the selected submatrix is singular.
    log_det: f64,
    per_block: Vec<BlockOutput>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle_selected: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle_log_det: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle_match: Option<bool>,
}

pub fn map(args: MapArgs, ctx: &RunContext) -> Outcome {
    let l = io::load_matrix(&args.kernel).with_context(|| format!("reading kernel {}", args.kernel.display()))?;
    let kernel = DppKernel::new(l)?;
    let n = kernel.dim();
    if args.oracle && n > EXHAUSTIVE_MAX_N {
        return Err(Failure::Runtime(anyhow::anyhow!(
            "--oracle needs at most {EXHAUSTIVE_MAX_N} items, kernel has {n}"
        )));
    }
    let greedy = Greedy(GreedyOptions {
        require_initial_gain: args.require_initial_gain,
        ..Default::default()
    });
    let solver: &dyn SubSolver = match args.solver {
        Solver::Greedy => &greedy,
        Solver::Exhaustive => &Exhaustive,
    };
    let ms = |t: Instant| ctx.timing.then(|| t.elapsed().as_secs_f64() * 1e3);
    let (selected, per_block, gamma) = match args.mode {
        MapMode::Full => {
            let t0 = Instant::now();
            let sel = solver.solve(kernel.matrix())?;
            let block = BlockOutput {
                range: [0, n],
                selected: sel.as_slice().to_vec(),
                ms: ms(t0),
            };
            (sel, vec![block], None)
        }
        MapMode::Blockwise => {
            let gamma = args.gamma.or(ctx.config.gamma).unwrap_or(2);
            let partition = gamma_partition(&kernel, gamma, DEFAULT_EPS_ZERO);
            let (sel, trace) = bwdpp_map(&kernel, &partition, solver)?;
            let blocks = trace
                .blocks
                .iter()
                .map(|b| BlockOutput {
                    range: [b.range.0, b.range.1],
                    selected: b.selected.as_slice().to_vec(),
                    ms: ctx.timing.then_some(b.elapsed.as_secs_f64() * 1e3),
                })
                .collect();
            (sel, blocks, Some(gamma))
        }
    };
    let log_det = log_prob_unnormalized(&kernel, &selected)?;
    let (mut oracle_selected, mut oracle_log_det, mut oracle_match) = (None, None, None);
    if args.oracle {
        let o = exhaustive_map(&kernel)?;
        let o_ld = log_prob_unnormalized(&kernel, &o)?;
        oracle_match = Some(o == selected);
        oracle_selected = Some(o.into_vec());
        oracle_log_det = Some(o_ld);
    }
    let out = InferenceOutput {
        mode: match args.mode {
            MapMode::Full => "full",
            MapMode::Blockwise => "blockwise",
        },
        solver: match args.solver {
            Solver::Greedy => "greedy",
            Solver::Exhaustive => "exhaustive",
        },
        n,
        gamma,
        selected: selected.into_vec(),
        log_det,
        per_block,
        oracle_selected,
        oracle_log_det,
        oracle_match,
    };
    emit(args.output.as_deref(), &out)?;
    Ok(())
}

impl DetectSettings {
    fn or(self, file: &DetectSettings) -> DetectSettings {
        DetectSettings {
            window: self.window.or(file.window),
            sigma: self.sigma.or(file.sigma),
            gamma: self.gamma.or(file.gamma),
            metric: self.metric.or(file.metric),
            eps_zero: self.eps_zero.or(file.eps_zero),
            quality_min_segment: self.quality_min_segment.or(file.quality_min_segment),
            event_step: self.event_step.or(file.event_step),
            require_initial_gain: self.require_initial_gain.or(file.require_initial_gain),
            quality: self.quality.or(file.quality),
            metric_options: self.metric_options.or(file.metric_options),
        }
    }

    fn config(&self, default_metric: Metric) -> DetectionConfig {
        let d = DetectionConfig::default();
        DetectionConfig {
            window: self.window.unwrap_or(d.window),
            sigma: self.sigma.unwrap_or(d.sigma),
            gamma: self.gamma.unwrap_or(d.gamma),
            metric: self.metric.unwrap_or(default_metric),
            eps_zero: self.eps_zero.unwrap_or(d.eps_zero),
            quality: self.quality,
            quality_min_segment: self.quality_min_segment,
            require_initial_gain: self.require_initial_gain.unwrap_or(d.require_initial_gain),
            metric_options: self.metric_options.unwrap_or(d.metric_options),
            event_step: self.event_step,
        }
    }
}

pub fn detect(args: DetectArgs, ctx: &RunContext) -> Outcome {
    let settings = args.settings.or(&ctx.config.detect);
    let (report, profile) = if let Some(p) = &args.series {
        let cfg = settings.config(Metric::SymKl);
        cfg.validate().map_err(|e| usage(e.to_string()))?;
        if cfg.metric == Metric::GlrPoisson {
            return Err(usage("glr-poisson needs --events"));
        }
        let x = io::load_series(p).with_context(|| format!("reading series {}", p.display()))?;
        detect_with_profile(&x, &cfg)?
    } else {
        let p = args.events.as_ref().expect("clap enforces one input");
        let cfg = settings.config(Metric::GlrPoisson);
        cfg.validate().map_err(|e| usage(e.to_string()))?;
        if cfg.metric != Metric::GlrPoisson {
            return Err(usage("event data needs --metric glr-poisson"));
        }
        let e = io::load_events(p).with_context(|| format!("reading events {}", p.display()))?;
        detect_event_changes(&e, &cfg)?
    };
    let report = if ctx.timing { report } else { report.without_timings() };
    if let Some(p) = &args.dump_profile {
        let f = std::fs::File::create(p).with_context(|| format!("writing {}", p.display()))?;
        io::write_table(
            std::io::BufWriter::new(f),
            &["t", "d"],
            profile.times.iter().zip(&profile.values).map(|(&t, &d)| vec![t, d]),
        )?;
    }
    emit(args.output.as_deref(), &report)?;
    Ok(())
}

#[derive(Serialize)]
struct EvalOutput {
    #[serde(flatten)]
    scores: EvalReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    roc: Option<Vec<RocPoint>>,
}

pub fn eval(args: EvalArgs, ctx: &RunContext) -> Outcome {
    let report: DetectionReport =
        io::load_json(&args.report).with_context(|| format!("reading report {}", args.report.display()))?;
    let truth: TruthFile =
        io::load_json(&args.truth).with_context(|| format!("reading truth {}", args.truth.display()))?;
    let tol = args.tol.or(ctx.config.tol).unwrap_or(report.config.window);
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(usage("--tol must be non-negative"));
    }
    let scores = evaluate(&report.selected, &truth.changes, tol);
    let roc = if args.roc {
        let grid = args
            .sigma_grid
            .map(|g| g.0)
            .or_else(|| ctx.config.sigma_grid.clone())
            .ok_or_else(|| usage("--roc needs --sigma-grid"))?;
        let pts = match (&args.series, &args.events) {
            (Some(p), _) => roc_sweep(&io::load_series(p)?, &truth.changes, &report.config, &grid, tol)?,
            (_, Some(p)) => roc_sweep_events(&io::load_events(p)?, &truth.changes, &report.config, &grid, tol)?,
            _ => return Err(usage("--roc needs the input data via --series or --events")),
        };
        let rows = pts.iter().map(|p| vec![p.sigma, p.fpr, p.tpr]);
        match args.output.as_deref() {
            Some(o) => {
                let f = std::fs::File::create(sibling(o, "roc.csv")).context("writing ROC CSV")?;
                io::write_table(std::io::BufWriter::new(f), &["sigma", "fpr", "tpr"], rows)?;
            }
            None => io::write_table(std::io::stderr(), &["sigma", "fpr", "tpr"], rows)?,
        }
        Some(pts)
    } else {
        None
    };
    emit(args.output.as_deref(), &EvalOutput { scores, roc })?;
    Ok(())
}

#[derive(Serialize)]
struct BenchOutput {
    variants: Vec<BenchVariant>,
}

#[derive(Serialize)]
struct BenchVariant {
    name: &'static str,
    #[serde(flatten)]
    report: MapBenchReport,
}

impl BenchSettings {
    fn or(self, file: &BenchSettings) -> BenchSettings {
        BenchSettings {
            kernels: self.kernels.or(file.kernels),
            gammas: self.gammas.or_else(|| file.gammas.clone()),
            repetitions: self.repetitions.or(file.repetitions),
            greedy: self.greedy.or(file.greedy),
            shape: self.shape.or(&file.shape),
        }
    }
}

pub fn bench(args: BenchArgs, ctx: &RunContext) -> Outcome {
    let s = args.settings.or(&ctx.config.bench);
    let seed = args.seed.or(ctx.config.seed).unwrap_or(0);
    let spec = s.shape.spec(seed);
    spec.validate().map_err(|e| usage(e.to_string()))?;
    let kernels = s.kernels.unwrap_or(100);
    if kernels == 0 {
        return Err(usage("--kernels must be at least 1"));
    }
    let gammas = s.gammas.unwrap_or_else(|| vec![0, 2, 4, 6]);
    if gammas.is_empty() {
        return Err(usage("--gammas must not be empty"));
    }
    let repetitions = s.repetitions.unwrap_or(3) as usize;
    let variants: &[(&'static str, bool)] = match s.greedy.unwrap_or(GreedyVariant::Both) {
        GreedyVariant::Verbatim => &[("verbatim", false)],
        GreedyVariant::InitialGain => &[("initial-gain", true)],
        GreedyVariant::Both => &[("verbatim", false), ("initial-gain", true)],
    };
    let mut out = BenchOutput { variants: Vec::new() };
    let mut csv = String::new();
    for &(name, rig) in variants {
        let opts = BenchOptions {
            greedy: GreedyOptions {
                require_initial_gain: rig,
                ..Default::default()
            },
            repetitions,
            eps_zero: DEFAULT_EPS_ZERO,
        };
        let mut report = benchmark_map(&spec, kernels as usize, &gammas, &opts)?;
        if !ctx.timing {
            report = report.without_timings();
        }
        for (i, line) in report.to_csv().lines().enumerate() {
            if i == 0 {
                if csv.is_empty() {
                    csv.push_str(&format!("variant,{line}\n"));
                }
            } else {
                csv.push_str(&format!("{name},{line}\n"));
            }
        }
        out.variants.push(BenchVariant { name, report });
    }
    io::save_json(&args.output, &out)?;
    std::fs::write(sibling(&args.output, "csv"), csv)
        .with_context(|| format!("writing {}", sibling(&args.output, "csv").display()))?;
    Ok(())
}
