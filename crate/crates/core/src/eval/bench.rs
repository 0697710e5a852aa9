use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{gamma_partition, generate_synthetic_kernel, SyntheticKernelSpec, DEFAULT_EPS_ZERO};
use crate::map::{bwdpp_map, greedy_map, log_prob_unnormalized, Greedy, GreedyOptions};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchOptions {
    pub greedy: GreedyOptions,
    /// Timed repetitions per run; the median is kept.
    pub repetitions: usize,
    pub eps_zero: f64,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            greedy: GreedyOptions::default(),
            repetitions: 3,
            eps_zero: DEFAULT_EPS_ZERO,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaRun {
    pub gamma: usize,
    pub blocks: usize,
    /// `log p − log p_ref`, where `p_ref` comes from greedy on the full kernel.
    pub log_ratio: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time_ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelRecord {
    pub index: usize,
    pub seed: u64,
    pub n: usize,
    pub ref_log_prob: f64,
    pub ref_size: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ref_ms: Option<f64>,
    pub runs: Vec<GammaRun>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaAggregate {
    pub gamma: usize,
    pub kernels: usize,
    pub mean_blocks: f64,
    pub mean_log_ratio: f64,
    pub log_ratio_half_width: f64,
    /// Kernels where the blockwise result has exactly the baseline probability.
    pub exact: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_time_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time_ratio_half_width: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapBenchReport {
    pub spec: SyntheticKernelSpec,
    pub greedy: GreedyOptions,
    pub kernels: usize,
    pub gammas: Vec<usize>,
    pub aggregates: Vec<GammaAggregate>,
    pub records: Vec<KernelRecord>,
}

impl MapBenchReport {
    /// Copy with all wall-clock fields removed.
    pub fn without_timings(&self) -> Self {
        let mut r = self.clone();
        for a in &mut r.aggregates {
            a.mean_time_ratio = None;
            a.time_ratio_half_width = None;
        }
        for k in &mut r.records {
            k.ref_ms = None;
            for g in &mut k.runs {
                g.ms = None;
                g.time_ratio = None;
            }
        }
        r
    }

    pub fn aggregate(&self, gamma: usize) -> Option<&GammaAggregate> {
        self.aggregates.iter().find(|a| a.gamma == gamma)
    }

    /// One row per γ: `gamma,kernels,mean_blocks,mean_log_ratio,log_ratio_half_width,exact,mean_time_ratio,time_ratio_half_width`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "gamma,kernels,mean_blocks,mean_log_ratio,log_ratio_half_width,exact,mean_time_ratio,time_ratio_half_width\n",
        );
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        for a in &self.aggregates {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                a.gamma,
                a.kernels,
                a.mean_blocks,
                a.mean_log_ratio,
                a.log_ratio_half_width,
                a.exact,
                opt(a.mean_time_ratio),
                opt(a.time_ratio_half_width)
            ));
        }
        out
    }
}

fn median_ms<T>(reps: usize, mut f: impl FnMut() -> Result<T>) -> Result<(T, f64)> {
    let mut times = Vec::with_capacity(reps);
    let mut last = None;
    for _ in 0..reps {
        let start = Instant::now();
        let out = f()?;
        times.push(start.elapsed().as_secs_f64() * 1e3);
        last = Some(out);
    }
    times.sort_by(f64::total_cmp);
    Ok((last.expect("at least one repetition"), times[times.len() / 2]))
}

/// Mean and `3·s/√n` with the sample standard deviation; zero width for n = 1.
fn mean_half_width(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, 3.0 * var.sqrt() / n.sqrt())
}

/// Compare block-wise inference against greedy on the full kernel.
///
/// Kernel `k` is drawn from `spec` with seed `spec.seed + k`. Its baseline is
/// greedy on the whole kernel. For every γ the timed run covers building the
/// γ-partition and the block-wise pass. Runs are sequential, so every
/// measurement happens on one thread.
pub fn benchmark_map(
    spec: &SyntheticKernelSpec,
    n_kernels: usize,
    gammas: &[usize],
    opts: &BenchOptions,
) -> Result<MapBenchReport> {
    if n_kernels == 0 {
        return Err(Error::invalid("need at least one kernel"));
    }
    if gammas.is_empty() {
        return Err(Error::invalid("need at least one gamma"));
    }
    if opts.repetitions == 0 {
        return Err(Error::invalid("repetitions must be at least 1"));
    }
    spec.validate()?;
    let solver = Greedy(opts.greedy);
    let mut records = Vec::with_capacity(n_kernels);
    for k in 0..n_kernels {
        let seed = spec.seed.wrapping_add(k as u64);
        let (kernel, _) = generate_synthetic_kernel(&spec.with_seed(seed))?;
        let (reference, ref_ms) = median_ms(opts.repetitions, || greedy_map(&kernel, &opts.greedy))?;
        let ref_log_prob = log_prob_unnormalized(&kernel, &reference)?;
        let mut runs = Vec::with_capacity(gammas.len());
        for &gamma in gammas {
            let ((selected, blocks), ms) = median_ms(opts.repetitions, || {
                let p = gamma_partition(&kernel, gamma, opts.eps_zero);
                let (sel, _) = bwdpp_map(&kernel, &p, &solver)?;
                Ok((sel, p.num_blocks()))
            })?;
            let log_prob = log_prob_unnormalized(&kernel, &selected)?;
            runs.push(GammaRun {
                gamma,
                blocks,
                log_ratio: log_prob - ref_log_prob,
                ms: Some(ms),
                time_ratio: Some(ms / ref_ms.max(1e-9)),
            });
        }
        records.push(KernelRecord {
            index: k,
            seed,
            n: kernel.dim(),
            ref_log_prob,
            ref_size: reference.len(),
            ref_ms: Some(ref_ms),
            runs,
        });
    }
    let aggregates = gammas
        .iter()
        .enumerate()
        .map(|(g, &gamma)| {
            let runs: Vec<&GammaRun> = records.iter().map(|r| &r.runs[g]).collect();
            let logs: Vec<f64> = runs.iter().map(|r| r.log_ratio).collect();
            let times: Vec<f64> = runs.iter().filter_map(|r| r.time_ratio).collect();
            let (mean_log_ratio, log_ratio_half_width) = mean_half_width(&logs);
            let (mt, ht) = mean_half_width(&times);
            GammaAggregate {
                gamma,
                kernels: runs.len(),
                mean_blocks: runs.iter().map(|r| r.blocks as f64).sum::<f64>() / runs.len() as f64,
                mean_log_ratio,
                log_ratio_half_width,
                exact: logs.iter().filter(|&&l| l == 0.0).count(),
                mean_time_ratio: Some(mt),
                time_ratio_half_width: Some(ht),
            }
        })
        .collect();
    Ok(MapBenchReport {
        spec: spec.clone(),
        greedy: opts.greedy,
        kernels: n_kernels,
        gammas: gammas.to_vec(),
        aggregates,
        records,
    })
}
