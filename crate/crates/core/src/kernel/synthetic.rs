use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{BlockPartition, DppKernel};
use crate::error::{Error, Result};
use crate::matrix::{psd_repair, SymMatrix};

/// Diagonal margin added on top of the minimal PSD shift.
const REPAIR_EPS: f64 = 1e-9;

/// Recipe for a random almost-block-diagonal kernel.
///
/// All draws come from a ChaCha8 stream seeded with `seed`, so a spec always
/// produces the same kernel on every platform.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticKernelSpec {
    pub n: usize,
    pub block_size_range: [usize; 2],
    pub overlap_choices: Vec<usize>,
    pub feature_dim: usize,
    pub seed: u64,
}

impl Default for SyntheticKernelSpec {
    fn default() -> Self {
        Self {
            n: 500,
            block_size_range: [10, 30],
            overlap_choices: vec![0, 2, 4, 6],
            feature_dim: 50,
            seed: 0,
        }
    }
}

impl SyntheticKernelSpec {
    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.block_size_range;
        if lo < 1 || hi < lo {
            return Err(Error::invalid(format!("bad block size range [{lo}, {hi}]")));
        }
        if self.overlap_choices.is_empty() {
            return Err(Error::invalid("overlap choices must not be empty"));
        }
        if self.feature_dim < 1 {
            return Err(Error::invalid("feature dimension must be >= 1"));
        }
        if self.n < lo {
            return Err(Error::invalid(format!(
                "kernel size {} is smaller than the minimum block size {lo}",
                self.n
            )));
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }
}

/// Draw a kernel and the partition it was built on.
///
/// Block sizes are drawn uniformly from the range until they cover `n` (the
/// last block takes the remainder); each adjacent pair gets a corner size
/// drawn from `overlap_choices`, clipped to both block sizes. Item vectors
/// are standard normal in `feature_dim` dimensions and `L_ij = B_iᵀ B_j` on
/// the block and corner pattern. Masking a Gram matrix can lose PSD, so the
/// result goes through a minimal diagonal shift.
pub fn generate_synthetic_kernel(spec: &SyntheticKernelSpec) -> Result<(DppKernel, BlockPartition)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n;
    let [lo, hi] = spec.block_size_range;

    let mut sizes = Vec::new();
    let mut covered = 0;
    while covered < n {
        let l = rng.random_range(lo..=hi).min(n - covered);
        sizes.push(l);
        covered += l;
    }
    let corners: Vec<usize> = sizes
        .windows(2)
        .map(|w| {
            let g = spec.overlap_choices[rng.random_range(0..spec.overlap_choices.len())];
            g.min(w[0]).min(w[1])
        })
        .collect();

    let d = spec.feature_dim;
    let features: Vec<f64> = (0..n * d).map(|_| rng.sample(StandardNormal)).collect();
    let gram = |i: usize, j: usize| -> f64 {
        features[i * d..(i + 1) * d]
            .iter()
            .zip(&features[j * d..(j + 1) * d])
            .map(|(a, b)| a * b)
            .sum()
    };

    let mut data = vec![0.0; n * n];
    let mut start = 0;
    let mut starts = Vec::with_capacity(sizes.len());
    for &l in &sizes {
        starts.push(start);
        for i in start..start + l {
            for j in i..start + l {
                let v = gram(i, j);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        start += l;
    }
    for (b, &g) in corners.iter().enumerate() {
        let cut = starts[b + 1];
        for i in cut - g..cut {
            for j in cut..cut + g {
                let v = gram(i, j);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
    }
    let l = psd_repair(&SymMatrix::new(n, data)?, REPAIR_EPS)?;
    let gamma = corners.iter().copied().max().unwrap_or(0);
    Ok((DppKernel::new_unchecked(l), BlockPartition::new(sizes, gamma)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{validate_partition, DEFAULT_EPS_ZERO};
    use crate::matrix::min_eigenvalue;

    #[test]
    fn deterministic_per_seed() {
        let spec = SyntheticKernelSpec {
            n: 60,
            block_size_range: [5, 12],
            seed: 3,
            ..Default::default()
        };
        let (a, pa) = generate_synthetic_kernel(&spec).unwrap();
        let (b, pb) = generate_synthetic_kernel(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(pa, pb);
        let (c, _) = generate_synthetic_kernel(&spec.with_seed(4)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn output_is_psd_and_matches_partition() {
        for seed in 0..10 {
            let spec = SyntheticKernelSpec {
                n: 80,
                block_size_range: [4, 15],
                feature_dim: 6,
                seed,
                ..Default::default()
            };
            let (k, p) = generate_synthetic_kernel(&spec).unwrap();
            assert_eq!(p.total(), 80);
            assert!(min_eigenvalue(k.matrix(), 1e-14).unwrap() >= -1e-10);
            assert!(validate_partition(&k, &p, DEFAULT_EPS_ZERO).unwrap());
        }
    }

    #[test]
    fn rejects_bad_specs() {
        let bad = SyntheticKernelSpec {
            n: 5,
            ..Default::default()
        };
        assert!(generate_synthetic_kernel(&bad).is_err());
        let bad = SyntheticKernelSpec {
            block_size_range: [4, 3],
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = SyntheticKernelSpec {
            feature_dim: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
