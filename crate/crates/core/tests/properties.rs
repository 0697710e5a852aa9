use bwdpp::cpd::{build_cpd_kernel, CandidateSet};
use bwdpp::eval::{evaluate, match_changes};
use bwdpp::kernel::{
    gamma_partition, generate_synthetic_kernel, validate_partition, BlockPartition, DppKernel, QualityVector,
    SyntheticKernelSpec, DEFAULT_EPS_ZERO,
};
use bwdpp::map::{
    bwdpp_map, bwdpp_map_conditional_form, greedy_map, log_prob_unnormalized, Greedy, GreedyOptions,
};
use bwdpp::matrix::{cholesky_psd, log_det, min_eigenvalue, SymMatrix};
use bwdpp::metrics::{glr_gaussian, glr_poisson, segment_stats_regularized, symkl, MetricOptions};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn gram(n: usize, d: usize, entries: &[f64]) -> SymMatrix {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..d).map(|k| entries[i * d + k] * entries[j * d + k]).sum())
                .collect()
        })
        .collect();
    SymMatrix::from_rows(&rows).unwrap()
}

fn gram_strategy() -> impl Strategy<Value = SymMatrix> {
    (1usize..9, 1usize..9).prop_flat_map(|(n, d)| {
        prop::collection::vec(-2.0f64..2.0, n * d).prop_map(move |e| gram(n, d, &e).shifted(0.05))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cholesky_reconstructs_spd(m in gram_strategy()) {
        let f = cholesky_psd(&m, 1e-12).unwrap();
        prop_assert!(f.reconstruct().max_abs_diff(&m) <= 1e-10 * (1.0 + m.max_abs()));
        prop_assert!(min_eigenvalue(&m, 1e-13).unwrap() > 0.0);
    }

    #[test]
    fn log_det_of_block_diagonal_is_additive(a in gram_strategy(), b in gram_strategy()) {
        let (na, nb) = (a.dim(), b.dim());
        let mut rows = vec![vec![0.0; na + nb]; na + nb];
        for (i, row) in rows.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                if i < na && j < na {
                    *v = a.get(i, j);
                } else if i >= na && j >= na {
                    *v = b.get(i - na, j - na);
                }
            }
        }
        let m = SymMatrix::from_rows(&rows).unwrap();
        let whole = log_det(&m).unwrap();
        let parts = log_det(&a).unwrap() + log_det(&b).unwrap();
        prop_assert!((whole - parts).abs() <= 1e-9 * (1.0 + whole.abs()));
    }

    #[test]
    fn greedy_sets_have_finite_log_prob(m in gram_strategy()) {
        let k = DppKernel::new(m).unwrap();
        let sel = greedy_map(&k, &GreedyOptions::default()).unwrap();
        prop_assert!(log_prob_unnormalized(&k, &sel).unwrap().is_finite());
    }

    #[test]
    fn trivial_partition_reproduces_full_greedy(m in gram_strategy()) {
        let k = DppKernel::new(m).unwrap();
        let opts = GreedyOptions::default();
        let (sel, _) = bwdpp_map(&k, &BlockPartition::trivial(k.dim()), &Greedy(opts)).unwrap();
        prop_assert_eq!(sel, greedy_map(&k, &opts).unwrap());
    }

    #[test]
    fn blockwise_forms_agree(seed in 0u64..10_000, gamma in prop::sample::select(vec![0usize, 2, 4])) {
        let spec = SyntheticKernelSpec { n: 40, block_size_range: [4, 9], feature_dim: 6, seed, ..Default::default() };
        let (k, _) = generate_synthetic_kernel(&spec).unwrap();
        let p = gamma_partition(&k, gamma, DEFAULT_EPS_ZERO);
        let f = Greedy(GreedyOptions::default());
        let (a, _) = bwdpp_map(&k, &p, &f).unwrap();
        let b = bwdpp_map_conditional_form(&k, &p, &f).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn symkl_is_symmetric_and_affine_invariant(
        xs in prop::collection::vec(-3.0f64..3.0, 40),
        ys in prop::collection::vec(-3.0f64..3.0, 40),
        scale in 0.5f64..4.0,
        shift in -10.0f64..10.0,
    ) {
        let opts = MetricOptions { reg_relative: 0.0, reg_absolute: 0.0, ..Default::default() };
        let a = segment_stats_regularized(&xs, 2, &opts).unwrap();
        let b = segment_stats_regularized(&ys, 2, &opts).unwrap();
        let ab = symkl(&a, &b).unwrap();
        prop_assert_eq!(ab, symkl(&b, &a).unwrap());
        prop_assert!(ab >= 0.0);
        prop_assert!(symkl(&a, &a).unwrap().abs() <= 1e-9);
        // x ↦ A x + c with A = [[s, 0.3], [0, 1/s]].
        let map = |v: &[f64]| -> Vec<f64> {
            v.chunks(2).flat_map(|p| [scale * p[0] + 0.3 * p[1] + shift, p[1] / scale - shift]).collect()
        };
        let a2 = segment_stats_regularized(&map(&xs), 2, &opts).unwrap();
        let b2 = segment_stats_regularized(&map(&ys), 2, &opts).unwrap();
        let ab2 = symkl(&a2, &b2).unwrap();
        prop_assert!((ab - ab2).abs() <= 1e-6 * (1.0 + ab.abs()), "{} vs {}", ab, ab2);
    }

    #[test]
    fn gaussian_glr_is_non_negative(
        xs in prop::collection::vec(-3.0f64..3.0, 6..60),
        ys in prop::collection::vec(-3.0f64..3.0, 6..60),
    ) {
        let g = glr_gaussian(&xs, &ys, 1, &MetricOptions::default()).unwrap();
        prop_assert!(g >= -1e-9 * (1.0 + xs.len() as f64 + ys.len() as f64), "{}", g);
    }

    #[test]
    fn poisson_glr_respects_gap_bound(
        a in prop::collection::vec(0.01f64..1.0, 2..20),
        b in prop::collection::vec(0.01f64..1.0, 2..20),
        gap in 0.001f64..2.0,
    ) {
        let mut t = 0.0;
        let e1: Vec<f64> = a.iter().map(|d| { t += d; t }).collect();
        t += gap;
        let e2: Vec<f64> = b.iter().map(|d| { let v = t; t += d; v }).collect();
        let g = glr_poisson(&e1, &e2).unwrap();
        let real_gap = e2[0] - e1[e1.len() - 1];
        prop_assert!(g >= 1.0 + real_gap.ln() - 1e-9, "{} < 1 + ln {}", g, real_gap);
    }

    #[test]
    fn scores_are_bounded(
        det in prop::collection::vec(0.0f64..1000.0, 0..15),
        truth in prop::collection::vec(0.0f64..1000.0, 0..15),
        tol in 0.0f64..80.0,
    ) {
        let r = evaluate(&det, &truth, tol);
        for v in [r.precision, r.recall, r.f1] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        prop_assert!(r.f1 <= r.precision.max(r.recall) + 1e-15);
        if r.precision + r.recall > 0.0 {
            prop_assert_eq!(r.f1, 2.0 * r.precision * r.recall / (r.precision + r.recall));
        }
    }

    #[test]
    fn matching_is_one_to_one_and_symmetric(
        mut det in prop::collection::vec(0.0f64..1000.0, 0..15),
        mut truth in prop::collection::vec(0.0f64..1000.0, 0..15),
        tol in 0.0f64..80.0,
    ) {
        det.sort_by(f64::total_cmp);
        truth.sort_by(f64::total_cmp);
        let m = match_changes(&det, &truth, tol);
        prop_assert!(m.pairs.iter().all(|(d, t)| (d - t).abs() <= tol));
        prop_assert_eq!(m.pairs.len() + m.unmatched_detected.len(), det.len());
        prop_assert_eq!(m.pairs.len() + m.unmatched_truth.len(), truth.len());
        let swapped = match_changes(&truth, &det, tol);
        let mut a: Vec<(u64, u64)> = m.pairs.iter().map(|(d, t)| (d.to_bits(), t.to_bits())).collect();
        let mut b: Vec<(u64, u64)> = swapped.pairs.iter().map(|(t, d)| (d.to_bits(), t.to_bits())).collect();
        a.sort();
        b.sort();
        prop_assert_eq!(a, b);
    }
}

/// Count valid partitions by brute force over all cut subsets.
fn max_valid_blocks(k: &DppKernel, gamma: usize) -> usize {
    let n = k.dim();
    let mut best = 1;
    for mask in 0u32..(1 << (n - 1)) {
        let cuts: Vec<usize> = (1..n).filter(|c| mask & (1 << (c - 1)) != 0).collect();
        if cuts.len() < best {
            continue;
        }
        let mut sizes = Vec::new();
        let mut prev = 0;
        for &c in cuts.iter().chain(std::iter::once(&n)) {
            sizes.push(c - prev);
            prev = c;
        }
        let p = BlockPartition::new(sizes, gamma).unwrap();
        if validate_partition(k, &p, DEFAULT_EPS_ZERO).unwrap() {
            best = cuts.len() + 1;
        }
    }
    best
}

#[test]
fn gamma_partition_is_valid_and_maximal() {
    for seed in 0..40u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = SyntheticKernelSpec {
            n: rng.random_range(4..=12),
            block_size_range: [1, 5],
            overlap_choices: vec![0, 1, 2, 3],
            feature_dim: 3,
            seed,
        };
        let (k, _) = generate_synthetic_kernel(&spec).unwrap();
        for gamma in 0..4 {
            let p = gamma_partition(&k, gamma, DEFAULT_EPS_ZERO);
            assert!(validate_partition(&k, &p, DEFAULT_EPS_ZERO).unwrap(), "seed {seed} gamma {gamma}");
            assert_eq!(p.num_blocks(), max_valid_blocks(&k, gamma), "seed {seed} gamma {gamma}");
        }
    }
}

#[test]
fn gamma_partition_blocks_grow_with_gamma() {
    for seed in 0..20u64 {
        let (k, _) = generate_synthetic_kernel(&SyntheticKernelSpec {
            n: 120,
            seed,
            ..Default::default()
        })
        .unwrap();
        let counts: Vec<usize> = [0, 2, 4, 6].iter().map(|&g| gamma_partition(&k, g, DEFAULT_EPS_ZERO).num_blocks()).collect();
        assert!(counts.windows(2).all(|w| w[0] <= w[1]), "{counts:?}");
    }
}

#[test]
fn blockwise_selection_is_a_valid_subset() {
    for seed in 0..20u64 {
        let (k, _) = generate_synthetic_kernel(&SyntheticKernelSpec {
            n: 100,
            seed,
            ..Default::default()
        })
        .unwrap();
        let p = gamma_partition(&k, 4, DEFAULT_EPS_ZERO);
        let (sel, trace) = bwdpp_map(&k, &p, &Greedy(GreedyOptions::default())).unwrap();
        assert!(sel.iter().all(|&i| i < k.dim()));
        assert_eq!(trace.blocks.len(), p.num_blocks());
        assert_eq!(trace.selected(), sel);
        assert!(log_prob_unnormalized(&k, &sel).unwrap().is_finite());
    }
}

/// Larger σ strengthens the repulsion between candidates, so the number of
/// selected points should not grow; checked as a trend over a σ grid.
#[test]
fn selection_count_shrinks_with_sigma() {
    let grid = [2.0, 5.0, 10.0, 20.0, 40.0, 80.0, 160.0, 320.0, 640.0];
    let (mut steps, mut monotone) = (0, 0);
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = rng.random_range(10..40);
        let mut times: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..3000.0f64).round()).collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        let q: Vec<f64> = times.iter().map(|_| rng.random_range(0.8..2.0)).collect();
        let cand = CandidateSet {
            values: q.clone(),
            profile_index: (0..times.len()).collect(),
            times,
        };
        let q = QualityVector::new(q).unwrap();
        let counts: Vec<usize> = grid
            .iter()
            .map(|&sigma| {
                let (k, p) = build_cpd_kernel(&cand, &q, sigma, 2, DEFAULT_EPS_ZERO).unwrap();
                bwdpp_map(&k, &p, &Greedy(GreedyOptions::default())).unwrap().0.len()
            })
            .collect();
        for w in counts.windows(2) {
            steps += 1;
            monotone += usize::from(w[1] <= w[0]);
        }
    }
    let frac = monotone as f64 / steps as f64;
    assert!(frac >= 0.95, "monotone in {monotone}/{steps} steps");
}
