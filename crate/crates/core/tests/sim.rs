mod common;

use proptest::prelude::*;
use tplcov::sim::{block_size, generate};
use tplcov::{
    gen_block_diagonal, gen_sparse_random, sample_covariance, sample_mvn, support_metrics, CovSpec, SeedStream,
    Structure, SymMatrix, TruthSupport,
};

/// Block size found by scanning every candidate and keeping the first minimum.
fn block_size_oracle(p: usize, tau: f64) -> usize {
    let target = (1.0 - tau) * (p * (p - 1)) as f64 / 2.0;
    let mut best = 1;
    let mut best_d = f64::INFINITY;
    for b in 1..=p {
        let d = ((b * (b - 1)) as f64 / 2.0 - target).abs();
        if d < best_d {
            best = b;
            best_d = d;
        }
    }
    best
}

#[test]
fn block_size_matches_scan() {
    for p in 2..=60 {
        for tau in [0.1, 0.25, 0.5, 0.75, 0.9, 0.95] {
            assert_eq!(block_size(p, tau), block_size_oracle(p, tau), "p {p} tau {tau}");
        }
    }
}

#[test]
fn block_truth_is_pd_with_leading_block() {
    for seed in 0..30 {
        for (p, tau) in [(20, 0.5), (20, 0.9), (50, 0.9)] {
            let spec = CovSpec::new(Structure::BlockDiagonal, p, tau).unwrap();
            let (theta, truth) = gen_block_diagonal(&spec, &mut SeedStream::new(seed).rng()).unwrap();
            assert!(theta.is_pd());
            let b = block_size(p, tau);
            assert_eq!(truth.m0(), b * (b - 1) / 2);
            for j in 0..p {
                assert_eq!(theta.get(j, j), 1.0);
                for k in (j + 1)..p {
                    let in_block = k < b;
                    assert_eq!(theta.get(j, k) != 0.0, in_block);
                    assert_eq!(truth.contains(j, k), in_block);
                }
            }
        }
    }
}

#[test]
fn random_truth_density_and_values() {
    for seed in 0..100 {
        let spec = CovSpec::new(Structure::SparseRandom, 20, 0.9).unwrap();
        let (theta, truth) = gen_sparse_random(&spec, &mut SeedStream::new(seed).rng()).unwrap();
        assert!(theta.is_pd());
        // binomial(190, 0.1) well inside its tails
        assert!((7..=33).contains(&truth.m0()), "seed {seed}: {}", truth.m0());
        assert_eq!(truth, TruthSupport::of_matrix(&theta));
        for &(j, k) in truth.pairs() {
            assert!(theta.get(j, k).abs() <= 0.6);
        }
    }
}

#[test]
fn generation_rejects_bad_specs() {
    assert!(CovSpec::new(Structure::BlockDiagonal, 1, 0.5).is_err());
    assert!(CovSpec::new(Structure::BlockDiagonal, 10, 0.0).is_err());
    assert!(CovSpec::new(Structure::SparseRandom, 10, 1.0).is_err());
    let spec = CovSpec::new(Structure::SparseRandom, 10, 0.5).unwrap();
    assert!(gen_block_diagonal(&spec, &mut SeedStream::new(1).rng()).is_err());
}

#[test]
fn mvn_sample_moments() {
    let theta = SymMatrix::from_vech(3, vec![1.0, 0.5, -0.2, 2.0, 0.3, 1.5]).unwrap();
    let data = sample_mvn(&theta, 200_000, &mut SeedStream::new(5).rng()).unwrap();
    let s = sample_covariance(&data, false).unwrap();
    for j in 0..3 {
        let mean = data.rows().map(|r| r[j]).sum::<f64>() / 200_000.0;
        assert!(mean.abs() < 0.02);
        for k in 0..3 {
            assert!((s.get(j, k) - theta.get(j, k)).abs() < 0.03, "({j},{k})");
        }
    }
}

#[test]
fn streams_are_reproducible() {
    let spec = CovSpec::new(Structure::SparseRandom, 15, 0.8).unwrap();
    let run = |stream: SeedStream| {
        let mut rng = stream.rng();
        let (theta, _) = generate(&spec, &mut rng).unwrap();
        sample_mvn(&theta, 30, &mut rng).unwrap()
    };
    let master = SeedStream::new(42);
    assert_eq!(run(master.derive(&[1, 2])), run(master.derive(&[1, 2])));
    assert_ne!(run(master.derive(&[1, 2])), run(master.derive(&[2, 1])));
    assert_ne!(master.derive(&[0]), master.derive(&[0, 0]));
}

#[test]
fn metrics_on_small_cases() {
    let truth = TruthSupport::from_pairs([(0, 1), (1, 2)]);
    let est = TruthSupport::from_pairs([(1, 0), (0, 3)]);
    let m = support_metrics(&est, &truth, 4);
    assert_eq!(m.sn, Some(0.5));
    assert_eq!(m.sp, Some(3.0 / 4.0));
    assert_eq!(m.ac, 4.0 / 6.0);
    let empty = TruthSupport::default();
    let m = support_metrics(&empty, &empty, 4);
    assert_eq!((m.sn, m.sp, m.ac), (None, Some(1.0), 1.0));
}

fn support_strategy() -> impl Strategy<Value = (usize, Vec<bool>, Vec<bool>)> {
    (2usize..12).prop_flat_map(|p| {
        let m = p * (p - 1) / 2;
        (Just(p), prop::collection::vec(any::<bool>(), m), prop::collection::vec(any::<bool>(), m))
    })
}

fn to_support(p: usize, mask: &[bool]) -> TruthSupport {
    let mut pairs = Vec::new();
    let mut i = 0;
    for j in 0..p {
        for k in (j + 1)..p {
            if mask[i] {
                pairs.push((j, k));
            }
            i += 1;
        }
    }
    TruthSupport::from_pairs(pairs)
}

proptest! {
    #[test]
    fn accuracy_is_weighted_mean_of_sn_and_sp((p, t, e) in support_strategy()) {
        let truth = to_support(p, &t);
        let est = to_support(p, &e);
        let m = support_metrics(&est, &truth, p);
        let total = (p * (p - 1) / 2) as f64;
        let m0 = truth.m0() as f64;
        let ac = m.sn.unwrap_or(0.0) * m0 / total + m.sp.unwrap_or(0.0) * (total - m0) / total;
        prop_assert!((m.ac - ac).abs() < 1e-12);
        for v in [m.sn, m.sp].into_iter().flatten() {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }
}
