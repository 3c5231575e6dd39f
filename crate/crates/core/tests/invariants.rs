mod common;

use std::sync::atomic::Ordering;
use std::thread;

use common::{pen_block_prox, random_blocks, random_rows, Dense, Pen};
use proptest::prelude::*;
use proxsaga::data::{parse_libsvm, write_libsvm};
use proxsaga::parallel::AtomicF64;
use proxsaga::penalty::phi_value;
use proxsaga::rng::SampleStream;
use proxsaga::saga::{exact_average, GradientMemory};
use proxsaga::{BlockPartition, CsrMatrix, Dataset, Loss, LossKind, Penalty, Problem};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn penalty_strategy() -> impl Strategy<Value = Penalty> {
    prop_oneof![
        Just(Penalty::Zero),
        (0.0..3.0f64).prop_map(|lambda| Penalty::L1 { lambda }),
        (0.0..3.0f64).prop_map(|lambda| Penalty::GroupL2 { lambda }),
        (-2.0..0.0f64, 0.0..2.0f64).prop_map(|(lo, hi)| Penalty::Box { lo, hi }),
    ]
}

fn library_block_prox(penalty: &Penalty, v: &[f64], t: f64) -> Vec<f64> {
    let mut out = v.to_vec();
    penalty.prox_block_in_place(&mut out, t);
    out
}

/// A random problem on a random partition, built from a seed.
fn seeded_problem_parts(seed: u64, n: usize, p: usize) -> (Dataset, BlockPartition) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = random_rows(&mut rng, n, p, 0.25);
    let labels = common::random_labels(&mut rng, n);
    let data = Dataset::new(CsrMatrix::from_rows(p, &rows).unwrap(), labels).unwrap();
    let partition = BlockPartition::from_blocks(p, random_blocks(&mut rng, p)).unwrap();
    (data, partition)
}

proptest! {
    #[test]
    fn prox_matches_closed_form(
        penalty in penalty_strategy(),
        v in prop::collection::vec(-5.0..5.0f64, 1..8),
        t in 0.001..4.0f64,
    ) {
        let got = library_block_prox(&penalty, &v, t);
        let want = pen_block_prox(Pen::from(penalty), &v, t);
        for (a, b) in got.iter().zip(&want) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn prox_is_firmly_nonexpansive(
        penalty in penalty_strategy(),
        pair in prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64), 1..8),
        t in 0.001..4.0f64,
    ) {
        let (u, v): (Vec<f64>, Vec<f64>) = pair.into_iter().unzip();
        let pu = library_block_prox(&penalty, &u, t);
        let pv = library_block_prox(&penalty, &v, t);
        let lhs: f64 = pu.iter().zip(&pv).map(|(a, b)| (a - b) * (a - b)).sum();
        let rhs: f64 = pu.iter().zip(&pv).zip(u.iter().zip(&v)).map(|((a, b), (c, d))| (a - b) * (c - d)).sum();
        prop_assert!(lhs <= rhs + 1e-12);
    }

    #[test]
    fn prox_minimizes_the_prox_objective(
        penalty in penalty_strategy(),
        v in prop::collection::vec(-5.0..5.0f64, 1..6),
        t in 0.01..4.0f64,
        dir in prop::collection::vec(-1.0..1.0f64, 6),
        scale in 1e-4..1.0f64,
    ) {
        let pen = Pen::from(penalty);
        let obj = |z: &[f64]| {
            common::pen_block_value(pen, z)
                + z.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / (2.0 * t)
        };
        let z = library_block_prox(&penalty, &v, t);
        let other: Vec<f64> = z.iter().zip(&dir).map(|(a, d)| a + scale * d).collect();
        prop_assert!(obj(&z) <= obj(&other) + 1e-12);
    }

    #[test]
    fn libsvm_round_trip(seed in any::<u64>(), n in 1usize..20, p in 1usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows = random_rows(&mut rng, n, p, 0.4);
        let labels = common::random_labels(&mut rng, n);
        let data = Dataset::new(CsrMatrix::from_rows(p, &rows).unwrap(), labels).unwrap();
        let mut buf = Vec::new();
        write_libsvm(&data, &mut buf).unwrap();
        let back = parse_libsvm(&buf[..], Some(p)).unwrap();
        prop_assert_eq!(back.labels(), data.labels());
        prop_assert_eq!(back.features(), data.features());
    }

    #[test]
    fn weights_make_the_surrogates_unbiased(seed in any::<u64>(), n in 2usize..30, p in 1usize..15) {
        let (data, partition) = seeded_problem_parts(seed, n, p);
        let problem = Problem::new(&data, Loss::logistic(0.1).unwrap(), Penalty::GroupL2 { lambda: 0.7 }, &partition).unwrap();
        let index = problem.index();
        let dense = Dense::new(&data, *problem.loss(), *problem.penalty(), &partition);

        // Mean of D_i over samples is the identity.
        let w = index.block_weights();
        let mut diag = vec![0.0; p];
        for i in 0..n {
            for &b in index.extended_support(i) {
                for &j in partition.block(b) {
                    diag[j] += w[b] / n as f64;
                }
            }
        }
        for d in diag {
            prop_assert!((d - 1.0).abs() <= 1e-12);
        }

        // Mean of phi_i is h.
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let x: Vec<f64> = (0..p).map(|_| rand::Rng::gen_range(&mut rng, -2.0..2.0)).collect();
        let mean_phi: f64 = (0..n).map(|i| phi_value(problem.penalty(), &partition, index, i, &x)).sum::<f64>() / n as f64;
        let h = dense.penalty(&x);
        prop_assert!((mean_phi - h).abs() <= 1e-12 * (1.0 + h.abs()));
        prop_assert!(index.delta() >= 1.0 / n as f64 && index.delta() <= 1.0);
    }

    #[test]
    fn incremental_average_matches_direct_sum(
        seed in any::<u64>(),
        updates in prop::collection::vec((0usize..25, -3.0..3.0f64), 1..300),
    ) {
        let (data, _) = seeded_problem_parts(seed, 25, 8);
        let mut memory = GradientMemory::zeros(25, 8);
        for &(i, s) in &updates {
            memory.update(&data, i, s);
        }
        let exact = exact_average(&data, memory.scalars());
        for (a, b) in memory.avg().iter().zip(&exact) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
        prop_assert!(memory.drift(&data) <= 1e-12);
    }

    #[test]
    fn loss_derivative_matches_finite_differences(z in -20.0..20.0f64, label in prop_oneof![Just(-1.0), Just(1.0)]) {
        for kind in [LossKind::Logistic, LossKind::Squared] {
            let h = 1e-6;
            let fd = (kind.value(z + h, label) - kind.value(z - h, label)) / (2.0 * h);
            prop_assert!((kind.derivative(z, label) - fd).abs() <= 1e-6);
        }
    }

    #[test]
    fn sample_stream_stays_in_range_and_replays(seed in any::<u64>(), stream in 0u64..8, n in 1usize..1000) {
        let mut a = SampleStream::new(seed, stream, n);
        let mut b = SampleStream::new(seed, stream, n);
        for _ in 0..200 {
            let i = a.next_index();
            prop_assert!(i < n);
            prop_assert_eq!(i, b.next_index());
        }
    }

    #[test]
    fn partition_rejects_overlaps_and_gaps(seed in any::<u64>(), p in 2usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let blocks = random_blocks(&mut rng, p);
        prop_assert!(BlockPartition::from_blocks(p, blocks.clone()).is_ok());
        let mut gap = blocks.clone();
        gap[0].pop();
        prop_assert!(BlockPartition::from_blocks(p, gap).is_err());
        let mut overlap = blocks;
        let first = overlap[0][0];
        let last = overlap.len() - 1;
        overlap[last].push(first);
        prop_assert!(BlockPartition::from_blocks(p, overlap).is_err());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn concurrent_atomic_adds_of_integers_are_exact(threads in 1usize..6, adds in 1usize..2000) {
        let cell = AtomicF64::new(0.0);
        thread::scope(|s| {
            for _ in 0..threads {
                s.spawn(|| {
                    for _ in 0..adds {
                        cell.fetch_add(1.0, Ordering::SeqCst);
                    }
                });
            }
        });
        prop_assert_eq!(cell.load(Ordering::SeqCst), (threads * adds) as f64);
    }
}
