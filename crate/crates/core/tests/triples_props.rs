mod common;

use std::collections::BTreeMap;

use num_bigint::BigInt;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use st_lab_core::geometry::rat;
use st_lab_core::triples::triple_peel;
use st_lab_core::{consecutive_triples, Rational, TripleSystem};

/// One-at-a-time removal of a random point below `threshold`.
fn sequential_triple_peel(points: &[usize], triples: &TripleSystem, threshold: &Rational, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut alive: BTreeMap<usize, bool> = points.iter().map(|&p| (p, true)).collect();
    loop {
        let live = |t: &[usize; 3], alive: &BTreeMap<usize, bool>| t.iter().all(|p| alive.get(p).copied().unwrap_or(false));
        let weak: Vec<usize> = alive
            .iter()
            .filter(|(_, &a)| a)
            .map(|(&p, _)| p)
            .filter(|p| {
                let c = triples.triples().iter().filter(|t| t.contains(p) && live(t, &alive)).count();
                Rational::from_integer(BigInt::from(c)) < *threshold
            })
            .collect();
        if weak.is_empty() {
            return alive.into_iter().filter_map(|(p, a)| a.then_some(p)).collect();
        }
        alive.insert(weak[rng.gen_range(0..weak.len())], false);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn triple_count_and_pair_multiplicity(seed in any::<u64>(), n in 3usize..80, m in 1usize..60) {
        let cfg = common::dense_config(seed, n, m, 8);
        let t = consecutive_triples(&cfg);
        let expect: usize = (0..cfg.n_lines()).map(|l| cfg.points_on(l).len().saturating_sub(2)).sum();
        prop_assert_eq!(t.len(), expect);
        prop_assert!(t.max_pair_multiplicity() <= 2);
    }

    #[test]
    fn peel_loss_and_confluence(seed in any::<u64>(), num in 0i64..12) {
        let cfg = common::dense_config(seed, 40, 40, 7);
        let t = consecutive_triples(&cfg);
        let threshold = rat(num, 4);
        let points: Vec<usize> = (0..cfg.n_points()).collect();
        let report = triple_peel(&points, &t, &threshold);
        let removed = points.len() - report.surviving.len();
        let lost = t.len() - report.surviving_triples.len();
        prop_assert!(Rational::from_integer(BigInt::from(lost)) <= &threshold * Rational::from_integer(BigInt::from(removed)));
        for order in 0..2 {
            prop_assert_eq!(&sequential_triple_peel(&points, &t, &threshold, seed ^ order), &report.surviving);
        }
    }
}
