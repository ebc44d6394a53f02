mod common;

use num_traits::Zero;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use st_lab_core::incidence::peel_richness;
use st_lab_core::{clean, count_incidences, Configuration, CountMethod};

/// Brute force: evaluate every line at every point.
fn oracle_count(cfg: &Configuration) -> usize {
    cfg.lines()
        .iter()
        .map(|l| cfg.points().iter().filter(|p| l.eval(p).is_zero()).count())
        .sum()
}

/// Removes one random below-threshold element at a time.
fn sequential_peel(cfg: &Configuration, pmin: usize, lmin: usize, seed: u64) -> (Vec<bool>, Vec<bool>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pa = vec![true; cfg.n_points()];
    let mut la = vec![true; cfg.n_lines()];
    loop {
        let mut weak: Vec<(bool, usize)> = Vec::new();
        for p in 0..cfg.n_points() {
            if pa[p] && cfg.lines_through(p).iter().filter(|&&l| la[l]).count() < pmin {
                weak.push((true, p));
            }
        }
        for l in 0..cfg.n_lines() {
            if la[l] && cfg.points_on(l).iter().filter(|&&p| pa[p]).count() < lmin {
                weak.push((false, l));
            }
        }
        if weak.is_empty() {
            return (pa, la);
        }
        let (is_point, id) = weak[rng.gen_range(0..weak.len())];
        if is_point {
            pa[id] = false;
        } else {
            la[id] = false;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn methods_agree_with_oracle(seed in any::<u64>(), n in 1usize..120, m in 1usize..120) {
        let cfg = common::dense_config(seed, n, m, 9);
        let naive = count_incidences(&cfg, CountMethod::Naive);
        let grouped = count_incidences(&cfg, CountMethod::Grouped);
        prop_assert_eq!(&naive, &grouped);
        prop_assert_eq!(naive.total, oracle_count(&cfg));
        prop_assert_eq!(naive.per_point_richness.iter().sum::<usize>(), naive.total);
        prop_assert_eq!(naive.per_line_richness.iter().sum::<usize>(), naive.total);
    }

    #[test]
    fn peeling_is_confluent(seed in any::<u64>(), pmin in 0usize..4, lmin in 0usize..5) {
        let cfg = common::dense_config(seed, 40, 40, 7);
        let rounds = peel_richness(&cfg, pmin as u64, lmin as u64);
        for order in 0..3 {
            let (pa, la) = sequential_peel(&cfg, pmin, lmin, seed ^ order);
            prop_assert_eq!(&pa, &rounds.points_alive);
            prop_assert_eq!(&la, &rounds.lines_alive);
        }
    }

    #[test]
    fn cleaned_richness_meets_thresholds(seed in any::<u64>()) {
        let cfg = common::dense_config(seed, 80, 80, 8);
        let report = clean(&cfg, &st_lab_core::geometry::rat(1, 1)).unwrap();
        let sub = cfg.restrict(&report.surviving_points, &report.surviving_lines).config;
        for p in 0..sub.n_points() {
            prop_assert!(sub.lines_through(p).len() as u64 >= report.point_min_richness);
        }
        for l in 0..sub.n_lines() {
            prop_assert!(sub.points_on(l).len() as u64 >= report.line_min_richness);
        }
        prop_assert_eq!(sub.incidence_count(), report.incidences_after);
    }
}
