mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use st_lab_core::{closure, Configuration};

/// Applies single derivation steps in random order until none applies.
fn sequential_closure(cfg: &Configuration, points: &[usize], lines: &[usize], seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dp: BTreeSet<usize> = points.iter().copied().collect();
    let mut dl: BTreeSet<usize> = lines.iter().copied().collect();
    loop {
        let mut steps: Vec<(bool, usize)> = Vec::new();
        for l in 0..cfg.n_lines() {
            if !dl.contains(&l) && cfg.points_on(l).iter().filter(|p| dp.contains(p)).count() >= 2 {
                steps.push((false, l));
            }
        }
        for p in 0..cfg.n_points() {
            if !dp.contains(&p) && cfg.lines_through(p).iter().filter(|l| dl.contains(l)).count() >= 2 {
                steps.push((true, p));
            }
        }
        if steps.is_empty() {
            return (dp.into_iter().collect(), dl.into_iter().collect());
        }
        let (is_point, id) = steps[rng.gen_range(0..steps.len())];
        if is_point {
            dp.insert(id);
        } else {
            dl.insert(id);
        }
    }
}

fn seeds(cfg: &Configuration, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p: BTreeSet<usize> = (0..cfg.n_points()).filter(|_| rng.gen_bool(0.1)).collect();
    let l: BTreeSet<usize> = (0..cfg.n_lines()).filter(|_| rng.gen_bool(0.1)).collect();
    (p.into_iter().collect(), l.into_iter().collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn closure_laws(seed in any::<u64>(), n in 5usize..120, m in 5usize..120) {
        let cfg = common::dense_config(seed, n, m, 9);
        let (sp, sl) = seeds(&cfg, seed);
        let state = closure(&cfg, &sp, &sl);
        // monotone
        prop_assert!(sp.iter().all(|p| state.determined_points.binary_search(p).is_ok()));
        prop_assert!(sl.iter().all(|l| state.determined_lines.binary_search(l).is_ok()));
        // idempotent
        let again = closure(&cfg, &state.determined_points, &state.determined_lines);
        prop_assert_eq!(&again.determined_points, &state.determined_points);
        prop_assert_eq!(&again.determined_lines, &state.determined_lines);
        prop_assert_eq!(again.rounds, 1);
        // order independent
        let (op, ol) = sequential_closure(&cfg, &sp, &sl, seed);
        prop_assert_eq!(&op, &state.determined_points);
        prop_assert_eq!(&ol, &state.determined_lines);
        // enlarging the seeds never shrinks the result
        let mut more = sp.clone();
        more.extend((0..cfg.n_points()).step_by(7));
        let bigger = closure(&cfg, &more, &sl);
        prop_assert!(state.determined_points.iter().all(|p| bigger.determined_points.binary_search(p).is_ok()));
        // history is a record of additions ending in an empty round
        let last = state.history.last().unwrap();
        prop_assert_eq!((last.lines_added, last.points_added), (0, 0));
    }
}

fn summary(cell: u64, lines: Vec<usize>) -> st_lab_core::recovery::CellSummary {
    st_lab_core::recovery::CellSummary {
        cell: st_lab_core::CellId(cell),
        points: vec![0],
        in_cell_triples: 1,
        good: true,
        core_points: vec![0],
        core_lines: lines,
        core_certificate: Some(st_lab_core::RigidityCertificate {
            ground_size: 1,
            rank: 0,
            certificate: 2,
            triples_used: 0,
            degenerate_triples: 0,
            rank_method: st_lab_core::linalg::RankMethod::Bareiss,
        }),
    }
}

proptest! {
    #[test]
    fn greedy_unions_grow_within_bounds(sets in proptest::collection::vec(proptest::collection::btree_set(0usize..40, 0..12), 1..10), k in 1usize..12) {
        let cells: Vec<_> = sets.iter().enumerate().map(|(i, s)| summary(i as u64, s.iter().copied().collect())).collect();
        let sel = st_lab_core::recovery::greedy_select(&cells, k).unwrap();
        let all: BTreeSet<usize> = sets.iter().flatten().copied().collect();
        prop_assert!(sel.union_sizes.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(sel.union_sizes.iter().all(|&u| u <= all.len()));
        prop_assert_eq!(sel.cells.len(), k.min(cells.len()));
        prop_assert_eq!(sel.shortfall, cells.len() < k);
    }
}
