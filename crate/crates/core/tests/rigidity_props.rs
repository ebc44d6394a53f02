mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use st_lab_core::geometry::rat;
use st_lab_core::linalg::dense_rank;
use st_lab_core::rigidity::{collinearity_matrix, determinant_gradient, projective_kernel_check};
use st_lab_core::{consecutive_triples, rigidity_certificate, Point, Rational, TripleKind, TripleSystem};

fn det(p: [(f64, f64); 3]) -> f64 {
    let [(x1, y1), (x2, y2), (x3, y3)] = p;
    x1 * (y2 - y3) - y1 * (x2 - x3) + (x2 * y3 - x3 * y2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn gradient_matches_finite_differences(c in proptest::array::uniform6(-1000i64..1000)) {
        let pts: Vec<Point> = (0..3).map(|i| Point::new(rat(c[2 * i], 100), rat(c[2 * i + 1], 100))).collect();
        let g = determinant_gradient(&pts[0], &pts[1], &pts[2]);
        let base: Vec<(f64, f64)> = pts.iter().map(|p| (num_traits::ToPrimitive::to_f64(&p.x).unwrap(), num_traits::ToPrimitive::to_f64(&p.y).unwrap())).collect();
        let h = 1e-6;
        for k in 0..6 {
            let mut plus = [base[0], base[1], base[2]];
            let mut minus = plus;
            if k % 2 == 0 { plus[k / 2].0 += h; minus[k / 2].0 -= h; } else { plus[k / 2].1 += h; minus[k / 2].1 -= h; }
            let fd = (det(plus) - det(minus)) / (2.0 * h);
            let exact = num_traits::ToPrimitive::to_f64(&g[k]).unwrap();
            prop_assert!((fd - exact).abs() <= 1e-4 * exact.abs().max(1.0), "k={} fd={} exact={}", k, fd, exact);
        }
    }

    #[test]
    fn projective_fields_are_in_the_kernel(seed in any::<u64>()) {
        let cfg = common::dense_config(seed, 30, 25, 6);
        let t = consecutive_triples(&cfg);
        let m = collinearity_matrix(cfg.points(), &t).unwrap();
        prop_assert!(projective_kernel_check(cfg.points(), &m).is_ok());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn rank_is_invariant_and_monotone(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = common::dense_config(seed, 16, 14, 5);
        let t = consecutive_triples(&cfg);
        let base = rigidity_certificate(cfg.points(), &t).unwrap();
        let m = collinearity_matrix(cfg.points(), &t).unwrap();
        prop_assert_eq!(base.rank, dense_rank(&m.dense()));

        // relabel
        let perm = common::shuffled(&(0..cfg.n_points()).collect::<Vec<_>>(), &mut rng);
        let mut moved = vec![cfg.point(0).clone(); cfg.n_points()];
        for (old, &new) in perm.iter().enumerate() {
            moved[new] = cfg.point(old).clone();
        }
        let relabeled: Vec<[usize; 3]> = t.triples().iter().map(|tr| tr.map(|p| perm[p])).collect();
        let rt = TripleSystem::new(TripleKind::Collinear, (0..cfg.n_points()).collect(), relabeled).unwrap();
        prop_assert_eq!(rigidity_certificate(&moved, &rt).unwrap().rank, base.rank);

        // invertible affine image
        let (a, b, c, d) = loop {
            let v: (i64, i64, i64, i64) = (rng.gen_range(-4..5), rng.gen_range(-4..5), rng.gen_range(-4..5), rng.gen_range(-4..5));
            if v.0 * v.3 - v.1 * v.2 != 0 { break v; }
        };
        let (e, f) = (rat(rng.gen_range(-9..10), 2), rat(rng.gen_range(-9..10), 3));
        let image: Vec<Point> = cfg.points().iter().map(|p| Point::new(
            Rational::from_integer(a.into()) * &p.x + Rational::from_integer(b.into()) * &p.y + &e,
            Rational::from_integer(c.into()) * &p.x + Rational::from_integer(d.into()) * &p.y + &f,
        )).collect();
        prop_assert_eq!(rigidity_certificate(&image, &t).unwrap().rank, base.rank);

        // dropping triples never raises the rank
        let half = t.filter(t.ground().to_vec(), |i, _| i % 2 == 0);
        let smaller = rigidity_certificate(cfg.points(), &half).unwrap();
        prop_assert!(smaller.rank <= base.rank);
        prop_assert!(smaller.certificate >= base.certificate);
    }
}
