mod common;

use num_bigint::BigInt;
use proptest::prelude::*;
use st_lab_core::geometry::{rat, ProjectiveMap};
use st_lab_core::{dualize, incident, intersect, line_through, Configuration, Intersection, Line, Point};

fn point() -> impl Strategy<Value = Point> {
    (-50i64..50, 1i64..6, -50i64..50, 1i64..6).prop_map(|(a, b, c, d)| Point::new(rat(a, b), rat(c, d)))
}

proptest! {
    #[test]
    fn canonical_form_ignores_scale(a in -40i64..40, b in -40i64..40, c in -40i64..40, k in -9i64..9) {
        prop_assume!((a, b) != (0, 0) && k != 0);
        let l = Line::from_ints(a, b, c).unwrap();
        prop_assert_eq!(&Line::from_ints(k * a, k * b, k * c).unwrap(), &l);
        prop_assert_eq!(Line::new(l.a().clone(), l.b().clone(), l.c().clone()).unwrap(), l.clone());
        let g = num_integer::Integer::gcd(&num_integer::Integer::gcd(l.a(), l.b()), l.c());
        prop_assert_eq!(g, BigInt::from(1));
    }

    #[test]
    fn line_through_contains_both(p in point(), q in point()) {
        prop_assume!(p != q);
        let l = line_through(&p, &q).unwrap();
        prop_assert!(incident(&p, &l) && incident(&q, &l));
    }

    #[test]
    fn intersection_lies_on_both(a in point(), b in point(), c in point(), d in point()) {
        prop_assume!(a != b && c != d);
        let (l1, l2) = (line_through(&a, &b).unwrap(), line_through(&c, &d).unwrap());
        match intersect(&l1, &l2) {
            Intersection::Point(r) => prop_assert!(incident(&r, &l1) && incident(&r, &l2)),
            Intersection::Parallel => prop_assert!(l1 != l2),
            Intersection::Identical => prop_assert_eq!(l1, l2),
        }
    }

    #[test]
    fn double_dual_keeps_incidences(seed in any::<u64>()) {
        let cfg = common::dense_config(seed, 25, 20, 6);
        let once = dualize(&cfg);
        for l in 0..cfg.n_lines() {
            prop_assert_eq!(once.config.lines_through(l), cfg.points_on(l));
        }
        let twice = dualize(&once.config);
        prop_assert_eq!(twice.lambda, 0);
        for l in 0..cfg.n_lines() {
            prop_assert_eq!(twice.config.points_on(l), cfg.points_on(l));
        }
        prop_assert_eq!(twice.config.incidence_count(), cfg.incidence_count());
    }

    #[test]
    fn projective_maps_preserve_incidence(seed in any::<u64>(), m in proptest::array::uniform9(-3i64..4)) {
        let map = match ProjectiveMap::from_ints([[m[0], m[1], m[2]], [m[3], m[4], m[5]], [m[6], m[7], m[8]]]) {
            Ok(map) => map,
            Err(_) => return Ok(()),
        };
        let cfg = common::dense_config(seed, 20, 15, 5);
        if let Ok(image) = st_lab_core::geometry::apply_map(&map, &cfg) {
            prop_assert_eq!(image.incidence_count(), cfg.incidence_count());
            for l in 0..cfg.n_lines() {
                prop_assert_eq!(image.points_on(l), cfg.points_on(l));
            }
        }
    }
}

#[test]
fn configuration_rejects_duplicates() {
    let p = Point::from_ints(1, 1);
    assert!(Configuration::new(vec![p.clone(), p], vec![]).is_err());
}
