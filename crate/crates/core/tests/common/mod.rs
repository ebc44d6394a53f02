#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use st_lab_core::{line_through, Configuration, Line, Point};

/// Points on a small grid and lines through random pairs of them, so that
/// rich lines and rich points are common.
pub fn dense_config(seed: u64, points: usize, lines: usize, side: i64) -> Configuration {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = BTreeSet::new();
    let cap = (side * side) as usize;
    while seen.len() < points.min(cap) {
        seen.insert((rng.gen_range(0..side), rng.gen_range(0..side)));
    }
    let pts: Vec<Point> = seen.iter().map(|&(x, y)| Point::from_ints(x, y)).collect();
    let mut ls = BTreeSet::new();
    let mut attempts = 0;
    while ls.len() < lines && pts.len() >= 2 && attempts < 50 * lines + 100 {
        attempts += 1;
        let i = rng.gen_range(0..pts.len());
        let j = rng.gen_range(0..pts.len());
        if i != j {
            ls.insert(line_through(&pts[i], &pts[j]).unwrap());
        }
    }
    Configuration::new(pts, ls.into_iter().collect::<Vec<Line>>()).unwrap()
}

pub fn shuffled<T: Clone>(items: &[T], rng: &mut ChaCha8Rng) -> Vec<T> {
    let mut v = items.to_vec();
    for i in (1..v.len()).rev() {
        let j = rng.gen_range(0..=i);
        v.swap(i, j);
    }
    v
}
