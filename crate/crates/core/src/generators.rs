//! Benchmark configurations.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{line_through, rat, Configuration, Line, Point};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GeneratorError {
    #[error("parameter {0} must be positive")]
    NonPositive(&'static str),
    #[error("cannot place {lines} distinct lines through pairs of {points} points")]
    TooManyLines { points: usize, lines: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GeneratorSpec {
    Elekes { n: u64 },
    Unbalanced { n: u64, s: u64 },
    Random { points: usize, lines: usize, seed: u64 },
    Circle { n: u64 },
}

impl GeneratorSpec {
    pub fn generate(&self) -> Result<Configuration, GeneratorError> {
        match *self {
            GeneratorSpec::Elekes { n } => {
                positive("n", n)?;
                Ok(gen_elekes(n))
            }
            GeneratorSpec::Unbalanced { n, s } => {
                positive("n", n)?;
                positive("s", s)?;
                Ok(gen_unbalanced(n, s))
            }
            GeneratorSpec::Random { points, lines, seed } => gen_random(points, lines, seed),
            GeneratorSpec::Circle { n } => {
                if n < 3 {
                    return Err(GeneratorError::NonPositive("n - 2"));
                }
                Ok(gen_circle(n))
            }
        }
    }
}

fn positive(name: &'static str, v: u64) -> Result<(), GeneratorError> {
    if v == 0 {
        Err(GeneratorError::NonPositive(name))
    } else {
        Ok(())
    }
}

/// Grid `{1..N} x {1..2N^2}` with the lines `y = ax + b`, `a in 1..=N`,
/// `b in 1..=N^2`. Every line meets exactly `N` grid points, so there are
/// `N^4` incidences among `2N^3` points and `N^3` lines.
pub fn gen_elekes(n: u64) -> Configuration {
    gen_unbalanced(n, 2)
}

/// Grid `{1..N} x {1..sN^2}` with lines `y = ax + b`, `a in 1..=N`,
/// `b in 1..=(s-1)N^2`. Each line stays inside the grid for `x in 1..=N`, so
/// each has exactly `N` incidences. `s = 1` has no lines.
pub fn gen_unbalanced(n: u64, s: u64) -> Configuration {
    let n = n as i64;
    let s = s as i64;
    let height = s * n * n;
    let mut points = Vec::with_capacity((n * height) as usize);
    for x in 1..=n {
        for y in 1..=height {
            points.push(Point::from_ints(x, y));
        }
    }
    let mut lines = Vec::new();
    for a in 1..=n {
        for b in 1..=(s - 1) * n * n {
            // y = ax + b  <=>  ax - y = -b
            lines.push(Line::from_ints(a, -1, -b).expect("nondegenerate"));
        }
    }
    Configuration::new(points, lines).expect("grid is duplicate free")
}

/// `n` distinct points uniform on `{0..4nm}^2` and `m` distinct lines, each
/// through a random pair of the points. Deterministic in `seed`.
pub fn gen_random(n: usize, m: usize, seed: u64) -> Result<Configuration, GeneratorError> {
    if n == 0 {
        return Err(GeneratorError::NonPositive("points"));
    }
    if m == 0 {
        return Err(GeneratorError::NonPositive("lines"));
    }
    if n < 2 || (n * (n - 1) / 2) < m {
        return Err(GeneratorError::TooManyLines { points: n, lines: m });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = 4 * (n as i64) * (m as i64);
    let mut seen = HashSet::with_capacity(n);
    let mut points = Vec::with_capacity(n);
    while points.len() < n {
        let p = (rng.gen_range(0..=side), rng.gen_range(0..=side));
        if seen.insert(p) {
            points.push(Point::from_ints(p.0, p.1));
        }
    }
    let mut seen_lines = HashSet::with_capacity(m);
    let mut lines = Vec::with_capacity(m);
    let budget = 100 * m + 1000;
    let mut attempts = 0;
    while lines.len() < m {
        attempts += 1;
        if attempts > budget {
            return Err(GeneratorError::TooManyLines { points: n, lines: m });
        }
        let i = rng.gen_range(0..n);
        let j = rng.gen_range(0..n);
        if i == j {
            continue;
        }
        let l = line_through(&points[i], &points[j]).expect("distinct points");
        if seen_lines.insert(l.clone()) {
            lines.push(l);
        }
    }
    Ok(Configuration::new(points, lines).expect("deduplicated"))
}

/// `n` rational points on the unit circle, `((1-t^2)/(1+t^2), 2t/(1+t^2))`
/// for `t = 0..n`. No three are collinear. No lines.
pub fn gen_circle(n: u64) -> Configuration {
    let points = (0..n as i64)
        .map(|t| {
            let d = 1 + t * t;
            Point::new(rat(1 - t * t, d), rat(2 * t, d))
        })
        .collect();
    Configuration::new(points, Vec::new()).expect("parameterization is injective")
}
