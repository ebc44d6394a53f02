//! Polynomial partitioning by level-wise bisection.
//!
//! Level `j` multiplies in one factor `f_j` that simultaneously splits every
//! current sign class roughly in half. A point's cell is its sign vector
//! over all factors; a point where some factor vanishes is on the boundary.
//! Each sign class is a union of connected cells of the complement of
//! `Z(f_1 ... f_t)`, so bounds proved for sign classes hold for true cells.
//!
//! Factors are searched for in floating point over the Veronese lift, then
//! converted to exact rationals and verified by exact sign counting. A
//! factor is only accepted if the verification passes.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Configuration, Line, Point, PointId, Rational};
use crate::io::{format_rational, parse_rational, IoError};
use crate::linalg::solve;
use crate::triples::ordered_points_on;

/// Restarts tried per level before giving up.
pub const DEFAULT_RESTARTS: usize = 200;
const DESCENT_SWEEPS: usize = 40;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PartitionError {
    #[error("no balanced degree-{degree} bisector found after {restarts} restarts")]
    BisectionFailed { degree: u32, restarts: usize },
    #[error("partition failed at level {level}: {source}")]
    LevelFailed {
        level: usize,
        #[source]
        source: Box<PartitionError>,
    },
    #[error("epsilon must lie in [0, 1/2)")]
    BadEpsilon,
    #[error("at least one level is required (and at most 63)")]
    BadLevels,
    #[error("factor at level {level} vanishes identically on the line")]
    LineInZeroSet { level: usize },
}

/// Exponents `(i, j)` of `x^i y^j` with `i + j <= d`, in graded order and,
/// within a degree, by decreasing power of `x`.
pub fn monomials(d: u32) -> Vec<(u32, u32)> {
    (0..=d)
        .flat_map(|k| (0..=k).map(move |j| (k - j, j)))
        .collect()
}

/// Number of non-constant monomials of degree at most `d`.
pub fn lifted_dimension(d: u32) -> usize {
    let d = d as usize;
    (d + 1) * (d + 2) / 2 - 1
}

/// Smallest degree whose lifted dimension exceeds `classes`.
pub fn degree_for_classes(classes: usize) -> u32 {
    let mut d = 1;
    while lifted_dimension(d) <= classes {
        d += 1;
    }
    d
}

/// All monomials `x^i y^j` with `1 <= i + j <= d` evaluated at `p`.
pub fn veronese_lift(p: &Point, d: u32) -> Vec<Rational> {
    let (xp, yp) = (powers(&p.x, d), powers(&p.y, d));
    monomials(d)
        .into_iter()
        .skip(1)
        .map(|(i, j)| &xp[i as usize] * &yp[j as usize])
        .collect()
}

fn powers(v: &Rational, d: u32) -> Vec<Rational> {
    let mut out = Vec::with_capacity(d as usize + 1);
    out.push(Rational::one());
    for k in 1..=d as usize {
        let next = &out[k - 1] * v;
        out.push(next);
    }
    out
}

/// A polynomial of total degree at most `degree`, stored densely over
/// [`monomials`] (constant term first).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BisectingFactor {
    pub degree: u32,
    pub coefficients: Vec<Rational>,
}

impl BisectingFactor {
    pub fn new(degree: u32, coefficients: Vec<Rational>) -> Self {
        assert_eq!(coefficients.len(), lifted_dimension(degree) + 1);
        assert!(coefficients.iter().any(|c| !c.is_zero()), "factor must be nonzero");
        BisectingFactor {
            degree,
            coefficients,
        }
    }

    pub fn eval(&self, p: &Point) -> Rational {
        let (xp, yp) = (powers(&p.x, self.degree), powers(&p.y, self.degree));
        monomials(self.degree)
            .into_iter()
            .zip(&self.coefficients)
            .filter(|(_, c)| !c.is_zero())
            .map(|((i, j), c)| c * &xp[i as usize] * &yp[j as usize])
            .sum()
    }

    pub fn sign(&self, p: &Point) -> i8 {
        let v = self.eval(p);
        if v.is_zero() {
            0
        } else if v.is_positive() {
            1
        } else {
            -1
        }
    }
}

/// Sign vector of a point: bit `j` is set iff the level-`j` factor is
/// positive there.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellId(pub u64);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CellLabel {
    Cell(CellId),
    Boundary,
}

impl CellLabel {
    /// `+`/`-` per level, or `boundary`.
    pub fn encode(&self, levels: usize) -> String {
        match self {
            CellLabel::Boundary => "boundary".to_string(),
            CellLabel::Cell(CellId(bits)) => (0..levels)
                .map(|j| if bits >> j & 1 == 1 { '+' } else { '-' })
                .collect(),
        }
    }

    pub fn decode(s: &str) -> Option<CellLabel> {
        if s == "boundary" {
            return Some(CellLabel::Boundary);
        }
        let mut bits = 0u64;
        for (j, ch) in s.chars().enumerate() {
            match ch {
                '+' => bits |= 1 << j,
                '-' => {}
                _ => return None,
            }
        }
        Some(CellLabel::Cell(CellId(bits)))
    }

    pub fn cell(&self) -> Option<CellId> {
        match self {
            CellLabel::Cell(c) => Some(*c),
            CellLabel::Boundary => None,
        }
    }
}

impl fmt::Display for CellId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionTree {
    pub levels: Vec<BisectingFactor>,
    /// Indexed by `PointId`.
    pub labels: Vec<CellLabel>,
    pub epsilon: Rational,
    pub achieved_max_cell: usize,
}

impl PartitionTree {
    pub fn total_degree(&self) -> u32 {
        self.levels.iter().map(|f| f.degree).sum()
    }

    /// Points of each non-boundary class.
    pub fn cells(&self) -> BTreeMap<CellId, Vec<PointId>> {
        let mut out: BTreeMap<CellId, Vec<PointId>> = BTreeMap::new();
        for (p, label) in self.labels.iter().enumerate() {
            if let CellLabel::Cell(c) = label {
                out.entry(*c).or_default().push(p);
            }
        }
        out
    }

    pub fn boundary_count(&self) -> usize {
        self.labels.iter().filter(|l| **l == CellLabel::Boundary).count()
    }

    /// `(1/2 + epsilon)^t * n`, the guaranteed bound on any class.
    pub fn balance_bound(&self, n: usize) -> Rational {
        let half = Rational::new(1.into(), 2.into());
        let base = half + &self.epsilon;
        let mut b = Rational::from_integer(BigInt::from(n));
        for _ in 0..self.levels.len() {
            b *= &base;
        }
        b
    }

    /// Recomputes every label from the factors.
    pub fn recompute_labels(&self, config: &Configuration) -> Vec<CellLabel> {
        config
            .points()
            .iter()
            .map(|p| label_of(&self.levels, p))
            .collect()
    }
}

fn label_of(levels: &[BisectingFactor], p: &Point) -> CellLabel {
    let mut bits = 0u64;
    for (j, f) in levels.iter().enumerate() {
        match f.sign(p) {
            0 => return CellLabel::Boundary,
            1 => bits |= 1 << j,
            _ => {}
        }
    }
    CellLabel::Cell(CellId(bits))
}

/// Exact check that `factor` leaves at most `(1/2 + epsilon)|S|` points of
/// every class on either side.
pub fn is_balanced(factor: &BisectingFactor, classes: &[Vec<&Point>], epsilon: &Rational) -> bool {
    let bound_factor = Rational::new(1.into(), 2.into()) + epsilon;
    classes.iter().all(|class| {
        let (mut pos, mut neg) = (0usize, 0usize);
        for p in class {
            match factor.sign(p) {
                1 => pos += 1,
                -1 => neg += 1,
                _ => {}
            }
        }
        let bound = &bound_factor * Rational::from_integer(BigInt::from(class.len()));
        Rational::from_integer(pos.into()) <= bound && Rational::from_integer(neg.into()) <= bound
    })
}

/// Affine frame mapping the class points into `[-1, 1]^2`.
struct Frame {
    cx: Rational,
    cy: Rational,
    scale: Rational,
}

impl Frame {
    fn fit<'a>(points: impl Iterator<Item = &'a Point>) -> Frame {
        let mut bounds: Option<(Rational, Rational, Rational, Rational)> = None;
        for p in points {
            bounds = Some(match bounds {
                None => (p.x.clone(), p.x.clone(), p.y.clone(), p.y.clone()),
                Some((x0, x1, y0, y1)) => (
                    x0.min(p.x.clone()),
                    x1.max(p.x.clone()),
                    y0.min(p.y.clone()),
                    y1.max(p.y.clone()),
                ),
            });
        }
        let Some((x0, x1, y0, y1)) = bounds else {
            return Frame {
                cx: Rational::zero(),
                cy: Rational::zero(),
                scale: Rational::one(),
            };
        };
        let two = Rational::from_integer(2.into());
        let half_extent = ((&x1 - &x0) / &two).max((&y1 - &y0) / &two);
        // A power of two keeps the expanded coefficients short.
        let mut scale = Rational::one();
        if half_extent.is_positive() {
            while scale < half_extent {
                scale *= &two;
            }
            while &scale / &two >= half_extent {
                scale /= &two;
            }
        }
        Frame {
            cx: (x0 + x1) / &two,
            cy: (y0 + y1) / two,
            scale,
        }
    }

    fn lift_exact(&self, p: &Point, mons: &[(u32, u32)]) -> Vec<Rational> {
        let d = mons.iter().map(|m| m.0 + m.1).max().unwrap_or(0);
        let u = powers(&((&p.x - &self.cx) / &self.scale), d);
        let v = powers(&((&p.y - &self.cy) / &self.scale), d);
        mons.iter().map(|&(i, j)| &u[i as usize] * &v[j as usize]).collect()
    }

    fn local(&self, p: &Point) -> (f64, f64) {
        let u = (&p.x - &self.cx) / &self.scale;
        let v = (&p.y - &self.cy) / &self.scale;
        (u.to_f64().unwrap_or(0.0), v.to_f64().unwrap_or(0.0))
    }

    /// Expands `sum_k theta_k u^i v^j` with `u = (x - cx)/s`, `v = (y - cy)/s`
    /// into coefficients over `x^a y^b`.
    fn expand(&self, degree: u32, theta: &[Rational]) -> Vec<Rational> {
        let mons = monomials(degree);
        let index: BTreeMap<(u32, u32), usize> = mons.iter().enumerate().map(|(k, m)| (*m, k)).collect();
        let mut out = vec![Rational::zero(); mons.len()];
        let neg_cx = -self.cx.clone();
        let neg_cy = -self.cy.clone();
        let pcx = powers(&neg_cx, degree);
        let pcy = powers(&neg_cy, degree);
        let inv_scale = powers(&(Rational::one() / &self.scale), degree);
        for (&(i, j), t) in mons.iter().zip(theta) {
            if t.is_zero() {
                continue;
            }
            let base = t * &inv_scale[(i + j) as usize];
            for a in 0..=i {
                let ca = binomial(i, a) * &pcx[(i - a) as usize];
                for b in 0..=j {
                    let cb = binomial(j, b) * &pcy[(j - b) as usize];
                    out[index[&(a, b)]] += &base * &ca * &cb;
                }
            }
        }
        out
    }
}

fn binomial(n: u32, k: u32) -> Rational {
    let mut r = BigInt::one();
    for i in 0..k {
        r = r * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    Rational::from_integer(r)
}

/// Lifted coordinates of every point, constant term first, in the local frame.
fn lift_f64(frame: &Frame, p: &Point, mons: &[(u32, u32)]) -> Vec<f64> {
    let (u, v) = frame.local(p);
    mons.iter().map(|&(i, j)| u.powi(i as i32) * v.powi(j as i32)).collect()
}

struct Search<'a> {
    /// `lifted[c][i]` is the lift of point `i` of class `c`.
    lifted: &'a [Vec<Vec<f64>>],
    target: f64,
}

/// Objective: worst side fraction over classes, then total imbalance.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
struct Score(f64, f64);

impl Search<'_> {
    fn score_counts(&self, pos: &[usize], neg: &[usize]) -> Score {
        let mut worst = 0.0f64;
        let mut total = 0.0f64;
        for (c, class) in self.lifted.iter().enumerate() {
            let size = class.len() as f64;
            worst = worst.max(pos[c].max(neg[c]) as f64 / size);
            total += (pos[c] as f64 - neg[c] as f64).abs() / size;
        }
        Score(worst, total)
    }

    fn values(&self, theta: &[f64]) -> Vec<Vec<f64>> {
        self.lifted
            .iter()
            .map(|class| {
                class
                    .iter()
                    .map(|v| v.iter().zip(theta).map(|(a, b)| a * b).sum())
                    .collect()
            })
            .collect()
    }

    fn score(&self, theta: &[f64]) -> Score {
        let vals = self.values(theta);
        let k = vals.len();
        let (mut pos, mut neg) = (vec![0; k], vec![0; k]);
        for (c, class) in vals.iter().enumerate() {
            for &v in class {
                if v > 0.0 {
                    pos[c] += 1;
                } else if v < 0.0 {
                    neg[c] += 1;
                }
            }
        }
        self.score_counts(&pos, &neg)
    }

    /// Best value for coordinate `k` with the others fixed: sweeps the
    /// breakpoints where some point changes side and scores each open
    /// interval between them.
    fn line_search(&self, theta: &[f64], k: usize) -> (f64, Score) {
        let vals = self.values(theta);
        let nclass = vals.len();
        let (mut pos, mut neg) = (vec![0usize; nclass], vec![0usize; nclass]);
        // (breakpoint, class, side after crossing)
        let mut events: Vec<(f64, usize, bool)> = Vec::new();
        for (c, class) in self.lifted.iter().enumerate() {
            for (i, lift) in class.iter().enumerate() {
                let slope = lift[k];
                let rest = vals[c][i] - theta[k] * slope;
                if slope.abs() < 1e-300 {
                    if rest > 0.0 {
                        pos[c] += 1;
                    } else if rest < 0.0 {
                        neg[c] += 1;
                    }
                    continue;
                }
                let bp = -rest / slope;
                // at -infinity the value has the sign of -slope
                if slope > 0.0 {
                    neg[c] += 1;
                } else {
                    pos[c] += 1;
                }
                events.push((bp, c, slope > 0.0));
            }
        }
        events.sort_by(|a, b| a.0.total_cmp(&b.0));
        if events.is_empty() {
            return (theta[k], self.score_counts(&pos, &neg));
        }
        let first = events[0].0;
        let mut best = (first - 1.0 - first.abs(), self.score_counts(&pos, &neg));
        let mut e = 0;
        while e < events.len() {
            let here = events[e].0;
            while e < events.len() && events[e].0 == here {
                let (_, c, to_pos) = events[e];
                if to_pos {
                    neg[c] -= 1;
                    pos[c] += 1;
                } else {
                    pos[c] -= 1;
                    neg[c] += 1;
                }
                e += 1;
            }
            let next = if e < events.len() {
                (here + events[e].0) / 2.0
            } else {
                here + 1.0 + here.abs()
            };
            if next == here {
                continue;
            }
            let s = self.score_counts(&pos, &neg);
            if s < best.1 {
                best = (next, s);
            }
        }
        best
    }

    fn descend(&self, theta: &mut [f64]) -> Score {
        let mut current = self.score(theta);
        for _ in 0..DESCENT_SWEEPS {
            let mut improved = false;
            for k in 0..theta.len() {
                let (value, s) = self.line_search(theta, k);
                if s < current {
                    theta[k] = value;
                    current = s;
                    improved = true;
                }
                if current.0 <= self.target {
                    return current;
                }
            }
            if !improved {
                break;
            }
            // keep coefficients bounded
            let norm = theta.iter().fold(0.0f64, |m, t| m.max(t.abs()));
            if norm > 0.0 {
                theta.iter_mut().for_each(|t| *t /= norm);
            }
        }
        current
    }
}

/// Small odd classes cannot be balanced with every point strictly on one
/// side. For each class still over target, takes the majority-side point
/// nearest the zero set and projects `local` onto the polynomials vanishing
/// at all of those points.
fn pin_to_zero(
    search: &Search<'_>,
    frame: &Frame,
    classes: &[Vec<&Point>],
    mons: &[(u32, u32)],
    theta: &[f64],
    local: &[Rational],
) -> Option<Vec<Rational>> {
    let vals = search.values(theta);
    let mut pinned = Vec::new();
    for (c, class) in vals.iter().enumerate() {
        let pos = class.iter().filter(|v| **v > 0.0).count();
        let neg = class.iter().filter(|v| **v < 0.0).count();
        if pos.max(neg) as f64 / class.len() as f64 <= search.target {
            continue;
        }
        let positive = pos >= neg;
        let (i, _) = class
            .iter()
            .enumerate()
            .filter(|(_, v)| if positive { **v > 0.0 } else { **v < 0.0 })
            .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))?;
        pinned.push(classes[c][i]);
    }
    if pinned.is_empty() || pinned.len() >= mons.len() {
        return None;
    }
    let rows: Vec<Vec<Rational>> = pinned.iter().map(|p| frame.lift_exact(p, mons)).collect();
    let dot = |a: &[Rational], b: &[Rational]| -> Rational { a.iter().zip(b).map(|(x, y)| x * y).sum() };
    let gram: Vec<Vec<Rational>> = rows.iter().map(|a| rows.iter().map(|b| dot(a, b)).collect()).collect();
    let rhs: Vec<Rational> = rows.iter().map(|a| dot(a, local)).collect();
    let y = solve(gram, rhs)?;
    let mut out = local.to_vec();
    for (row, yj) in rows.iter().zip(&y) {
        for (o, r) in out.iter_mut().zip(row) {
            *o -= yj * r;
        }
    }
    (!out.iter().all(Zero::is_zero)).then_some(out)
}

/// Rounds `theta` to a grid of `2^-24` relative to its largest entry.
fn to_exact(theta: &[f64]) -> Vec<Rational> {
    let norm = theta.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    let grid = (1u64 << 24) as f64;
    let denom = BigInt::from(1u64 << 24);
    theta
        .iter()
        .map(|t| {
            let scaled = if norm > 0.0 { (t / norm * grid).round() } else { 0.0 };
            BigRational::new(BigInt::from(scaled as i64), denom.clone())
        })
        .collect()
}

/// Randomized search for one polynomial of degree at most `d` that leaves at
/// most `(1/2 + epsilon)|S|` points of every class `S` strictly on each side.
/// Restart `r` draws from stream `r` of a generator seeded with `seed`, so
/// the first verified restart is reproducible.
pub fn bisect_classes(
    classes: &[Vec<&Point>],
    d: u32,
    epsilon: &Rational,
    seed: u64,
    restarts: usize,
) -> Result<BisectingFactor, PartitionError> {
    if epsilon.is_negative() || *epsilon >= Rational::new(1.into(), 2.into()) {
        return Err(PartitionError::BadEpsilon);
    }
    let mons = monomials(d);
    let classes: Vec<Vec<&Point>> = classes.iter().filter(|c| !c.is_empty()).cloned().collect();
    if classes.is_empty() {
        let mut coefficients = vec![Rational::zero(); mons.len()];
        coefficients[1] = Rational::one();
        return Ok(BisectingFactor::new(d, coefficients));
    }
    let frame = Frame::fit(classes.iter().flatten().copied());
    let lifted: Vec<Vec<Vec<f64>>> = classes
        .iter()
        .map(|class| class.iter().map(|p| lift_f64(&frame, p, &mons)).collect())
        .collect();
    let search = Search {
        lifted: &lifted,
        target: 0.5 + epsilon.to_f64().unwrap_or(0.0),
    };
    for r in 0..restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(r as u64);
        let mut theta: Vec<f64> = (0..mons.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        // start with the constant term at the median of all values
        theta[0] = 0.0;
        let mut all: Vec<f64> = search.values(&theta).into_iter().flatten().collect();
        all.sort_by(f64::total_cmp);
        theta[0] = -all[all.len() / 2];
        let score = search.descend(&mut theta);
        let local = to_exact(&theta);
        if local.iter().all(Zero::is_zero) {
            continue;
        }
        if score.0 <= search.target + 1e-12 {
            let factor = BisectingFactor::new(d, frame.expand(d, &local));
            if is_balanced(&factor, &classes, epsilon) {
                return Ok(factor);
            }
        }
        if let Some(pinned) = pin_to_zero(&search, &frame, &classes, &mons, &theta, &local) {
            let factor = BisectingFactor::new(d, frame.expand(d, &pinned));
            if is_balanced(&factor, &classes, epsilon) {
                return Ok(factor);
            }
        }
    }
    Err(PartitionError::BisectionFailed { degree: d, restarts })
}

fn level_seed(seed: u64, level: usize) -> u64 {
    seed ^ (level as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Builds `levels` bisecting factors over the points of `config`.
pub fn build_partition(
    config: &Configuration,
    levels: usize,
    epsilon: &Rational,
    seed: u64,
) -> Result<PartitionTree, PartitionError> {
    build_partition_with(config, levels, epsilon, seed, DEFAULT_RESTARTS)
}

pub fn build_partition_with(
    config: &Configuration,
    levels: usize,
    epsilon: &Rational,
    seed: u64,
    restarts: usize,
) -> Result<PartitionTree, PartitionError> {
    if levels == 0 || levels > 63 {
        return Err(PartitionError::BadLevels);
    }
    let points = config.points();
    let mut labels = vec![CellLabel::Cell(CellId(0)); points.len()];
    let mut factors = Vec::with_capacity(levels);
    for level in 0..levels {
        let mut classes: BTreeMap<CellId, Vec<PointId>> = BTreeMap::new();
        for (p, label) in labels.iter().enumerate() {
            if let CellLabel::Cell(c) = label {
                classes.entry(*c).or_default().push(p);
            }
        }
        let d = degree_for_classes(classes.len());
        let class_points: Vec<Vec<&Point>> = classes
            .values()
            .map(|ids| ids.iter().map(|&p| &points[p]).collect())
            .collect();
        let factor = bisect_classes(&class_points, d, epsilon, level_seed(seed, level), restarts).map_err(|e| {
            PartitionError::LevelFailed {
                level,
                source: Box::new(e),
            }
        })?;
        for (p, label) in labels.iter_mut().enumerate() {
            if let CellLabel::Cell(CellId(bits)) = *label {
                *label = match factor.sign(&points[p]) {
                    0 => CellLabel::Boundary,
                    1 => CellLabel::Cell(CellId(bits | 1 << level)),
                    _ => CellLabel::Cell(CellId(bits)),
                };
            }
        }
        factors.push(factor);
    }
    let mut tree = PartitionTree {
        levels: factors,
        labels,
        epsilon: epsilon.clone(),
        achieved_max_cell: 0,
    };
    tree.achieved_max_cell = tree.cells().values().map(Vec::len).max().unwrap_or(0);
    Ok(tree)
}

/// Sign-vector changes between consecutive non-boundary points of `line`
/// (taken in order along the line). Each change needs a root of some factor
/// strictly between the two points, so the count is at most the total degree.
pub fn line_crossings(line: &Line, tree: &PartitionTree, config: &Configuration) -> Result<usize, PartitionError> {
    for (level, f) in tree.levels.iter().enumerate() {
        let samples = line.sample_points(f.degree as usize + 1);
        if samples.iter().all(|p| f.eval(p).is_zero()) {
            return Err(PartitionError::LineInZeroSet { level });
        }
    }
    let ids: Vec<PointId> = match config.lines().iter().position(|l| l == line) {
        Some(l) => ordered_points_on(config, l),
        None => {
            let on: Vec<PointId> = (0..config.n_points())
                .filter(|&p| crate::geometry::incident(config.point(p), line))
                .collect();
            crate::triples::sort_along_line(line, &on, config).expect("filtered to incident points")
        }
    };
    let cells: Vec<CellId> = ids.iter().filter_map(|&p| tree.labels[p].cell()).collect();
    Ok(cells.windows(2).filter(|w| w[0] != w[1]).count())
}

/// On-disk form of a partition tree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionTreeFile {
    pub epsilon: String,
    pub levels: Vec<FactorFile>,
    pub labels: Vec<String>,
    pub achieved_max_cell: usize,
    pub total_degree: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorFile {
    pub degree: u32,
    pub coefficients: Vec<String>,
}

impl From<&PartitionTree> for PartitionTreeFile {
    fn from(tree: &PartitionTree) -> Self {
        let t = tree.levels.len();
        PartitionTreeFile {
            epsilon: format_rational(&tree.epsilon),
            levels: tree
                .levels
                .iter()
                .map(|f| FactorFile {
                    degree: f.degree,
                    coefficients: f.coefficients.iter().map(format_rational).collect(),
                })
                .collect(),
            labels: tree.labels.iter().map(|l| l.encode(t)).collect(),
            achieved_max_cell: tree.achieved_max_cell,
            total_degree: tree.total_degree(),
        }
    }
}

impl TryFrom<&PartitionTreeFile> for PartitionTree {
    type Error = IoError;

    fn try_from(file: &PartitionTreeFile) -> Result<Self, IoError> {
        let levels = file
            .levels
            .iter()
            .map(|f| {
                let coefficients = f
                    .coefficients
                    .iter()
                    .map(|c| parse_rational(c))
                    .collect::<Result<Vec<_>, _>>()?;
                if coefficients.len() != lifted_dimension(f.degree) + 1 || coefficients.iter().all(Zero::is_zero) {
                    return Err(IoError::BadNumber(format!("factor of degree {}", f.degree)));
                }
                Ok(BisectingFactor::new(f.degree, coefficients))
            })
            .collect::<Result<Vec<_>, IoError>>()?;
        let labels = file
            .labels
            .iter()
            .map(|s| CellLabel::decode(s).ok_or_else(|| IoError::BadNumber(s.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PartitionTree {
            levels,
            labels,
            epsilon: parse_rational(&file.epsilon)?,
            achieved_max_cell: file.achieved_max_cell,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::gen_elekes;
    use crate::geometry::{int, rat};

    #[test]
    fn lift_examples() {
        let p = Point::from_ints(2, 3);
        assert_eq!(veronese_lift(&p, 1), vec![int(2), int(3)]);
        assert_eq!(veronese_lift(&p, 2), vec![int(2), int(3), int(4), int(6), int(9)]);
        assert!(veronese_lift(&Point::from_ints(0, 0), 4).iter().all(Zero::is_zero));
        assert_eq!(veronese_lift(&p, 3).len(), 9);
    }

    #[test]
    fn degree_rule() {
        assert_eq!(degree_for_classes(1), 1);
        assert_eq!(degree_for_classes(2), 2);
        assert_eq!(degree_for_classes(4), 2);
        assert_eq!(degree_for_classes(5), 3);
        assert_eq!(degree_for_classes(8), 3);
        assert_eq!(degree_for_classes(9), 4);
    }

    #[test]
    fn frame_expansion_matches_local_evaluation() {
        let frame = Frame {
            cx: rat(3, 2),
            cy: int(-2),
            scale: int(4),
        };
        let theta = vec![int(1), rat(1, 2), int(-3), int(2), int(0), rat(5, 7)];
        let f = BisectingFactor::new(2, frame.expand(2, &theta));
        for (x, y) in [(0, 0), (1, 5), (-3, 2), (7, -7)] {
            let p = Point::from_ints(x, y);
            let u = (&p.x - &frame.cx) / &frame.scale;
            let v = (&p.y - &frame.cy) / &frame.scale;
            let direct = &theta[0] + &theta[1] * &u + &theta[2] * &v + &theta[3] * &u * &u
                + &theta[4] * &u * &v + &theta[5] * &v * &v;
            assert_eq!(f.eval(&p), direct);
        }
    }

    #[test]
    fn two_points_split() {
        let (a, b) = (Point::from_ints(0, 0), Point::from_ints(5, 1));
        let f = bisect_classes(&[vec![&a, &b]], 1, &rat(0, 1), 1, 50).unwrap();
        assert_eq!(f.sign(&a) * f.sign(&b), -1);
    }

    #[test]
    fn square_corners_split_two_two() {
        let pts: Vec<Point> = [(0, 0), (1, 0), (0, 1), (1, 1)].iter().map(|&(x, y)| Point::from_ints(x, y)).collect();
        let class: Vec<&Point> = pts.iter().collect();
        let f = bisect_classes(&[class.clone()], 1, &rat(0, 1), 3, 50).unwrap();
        assert!(is_balanced(&f, &[class], &rat(0, 1)));
    }

    #[test]
    fn two_clusters_share_one_line() {
        let left: Vec<Point> = [(0, 0), (1, 0), (0, 1), (1, 1)].iter().map(|&(x, y)| Point::from_ints(x, y)).collect();
        let right: Vec<Point> = [(10, 0), (11, 0), (10, 1), (11, 1)].iter().map(|&(x, y)| Point::from_ints(x, y)).collect();
        let classes = vec![left.iter().collect::<Vec<_>>(), right.iter().collect::<Vec<_>>()];
        let f = bisect_classes(&classes, 1, &rat(0, 1), 5, DEFAULT_RESTARTS).unwrap();
        assert_eq!(f.degree, 1);
        for class in &classes {
            let pos = class.iter().filter(|p| f.sign(p) > 0).count();
            let neg = class.iter().filter(|p| f.sign(p) < 0).count();
            assert!(pos <= 2 && neg <= 2);
        }
    }

    #[test]
    fn one_level_halves_even_sets() {
        let cfg = gen_elekes(2);
        let tree = build_partition(&cfg, 1, &rat(0, 1), 11).unwrap();
        assert!(tree.achieved_max_cell <= 8);
        assert_eq!(tree.recompute_labels(&cfg), tree.labels);
    }

    #[test]
    fn elekes_four_three_levels_exact_halving() {
        let cfg = gen_elekes(4);
        let tree = build_partition(&cfg, 3, &rat(0, 1), 2).unwrap();
        let cells = tree.cells();
        assert!(cells.len() <= 8);
        assert!(cells.values().all(|c| c.len() <= 16));
        assert_eq!(tree.recompute_labels(&cfg), tree.labels);
        let bound = tree.total_degree() as usize;
        for l in cfg.lines() {
            assert!(line_crossings(l, &tree, &cfg).unwrap() <= bound);
        }
    }

    #[test]
    fn single_line_factor_crossing() {
        // factor x - 1/2 (shifted), test line y = 0 with points either side
        let f = BisectingFactor::new(1, vec![rat(-1, 2), int(1), int(0)]);
        let pts = vec![Point::from_ints(0, 0), Point::from_ints(1, 0), Point::from_ints(2, 0)];
        let line = Line::from_ints(0, 1, 0).unwrap();
        let cfg = Configuration::new(pts, vec![line.clone()]).unwrap();
        let mut tree = PartitionTree {
            levels: vec![f],
            labels: vec![],
            epsilon: rat(0, 1),
            achieved_max_cell: 0,
        };
        tree.labels = tree.recompute_labels(&cfg);
        assert_eq!(line_crossings(&line, &tree, &cfg).unwrap(), 1);
        let inside = Line::from_ints(2, 0, 1).unwrap();
        assert_eq!(
            line_crossings(&inside, &tree, &cfg),
            Err(PartitionError::LineInZeroSet { level: 0 })
        );
    }

    #[test]
    fn odd_classes_use_the_zero_set() {
        let single = Point::from_ints(3, 4);
        let f = bisect_classes(&[vec![&single]], 1, &rat(1, 20), 0, 20).unwrap();
        assert_eq!(f.sign(&single), 0);
        let pts: Vec<Point> = [(0, 0), (4, 1), (9, 3)].iter().map(|&(x, y)| Point::from_ints(x, y)).collect();
        let other: Vec<Point> = [(1, 7), (2, 9), (5, 8)].iter().map(|&(x, y)| Point::from_ints(x, y)).collect();
        let classes = vec![pts.iter().collect::<Vec<_>>(), other.iter().collect::<Vec<_>>()];
        let f = bisect_classes(&classes, 2, &rat(1, 20), 4, DEFAULT_RESTARTS).unwrap();
        assert!(is_balanced(&f, &classes, &rat(1, 20)));
    }

    #[test]
    fn label_codec() {
        let l = CellLabel::Cell(CellId(0b101));
        assert_eq!(l.encode(3), "+-+");
        assert_eq!(CellLabel::decode("+-+"), Some(l));
        assert_eq!(CellLabel::decode("boundary"), Some(CellLabel::Boundary));
        assert_eq!(CellLabel::decode("+x"), None);
    }

    #[test]
    fn bad_parameters() {
        let cfg = gen_elekes(1);
        assert_eq!(build_partition(&cfg, 0, &rat(0, 1), 0), Err(PartitionError::BadLevels));
        assert_eq!(build_partition(&cfg, 1, &rat(1, 2), 0), Err(PartitionError::BadEpsilon).map_err(|e| PartitionError::LevelFailed { level: 0, source: Box::new(e) }));
    }
}
