//! Exact rational planar primitives.
//!
//! Points carry reduced rational coordinates, lines are stored as a
//! canonical integer triple `(a, b, c)` meaning `ax + by = c`, and a
//! [`Configuration`] caches the bipartite incidence relation between them.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

/// Exact rational number. `BigRational` keeps numerator and denominator
/// coprime with a positive denominator.
pub type Rational = BigRational;

pub type PointId = usize;
pub type LineId = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GeometryError {
    #[error("cannot build a line through two equal points")]
    EqualPoints,
    #[error("degenerate line: a and b are both zero")]
    DegenerateLine,
    #[error("duplicate point at index {0}")]
    DuplicatePoint(PointId),
    #[error("duplicate line at index {0}")]
    DuplicateLine(LineId),
    #[error("point {0} is mapped to the line at infinity")]
    PointAtInfinity(PointId),
    #[error("line {0} is mapped to the line at infinity")]
    LineAtInfinity(LineId),
    #[error("projective map is singular")]
    SingularMap,
}

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Point {
    pub x: Rational,
    pub y: Rational,
}

impl Point {
    pub fn new(x: Rational, y: Rational) -> Self {
        Point { x, y }
    }

    pub fn from_ints(x: i64, y: i64) -> Self {
        Point::new(int(x), int(y))
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// A line `ax + by = c` in canonical form: integer coefficients with
/// `gcd(|a|,|b|,|c|) = 1` and the leading nonzero of `(a, b)` positive.
/// Two equal lines always have identical fields.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Line {
    a: BigInt,
    b: BigInt,
    c: BigInt,
}

impl Line {
    pub fn new(a: BigInt, b: BigInt, c: BigInt) -> Result<Self, GeometryError> {
        if a.is_zero() && b.is_zero() {
            return Err(GeometryError::DegenerateLine);
        }
        let g = a.gcd(&b).gcd(&c);
        let (mut a, mut b, mut c) = (a / &g, b / &g, c / &g);
        let leading_negative = if a.is_zero() {
            b.is_negative()
        } else {
            a.is_negative()
        };
        if leading_negative {
            a = -a;
            b = -b;
            c = -c;
        }
        Ok(Line { a, b, c })
    }

    pub fn from_ints(a: i64, b: i64, c: i64) -> Result<Self, GeometryError> {
        Line::new(a.into(), b.into(), c.into())
    }

    /// Builds a line from rational coefficients by clearing denominators.
    pub fn from_rationals(a: &Rational, b: &Rational, c: &Rational) -> Result<Self, GeometryError> {
        let l = a.denom().lcm(b.denom()).lcm(c.denom());
        let scale = |r: &Rational| r.numer() * (&l / r.denom());
        Line::new(scale(a), scale(b), scale(c))
    }

    pub fn a(&self) -> &BigInt {
        &self.a
    }

    pub fn b(&self) -> &BigInt {
        &self.b
    }

    pub fn c(&self) -> &BigInt {
        &self.c
    }

    pub fn is_vertical(&self) -> bool {
        self.b.is_zero()
    }

    /// Value of `ax + by - c` at `p`; zero exactly on the line.
    pub fn eval(&self, p: &Point) -> Rational {
        let a = Rational::from_integer(self.a.clone());
        let b = Rational::from_integer(self.b.clone());
        let c = Rational::from_integer(self.c.clone());
        a * &p.x + b * &p.y - c
    }

    /// `count` distinct points on the line at consecutive integer parameters.
    pub fn sample_points(&self, count: usize) -> Vec<Point> {
        let a = Rational::from_integer(self.a.clone());
        let b = Rational::from_integer(self.b.clone());
        let c = Rational::from_integer(self.c.clone());
        (0..count as i64)
            .map(|t| {
                if self.b.is_zero() {
                    Point::new(&c / &a, int(t))
                } else {
                    let x = int(t);
                    let y = (&c - &a * &x) / &b;
                    Point::new(x, y)
                }
            })
            .collect()
    }
}

impl fmt::Display for Line {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x + {}y = {}", self.a, self.b, self.c)
    }
}

pub fn incident(p: &Point, l: &Line) -> bool {
    l.eval(p).is_zero()
}

pub fn line_through(p: &Point, q: &Point) -> Result<Line, GeometryError> {
    if p == q {
        return Err(GeometryError::EqualPoints);
    }
    // (y_q - y_p) x - (x_q - x_p) y = (y_q - y_p) x_p - (x_q - x_p) y_p
    let a = &q.y - &p.y;
    let b = &p.x - &q.x;
    let c = &a * &p.x + &b * &p.y;
    Line::from_rationals(&a, &b, &c)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Intersection {
    Point(Point),
    Parallel,
    Identical,
}

pub fn intersect(l1: &Line, l2: &Line) -> Intersection {
    if l1 == l2 {
        return Intersection::Identical;
    }
    let det = &l1.a * &l2.b - &l1.b * &l2.a;
    if det.is_zero() {
        return Intersection::Parallel;
    }
    let x = &l1.c * &l2.b - &l1.b * &l2.c;
    let y = &l1.a * &l2.c - &l1.c * &l2.a;
    Intersection::Point(Point::new(
        Rational::new(x, det.clone()),
        Rational::new(y, det),
    ))
}

/// A finite set of points and lines with the incidence relation cached.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Configuration {
    points: Vec<Point>,
    lines: Vec<Line>,
    /// Sorted incident point ids, per line.
    incidences: Vec<Vec<PointId>>,
    /// Sorted incident line ids, per point.
    point_lines: Vec<Vec<LineId>>,
}

impl Configuration {
    pub fn new(points: Vec<Point>, lines: Vec<Line>) -> Result<Self, GeometryError> {
        let mut seen = HashMap::with_capacity(points.len());
        for (i, p) in points.iter().enumerate() {
            if seen.insert(p, i).is_some() {
                return Err(GeometryError::DuplicatePoint(i));
            }
        }
        let mut seen_lines = HashMap::with_capacity(lines.len());
        for (i, l) in lines.iter().enumerate() {
            if seen_lines.insert(l, i).is_some() {
                return Err(GeometryError::DuplicateLine(i));
            }
        }
        let incidences = grouped_incidences(&points, &lines);
        let mut point_lines = vec![Vec::new(); points.len()];
        for (l, on) in incidences.iter().enumerate() {
            for &p in on {
                point_lines[p].push(l);
            }
        }
        Ok(Configuration {
            points,
            lines,
            incidences,
            point_lines,
        })
    }

    pub fn empty() -> Self {
        Configuration {
            points: Vec::new(),
            lines: Vec::new(),
            incidences: Vec::new(),
            point_lines: Vec::new(),
        }
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    pub fn point(&self, id: PointId) -> &Point {
        &self.points[id]
    }

    pub fn line(&self, id: LineId) -> &Line {
        &self.lines[id]
    }

    pub fn n_points(&self) -> usize {
        self.points.len()
    }

    pub fn n_lines(&self) -> usize {
        self.lines.len()
    }

    /// Points on line `l`, sorted by id.
    pub fn points_on(&self, l: LineId) -> &[PointId] {
        &self.incidences[l]
    }

    /// Lines through point `p`, sorted by id.
    pub fn lines_through(&self, p: PointId) -> &[LineId] {
        &self.point_lines[p]
    }

    pub fn incidence_count(&self) -> usize {
        self.incidences.iter().map(Vec::len).sum()
    }

    /// The sub-configuration on the given point and line ids. Ids in the
    /// result are positions in the (sorted, deduplicated) input lists.
    pub fn restrict(&self, points: &[PointId], lines: &[LineId]) -> Restriction {
        let mut point_ids = points.to_vec();
        point_ids.sort_unstable();
        point_ids.dedup();
        let mut line_ids = lines.to_vec();
        line_ids.sort_unstable();
        line_ids.dedup();
        let mut new_of_old = vec![usize::MAX; self.points.len()];
        for (new, &old) in point_ids.iter().enumerate() {
            new_of_old[old] = new;
        }
        let incidences: Vec<Vec<PointId>> = line_ids
            .iter()
            .map(|&l| {
                self.incidences[l]
                    .iter()
                    .filter_map(|&p| (new_of_old[p] != usize::MAX).then_some(new_of_old[p]))
                    .collect()
            })
            .collect();
        let mut point_lines = vec![Vec::new(); point_ids.len()];
        for (l, on) in incidences.iter().enumerate() {
            for &p in on {
                point_lines[p].push(l);
            }
        }
        let config = Configuration {
            points: point_ids.iter().map(|&i| self.points[i].clone()).collect(),
            lines: line_ids.iter().map(|&i| self.lines[i].clone()).collect(),
            incidences,
            point_lines,
        };
        Restriction {
            config,
            point_ids,
            line_ids,
        }
    }
}

/// A sub-configuration together with the original ids of its elements.
#[derive(Clone, Debug)]
pub struct Restriction {
    pub config: Configuration,
    /// `point_ids[new] = old`.
    pub point_ids: Vec<PointId>,
    /// `line_ids[new] = old`.
    pub line_ids: Vec<LineId>,
}

/// Incidences computed by evaluating each line over a coordinate index.
///
/// Points are bucketed by whichever coordinate has fewer distinct values.
/// A line that is not parallel to the bucketing axis meets each bucket in at
/// most one point, found by a map lookup.
pub(crate) fn grouped_incidences(points: &[Point], lines: &[Line]) -> Vec<Vec<PointId>> {
    let mut by_x: BTreeMap<&Rational, BTreeMap<&Rational, PointId>> = BTreeMap::new();
    let mut by_y: BTreeMap<&Rational, BTreeMap<&Rational, PointId>> = BTreeMap::new();
    for (i, p) in points.iter().enumerate() {
        by_x.entry(&p.x).or_default().insert(&p.y, i);
        by_y.entry(&p.y).or_default().insert(&p.x, i);
    }
    let use_x = by_x.len() <= by_y.len();
    lines
        .iter()
        .map(|l| {
            let a = Rational::from_integer(l.a.clone());
            let b = Rational::from_integer(l.b.clone());
            let c = Rational::from_integer(l.c.clone());
            let mut on: Vec<PointId> = Vec::new();
            if use_x {
                if l.b.is_zero() {
                    let x = &c / &a;
                    if let Some(col) = by_x.get(&x) {
                        on.extend(col.values().copied());
                    }
                } else {
                    for (x, col) in &by_x {
                        let y = (&c - &a * *x) / &b;
                        if let Some(&id) = col.get(&y) {
                            on.push(id);
                        }
                    }
                }
            } else if l.a.is_zero() {
                let y = &c / &b;
                if let Some(row) = by_y.get(&y) {
                    on.extend(row.values().copied());
                }
            } else {
                for (y, row) in &by_y {
                    let x = (&c - &b * *y) / &a;
                    if let Some(&id) = row.get(&x) {
                        on.push(id);
                    }
                }
            }
            on.sort_unstable();
            on
        })
        .collect()
}

/// An invertible 3x3 rational matrix acting on homogeneous coordinates
/// `(x, y, 1)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProjectiveMap {
    m: [[Rational; 3]; 3],
}

fn det3(m: &[[Rational; 3]; 3]) -> Rational {
    &m[0][0] * (&m[1][1] * &m[2][2] - &m[1][2] * &m[2][1])
        - &m[0][1] * (&m[1][0] * &m[2][2] - &m[1][2] * &m[2][0])
        + &m[0][2] * (&m[1][0] * &m[2][1] - &m[1][1] * &m[2][0])
}

impl ProjectiveMap {
    pub fn new(m: [[Rational; 3]; 3]) -> Result<Self, GeometryError> {
        if det3(&m).is_zero() {
            return Err(GeometryError::SingularMap);
        }
        Ok(ProjectiveMap { m })
    }

    pub fn from_ints(m: [[i64; 3]; 3]) -> Result<Self, GeometryError> {
        ProjectiveMap::new(m.map(|row| row.map(int)))
    }

    pub fn identity() -> Self {
        ProjectiveMap::from_ints([[1, 0, 0], [0, 1, 0], [0, 0, 1]]).expect("identity")
    }

    /// The shear `(x, y) -> (x + lambda y, y)`.
    pub fn shear(lambda: i64) -> Self {
        ProjectiveMap::from_ints([[1, lambda, 0], [0, 1, 0], [0, 0, 1]]).expect("shear")
    }

    pub fn matrix(&self) -> &[[Rational; 3]; 3] {
        &self.m
    }

    pub fn determinant(&self) -> Rational {
        det3(&self.m)
    }

    /// Image of a point, or `None` if it lands on the line at infinity.
    pub fn apply_point(&self, p: &Point) -> Option<Point> {
        let h = [&p.x, &p.y];
        let row = |r: &[Rational; 3]| &r[0] * h[0] + &r[1] * h[1] + &r[2];
        let w = row(&self.m[2]);
        if w.is_zero() {
            return None;
        }
        Some(Point::new(row(&self.m[0]) / &w, row(&self.m[1]) / &w))
    }

    /// Image of a line, or `None` if it becomes the line at infinity.
    /// Lines transform covariantly: the covector `(a, b, -c)` maps to
    /// `(a, b, -c) M^{-1}`.
    pub fn apply_line(&self, l: &Line) -> Option<Line> {
        let adj = adjugate(&self.m);
        let cov = [
            Rational::from_integer(l.a.clone()),
            Rational::from_integer(l.b.clone()),
            Rational::from_integer(-l.c.clone()),
        ];
        // adj = det * M^{-1}; the scalar does not change the line.
        let img: Vec<Rational> = (0..3)
            .map(|j| (0..3).map(|i| &cov[i] * &adj[i][j]).sum())
            .collect();
        if img[0].is_zero() && img[1].is_zero() {
            return None;
        }
        Line::from_rationals(&img[0], &img[1], &-img[2].clone()).ok()
    }
}

fn adjugate(m: &[[Rational; 3]; 3]) -> [[Rational; 3]; 3] {
    let cof = |r0: usize, r1: usize, c0: usize, c1: usize| &m[r0][c0] * &m[r1][c1] - &m[r0][c1] * &m[r1][c0];
    // adj[i][j] = cofactor(j, i)
    [
        [cof(1, 2, 1, 2), -cof(0, 2, 1, 2), cof(0, 1, 1, 2)],
        [-cof(1, 2, 0, 2), cof(0, 2, 0, 2), -cof(0, 1, 0, 2)],
        [cof(1, 2, 0, 1), -cof(0, 2, 0, 1), cof(0, 1, 0, 1)],
    ]
}

pub fn apply_map(map: &ProjectiveMap, config: &Configuration) -> Result<Configuration, GeometryError> {
    let points = config
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| map.apply_point(p).ok_or(GeometryError::PointAtInfinity(i)))
        .collect::<Result<Vec<_>, _>>()?;
    let lines = config
        .lines
        .iter()
        .enumerate()
        .map(|(i, l)| map.apply_line(l).ok_or(GeometryError::LineAtInfinity(i)))
        .collect::<Result<Vec<_>, _>>()?;
    Configuration::new(points, lines)
}

/// Point-line duality after a deterministic integer shear.
///
/// The dual of a non-vertical line `y = mx + k` is the point `(m, -k)`; the
/// dual of a point `(p, q)` is the line `y = px - q`. Dual point `i` is the
/// dual of line `i` and dual line `j` is the dual of point `j`, so the
/// incidence relation is transposed id for id.
#[derive(Clone, Debug)]
pub struct Dual {
    pub config: Configuration,
    pub shear: ProjectiveMap,
    pub lambda: i64,
}

/// Smallest `lambda >= 0` such that no line of `config` is vertical after
/// the shear `(x, y) -> (x + lambda y, y)`.
pub fn dual_shear_parameter(config: &Configuration) -> i64 {
    // After the shear, ax + by = c becomes ax' + (b - lambda a) y' = c,
    // vertical iff b = lambda a.
    let mut excluded: Vec<BigInt> = config
        .lines
        .iter()
        .filter(|l| !l.a.is_zero() && (&l.b % &l.a).is_zero())
        .map(|l| &l.b / &l.a)
        .filter(|q| !q.is_negative())
        .collect();
    excluded.sort();
    excluded.dedup();
    let mut lambda = BigInt::zero();
    for q in &excluded {
        if *q == lambda {
            lambda += 1;
        } else if *q > lambda {
            break;
        }
    }
    // At most |L| values are excluded.
    i64::try_from(lambda).expect("shear parameter fits in i64")
}

pub fn dualize(config: &Configuration) -> Dual {
    let lambda = dual_shear_parameter(config);
    let shear = ProjectiveMap::shear(lambda);
    let lam = BigInt::from(lambda);
    let dual_points: Vec<Point> = config
        .lines
        .iter()
        .map(|l| {
            let b = &l.b - &lam * &l.a;
            debug_assert!(!b.is_zero());
            // y = (c - a x) / b
            let slope = Rational::new(-l.a.clone(), b.clone());
            let intercept = Rational::new(l.c.clone(), b);
            Point::new(slope, -intercept)
        })
        .collect();
    let lam_r = Rational::from_integer(lam);
    let dual_lines: Vec<Line> = config
        .points
        .iter()
        .map(|p| {
            let x = &p.x + &lam_r * &p.y;
            // y = x' X - y  <=>  x' X - Y = y
            Line::from_rationals(&x, &-Rational::one(), &p.y).expect("b = -1 is nonzero")
        })
        .collect();
    let config = Configuration::new(dual_points, dual_lines)
        .expect("duality maps distinct elements to distinct elements");
    Dual {
        config,
        shear,
        lambda,
    }
}
