//! Rigidity certificates from the collinearity Jacobian.
//!
//! Each collinear triple `{s1, s2, s3}` imposes `det[[x1,y1,1],[x2,y2,1],[x3,y3,1]] = 0`.
//! The certificate `2n - rank` of the Jacobian is the dimension of the
//! tangent space of the constraint variety at the configuration, an upper
//! bound on the dimension of every component through it.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{dualize, Configuration, Point, PointId, Rational};
use crate::linalg::{dense_rank, exact_rank, RankMethod};
use crate::triples::{consecutive_triples, TripleKind, TripleSystem};
use num_traits::Zero;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RigidityError {
    #[error("id {0} does not resolve to a point")]
    UnknownId(usize),
    #[error("expected a {expected:?} triple system")]
    WrongKind { expected: TripleKind },
    #[error("projective field {field} is not in the kernel: triple {triple:?}")]
    KernelViolation { field: &'static str, triple: [usize; 3] },
    #[error("composition needs the closure to determine the declared set")]
    CompositionUnjustified,
    #[error("points on fewer than two lines: {0:?}")]
    UncoveredPoint(Vec<PointId>),
    #[error("lines {0:?} are not concurrent")]
    NotConcurrent([usize; 3]),
}

/// Sparse Jacobian. Columns `2k` and `2k + 1` hold `x` and `y` of `ground[k]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CollinearityMatrix {
    pub ground: Vec<usize>,
    pub triples: Vec<[usize; 3]>,
    pub rows: Vec<Vec<(usize, Rational)>>,
    /// Rows whose triple has two coincident points.
    pub degenerate_rows: Vec<usize>,
}

impl CollinearityMatrix {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        2 * self.ground.len()
    }

    pub fn dense(&self) -> Vec<Vec<Rational>> {
        self.rows
            .iter()
            .map(|row| {
                let mut d = vec![Rational::zero(); self.n_cols()];
                for (c, v) in row {
                    d[*c] = v.clone();
                }
                d
            })
            .collect()
    }

    fn column_of(&self, id: usize) -> usize {
        2 * self.ground.binary_search(&id).expect("id in ground")
    }
}

/// Gradient of the collinearity determinant at `(p1, p2, p3)`, ordered
/// `(x1, y1, x2, y2, x3, y3)`.
pub fn determinant_gradient(p1: &Point, p2: &Point, p3: &Point) -> [Rational; 6] {
    [
        &p2.y - &p3.y,
        &p3.x - &p2.x,
        &p3.y - &p1.y,
        &p1.x - &p3.x,
        &p1.y - &p2.y,
        &p2.x - &p1.x,
    ]
}

pub fn collinearity_matrix(points: &[Point], triples: &TripleSystem) -> Result<CollinearityMatrix, RigidityError> {
    if triples.kind != TripleKind::Collinear {
        return Err(RigidityError::WrongKind {
            expected: TripleKind::Collinear,
        });
    }
    let mut ground = triples.ground().to_vec();
    ground.extend(triples.triples().iter().flatten());
    ground.sort_unstable();
    ground.dedup();
    if let Some(&bad) = ground.iter().find(|&&id| id >= points.len()) {
        return Err(RigidityError::UnknownId(bad));
    }
    let mut m = CollinearityMatrix {
        ground,
        triples: triples.triples().to_vec(),
        rows: Vec::new(),
        degenerate_rows: Vec::new(),
    };
    let rows: Vec<(Vec<(usize, Rational)>, bool)> = m
        .triples
        .par_iter()
        .map(|t| {
            let [a, b, c] = t.map(|id| &points[id]);
            let g = determinant_gradient(a, b, c);
            let mut row = Vec::with_capacity(6);
            for (k, id) in t.iter().enumerate() {
                let col = m.column_of(*id);
                for (off, v) in [(0, &g[2 * k]), (1, &g[2 * k + 1])] {
                    if !v.is_zero() {
                        row.push((col + off, v.clone()));
                    }
                }
            }
            row.sort_by_key(|e| e.0);
            (row, a == b || b == c || a == c)
        })
        .collect();
    for (i, (row, degenerate)) in rows.into_iter().enumerate() {
        if degenerate {
            m.degenerate_rows.push(i);
        }
        m.rows.push(row);
    }
    Ok(m)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RigidityCertificate {
    pub ground_size: usize,
    pub rank: usize,
    pub certificate: usize,
    pub triples_used: usize,
    pub degenerate_triples: usize,
    pub rank_method: RankMethod,
}

pub const PROJECTIVE_FIELDS: [&str; 8] = ["(1,0)", "(0,1)", "(x,0)", "(y,0)", "(0,x)", "(0,y)", "(x^2,xy)", "(xy,y^2)"];

/// The eight infinitesimal projective motions evaluated at the ground points.
pub fn projective_fields(points: &[Point], ground: &[usize]) -> Vec<Vec<Rational>> {
    let zero = Rational::zero;
    let one = || Rational::from_integer(1.into());
    let at = |f: usize, p: &Point| -> (Rational, Rational) {
        let (x, y) = (&p.x, &p.y);
        match f {
            0 => (one(), zero()),
            1 => (zero(), one()),
            2 => (x.clone(), zero()),
            3 => (y.clone(), zero()),
            4 => (zero(), x.clone()),
            5 => (zero(), y.clone()),
            6 => (x * x, x * y),
            _ => (x * y, y * y),
        }
    };
    (0..8)
        .map(|f| {
            ground
                .iter()
                .flat_map(|&id| {
                    let (u, v) = at(f, &points[id]);
                    [u, v]
                })
                .collect()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelCheck {
    pub span_rank: usize,
}

/// Asserts `M v = 0` exactly for all eight projective fields and returns the
/// rank of their span.
pub fn projective_kernel_check(points: &[Point], m: &CollinearityMatrix) -> Result<KernelCheck, RigidityError> {
    let fields = projective_fields(points, &m.ground);
    for (f, v) in fields.iter().enumerate() {
        for (row, t) in m.rows.iter().zip(&m.triples) {
            let dot: Rational = row.iter().map(|(c, x)| x * &v[*c]).sum();
            if !dot.is_zero() {
                return Err(RigidityError::KernelViolation {
                    field: PROJECTIVE_FIELDS[f],
                    triple: *t,
                });
            }
        }
    }
    Ok(KernelCheck {
        span_rank: if m.ground.is_empty() { 0 } else { dense_rank(&fields) },
    })
}

pub fn rigidity_certificate(points: &[Point], triples: &TripleSystem) -> Result<RigidityCertificate, RigidityError> {
    let m = collinearity_matrix(points, triples)?;
    let fields = projective_fields(points, &m.ground);
    let outcome = exact_rank(&m.rows, m.n_cols(), &fields);
    Ok(RigidityCertificate {
        ground_size: m.ground.len(),
        rank: outcome.rank,
        certificate: m.n_cols() - outcome.rank,
        triples_used: m.n_rows(),
        degenerate_triples: m.degenerate_rows.len(),
        rank_method: outcome.method,
    })
}

/// `floor(8tn / (4t + k))`.
pub fn dgos_bound(n: u64, k: u64, t: u64) -> u64 {
    assert!(k >= 1 && t >= 1, "k and t must be positive");
    8 * t * n / (4 * t + k)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DgosDiagnostic {
    pub n: usize,
    /// Minimum number of triples containing a ground element.
    pub k: usize,
    /// Maximum number of triples containing a pair.
    pub t: usize,
    /// Largest number of triples carried by one line, when carriers are known.
    pub max_triples_on_line: Option<usize>,
    pub line_condition: Option<bool>,
    /// The bound, when every hypothesis is verified.
    pub bound: Option<u64>,
}

pub fn dgos_diagnostic(triples: &TripleSystem) -> DgosDiagnostic {
    let coverage = triples.coverage();
    let n = triples.ground().len();
    let k = triples.ground().iter().map(|id| coverage.get(id).copied().unwrap_or(0)).min().unwrap_or(0);
    let t = triples.max_pair_multiplicity();
    let max_on_line = if triples.is_empty() || triples.carrier(0).is_none() {
        None
    } else {
        let mut per: BTreeMap<usize, usize> = BTreeMap::new();
        for i in 0..triples.len() {
            *per.entry(triples.carrier(i).expect("carriers present")).or_default() += 1;
        }
        per.values().max().copied()
    };
    let line_condition = max_on_line.map(|c| 2 * c <= k);
    let bound = (k >= 1 && t >= 1 && line_condition == Some(true)).then(|| dgos_bound(n as u64, k as u64, t as u64));
    DgosDiagnostic {
        n,
        k,
        t,
        max_triples_on_line: max_on_line,
        line_condition,
        bound,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComposedBound {
    pub cells: usize,
    pub sum: usize,
    pub cells_times_max: usize,
}

/// Sum of per-cell certificates, with `cells * max` alongside.
pub fn compose_rigidity(cell_certificates: &[usize], closure_unique: bool) -> Result<ComposedBound, RigidityError> {
    if !closure_unique {
        return Err(RigidityError::CompositionUnjustified);
    }
    Ok(ComposedBound {
        cells: cell_certificates.len(),
        sum: cell_certificates.iter().sum(),
        cells_times_max: cell_certificates.len() * cell_certificates.iter().copied().max().unwrap_or(0),
    })
}

/// Consecutive triples of lines through each point, taken in the order of
/// the dual points along the dual line. Carriers are point ids.
pub fn concurrent_triples(config: &Configuration) -> TripleSystem {
    let dual = dualize(config);
    let collinear = consecutive_triples(&dual.config);
    let carriers = (0..collinear.len()).map(|i| collinear.carrier(i).expect("carriers")).collect();
    TripleSystem::with_carriers(
        TripleKind::Concurrent,
        (0..config.n_lines()).collect(),
        collinear.triples().to_vec(),
        carriers,
    )
    .expect("dual consecutive triples are valid")
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DualCertificate {
    pub certificate: RigidityCertificate,
    /// The dual certificate bounds the primal configuration as well.
    pub valid_for_primal: bool,
}

/// Certificate of the dual points under the dualized concurrency triples.
pub fn dual_rigidity_transfer(config: &Configuration, concurrency: &TripleSystem) -> Result<DualCertificate, RigidityError> {
    if concurrency.kind != TripleKind::Concurrent {
        return Err(RigidityError::WrongKind {
            expected: TripleKind::Concurrent,
        });
    }
    let uncovered: Vec<PointId> = (0..config.n_points()).filter(|&p| config.lines_through(p).len() < 2).collect();
    if !uncovered.is_empty() {
        return Err(RigidityError::UncoveredPoint(uncovered));
    }
    let dual = dualize(config);
    let points = dual.config.points();
    for t in concurrency.triples() {
        if let Some(&bad) = t.iter().find(|&&id| id >= points.len()) {
            return Err(RigidityError::UnknownId(bad));
        }
        let g = determinant_gradient(&points[t[0]], &points[t[1]], &points[t[2]]);
        // the determinant is x1 * g[0] + y1 * g[1] + (x2 y3 - x3 y2)
        let det = &points[t[0]].x * &g[0] + &points[t[0]].y * &g[1] + &points[t[1]].x * &points[t[2]].y
            - &points[t[2]].x * &points[t[1]].y;
        if !det.is_zero() {
            return Err(RigidityError::NotConcurrent(*t));
        }
    }
    let collinear = TripleSystem::new(TripleKind::Collinear, concurrency.ground().to_vec(), concurrency.triples().to_vec())
        .map_err(|_| RigidityError::UnknownId(usize::MAX))?;
    Ok(DualCertificate {
        certificate: rigidity_certificate(points, &collinear)?,
        valid_for_primal: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::gen_elekes;
    use crate::geometry::{int, Line};

    fn pts(coords: &[(i64, i64)]) -> Vec<Point> {
        coords.iter().map(|&(x, y)| Point::from_ints(x, y)).collect()
    }

    fn system(n: usize, triples: Vec<[usize; 3]>) -> TripleSystem {
        TripleSystem::new(TripleKind::Collinear, (0..n).collect(), triples).unwrap()
    }

    #[test]
    fn row_of_horizontal_triple() {
        let p = pts(&[(0, 0), (1, 0), (2, 0)]);
        let m = collinearity_matrix(&p, &system(3, vec![[0, 1, 2]])).unwrap();
        let dense = m.dense();
        assert_eq!(dense[0], vec![int(0), int(1), int(0), int(-2), int(0), int(1)]);
        let c = rigidity_certificate(&p, &system(3, vec![[0, 1, 2]])).unwrap();
        assert_eq!((c.rank, c.certificate), (1, 5));
    }

    #[test]
    fn empty_and_tripleless() {
        let p = pts(&[(0, 0), (1, 0), (5, 7)]);
        let m = collinearity_matrix(&p, &system(3, vec![])).unwrap();
        assert_eq!(m.n_rows(), 0);
        let c = rigidity_certificate(&p, &system(3, vec![])).unwrap();
        assert_eq!((c.rank, c.certificate), (0, 6));
    }

    #[test]
    fn unknown_id() {
        let p = pts(&[(0, 0), (1, 0)]);
        assert_eq!(
            collinearity_matrix(&p, &system(3, vec![[0, 1, 2]])),
            Err(RigidityError::UnknownId(2))
        );
    }

    #[test]
    fn degenerate_rows_are_flagged() {
        let p = pts(&[(0, 0), (0, 0), (3, 1)]);
        let m = collinearity_matrix(&p, &system(3, vec![[0, 1, 2]])).unwrap();
        assert_eq!(m.degenerate_rows, vec![0]);
    }

    fn grid3() -> (Vec<Point>, TripleSystem) {
        let p: Vec<Point> = (0..3).flat_map(|x| (0..3).map(move |y| Point::from_ints(x, y))).collect();
        let id = |x: usize, y: usize| 3 * x + y;
        let mut t = Vec::new();
        for i in 0..3 {
            t.push([id(i, 0), id(i, 1), id(i, 2)]);
            t.push([id(0, i), id(1, i), id(2, i)]);
        }
        t.push([id(0, 0), id(1, 1), id(2, 2)]);
        t.push([id(0, 2), id(1, 1), id(2, 0)]);
        (p, system(9, t))
    }

    #[test]
    fn grid_certificate_matches_oracle() {
        let (p, t) = grid3();
        let c = rigidity_certificate(&p, &t).unwrap();
        assert_eq!((c.rank, c.certificate), (8, 10));
    }

    #[test]
    fn elekes_three_certificate() {
        let cfg = gen_elekes(3);
        let t = consecutive_triples(&cfg);
        let c = rigidity_certificate(cfg.points(), &t).unwrap();
        assert_eq!((c.triples_used, c.rank, c.certificate), (27, 27, 81));
    }

    #[test]
    fn kernel_spans() {
        let p = pts(&[(0, 0), (1, 0), (2, 0)]);
        let m = collinearity_matrix(&p, &system(3, vec![[0, 1, 2]])).unwrap();
        assert_eq!(projective_kernel_check(&p, &m).unwrap().span_rank, 5);
        let q = pts(&[(0, 0), (1, 0), (0, 1), (3, 5)]);
        let m = collinearity_matrix(&q, &system(4, vec![])).unwrap();
        assert_eq!(projective_kernel_check(&q, &m).unwrap().span_rank, 8);
        let (g, t) = grid3();
        let m = collinearity_matrix(&g, &t).unwrap();
        assert_eq!(projective_kernel_check(&g, &m).unwrap().span_rank, 8);
    }

    #[test]
    fn kernel_violation_is_reported() {
        let p = pts(&[(0, 0), (1, 0), (2, 0)]);
        let mut m = collinearity_matrix(&p, &system(3, vec![[0, 1, 2]])).unwrap();
        m.rows[0][0].1 = int(7);
        assert!(matches!(
            projective_kernel_check(&p, &m),
            Err(RigidityError::KernelViolation { triple: [0, 1, 2], .. })
        ));
    }

    #[test]
    fn dgos_examples() {
        assert_eq!(dgos_bound(64, 32, 2), 25);
        for n in [1, 5, 100] {
            assert_eq!(dgos_bound(n, 8 * n, 1), 0);
        }
        let cfg = gen_elekes(3);
        let d = dgos_diagnostic(&consecutive_triples(&cfg));
        assert_eq!(d.k, 0);
        assert_eq!(d.bound, None);
    }

    #[test]
    fn composition() {
        assert_eq!(compose_rigidity(&[7], true).unwrap().sum, 7);
        let c = compose_rigidity(&[4, 4, 4], true).unwrap();
        assert_eq!((c.sum, c.cells_times_max), (12, 12));
        assert_eq!(compose_rigidity(&[1], false), Err(RigidityError::CompositionUnjustified));
    }

    #[test]
    fn three_concurrent_lines() {
        let lines = vec![
            Line::from_ints(1, -1, 0).unwrap(),
            Line::from_ints(2, -1, 0).unwrap(),
            Line::from_ints(3, -1, 0).unwrap(),
        ];
        let cfg = Configuration::new(pts(&[(0, 0)]), lines).unwrap();
        let t = concurrent_triples(&cfg);
        assert_eq!(t.triples(), &[[0, 1, 2]]);
        let c = dual_rigidity_transfer(&cfg, &t).unwrap();
        assert_eq!(c.certificate.certificate, 5);
        assert!(c.valid_for_primal);
    }

    #[test]
    fn pencil_matches_collinear_points() {
        for k in 3..7i64 {
            let lines = (0..k).map(|s| Line::from_ints(s, -1, s - 1).unwrap()).collect();
            let cfg = Configuration::new(pts(&[(1, 1)]), lines).unwrap();
            let dual = dual_rigidity_transfer(&cfg, &concurrent_triples(&cfg)).unwrap();
            let row: Vec<Point> = (0..k).map(|i| Point::from_ints(i, 0)).collect();
            let on_line = Configuration::new(row, vec![Line::from_ints(0, 1, 0).unwrap()]).unwrap();
            let direct = rigidity_certificate(on_line.points(), &consecutive_triples(&on_line)).unwrap();
            assert_eq!(dual.certificate.certificate, direct.certificate);
        }
    }

    #[test]
    fn uncovered_point() {
        let cfg = Configuration::new(
            pts(&[(0, 0), (5, 0)]),
            vec![Line::from_ints(0, 1, 0).unwrap(), Line::from_ints(1, 0, 0).unwrap()],
        )
        .unwrap();
        assert_eq!(
            dual_rigidity_transfer(&cfg, &concurrent_triples(&cfg)),
            Err(RigidityError::UncoveredPoint(vec![1]))
        );
    }
}
