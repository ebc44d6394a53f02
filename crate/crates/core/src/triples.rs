//! Consecutive collinear triples and triple peeling.
//!
//! Three points on a line are a consecutive triple when they are adjacent in
//! the order along the line: no other configuration point lies between the
//! outer two. A line with `s` points carries `max(0, s - 2)` of them.

use std::collections::{BTreeMap, HashMap, HashSet};

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{incident, Configuration, Line, LineId, PointId, Rational};
use crate::partition::CellLabel;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TripleError {
    #[error("point {0} is not on the line")]
    NotIncident(PointId),
    #[error("triple {0:?} repeats an id")]
    RepeatedId([usize; 3]),
    #[error("triple {0:?} uses an id outside the ground set")]
    OutsideGround([usize; 3]),
    #[error("triple {0:?} appears twice")]
    Duplicate([usize; 3]),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TripleKind {
    Collinear,
    Concurrent,
}

/// A set of unordered id triples over a ground set. Ids are point ids for
/// collinear systems and line ids for concurrent ones.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripleSystem {
    pub kind: TripleKind,
    #[serde(default)]
    ground: Vec<usize>,
    triples: Vec<[usize; 3]>,
    /// Line (or point, for concurrent systems) carrying each triple, when known.
    #[serde(skip)]
    carriers: Vec<usize>,
}

impl TripleSystem {
    /// Validates and normalizes: each triple is stored sorted.
    pub fn new(kind: TripleKind, ground: Vec<usize>, triples: Vec<[usize; 3]>) -> Result<Self, TripleError> {
        Self::with_carriers(kind, ground, triples, Vec::new())
    }

    pub fn with_carriers(
        kind: TripleKind,
        mut ground: Vec<usize>,
        triples: Vec<[usize; 3]>,
        carriers: Vec<usize>,
    ) -> Result<Self, TripleError> {
        ground.sort_unstable();
        ground.dedup();
        let mut seen = HashSet::with_capacity(triples.len());
        let mut out = Vec::with_capacity(triples.len());
        for t in triples {
            let mut s = t;
            s.sort_unstable();
            if s[0] == s[1] || s[1] == s[2] {
                return Err(TripleError::RepeatedId(t));
            }
            if s.iter().any(|id| ground.binary_search(id).is_err()) {
                return Err(TripleError::OutsideGround(t));
            }
            if !seen.insert(s) {
                return Err(TripleError::Duplicate(t));
            }
            out.push(s);
        }
        debug_assert!(carriers.is_empty() || carriers.len() == out.len());
        Ok(TripleSystem {
            kind,
            ground,
            triples: out,
            carriers,
        })
    }

    /// Fills in the ground set from the triples when it was omitted.
    pub fn normalized(mut self) -> Result<Self, TripleError> {
        if self.ground.is_empty() {
            self.ground = self.triples.iter().flatten().copied().collect();
        }
        let carriers = std::mem::take(&mut self.carriers);
        Self::with_carriers(self.kind, self.ground, self.triples, carriers)
    }

    pub fn ground(&self) -> &[usize] {
        &self.ground
    }

    pub fn triples(&self) -> &[[usize; 3]] {
        &self.triples
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn carrier(&self, i: usize) -> Option<usize> {
        self.carriers.get(i).copied()
    }

    /// Keeps the triples whose index satisfies `keep`.
    pub fn filter(&self, ground: Vec<usize>, mut keep: impl FnMut(usize, &[usize; 3]) -> bool) -> TripleSystem {
        let mut triples = Vec::new();
        let mut carriers = Vec::new();
        for (i, t) in self.triples.iter().enumerate() {
            if keep(i, t) {
                triples.push(*t);
                if let Some(c) = self.carrier(i) {
                    carriers.push(c);
                }
            }
        }
        let mut ground = ground;
        ground.sort_unstable();
        ground.dedup();
        TripleSystem {
            kind: self.kind,
            ground,
            triples,
            carriers,
        }
    }

    /// Number of triples containing each id, keyed by id.
    pub fn coverage(&self) -> BTreeMap<usize, usize> {
        let mut cov: BTreeMap<usize, usize> = self.ground.iter().map(|&g| (g, 0)).collect();
        for t in &self.triples {
            for id in t {
                *cov.entry(*id).or_default() += 1;
            }
        }
        cov
    }

    /// Largest number of triples sharing one pair of ids.
    pub fn max_pair_multiplicity(&self) -> usize {
        let mut pairs: HashMap<(usize, usize), usize> = HashMap::new();
        for t in &self.triples {
            for (a, b) in [(t[0], t[1]), (t[0], t[2]), (t[1], t[2])] {
                *pairs.entry((a, b)).or_default() += 1;
            }
        }
        pairs.values().copied().max().unwrap_or(0)
    }
}

/// Orders points along `line`: by `x` for non-vertical lines, by `y` for
/// vertical ones. This is the parameter along a direction vector with
/// positive x-component (or positive y-component when vertical).
pub fn sort_along_line(line: &Line, points: &[PointId], config: &Configuration) -> Result<Vec<PointId>, TripleError> {
    if let Some(&bad) = points.iter().find(|&&p| !incident(config.point(p), line)) {
        return Err(TripleError::NotIncident(bad));
    }
    let mut out = points.to_vec();
    sort_incident(line, &mut out, config);
    Ok(out)
}

fn sort_incident(line: &Line, ids: &mut [PointId], config: &Configuration) {
    if line.is_vertical() {
        ids.sort_by(|&p, &q| config.point(p).y.cmp(&config.point(q).y));
    } else {
        ids.sort_by(|&p, &q| config.point(p).x.cmp(&config.point(q).x));
    }
}

/// Points of line `l` in order along the line.
pub fn ordered_points_on(config: &Configuration, l: LineId) -> Vec<PointId> {
    let mut ids = config.points_on(l).to_vec();
    sort_incident(config.line(l), &mut ids, config);
    ids
}

pub fn consecutive_triples(config: &Configuration) -> TripleSystem {
    let mut triples = Vec::new();
    let mut carriers = Vec::new();
    for l in 0..config.n_lines() {
        if config.points_on(l).len() < 3 {
            continue;
        }
        let ordered = ordered_points_on(config, l);
        for w in ordered.windows(3) {
            let mut t = [w[0], w[1], w[2]];
            t.sort_unstable();
            triples.push(t);
            carriers.push(l);
        }
    }
    // Three distinct collinear points lie on exactly one line, so windows of
    // different lines never coincide.
    TripleSystem {
        kind: TripleKind::Collinear,
        ground: (0..config.n_points()).collect(),
        triples,
        carriers,
    }
}

/// Consecutive triples whose three points share one cell. Consecutiveness is
/// measured against the full point set, so a boundary point between two cell
/// points breaks the window.
pub fn in_cell_triples(config: &Configuration, labels: &[CellLabel]) -> TripleSystem {
    assert_eq!(labels.len(), config.n_points(), "labels must cover every point");
    let all = consecutive_triples(config);
    all.filter(all.ground.clone(), |_, t| match labels[t[0]] {
        CellLabel::Cell(c) => labels[t[1]] == CellLabel::Cell(c) && labels[t[2]] == CellLabel::Cell(c),
        CellLabel::Boundary => false,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriplePeelReport {
    pub threshold: String,
    pub surviving: Vec<PointId>,
    pub surviving_triples: TripleSystem,
    pub rounds: usize,
}

/// Repeatedly discards every point contained in fewer than `threshold`
/// surviving triples, together with all triples containing it. Triples that
/// mention ids outside `points` are ignored from the start.
pub fn triple_peel(points: &[PointId], triples: &TripleSystem, threshold: &Rational) -> TriplePeelReport {
    let mut alive: BTreeMap<usize, usize> = points.iter().map(|&p| (p, 0)).collect();
    let mut live_triple: Vec<bool> = triples
        .triples
        .iter()
        .map(|t| t.iter().all(|id| alive.contains_key(id)))
        .collect();
    let mut containing: HashMap<usize, Vec<usize>> = HashMap::new();
    for (i, t) in triples.triples.iter().enumerate() {
        if live_triple[i] {
            for id in t {
                *alive.get_mut(id).expect("live") += 1;
                containing.entry(*id).or_default().push(i);
            }
        }
    }
    let below = |count: usize| Rational::from_integer(BigInt::from(count)) < *threshold;
    let mut rounds = 0;
    loop {
        let dead: Vec<usize> = alive
            .iter()
            .filter(|&(_, &c)| below(c))
            .map(|(&p, _)| p)
            .collect();
        if dead.is_empty() {
            break;
        }
        rounds += 1;
        for p in &dead {
            alive.remove(p);
        }
        for p in &dead {
            for &ti in containing.get(p).map(Vec::as_slice).unwrap_or(&[]) {
                if !live_triple[ti] {
                    continue;
                }
                live_triple[ti] = false;
                for id in &triples.triples[ti] {
                    if let Some(c) = alive.get_mut(id) {
                        *c -= 1;
                    }
                }
            }
        }
    }
    let surviving: Vec<PointId> = alive.keys().copied().collect();
    let surviving_triples = triples.filter(surviving.clone(), |i, _| live_triple[i]);
    TriplePeelReport {
        threshold: threshold.to_string(),
        surviving,
        surviving_triples,
        rounds,
    }
}
