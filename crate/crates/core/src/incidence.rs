//! Incidence counting, Szemerédi–Trotter ratios and richness peeling.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Configuration, LineId, PointId, Rational};
use crate::threshold::CubeRootThreshold;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IncidenceError {
    #[error("configuration needs at least one point and one line")]
    Empty,
    #[error("exponents ({alpha}, {beta}) do not satisfy the {form:?} relation")]
    BadExponents {
        alpha: String,
        beta: String,
        form: InequalityForm,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CountMethod {
    Naive,
    Grouped,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IncidenceStats {
    pub total: usize,
    /// Indexed by `PointId`.
    pub per_point_richness: Vec<usize>,
    /// Indexed by `LineId`.
    pub per_line_richness: Vec<usize>,
}

/// Point in homogeneous integer form `(x, y, w)` with `w > 0`.
struct Homogeneous {
    x: BigInt,
    y: BigInt,
    w: BigInt,
}

pub fn count_incidences(config: &Configuration, method: CountMethod) -> IncidenceStats {
    let per_line_sets: Vec<Vec<PointId>> = match method {
        CountMethod::Naive => {
            let hom: Vec<Homogeneous> = config
                .points()
                .iter()
                .map(|p| {
                    let w = p.x.denom().lcm(p.y.denom());
                    Homogeneous {
                        x: p.x.numer() * (&w / p.x.denom()),
                        y: p.y.numer() * (&w / p.y.denom()),
                        w,
                    }
                })
                .collect();
            config
                .lines()
                .par_iter()
                .map(|l| {
                    hom.iter()
                        .enumerate()
                        .filter(|(_, h)| l.a() * &h.x + l.b() * &h.y == l.c() * &h.w)
                        .map(|(i, _)| i)
                        .collect()
                })
                .collect()
        }
        CountMethod::Grouped => {
            crate::geometry::grouped_incidences(config.points(), config.lines())
        }
    };
    let mut per_point_richness = vec![0; config.n_points()];
    for on in &per_line_sets {
        for &p in on {
            per_point_richness[p] += 1;
        }
    }
    let per_line_richness: Vec<usize> = per_line_sets.iter().map(Vec::len).collect();
    IncidenceStats {
        total: per_line_richness.iter().sum(),
        per_point_richness,
        per_line_richness,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StRatio {
    pub ratio_main: f64,
    pub ratio_full: f64,
}

/// `I / (n m)^(2/3)` and `I / ((n m)^(2/3) + n + m)`.
pub fn st_ratio_from_counts(incidences: usize, n: usize, m: usize) -> Result<StRatio, IncidenceError> {
    if n == 0 || m == 0 {
        return Err(IncidenceError::Empty);
    }
    let main = ((n as f64) * (m as f64)).powf(2.0 / 3.0);
    let i = incidences as f64;
    Ok(StRatio {
        ratio_main: i / main,
        ratio_full: i / (main + n as f64 + m as f64),
    })
}

pub fn st_ratio(config: &Configuration) -> Result<StRatio, IncidenceError> {
    st_ratio_from_counts(config.incidence_count(), config.n_points(), config.n_lines())
}

/// Fixpoint of simultaneous removal rounds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeelOutcome {
    pub rounds: usize,
    pub points_alive: Vec<bool>,
    pub lines_alive: Vec<bool>,
}

impl PeelOutcome {
    pub fn surviving_points(&self) -> Vec<PointId> {
        alive_ids(&self.points_alive)
    }

    pub fn surviving_lines(&self) -> Vec<LineId> {
        alive_ids(&self.lines_alive)
    }
}

fn alive_ids(alive: &[bool]) -> Vec<usize> {
    alive
        .iter()
        .enumerate()
        .filter_map(|(i, &a)| a.then_some(i))
        .collect()
}

/// Removes every point with fewer than `point_min` incidences and every line
/// with fewer than `line_min` incidences, all at once, until nothing changes.
/// The result is the unique largest sub-configuration meeting both minimums.
pub fn peel_richness(config: &Configuration, point_min: u64, line_min: u64) -> PeelOutcome {
    let mut point_rich: Vec<u64> = (0..config.n_points())
        .map(|p| config.lines_through(p).len() as u64)
        .collect();
    let mut line_rich: Vec<u64> = (0..config.n_lines())
        .map(|l| config.points_on(l).len() as u64)
        .collect();
    let mut points_alive = vec![true; config.n_points()];
    let mut lines_alive = vec![true; config.n_lines()];
    let mut rounds = 0;
    loop {
        let dead_points: Vec<PointId> = (0..config.n_points())
            .filter(|&p| points_alive[p] && point_rich[p] < point_min)
            .collect();
        let dead_lines: Vec<LineId> = (0..config.n_lines())
            .filter(|&l| lines_alive[l] && line_rich[l] < line_min)
            .collect();
        if dead_points.is_empty() && dead_lines.is_empty() {
            break;
        }
        rounds += 1;
        for &p in &dead_points {
            points_alive[p] = false;
        }
        for &l in &dead_lines {
            lines_alive[l] = false;
        }
        for &p in &dead_points {
            for &l in config.lines_through(p) {
                if lines_alive[l] {
                    line_rich[l] -= 1;
                }
            }
        }
        for &l in &dead_lines {
            for &p in config.points_on(l) {
                if points_alive[p] {
                    point_rich[p] -= 1;
                }
            }
        }
    }
    PeelOutcome {
        rounds,
        points_alive,
        lines_alive,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CleaningReport {
    pub rounds: usize,
    pub surviving_points: Vec<PointId>,
    pub surviving_lines: Vec<LineId>,
    pub incidences_before: usize,
    pub incidences_after: usize,
    /// Exact threshold `delta/4 * cbrt(m^2/n)`.
    pub point_threshold: String,
    /// Exact threshold `delta/4 * cbrt(n^2/m)`.
    pub line_threshold: String,
    pub point_threshold_approx: f64,
    pub line_threshold_approx: f64,
    /// Smallest richness that meets the point threshold.
    pub point_min_richness: u64,
    pub line_min_richness: u64,
    /// `incidences_after / (n m)^(2/3)`, to compare against `delta / 2`.
    pub incidence_fraction: f64,
}

pub fn point_richness_threshold(delta: &Rational, n: usize, m: usize) -> CubeRootThreshold {
    CubeRootThreshold::from_sizes(delta / Rational::from_integer(4.into()), (m as u128).pow(2), n as u128)
}

pub fn line_richness_threshold(delta: &Rational, n: usize, m: usize) -> CubeRootThreshold {
    CubeRootThreshold::from_sizes(delta / Rational::from_integer(4.into()), (n as u128).pow(2), m as u128)
}

/// Richness cleaning with thresholds fixed from the input sizes.
pub fn clean(config: &Configuration, delta: &Rational) -> Result<CleaningReport, IncidenceError> {
    let (n, m) = (config.n_points(), config.n_lines());
    if n == 0 || m == 0 {
        return Err(IncidenceError::Empty);
    }
    let pt = point_richness_threshold(delta, n, m);
    let lt = line_richness_threshold(delta, n, m);
    let (pmin, lmin) = (pt.min_integer(), lt.min_integer());
    let outcome = peel_richness(config, pmin, lmin);
    let surviving_points = outcome.surviving_points();
    let surviving_lines = outcome.surviving_lines();
    let incidences_after = surviving_lines
        .iter()
        .map(|&l| {
            config
                .points_on(l)
                .iter()
                .filter(|&&p| outcome.points_alive[p])
                .count()
        })
        .sum();
    let ratio = st_ratio_from_counts(incidences_after, n, m)?;
    Ok(CleaningReport {
        rounds: outcome.rounds,
        surviving_points,
        surviving_lines,
        incidences_before: config.incidence_count(),
        incidences_after,
        point_threshold: pt.to_string(),
        line_threshold: lt.to_string(),
        point_threshold_approx: pt.to_f64(),
        line_threshold_approx: lt.to_f64(),
        point_min_richness: pmin,
        line_min_richness: lmin,
        incidence_fraction: ratio.ratio_main,
    })
}

/// Which cleaning proposition an exponent pair refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InequalityForm {
    /// `2 alpha + beta = 1`, `alpha <= 2/3`; concludes a lower bound on lines.
    Line,
    /// `alpha + 2 beta = 1`, `beta <= 2/3`; concludes a lower bound on points.
    Point,
}

/// Achieved constants for the two hypotheses and the conclusion. Each is the
/// ratio of the measured quantity to its power-law shape.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub form: InequalityForm,
    pub alpha: String,
    pub beta: String,
    pub size_constant: f64,
    pub incidence_constant: f64,
    pub conclusion_constant: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn check_cleaning_inequality(
    points: usize,
    lines: usize,
    incidences: usize,
    m: usize,
    n: usize,
    alpha: &Rational,
    beta: &Rational,
    form: InequalityForm,
) -> Result<InequalityReport, IncidenceError> {
    let one = Rational::from_integer(1.into());
    let two = Rational::from_integer(2.into());
    let two_thirds = Rational::new(2.into(), 3.into());
    let ok = match form {
        InequalityForm::Line => &two * alpha + beta == one && *alpha <= two_thirds,
        InequalityForm::Point => alpha + &two * beta == one && *beta <= two_thirds,
    };
    if !ok {
        return Err(IncidenceError::BadExponents {
            alpha: alpha.to_string(),
            beta: beta.to_string(),
            form,
        });
    }
    let a = alpha.to_f64().unwrap_or(f64::NAN);
    let b = beta.to_f64().unwrap_or(f64::NAN);
    let (mf, nf) = (m as f64, n as f64);
    let shape = |ea: f64, eb: f64| mf.powf(ea) * nf.powf(eb);
    let inc = incidences as f64;
    let (size_constant, incidence_constant, conclusion_constant) = match form {
        InequalityForm::Line => (
            points as f64 / shape(a, b),
            inc / shape(a + 2.0 / 3.0, b - 1.0 / 3.0),
            lines as f64 / shape(a / 2.0 + 1.0, b / 2.0 - 0.5),
        ),
        InequalityForm::Point => (
            lines as f64 / shape(a, b),
            inc / shape(a - 1.0 / 3.0, b + 2.0 / 3.0),
            points as f64 / shape(a / 2.0 - 0.5, b / 2.0 + 1.0),
        ),
    };
    Ok(InequalityReport {
        form,
        alpha: alpha.to_string(),
        beta: beta.to_string(),
        size_constant,
        incidence_constant,
        conclusion_constant,
    })
}
