//! Good cells, rigid cores, cell selection, the determination closure and
//! the end-to-end pipeline.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{dualize, rat, Configuration, LineId, PointId, Rational};
use crate::incidence::{clean, CleaningReport};
use crate::io::format_rational;
use crate::partition::{build_partition, CellId, CellLabel, PartitionTree};
use crate::rigidity::{compose_rigidity, projective_kernel_check, collinearity_matrix, rigidity_certificate, ComposedBound, RigidityCertificate};
use crate::threshold::CubeRootThreshold;
use crate::triples::{consecutive_triples, in_cell_triples, triple_peel, TripleSystem};

pub const REPORT_SCHEMA: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RecoveryError {
    #[error("cell {0} lost every point to peeling")]
    EmptyCore(CellId),
    #[error("cell {0} is not good")]
    NotGood(CellId),
    #[error("no good cell survived preparation")]
    NoGoodCells,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CellSummary {
    pub cell: CellId,
    pub points: Vec<PointId>,
    pub in_cell_triples: usize,
    pub good: bool,
    pub core_points: Vec<PointId>,
    pub core_lines: Vec<LineId>,
    pub core_certificate: Option<RigidityCertificate>,
}

/// `ceil(c2 * m^(4/3) / n^(2/3))` for the sizes of `config`.
pub fn good_cell_threshold(c2: &Rational, n: usize, m: usize) -> u64 {
    if n == 0 {
        return 0;
    }
    CubeRootThreshold::from_sizes(c2.clone(), (m as u128).pow(4), (n as u128).pow(2)).min_integer()
}

/// One summary per sign class, in cell order. `triples` must be the in-cell
/// triples for the labels of `tree`.
pub fn classify_cells(config: &Configuration, tree: &PartitionTree, triples: &TripleSystem, c2: &Rational) -> Vec<CellSummary> {
    let threshold = good_cell_threshold(c2, config.n_points(), config.n_lines());
    let mut counts: BTreeMap<CellId, usize> = BTreeMap::new();
    for t in triples.triples() {
        if let CellLabel::Cell(c) = tree.labels[t[0]] {
            *counts.entry(c).or_default() += 1;
        }
    }
    tree.cells()
        .into_iter()
        .map(|(cell, points)| {
            let in_cell = counts.get(&cell).copied().unwrap_or(0);
            CellSummary {
                cell,
                points,
                in_cell_triples: in_cell,
                good: in_cell as u64 >= threshold,
                core_points: Vec::new(),
                core_lines: Vec::new(),
                core_certificate: None,
            }
        })
        .collect()
}

/// Default peel threshold for a cell: half its triples per point.
pub fn default_peel_threshold(summary: &CellSummary) -> Rational {
    if summary.points.is_empty() {
        return Rational::zero();
    }
    Rational::new(summary.in_cell_triples.into(), (2 * summary.points.len()).into())
}

/// Peels the cell's triples and certifies the surviving core.
pub fn prepare_cell(
    config: &Configuration,
    summary: &CellSummary,
    triples: &TripleSystem,
    peel_threshold: &Rational,
) -> Result<CellSummary, RecoveryError> {
    if !summary.good {
        return Err(RecoveryError::NotGood(summary.cell));
    }
    let members: BTreeSet<PointId> = summary.points.iter().copied().collect();
    let cell_triples = triples.filter(summary.points.clone(), |_, t| t.iter().all(|p| members.contains(p)));
    let peeled = triple_peel(&summary.points, &cell_triples, peel_threshold);
    if peeled.surviving.is_empty() {
        return Err(RecoveryError::EmptyCore(summary.cell));
    }
    let lines: BTreeSet<LineId> = (0..peeled.surviving_triples.len())
        .filter_map(|i| peeled.surviving_triples.carrier(i))
        .collect();
    let certificate = rigidity_certificate(config.points(), &peeled.surviving_triples).expect("cell ids resolve");
    Ok(CellSummary {
        core_points: peeled.surviving,
        core_lines: lines.into_iter().collect(),
        core_certificate: Some(certificate),
        ..summary.clone()
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    pub cells: Vec<CellId>,
    /// Size of the union of core lines after each pick.
    pub union_sizes: Vec<usize>,
    /// Fewer than `k` prepared good cells were available.
    pub shortfall: bool,
}

/// Greedy choice of `k` prepared good cells, each maximizing the number of
/// core lines not yet covered (ties to the smallest cell id).
pub fn greedy_select(summaries: &[CellSummary], k: usize) -> Result<Selection, RecoveryError> {
    let mut candidates: Vec<&CellSummary> = summaries.iter().filter(|s| s.good && s.core_certificate.is_some()).collect();
    if candidates.is_empty() {
        return Err(RecoveryError::NoGoodCells);
    }
    candidates.sort_by_key(|s| s.cell);
    let shortfall = candidates.len() < k;
    let mut covered: BTreeSet<LineId> = BTreeSet::new();
    let mut selection = Selection {
        cells: Vec::new(),
        union_sizes: Vec::new(),
        shortfall,
    };
    let mut taken = vec![false; candidates.len()];
    for _ in 0..k.min(candidates.len()) {
        let (best, _) = candidates
            .iter()
            .enumerate()
            .filter(|(i, _)| !taken[*i])
            .map(|(i, s)| (i, s.core_lines.iter().filter(|l| !covered.contains(l)).count()))
            .fold(None, |acc: Option<(usize, usize)>, (i, gain)| match acc {
                Some((_, g)) if g >= gain => acc,
                _ => Some((i, gain)),
            })
            .expect("an untaken candidate");
        taken[best] = true;
        covered.extend(candidates[best].core_lines.iter().copied());
        selection.cells.push(candidates[best].cell);
        selection.union_sizes.push(covered.len());
    }
    Ok(selection)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosureRound {
    pub lines_added: usize,
    pub points_added: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosureState {
    pub determined_points: Vec<PointId>,
    pub determined_lines: Vec<LineId>,
    pub rounds: usize,
    /// One entry per round; the last one adds nothing.
    pub history: Vec<ClosureRound>,
}

/// Least fixpoint of: a line through two determined points is determined;
/// a point on two determined lines is determined. Each round first adds
/// lines, then points.
pub fn closure(config: &Configuration, seed_points: &[PointId], seed_lines: &[LineId]) -> ClosureState {
    let mut point_in = vec![false; config.n_points()];
    let mut line_in = vec![false; config.n_lines()];
    for &p in seed_points {
        point_in[p] = true;
    }
    for &l in seed_lines {
        line_in[l] = true;
    }
    let mut history = Vec::new();
    loop {
        let new_lines: Vec<LineId> = (0..config.n_lines())
            .into_par_iter()
            .filter(|&l| !line_in[l] && config.points_on(l).iter().filter(|&&p| point_in[p]).take(2).count() == 2)
            .collect();
        for &l in &new_lines {
            line_in[l] = true;
        }
        let new_points: Vec<PointId> = (0..config.n_points())
            .into_par_iter()
            .filter(|&p| !point_in[p] && config.lines_through(p).iter().filter(|&&l| line_in[l]).take(2).count() == 2)
            .collect();
        for &p in &new_points {
            point_in[p] = true;
        }
        history.push(ClosureRound {
            lines_added: new_lines.len(),
            points_added: new_points.len(),
        });
        if new_lines.is_empty() && new_points.is_empty() {
            break;
        }
    }
    let ids = |v: &[bool]| v.iter().enumerate().filter_map(|(i, &b)| b.then_some(i)).collect::<Vec<_>>();
    ClosureState {
        determined_points: ids(&point_in),
        determined_lines: ids(&line_in),
        rounds: history.len(),
        history,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PipelineParams {
    pub delta: Rational,
    pub c2: Rational,
    /// Per-cell peel threshold; `None` uses half the cell's triples per point.
    pub peel: Option<Rational>,
    pub k: usize,
    /// Partition depth; `None` derives it from the sizes.
    pub levels: Option<usize>,
    pub epsilon: Rational,
    pub seed: u64,
}

impl Default for PipelineParams {
    fn default() -> Self {
        PipelineParams {
            delta: rat(1, 2),
            c2: rat(1, 100),
            peel: None,
            k: 10,
            levels: None,
            epsilon: rat(1, 20),
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamsReport {
    pub delta: String,
    pub c2: String,
    pub peel: String,
    pub k: usize,
    pub levels: String,
    pub epsilon: String,
    pub seed: u64,
}

impl From<&PipelineParams> for ParamsReport {
    fn from(p: &PipelineParams) -> Self {
        ParamsReport {
            delta: format_rational(&p.delta),
            c2: format_rational(&p.c2),
            peel: p.peel.as_ref().map_or_else(|| "auto".to_string(), format_rational),
            k: p.k,
            levels: p.levels.map_or_else(|| "auto".to_string(), |t| t.to_string()),
            epsilon: format_rational(&p.epsilon),
            seed: p.seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelChoice {
    /// `delta n^(2/3) / (16 m^(1/3))` on the working sizes.
    pub d: f64,
    pub unclamped: i64,
    pub levels: usize,
    pub clamped: bool,
    pub overridden: bool,
}

/// `t = round(log2 D^2)` clamped to `[1, max(1, floor(log2 n))]`.
pub fn choose_levels(delta: &Rational, n: usize, m: usize) -> LevelChoice {
    let d = delta.to_f64().unwrap_or(0.0) * (n as f64).powf(2.0 / 3.0) / (16.0 * (m as f64).cbrt());
    let unclamped = if d > 0.0 { (d * d).log2().round() as i64 } else { i64::MIN / 2 };
    let upper = (usize::BITS - 1 - n.max(1).leading_zeros()).max(1) as i64;
    let levels = unclamped.clamp(1, upper.min(63)) as usize;
    LevelChoice {
        d,
        unclamped,
        levels,
        clamped: levels as i64 != unclamped,
        overridden: false,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionSummary {
    pub levels: usize,
    pub degrees: Vec<u32>,
    pub total_degree: u32,
    pub classes: usize,
    pub boundary_points: usize,
    pub achieved_max_cell: usize,
    pub balance_bound: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellReport {
    pub cell: String,
    pub points: usize,
    pub in_cell_triples: usize,
    pub good: bool,
    pub status: String,
    pub peel_threshold: Option<String>,
    pub core_points: usize,
    pub core_lines: usize,
    pub core_certificate: Option<RigidityCertificate>,
    pub core_projective_span: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BadCellAccounting {
    pub bad_cell_triples: usize,
    pub threshold_times_cells: u64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub cells: Vec<String>,
    pub union_sizes: Vec<usize>,
    pub shortfall: bool,
    /// `m^(4/3) / n^(2/3)` on the cleaned sizes.
    pub scale: f64,
    /// `2 |union| / (k scale)`: the constant the union size achieves.
    pub implied_c3: f64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosureReport {
    pub seeded_with: String,
    pub seed_points: usize,
    pub seed_lines: usize,
    pub determined_points: usize,
    pub determined_lines: usize,
    pub rounds: usize,
    pub history: Vec<ClosureRound>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fractions {
    /// Determined points of the input over its point count.
    pub determined_points: f64,
    pub determined_lines: f64,
    pub cleaned_incidences: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub schema: u32,
    pub status: String,
    pub errors: Vec<String>,
    pub parameters: ParamsReport,
    pub input: SizeReport,
    /// `primal`, or `dual` when the input has fewer lines than points.
    pub route: String,
    pub working: SizeReport,
    pub cleaning: Option<CleaningSummary>,
    pub level_choice: Option<LevelChoice>,
    pub partition: Option<PartitionSummary>,
    pub in_cell_triples: Option<usize>,
    pub good_threshold: Option<u64>,
    pub cells: Vec<CellReport>,
    pub bad_cell_accounting: Option<BadCellAccounting>,
    pub selection: Option<SelectionReport>,
    pub closure: Option<ClosureReport>,
    /// Determined elements in input terms.
    pub determined_points: Vec<PointId>,
    pub determined_lines: Vec<LineId>,
    pub final_certificate: Option<RigidityCertificate>,
    pub final_projective_span: Option<usize>,
    /// How the final certificate applies to the input configuration.
    pub certificate_scope: Option<String>,
    pub composed: Option<ComposedBound>,
    pub fractions: Option<Fractions>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeReport {
    pub points: usize,
    pub lines: usize,
    pub incidences: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CleaningSummary {
    pub rounds: usize,
    pub surviving_points: usize,
    pub surviving_lines: usize,
    pub incidences_before: usize,
    pub incidences_after: usize,
    pub point_threshold: String,
    pub line_threshold: String,
    pub point_min_richness: u64,
    pub line_min_richness: u64,
    pub incidence_fraction: f64,
}

impl From<&CleaningReport> for CleaningSummary {
    fn from(c: &CleaningReport) -> Self {
        CleaningSummary {
            rounds: c.rounds,
            surviving_points: c.surviving_points.len(),
            surviving_lines: c.surviving_lines.len(),
            incidences_before: c.incidences_before,
            incidences_after: c.incidences_after,
            point_threshold: c.point_threshold.clone(),
            line_threshold: c.line_threshold.clone(),
            point_min_richness: c.point_min_richness,
            line_min_richness: c.line_min_richness,
            incidence_fraction: c.incidence_fraction,
        }
    }
}

fn sizes(config: &Configuration) -> SizeReport {
    SizeReport {
        points: config.n_points(),
        lines: config.n_lines(),
        incidences: config.incidence_count(),
    }
}

/// Clean, partition, classify, prepare, select, close and certify.
///
/// When the input has fewer lines than points every stage runs on the dual
/// configuration; determined sets are mapped back (dual points are input
/// lines) and the certificate is reported as transferred through duality.
pub fn run_pipeline(config: &Configuration, params: &PipelineParams) -> PipelineReport {
    let mut report = PipelineReport {
        schema: REPORT_SCHEMA,
        status: "complete".to_string(),
        errors: Vec::new(),
        parameters: params.into(),
        input: sizes(config),
        route: "primal".to_string(),
        working: sizes(config),
        cleaning: None,
        level_choice: None,
        partition: None,
        in_cell_triples: None,
        good_threshold: None,
        cells: Vec::new(),
        bad_cell_accounting: None,
        selection: None,
        closure: None,
        determined_points: Vec::new(),
        determined_lines: Vec::new(),
        final_certificate: None,
        final_projective_span: None,
        certificate_scope: None,
        composed: None,
        fractions: None,
    };
    if config.n_points() == 0 || config.n_lines() == 0 {
        report.status = "empty_input".to_string();
        return report;
    }
    let dual = config.n_lines() < config.n_points();
    let work = if dual { dualize(config).config } else { config.clone() };
    if dual {
        report.route = "dual".to_string();
        report.working = sizes(&work);
    }
    let (n, m) = (work.n_points(), work.n_lines());

    // Step 0: cleaning
    let cleaning = match clean(&work, &params.delta) {
        Ok(c) => c,
        Err(e) => {
            report.status = "cleaning_failed".to_string();
            report.errors.push(e.to_string());
            return report;
        }
    };
    report.cleaning = Some((&cleaning).into());
    let restricted = work.restrict(&cleaning.surviving_points, &cleaning.surviving_lines);
    let cleaned = restricted.config;
    if cleaned.n_points() == 0 || cleaned.n_lines() == 0 {
        report.status = "cleaning_empty".to_string();
        return report;
    }

    // Step 1: partition
    let mut choice = choose_levels(&params.delta, n, m);
    if let Some(t) = params.levels {
        choice.levels = t;
        choice.overridden = true;
        choice.clamped = false;
    }
    let levels = choice.levels;
    report.level_choice = Some(choice);
    let tree = match build_partition(&cleaned, levels, &params.epsilon, params.seed) {
        Ok(t) => t,
        Err(e) => {
            report.status = "partition_failed".to_string();
            report.errors.push(e.to_string());
            return report;
        }
    };
    report.partition = Some(PartitionSummary {
        levels,
        degrees: tree.levels.iter().map(|f| f.degree).collect(),
        total_degree: tree.total_degree(),
        classes: tree.cells().len(),
        boundary_points: tree.boundary_count(),
        achieved_max_cell: tree.achieved_max_cell,
        balance_bound: format_rational(&tree.balance_bound(cleaned.n_points())),
    });

    // Step 2: good cells and their cores
    let triples = in_cell_triples(&cleaned, &tree.labels);
    report.in_cell_triples = Some(triples.len());
    let threshold = good_cell_threshold(&params.c2, cleaned.n_points(), cleaned.n_lines());
    report.good_threshold = Some(threshold);
    let summaries = classify_cells(&cleaned, &tree, &triples, &params.c2);
    let bad: usize = summaries.iter().filter(|s| !s.good).map(|s| s.in_cell_triples).sum();
    let cap = threshold * summaries.len() as u64;
    report.bad_cell_accounting = Some(BadCellAccounting {
        bad_cell_triples: bad,
        threshold_times_cells: cap,
        holds: bad as u64 <= cap,
    });
    let prepared: Vec<(CellSummary, Option<Rational>, Result<CellSummary, RecoveryError>)> = summaries
        .into_par_iter()
        .map(|s| {
            if !s.good {
                let r = Err(RecoveryError::NotGood(s.cell));
                return (s, None, r);
            }
            let peel = params.peel.clone().unwrap_or_else(|| default_peel_threshold(&s));
            let r = prepare_cell(&cleaned, &s, &triples, &peel);
            (s, Some(peel), r)
        })
        .collect();
    let mut cores = Vec::new();
    for (s, peel, r) in prepared {
        let label = CellLabel::Cell(s.cell).encode(levels);
        let mut cell = CellReport {
            cell: label,
            points: s.points.len(),
            in_cell_triples: s.in_cell_triples,
            good: s.good,
            status: "bad".to_string(),
            peel_threshold: peel.as_ref().map(format_rational),
            core_points: 0,
            core_lines: 0,
            core_certificate: None,
            core_projective_span: None,
        };
        match r {
            Ok(core) => {
                cell.status = "prepared".to_string();
                cell.core_points = core.core_points.len();
                cell.core_lines = core.core_lines.len();
                cell.core_certificate = core.core_certificate.clone();
                let members: BTreeSet<PointId> = core.core_points.iter().copied().collect();
                let core_triples = triples.filter(core.core_points.clone(), |_, t| t.iter().all(|p| members.contains(p)));
                let matrix = collinearity_matrix(cleaned.points(), &core_triples).expect("core ids resolve");
                cell.core_projective_span = projective_kernel_check(cleaned.points(), &matrix).ok().map(|k| k.span_rank);
                cores.push(core);
            }
            Err(RecoveryError::EmptyCore(_)) => cell.status = "empty_core".to_string(),
            Err(_) => {}
        }
        report.cells.push(cell);
    }

    // Step 3: selection
    let selection = match greedy_select(&cores, params.k) {
        Ok(s) => s,
        Err(e) => {
            report.status = "no_good_cells".to_string();
            report.errors.push(e.to_string());
            return report;
        }
    };
    let (cn, cm) = (cleaned.n_points() as f64, cleaned.n_lines() as f64);
    let scale = cm.powf(4.0 / 3.0) / cn.powf(2.0 / 3.0);
    let union = selection.union_sizes.last().copied().unwrap_or(0);
    report.selection = Some(SelectionReport {
        cells: selection.cells.iter().map(|c| CellLabel::Cell(*c).encode(levels)).collect(),
        union_sizes: selection.union_sizes.clone(),
        shortfall: selection.shortfall,
        scale,
        implied_c3: 2.0 * union as f64 / (selection.cells.len() as f64 * scale),
    });

    // Step 4: closure from the selected cores
    let chosen: Vec<&CellSummary> = selection
        .cells
        .iter()
        .map(|c| cores.iter().find(|s| s.cell == *c).expect("selected from cores"))
        .collect();
    let seed_points: Vec<PointId> = chosen.iter().flat_map(|s| s.core_points.iter().copied()).collect();
    let seed_lines: BTreeSet<LineId> = chosen.iter().flat_map(|s| s.core_lines.iter().copied()).collect();
    let seed_lines: Vec<LineId> = seed_lines.into_iter().collect();
    let state = closure(&cleaned, &seed_points, &seed_lines);
    report.closure = Some(ClosureReport {
        seeded_with: "core points and core lines".to_string(),
        seed_points: seed_points.len(),
        seed_lines: seed_lines.len(),
        determined_points: state.determined_points.len(),
        determined_lines: state.determined_lines.len(),
        rounds: state.rounds,
        history: state.history.clone(),
    });

    // final certificate on the determined points and every cleaned line
    let sub = cleaned.restrict(&state.determined_points, &(0..cleaned.n_lines()).collect::<Vec<_>>());
    let sub_triples = consecutive_triples(&sub.config);
    match rigidity_certificate(sub.config.points(), &sub_triples) {
        Ok(c) => report.final_certificate = Some(c),
        Err(e) => report.errors.push(e.to_string()),
    }
    if let Ok(matrix) = collinearity_matrix(sub.config.points(), &sub_triples) {
        report.final_projective_span = projective_kernel_check(sub.config.points(), &matrix).ok().map(|k| k.span_rank);
    }
    let cell_certs: Vec<usize> = chosen
        .iter()
        .map(|s| s.core_certificate.as_ref().map_or(0, |c| c.certificate))
        .collect();
    // the closure result is the declared determined set
    match compose_rigidity(&cell_certs, true) {
        Ok(c) => report.composed = Some(c),
        Err(e) => report.errors.push(e.to_string()),
    }

    // back to input ids
    let work_points: Vec<PointId> = state.determined_points.iter().map(|&p| restricted_point(&cleaning, p)).collect();
    let work_lines: Vec<LineId> = state.determined_lines.iter().map(|&l| cleaning.surviving_lines[l]).collect();
    let (points, lines) = if dual { (work_lines, work_points) } else { (work_points, work_lines) };
    report.certificate_scope = Some(if dual {
        "dual points (input lines); valid for the input by duality".to_string()
    } else {
        "determined input points".to_string()
    });
    report.fractions = Some(Fractions {
        determined_points: points.len() as f64 / config.n_points() as f64,
        determined_lines: lines.len() as f64 / config.n_lines() as f64,
        cleaned_incidences: cleaning.incidence_fraction,
    });
    report.determined_points = points;
    report.determined_lines = lines;
    report
}

fn restricted_point(cleaning: &CleaningReport, p: PointId) -> PointId {
    cleaning.surviving_points[p]
}

pub fn report_to_json(report: &PipelineReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes")
}
