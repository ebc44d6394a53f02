//! Command-line driver: argument parsing, run manifests and JSON reports.

pub mod compare;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use st_lab_core::incidence::{count_incidences, st_ratio};
use st_lab_core::partition::{build_partition, line_crossings, PartitionTreeFile};
use st_lab_core::recovery::{choose_levels, closure, run_pipeline, PipelineParams, REPORT_SCHEMA};
use st_lab_core::rigidity::{collinearity_matrix, concurrent_triples, dgos_diagnostic, dual_rigidity_transfer, projective_kernel_check, rigidity_certificate};
use st_lab_core::triples::consecutive_triples;
use st_lab_core::{configuration_from_json, configuration_to_json, format_rational, parse_rational, Configuration, CountMethod, GeneratorSpec, Rational};

pub use compare::{compare_baseline, CompareError, Diff, Tolerances};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

fn rational_arg(s: &str) -> Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

fn positive_rational_arg(s: &str) -> Result<Rational, String> {
    let r = rational_arg(s)?;
    if r <= Rational::from_integer(0.into()) {
        return Err(format!("{s} is not positive"));
    }
    Ok(r)
}

#[derive(Debug, Parser)]
#[command(name = "st-lab", version, about = "Exact point-line incidence experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a configuration.
    Gen {
        #[command(subcommand)]
        family: Family,
        #[arg(short, long, global = true)]
        output: Option<PathBuf>,
    },
    /// Count incidences.
    Count {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Grouped)]
        method: Method,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Peel to the rich core.
    Clean {
        input: PathBuf,
        #[arg(long, default_value = "1/2", value_parser = positive_rational_arg)]
        delta: Rational,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Consecutive collinear triples.
    Triples {
        input: PathBuf,
        /// Include the triples themselves.
        #[arg(long)]
        list: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Build a polynomial partition.
    Partition {
        input: PathBuf,
        /// Depth; derived from the sizes when absent.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..=63))]
        levels: Option<u64>,
        #[arg(long, default_value = "1/20", value_parser = positive_rational_arg)]
        epsilon: Rational,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Rigidity certificate.
    Rigidity {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = TripleChoice::Consecutive)]
        triples: TripleChoice,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Closure of seed points and lines.
    Recover {
        input: PathBuf,
        #[arg(long, value_delimiter = ',')]
        points: Vec<usize>,
        #[arg(long, value_delimiter = ',')]
        lines: Vec<usize>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Full recovery pipeline.
    Pipeline {
        input: PathBuf,
        #[arg(long, default_value = "1/2", value_parser = positive_rational_arg)]
        delta: Rational,
        #[arg(long, default_value = "1/100", value_parser = positive_rational_arg)]
        c2: Rational,
        #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
        k: u64,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..=63))]
        levels: Option<u64>,
        #[arg(long, default_value = "1/20", value_parser = positive_rational_arg)]
        epsilon: Rational,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Per-cell peel threshold; derived per cell when absent.
        #[arg(long, value_parser = rational_arg)]
        peel: Option<Rational>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Compare a report against a baseline.
    Compare {
        report: PathBuf,
        baseline: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        rel_tol: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum Family {
    Elekes {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
    },
    Unbalanced {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        s: u64,
    },
    Random {
        #[arg(long)]
        points: usize,
        #[arg(long)]
        lines: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    Circle {
        #[arg(long, value_parser = clap::value_parser!(u64).range(3..))]
        n: u64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Naive,
    Grouped,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TripleChoice {
    Consecutive,
    Concurrent,
}

/// Everything needed to reproduce a run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub parameters: BTreeMap<String, String>,
    pub inputs: Vec<String>,
    pub output: Option<String>,
    pub tool_version: String,
    pub seed: Option<u64>,
}

impl RunManifest {
    /// Arguments that reproduce this run, program name excluded.
    pub fn to_argv(&self) -> Vec<String> {
        let mut argv: Vec<String> = self.subcommand.split(' ').map(str::to_string).collect();
        argv.extend(self.inputs.iter().cloned());
        for (k, v) in &self.parameters {
            if v == "auto" {
                continue;
            }
            match v.as_str() {
                "true" => argv.push(format!("--{k}")),
                "false" => {}
                _ => argv.extend([format!("--{k}"), v.clone()]),
            }
        }
        if let Some(o) = &self.output {
            argv.extend(["-o".to_string(), o.clone()]);
        }
        argv
    }
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn params<const N: usize>(pairs: [(&str, String); N]) -> BTreeMap<String, String> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn auto<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "auto".to_string(), T::to_string)
}

/// Validated manifest for a parsed command line, defaults filled in.
pub fn manifest(cli: &Cli) -> RunManifest {
    let (subcommand, parameters, inputs, output, seed) = match &cli.command {
        Command::Gen { family, output } => {
            let (name, p, seed) = match family {
                Family::Elekes { n } => ("gen elekes", params([("n", n.to_string())]), None),
                Family::Unbalanced { n, s } => ("gen unbalanced", params([("n", n.to_string()), ("s", s.to_string())]), None),
                Family::Random { points, lines, seed } => (
                    "gen random",
                    params([("points", points.to_string()), ("lines", lines.to_string()), ("seed", seed.to_string())]),
                    Some(*seed),
                ),
                Family::Circle { n } => ("gen circle", params([("n", n.to_string())]), None),
            };
            (name, p, vec![], output, seed)
        }
        Command::Count { input, method, output } => {
            let m = method.to_possible_value().expect("named").get_name().to_string();
            ("count", params([("method", m)]), vec![input], output, None)
        }
        Command::Clean { input, delta, output } => ("clean", params([("delta", format_rational(delta))]), vec![input], output, None),
        Command::Triples { input, list, output } => ("triples", params([("list", list.to_string())]), vec![input], output, None),
        Command::Partition {
            input,
            levels,
            epsilon,
            seed,
            output,
        } => (
            "partition",
            params([("levels", auto(levels)), ("epsilon", format_rational(epsilon)), ("seed", seed.to_string())]),
            vec![input],
            output,
            Some(*seed),
        ),
        Command::Rigidity { input, triples, output } => {
            let t = triples.to_possible_value().expect("named").get_name().to_string();
            ("rigidity", params([("triples", t)]), vec![input], output, None)
        }
        Command::Recover { input, points, lines, output } => {
            let join = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
            let mut p = BTreeMap::new();
            if !points.is_empty() {
                p.insert("points".to_string(), join(points));
            }
            if !lines.is_empty() {
                p.insert("lines".to_string(), join(lines));
            }
            ("recover", p, vec![input], output, None)
        }
        Command::Pipeline {
            input,
            delta,
            c2,
            k,
            levels,
            epsilon,
            seed,
            peel,
            output,
        } => (
            "pipeline",
            params([
                ("delta", format_rational(delta)),
                ("c2", format_rational(c2)),
                ("k", k.to_string()),
                ("levels", auto(levels)),
                ("epsilon", format_rational(epsilon)),
                ("seed", seed.to_string()),
                ("peel", peel.as_ref().map_or_else(|| "auto".to_string(), format_rational)),
            ]),
            vec![input],
            output,
            Some(*seed),
        ),
        Command::Compare {
            report,
            baseline,
            rel_tol,
            output,
        } => ("compare", params([("rel-tol", rel_tol.to_string())]), vec![report, baseline], output, None),
    };
    RunManifest {
        subcommand: subcommand.to_string(),
        parameters,
        inputs: inputs.into_iter().map(|p| path_str(p)).collect(),
        output: output.as_deref().map(path_str),
        tool_version: TOOL_VERSION.to_string(),
        seed,
    }
}

/// Parses `argv` (program name first). Usage errors come back as clap errors.
pub fn parse_cli<I, T>(argv: I) -> Result<(Cli, RunManifest), clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv)?;
    let m = manifest(&cli);
    Ok((cli, m))
}

/// Result of a run: the JSON text and whether it signals a regression.
#[derive(Debug)]
pub struct RunOutput {
    pub json: String,
    pub regression: bool,
}

fn read_config(path: &Path) -> anyhow::Result<Configuration> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    configuration_from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

fn read_json(path: &Path) -> anyhow::Result<Value> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Adds the manifest (and a schema, if missing) to a report body.
fn envelope(body: impl Serialize, manifest: &RunManifest) -> anyhow::Result<Value> {
    let mut v = serde_json::to_value(body)?;
    let Value::Object(map) = &mut v else {
        bail!("report body is not an object");
    };
    map.entry("schema").or_insert(json!(REPORT_SCHEMA));
    map.insert("manifest".to_string(), serde_json::to_value(manifest)?);
    Ok(v)
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

/// Runs a parsed command and writes its output file, if any.
pub fn execute(cli: &Cli, manifest: &RunManifest) -> anyhow::Result<RunOutput> {
    let mut regression = false;
    let json = match &cli.command {
        Command::Gen { family, .. } => {
            let spec = match *family {
                Family::Elekes { n } => GeneratorSpec::Elekes { n },
                Family::Unbalanced { n, s } => GeneratorSpec::Unbalanced { n, s },
                Family::Random { points, lines, seed } => GeneratorSpec::Random { points, lines, seed },
                Family::Circle { n } => GeneratorSpec::Circle { n },
            };
            // configuration files stay plain so they can be read back
            let mut s = configuration_to_json(&spec.generate()?);
            s.push('\n');
            s
        }
        Command::Count { input, method, .. } => {
            let cfg = read_config(input)?;
            let method = match method {
                Method::Naive => CountMethod::Naive,
                Method::Grouped => CountMethod::Grouped,
            };
            let stats = count_incidences(&cfg, method);
            let ratio = st_ratio(&cfg).ok();
            pretty(&envelope(
                json!({
                    "points": cfg.n_points(),
                    "lines": cfg.n_lines(),
                    "incidences": stats.total,
                    "ratio_main": ratio.map(|r| r.ratio_main),
                    "ratio_full": ratio.map(|r| r.ratio_full),
                    "per_point_richness": stats.per_point_richness,
                    "per_line_richness": stats.per_line_richness,
                }),
                manifest,
            )?)
        }
        Command::Clean { input, delta, .. } => {
            let cfg = read_config(input)?;
            pretty(&envelope(st_lab_core::clean(&cfg, delta)?, manifest)?)
        }
        Command::Triples { input, list, .. } => {
            let cfg = read_config(input)?;
            let t = consecutive_triples(&cfg);
            let mut body = json!({
                "count": t.len(),
                "max_pair_multiplicity": t.max_pair_multiplicity(),
                "dgos": dgos_diagnostic(&t),
            });
            if *list {
                body["triples"] = json!(t.triples());
            }
            pretty(&envelope(body, manifest)?)
        }
        Command::Partition {
            input, levels, epsilon, seed, ..
        } => {
            let cfg = read_config(input)?;
            let t = levels.map_or_else(|| choose_levels(&PipelineParams::default().delta, cfg.n_points(), cfg.n_lines()).levels, |t| t as usize);
            let tree = build_partition(&cfg, t, epsilon, *seed)?;
            let mut max_crossings = 0;
            let mut lines_in_zero_set = Vec::new();
            for (l, line) in cfg.lines().iter().enumerate() {
                match line_crossings(line, &tree, &cfg) {
                    Ok(c) => max_crossings = max_crossings.max(c),
                    Err(_) => lines_in_zero_set.push(l),
                }
            }
            let sizes: Vec<usize> = tree.cells().values().map(Vec::len).collect();
            pretty(&envelope(
                json!({
                    "tree": PartitionTreeFile::from(&tree),
                    "class_sizes": sizes,
                    "boundary_points": tree.boundary_count(),
                    "balance_bound": format_rational(&tree.balance_bound(cfg.n_points())),
                    "max_line_crossings": max_crossings,
                    "lines_in_zero_set": lines_in_zero_set,
                }),
                manifest,
            )?)
        }
        Command::Rigidity { input, triples, .. } => {
            let cfg = read_config(input)?;
            let body = match triples {
                TripleChoice::Consecutive => {
                    let t = consecutive_triples(&cfg);
                    let m = collinearity_matrix(cfg.points(), &t)?;
                    let span = projective_kernel_check(cfg.points(), &m)?.span_rank;
                    json!({
                        "triples": "consecutive",
                        "certificate": rigidity_certificate(cfg.points(), &t)?,
                        "projective_span": span,
                        "dgos": dgos_diagnostic(&t),
                    })
                }
                TripleChoice::Concurrent => {
                    let t = concurrent_triples(&cfg);
                    json!({
                        "triples": "concurrent",
                        "dual": dual_rigidity_transfer(&cfg, &t)?,
                    })
                }
            };
            pretty(&envelope(body, manifest)?)
        }
        Command::Recover { input, points, lines, .. } => {
            let cfg = read_config(input)?;
            if let Some(p) = points.iter().find(|&&p| p >= cfg.n_points()) {
                bail!("point id {p} out of range ({} points)", cfg.n_points());
            }
            if let Some(l) = lines.iter().find(|&&l| l >= cfg.n_lines()) {
                bail!("line id {l} out of range ({} lines)", cfg.n_lines());
            }
            pretty(&envelope(closure(&cfg, points, lines), manifest)?)
        }
        Command::Pipeline {
            input,
            delta,
            c2,
            k,
            levels,
            epsilon,
            seed,
            peel,
            ..
        } => {
            let cfg = read_config(input)?;
            let params = PipelineParams {
                delta: delta.clone(),
                c2: c2.clone(),
                peel: peel.clone(),
                k: *k as usize,
                levels: levels.map(|t| t as usize),
                epsilon: epsilon.clone(),
                seed: *seed,
            };
            pretty(&envelope(run_pipeline(&cfg, &params), manifest)?)
        }
        Command::Compare {
            report, baseline, rel_tol, ..
        } => {
            let diff = compare_baseline(&read_json(report)?, &read_json(baseline)?, &Tolerances { relative: *rel_tol })?;
            regression = diff.is_regression();
            pretty(&envelope(json!({ "regression": regression, "diff": diff }), manifest)?)
        }
    };
    if let Some(out) = &manifest.output {
        std::fs::write(out, &json).with_context(|| format!("writing {out}"))?;
    }
    Ok(RunOutput { json, regression })
}

/// Applies `ST_LAB_THREADS` to the global thread pool.
pub fn configure_threads(value: Option<&str>) -> anyhow::Result<()> {
    let Some(v) = value else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).with_context(|| format!("ST_LAB_THREADS must be a positive integer, got {v:?}"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gen_manifest() {
        let (_, m) = parse_cli(["st-lab", "gen", "elekes", "--n", "3", "-o", "a.json"]).unwrap();
        assert_eq!(m.subcommand, "gen elekes");
        assert_eq!(m.parameters["n"], "3");
        assert_eq!(m.output.as_deref(), Some("a.json"));
    }

    #[test]
    fn pipeline_defaults_are_recorded() {
        let (_, m) = parse_cli(["st-lab", "pipeline", "cfg.json", "--k", "5"]).unwrap();
        assert_eq!(m.parameters["k"], "5");
        assert_eq!(m.parameters["delta"], "1/2");
        assert_eq!(m.parameters["c2"], "1/100");
        assert_eq!(m.parameters["epsilon"], "1/20");
        assert_eq!(m.parameters["levels"], "auto");
        assert_eq!(m.seed, Some(0));
    }

    #[test]
    fn usage_errors() {
        let e = parse_cli(["st-lab", "gen", "elekes"]).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("--n"));
        assert_eq!(parse_cli(["st-lab", "count", "x.json", "--bogus"]).unwrap_err().exit_code(), 2);
        assert_eq!(parse_cli(["st-lab", "clean", "x.json", "--delta", "abc"]).unwrap_err().exit_code(), 2);
        assert_eq!(parse_cli(["st-lab", "clean", "x.json", "--delta", "-1"]).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn argv_round_trip() {
        for argv in [
            vec!["pipeline", "cfg.json", "--k", "5", "--seed", "3", "-o", "r.json"],
            vec!["gen", "random", "--points", "10", "--lines", "4"],
            vec!["triples", "cfg.json", "--list"],
            vec!["recover", "cfg.json", "--points", "0,1", "--lines", "2"],
        ] {
            let (_, m) = parse_cli(std::iter::once("st-lab").chain(argv)).unwrap();
            let again = m.to_argv();
            let (_, m2) = parse_cli(std::iter::once("st-lab".to_string()).chain(again)).unwrap();
            assert_eq!(m, m2);
        }
    }
}
