//! Regression comparison of two JSON reports.

use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CompareError {
    #[error("schema mismatch: report has {report}, baseline has {baseline}")]
    SchemaMismatch { report: String, baseline: String },
}

#[derive(Clone, Copy, Debug)]
pub struct Tolerances {
    /// Relative tolerance for non-integer numbers.
    pub relative: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { relative: 1e-9 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Mismatch {
    pub path: String,
    pub report: Value,
    pub baseline: Value,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Diff {
    pub exact_mismatches: Vec<Mismatch>,
    pub tolerance_mismatches: Vec<Mismatch>,
    pub fields_compared: usize,
}

impl Diff {
    pub fn is_regression(&self) -> bool {
        !self.exact_mismatches.is_empty() || !self.tolerance_mismatches.is_empty()
    }
}

/// Top-level keys that describe the run rather than its result.
const IGNORED: [&str; 1] = ["manifest"];

/// Integers, strings, booleans and structure must match exactly; other
/// numbers within `tol.relative`.
pub fn compare_baseline(report: &Value, baseline: &Value, tol: &Tolerances) -> Result<Diff, CompareError> {
    let schema = |v: &Value| v.get("schema").map_or_else(|| "none".to_string(), Value::to_string);
    let (rs, bs) = (schema(report), schema(baseline));
    if rs != bs {
        return Err(CompareError::SchemaMismatch { report: rs, baseline: bs });
    }
    let mut diff = Diff::default();
    match (report, baseline) {
        (Value::Object(r), Value::Object(b)) => {
            let mut keys: Vec<&String> = r.keys().chain(b.keys()).filter(|k| !IGNORED.contains(&k.as_str())).collect();
            keys.sort();
            keys.dedup();
            for k in keys {
                walk(k, r.get(k), b.get(k), tol, &mut diff);
            }
        }
        _ => walk("", Some(report), Some(baseline), tol, &mut diff),
    }
    Ok(diff)
}

fn walk(path: &str, r: Option<&Value>, b: Option<&Value>, tol: &Tolerances, diff: &mut Diff) {
    let (r, b) = match (r, b) {
        (Some(r), Some(b)) => (r, b),
        (r, b) => {
            diff.fields_compared += 1;
            diff.exact_mismatches.push(Mismatch {
                path: path.to_string(),
                report: r.cloned().unwrap_or(Value::Null),
                baseline: b.cloned().unwrap_or(Value::Null),
            });
            return;
        }
    };
    match (r, b) {
        (Value::Object(ro), Value::Object(bo)) => {
            let mut keys: Vec<&String> = ro.keys().chain(bo.keys()).collect();
            keys.sort();
            keys.dedup();
            for k in keys {
                walk(&format!("{path}.{k}"), ro.get(k), bo.get(k), tol, diff);
            }
        }
        (Value::Array(ra), Value::Array(ba)) if ra.len() == ba.len() => {
            for (i, (x, y)) in ra.iter().zip(ba).enumerate() {
                walk(&format!("{path}[{i}]"), Some(x), Some(y), tol, diff);
            }
        }
        (Value::Number(x), Value::Number(y)) if !(x.is_f64() || y.is_f64()) => {
            diff.fields_compared += 1;
            if x != y {
                diff.exact_mismatches.push(mismatch(path, r, b));
            }
        }
        (Value::Number(x), Value::Number(y)) => {
            diff.fields_compared += 1;
            let (x, y) = (x.as_f64().unwrap_or(f64::NAN), y.as_f64().unwrap_or(f64::NAN));
            let scale = x.abs().max(y.abs());
            // NaN never compares close
            let close = (x - y).abs() <= tol.relative * scale;
            if x != y && !close {
                diff.tolerance_mismatches.push(mismatch(path, r, b));
            }
        }
        _ => {
            diff.fields_compared += 1;
            if r != b {
                diff.exact_mismatches.push(mismatch(path, r, b));
            }
        }
    }
}

fn mismatch(path: &str, r: &Value, b: &Value) -> Mismatch {
    Mismatch {
        path: path.to_string(),
        report: r.clone(),
        baseline: b.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn identical_reports_have_no_diff() {
        let r = json!({"schema": 1, "final_certificate": {"certificate": 8}, "ratio": 0.5});
        let d = compare_baseline(&r, &r, &Tolerances::default()).unwrap();
        assert!(!d.is_regression());
        assert_eq!(d.fields_compared, 3);
    }

    #[test]
    fn certificate_change_is_exact_mismatch() {
        let r = json!({"schema": 1, "final_certificate": {"certificate": 9}});
        let b = json!({"schema": 1, "final_certificate": {"certificate": 8}});
        let d = compare_baseline(&r, &b, &Tolerances::default()).unwrap();
        assert_eq!(d.exact_mismatches.len(), 1);
        assert_eq!(d.exact_mismatches[0].path, "final_certificate.certificate");
    }

    #[test]
    fn float_within_tolerance_passes() {
        let r = json!({"schema": 1, "ratio_main": 0.6299605249474366});
        let b = json!({"schema": 1, "ratio_main": 0.6299605249474366 + 1e-12});
        assert!(!compare_baseline(&r, &b, &Tolerances { relative: 1e-9 }).unwrap().is_regression());
        let b = json!({"schema": 1, "ratio_main": 0.63});
        assert_eq!(compare_baseline(&r, &b, &Tolerances { relative: 1e-9 }).unwrap().tolerance_mismatches.len(), 1);
    }

    #[test]
    fn schema_mismatch() {
        let r = json!({"schema": 1});
        let b = json!({"schema": 2});
        assert!(matches!(compare_baseline(&r, &b, &Tolerances::default()), Err(CompareError::SchemaMismatch { .. })));
    }

    #[test]
    fn manifest_is_ignored_and_lengths_matter() {
        let r = json!({"schema": 1, "manifest": {"output": "a"}, "ids": [1, 2]});
        let b = json!({"schema": 1, "manifest": {"output": "b"}, "ids": [1, 2, 3]});
        let d = compare_baseline(&r, &b, &Tolerances::default()).unwrap();
        assert_eq!(d.exact_mismatches.len(), 1);
        assert_eq!(d.exact_mismatches[0].path, "ids");
    }
}
