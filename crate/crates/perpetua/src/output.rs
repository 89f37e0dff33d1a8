//! Result records and their CSV (raw replications) and JSON (summary) files.
//!
//! CSV: UTF-8, one header row, floats written in shortest round-trip form.
//! JSON: see [`Summary`]; `schema_version` is bumped on incompatible changes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::ExperimentKind;
use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass => 0,
            Verdict::Fail => 2,
        }
    }
}

/// One pass/fail comparison of a statistic against a bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// `"<="`, `">="` or `"within"`.
    pub relation: &'static str,
    pub bound: f64,
    /// Centre of a `within` check.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check { name: name.into(), value, relation: "<=", bound, target: None, pass: value <= bound }
    }

    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check { name: name.into(), value, relation: ">=", bound, target: None, pass: value >= bound }
    }

    /// `|value - target| <= tol`.
    pub fn within(name: impl Into<String>, value: f64, target: f64, tol: f64) -> Self {
        Check {
            name: name.into(),
            value,
            relation: "within",
            bound: tol,
            target: Some(target),
            pass: (value - target).abs() <= tol,
        }
    }
}

/// Output of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRecord {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub config_hash: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub checks: Vec<Check>,
    pub estimates: Map<String, Value>,
    pub replications: usize,
    pub failed_replications: usize,
    pub wall_time_seconds: f64,
}

impl ResultRecord {
    pub fn verdict(&self) -> Verdict {
        if self.checks.iter().all(|c| c.pass) {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn summary(&self) -> Summary<'_> {
        Summary {
            schema_version: SCHEMA_VERSION,
            kind: self.kind.name(),
            seed: self.seed,
            config_sha256: &self.config_hash,
            verdict: self.verdict(),
            replications: self.replications,
            failed_replications: self.failed_replications,
            wall_time_seconds: self.wall_time_seconds,
            checks: &self.checks,
            estimates: &self.estimates,
            csv_columns: &self.columns,
        }
    }

    /// CSV bytes of the raw rows.
    pub fn csv_bytes(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.into_error()))
    }
}

/// JSON summary schema.
#[derive(Debug, Serialize)]
pub struct Summary<'a> {
    pub schema_version: u32,
    pub kind: &'static str,
    pub seed: u64,
    pub config_sha256: &'a str,
    pub verdict: Verdict,
    pub replications: usize,
    pub failed_replications: usize,
    pub wall_time_seconds: f64,
    pub checks: &'a [Check],
    pub estimates: &'a Map<String, Value>,
    pub csv_columns: &'a [String],
}

/// Shortest text that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

fn with_extension(path: &Path, ext: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

/// Write `<path>.csv` and `<path>.json`; returns both paths.
pub fn emit(record: &ResultRecord, path: &Path) -> Result<(PathBuf, PathBuf), CliError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let csv_path = with_extension(path, "csv");
    let json_path = with_extension(path, "json");
    fs::write(&csv_path, record.csv_bytes()?)?;
    let mut json = serde_json::to_vec_pretty(&record.summary())?;
    json.push(b'\n');
    fs::write(&json_path, json)?;
    Ok((csv_path, json_path))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record() -> ResultRecord {
        ResultRecord {
            kind: ExperimentKind::Simulate,
            seed: 3,
            config_hash: "ab".into(),
            columns: vec!["rep".into(), "x".into()],
            rows: vec![vec!["0".into(), fmt_f64(0.1 + 0.2)], vec!["1".into(), fmt_f64(-1e-300)]],
            checks: vec![Check::at_most("d", 0.01, 0.02)],
            estimates: Map::new(),
            replications: 2,
            failed_replications: 0,
            wall_time_seconds: 0.0,
        }
    }

    #[test]
    fn floats_round_trip_through_csv() {
        let bytes = record().csv_bytes().unwrap();
        let mut r = csv::Reader::from_reader(bytes.as_slice());
        assert_eq!(r.headers().unwrap(), vec!["rep", "x"]);
        let xs: Vec<f64> = r.records().map(|rec| rec.unwrap()[1].parse().unwrap()).collect();
        assert_eq!(xs, vec![0.1 + 0.2, -1e-300]);
    }

    #[test]
    fn verdict_follows_checks() {
        let mut rec = record();
        assert_eq!(rec.verdict(), Verdict::Pass);
        rec.checks.push(Check::within("h", 1.8, 1.5, 0.2));
        assert_eq!(rec.verdict(), Verdict::Fail);
        assert_eq!(rec.verdict().exit_code(), 2);
    }

    #[test]
    fn emit_writes_both_files() {
        let dir = tempfile::tempdir().unwrap();
        let (c, j) = emit(&record(), &dir.path().join("sub/run")).unwrap();
        assert!(c.ends_with("sub/run.csv") && j.ends_with("sub/run.json"));
        let v: Value = serde_json::from_slice(&fs::read(j).unwrap()).unwrap();
        assert_eq!(v["schema_version"], 1);
        assert_eq!(v["seed"], 3);
        assert_eq!(v["config_sha256"], "ab");
        assert_eq!(v["verdict"], "PASS");
    }
}
