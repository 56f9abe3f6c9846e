//! Experiment reports: rows of norm pairs, summary statistics, threshold
//! checks and provenance.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::Result;

/// Key-value record of experiment parameters; keys are kept sorted.
pub type Parameters = BTreeMap<String, Value>;

/// JSON value for an integrability exponent (`"inf"` for infinity).
pub fn exponent_value(p: f64) -> Value {
    if p.is_infinite() {
        Value::String("inf".into())
    } else {
        serde_json::json!(p)
    }
}

/// Hex SHA-256 of the compact serialisation of `value`.
///
/// `serde_json` maps keep keys sorted, so equal values hash equally.
pub fn config_hash(value: &Value) -> String {
    let text = serde_json::to_string(value).expect("JSON values always serialise");
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowRole {
    /// `ratio = target_norm / source_norm`.
    Ratio,
    /// Pairwise distance; `target_norm` is the distance and `source_norm` the reference scale.
    Separation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub input_id: String,
    pub role: RowRole,
    pub source_space: String,
    pub target_space: String,
    pub source_norm: Option<f64>,
    pub target_norm: Option<f64>,
    pub ratio: Option<f64>,
    /// Set when a norm kernel refused the input; the row carries no numbers then.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flag: Option<String>,
    /// Additional per-row diagnostics (tails, levels, partial masses).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, f64>,
}

impl Row {
    pub fn new(input_id: impl Into<String>, role: RowRole, source_space: impl Into<String>, target_space: impl Into<String>) -> Self {
        Row {
            input_id: input_id.into(),
            role,
            source_space: source_space.into(),
            target_space: target_space.into(),
            source_norm: None,
            target_norm: None,
            ratio: None,
            flag: None,
            extra: BTreeMap::new(),
        }
    }

    /// Fills both norms and the ratio `target / source`.
    pub fn with_norms(mut self, source: f64, target: f64) -> Self {
        self.source_norm = Some(source);
        self.target_norm = Some(target);
        self.ratio = if source > 0.0 { Some(target / source) } else { None };
        self
    }

    pub fn flagged(mut self, why: impl Into<String>) -> Self {
        self.flag = Some(why.into());
        self
    }

    pub fn with_extra(mut self, key: &str, value: f64) -> Self {
        if value.is_finite() {
            self.extra.insert(key.into(), value);
        }
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub sup_ratio: Option<f64>,
    pub min_ratio: Option<f64>,
    pub min_separation: Option<f64>,
    #[serde(default)]
    pub growth_factors: Vec<f64>,
    #[serde(default)]
    pub measured_constants: BTreeMap<String, f64>,
    /// Curves for plotting, as `(x, y)` pairs.
    #[serde(default)]
    pub series: BTreeMap<String, Vec<[f64; 2]>>,
}

/// Acceptance bound on one summary metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Threshold {
    pub metric: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
}

impl Threshold {
    pub fn at_least(metric: &str, min: f64) -> Self {
        Threshold { metric: metric.into(), min: Some(min), max: None }
    }

    pub fn at_most(metric: &str, max: f64) -> Self {
        Threshold { metric: metric.into(), min: None, max: Some(max) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub threshold: Threshold,
    /// Absent when the metric was not produced, which counts as a failure.
    pub value: Option<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub version: String,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub parameters: Parameters,
    pub rows: Vec<Row>,
    pub summary: Summary,
    #[serde(default)]
    pub checks: Vec<Check>,
    pub provenance: Provenance,
}

pub const CSV_COLUMNS: [&str; 7] = ["experiment", "input_id", "source_space", "target_space", "source_norm", "target_norm", "ratio"];

impl ExperimentReport {
    /// Report with the given rows; ratio statistics are derived from the rows.
    pub fn new(experiment: &str, parameters: Parameters, rows: Vec<Row>) -> Self {
        let ratios: Vec<f64> = rows.iter().filter(|r| r.role == RowRole::Ratio).filter_map(|r| r.ratio).collect();
        let seps: Vec<f64> = rows.iter().filter(|r| r.role == RowRole::Separation).filter_map(|r| r.target_norm).collect();
        let summary = Summary {
            sup_ratio: ratios.iter().cloned().reduce(f64::max),
            min_ratio: ratios.iter().cloned().reduce(f64::min),
            min_separation: seps.iter().cloned().reduce(f64::min),
            ..Summary::default()
        };
        let hash = config_hash(&serde_json::json!({ "experiment": experiment, "parameters": parameters }));
        ExperimentReport {
            experiment: experiment.into(),
            parameters,
            rows,
            summary,
            checks: Vec::new(),
            provenance: Provenance { version: env!("CARGO_PKG_VERSION").into(), config_hash: hash },
        }
    }

    /// Records a measured constant; non-finite values are dropped so that
    /// their checks fail instead of corrupting the JSON.
    pub fn set_metric(&mut self, name: &str, value: f64) {
        if value.is_finite() {
            self.summary.measured_constants.insert(name.into(), value);
        } else {
            self.summary.measured_constants.remove(name);
        }
    }

    /// Looks up a measured constant or one of the fixed summary statistics.
    pub fn metric(&self, name: &str) -> Option<f64> {
        let s = &self.summary;
        match name {
            "sup_ratio" => s.sup_ratio,
            "min_ratio" => s.min_ratio,
            "min_separation" => s.min_separation,
            "min_growth" => s.growth_factors.iter().cloned().reduce(f64::min),
            "flagged_rows" => Some(self.rows.iter().filter(|r| r.flag.is_some()).count() as f64),
            _ => s.measured_constants.get(name).copied(),
        }
    }

    /// Evaluates thresholds, replacing any earlier checks.
    pub fn apply_thresholds(&mut self, thresholds: &[Threshold]) {
        self.checks = thresholds
            .iter()
            .map(|t| {
                let value = self.metric(&t.metric);
                let passed = value.is_some_and(|v| t.min.is_none_or(|m| v >= m) && t.max.is_none_or(|m| v <= m));
                Check { threshold: t.clone(), value, passed }
            })
            .collect();
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn write_json<W: Write>(&self, mut w: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut w, self)?;
        w.write_all(b"\n")?;
        Ok(())
    }

    pub fn read_json<R: Read>(r: R) -> Result<Self> {
        Ok(serde_json::from_reader(r)?)
    }

    /// Rows as CSV with the columns of [`CSV_COLUMNS`]; refused rows have empty numbers.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(CSV_COLUMNS)?;
        let cell = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:e}"));
        for r in &self.rows {
            out.write_record([
                self.experiment.clone(),
                r.input_id.clone(),
                r.source_space.clone(),
                r.target_space.clone(),
                cell(r.source_norm),
                cell(r.target_norm),
                cell(r.ratio),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    /// Flattens the summary series into `series,x,y` lines.
    pub fn write_plotdata<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["series", "x", "y"])?;
        for (name, points) in &self.summary.series {
            for [x, y] in points {
                out.write_record([name.clone(), format!("{x:e}"), format!("{y:e}")])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// `max / min` of positive values, `None` for an empty or degenerate set.
pub fn spread(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    let mut any = false;
    for v in values {
        any = true;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (any && lo > 0.0).then(|| hi / lo)
}

/// Relative drift `|b - a| / |a|`.
pub fn drift(a: f64, b: f64) -> f64 {
    (b - a).abs() / a.abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ExperimentReport {
        let mut params = Parameters::new();
        params.insert("p".into(), exponent_value(f64::INFINITY));
        params.insert("seed".into(), serde_json::json!(7));
        let rows = vec![
            Row::new("a", RowRole::Ratio, "S:B:r=0:p=2:q=2", "S:B:r=0:p=2:q=2").with_norms(3.0, 1.0 / 7.0).with_extra("tail", 1e-13),
            Row::new("b", RowRole::Ratio, "X", "Y").with_norms(0.1, 0.3),
            Row::new("c", RowRole::Ratio, "X", "Y").flagged("spectral tail"),
            Row::new("a|b", RowRole::Separation, "Y", "Y").with_norms(2.0, 0.25),
        ];
        let mut r = ExperimentReport::new("demo", params, rows);
        r.summary.series.insert("curve".into(), vec![[1.0, 2.0], [2.0, 4.5]]);
        r.summary.growth_factors = vec![2.0, 2.25];
        r.set_metric("spread", 1.5);
        r
    }

    #[test]
    fn ratios_and_summary() {
        let r = sample();
        for row in &r.rows {
            if let (Some(s), Some(t), Some(q)) = (row.source_norm, row.target_norm, row.ratio) {
                assert_eq!(q, t / s);
            }
        }
        approx::assert_relative_eq!(r.summary.sup_ratio.unwrap(), 3.0, max_relative = 1e-15);
        approx::assert_relative_eq!(r.summary.min_ratio.unwrap(), 1.0 / 21.0, max_relative = 1e-15);
        assert_eq!(r.summary.min_separation, Some(0.25));
        assert_eq!(r.metric("min_growth"), Some(2.0));
        assert_eq!(r.metric("flagged_rows"), Some(1.0));
    }

    #[test]
    fn json_round_trip_is_exact() {
        let r = sample();
        let mut buf = Vec::new();
        r.write_json(&mut buf).unwrap();
        let back = ExperimentReport::read_json(buf.as_slice()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn csv_and_plotdata() {
        let r = sample();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_COLUMNS.join(","));
        assert_eq!(lines.len(), 5);
        assert!(lines[3].ends_with(",,,"));
        let mut buf = Vec::new();
        r.write_plotdata(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "series,x,y\ncurve,1e0,2e0\ncurve,2e0,4.5e0\n");
        let empty = ExperimentReport::new("none", Parameters::new(), vec![]);
        let mut buf = Vec::new();
        empty.write_plotdata(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "series,x,y\n");
    }

    #[test]
    fn thresholds() {
        let mut r = sample();
        r.apply_thresholds(&[Threshold::at_most("spread", 2.0), Threshold::at_least("min_growth", 1.5)]);
        assert!(r.passed());
        r.apply_thresholds(&[Threshold::at_least("min_growth", 2.5)]);
        assert!(!r.passed());
        r.apply_thresholds(&[Threshold::at_most("missing", 1.0)]);
        assert!(!r.passed());
        r.set_metric("spread", f64::INFINITY);
        assert_eq!(r.metric("spread"), None);
    }

    #[test]
    fn hash_is_canonical() {
        let a: Value = serde_json::from_str(r#"{"b": 1, "a": [1, 2]}"#).unwrap();
        let b: Value = serde_json::from_str(r#"{"a": [1, 2],   "b": 1}"#).unwrap();
        assert_eq!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a).len(), 64);
        assert_ne!(config_hash(&a), config_hash(&serde_json::json!({"a": [2, 1], "b": 1})));
        assert_eq!(spread([2.0, 1.0, 4.0]), Some(4.0));
        assert_eq!(spread(std::iter::empty()), None);
    }
}
