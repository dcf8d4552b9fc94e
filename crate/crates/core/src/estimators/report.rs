use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Standard errors of slack allowed before an inequality counts as violated.
pub const SLACK_SE: f64 = 3.0;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub n_paths: usize,
    pub dt: f64,
    pub t_grid: Vec<f64>,
    pub seed: u64,
    /// How `pass` was decided.
    pub convention: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// One estimated quantity against one bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub quantity: String,
    pub estimate: f64,
    pub stderr: f64,
    pub bound: f64,
    /// `bound - estimate`.
    pub margin: f64,
    pub pass: bool,
    #[serde(default)]
    pub inconclusive: bool,
    pub metadata: ReportMeta,
}

pub const UPPER: &str = "estimate <= bound + 3 stderr";
pub const LOWER: &str = "estimate >= bound - stderr";

impl EstimateReport {
    /// Upper-bound check: pass iff `margin + 3·stderr ≥ 0`.
    pub fn upper(quantity: impl Into<String>, estimate: f64, stderr: f64, bound: f64, mut meta: ReportMeta) -> Self {
        let margin = bound - estimate;
        meta.convention = UPPER.into();
        EstimateReport {
            quantity: quantity.into(),
            estimate,
            stderr,
            bound,
            margin,
            pass: margin + SLACK_SE * stderr >= 0.0,
            inconclusive: false,
            metadata: meta,
        }
    }

    /// Lower-bound check: pass iff `estimate ≥ bound - stderr`.
    pub fn lower(quantity: impl Into<String>, estimate: f64, stderr: f64, bound: f64, mut meta: ReportMeta) -> Self {
        let margin = bound - estimate;
        meta.convention = LOWER.into();
        EstimateReport {
            quantity: quantity.into(),
            estimate,
            stderr,
            bound,
            margin,
            pass: estimate >= bound - stderr,
            inconclusive: false,
            metadata: meta,
        }
    }

    /// Two-sided agreement: pass iff `|estimate - bound| ≤ 3·stderr`.
    pub fn agree(quantity: impl Into<String>, estimate: f64, stderr: f64, target: f64, mut meta: ReportMeta) -> Self {
        let margin = target - estimate;
        meta.convention = "|estimate - bound| <= 3 stderr".into();
        EstimateReport {
            quantity: quantity.into(),
            estimate,
            stderr,
            bound: target,
            margin,
            pass: margin.abs() <= SLACK_SE * stderr,
            inconclusive: false,
            metadata: meta,
        }
    }

    /// Interval check: pass iff `lo ≤ estimate ≤ hi`. `bound` holds `hi`,
    /// `margin` the distance to the nearer end.
    pub fn within(quantity: impl Into<String>, estimate: f64, stderr: f64, lo: f64, hi: f64, mut meta: ReportMeta) -> Self {
        meta.convention = "bound_lo <= estimate <= bound".into();
        meta.extra.insert("bound_lo".into(), lo);
        EstimateReport {
            quantity: quantity.into(),
            estimate,
            stderr,
            bound: hi,
            margin: (estimate - lo).min(hi - estimate),
            pass: lo <= estimate && estimate <= hi,
            inconclusive: false,
            metadata: meta,
        }
    }

    pub fn mark_inconclusive(mut self, why: &str) -> Self {
        self.inconclusive = true;
        self.pass = true;
        self.metadata.notes.push(why.to_string());
        self
    }

    pub fn with_extra(mut self, key: &str, v: f64) -> Self {
        self.metadata.extra.insert(key.to_string(), v);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.metadata.notes.push(note.into());
        self
    }
}

/// Outcome of one check: a verdict over a set of reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub check: String,
    pub model: String,
    pub pass: bool,
    pub inconclusive: bool,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub calibration: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub reports: Vec<EstimateReport>,
}

impl CheckOutcome {
    pub fn new(check: &str, model: &str, reports: Vec<EstimateReport>) -> Self {
        let pass = reports.iter().all(|r| r.pass);
        let inconclusive = !reports.is_empty() && reports.iter().all(|r| r.inconclusive);
        CheckOutcome {
            check: check.into(),
            model: model.into(),
            pass,
            inconclusive,
            calibration: BTreeMap::new(),
            notes: Vec::new(),
            reports,
        }
    }

    pub fn with_calibration(mut self, key: &str, v: f64) -> Self {
        self.calibration.insert(key.into(), v);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }
}
