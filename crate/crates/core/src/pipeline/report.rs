use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::config::{GridSpec, Tolerances, STAGE_NAMES};

pub const REPORT_FORMAT: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Error,
    Skipped,
}

/// Ordered metric map. Non-finite numbers are stored as strings so the
/// JSON stays lossless.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics(pub BTreeMap<String, Value>);

pub fn num(x: f64) -> Value {
    if x.is_finite() {
        serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
    } else if x.is_nan() {
        Value::String("NaN".into())
    } else if x > 0.0 {
        Value::String("inf".into())
    } else {
        Value::String("-inf".into())
    }
}

impl Metrics {
    pub fn num(&mut self, key: &str, x: f64) -> &mut Self {
        self.0.insert(key.into(), num(x));
        self
    }

    pub fn int(&mut self, key: &str, x: usize) -> &mut Self {
        self.0.insert(key.into(), Value::from(x as u64));
        self
    }

    pub fn flag(&mut self, key: &str, x: bool) -> &mut Self {
        self.0.insert(key.into(), Value::Bool(x));
        self
    }

    pub fn text(&mut self, key: &str, x: impl Into<String>) -> &mut Self {
        self.0.insert(key.into(), Value::String(x.into()));
        self
    }

    pub fn point(&mut self, key: &str, p: [f64; 2]) -> &mut Self {
        self.0.insert(key.into(), Value::Array(p.iter().map(|&x| num(x)).collect()));
        self
    }

    pub fn matrix(&mut self, key: &str, rows: &[[f64; 3]]) -> &mut Self {
        let v = rows.iter().map(|r| Value::Array(r.iter().map(|&x| num(x)).collect())).collect();
        self.0.insert(key.into(), Value::Array(v));
        self
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        match self.0.get(key)? {
            Value::Number(n) => n.as_f64(),
            Value::String(s) => s.parse().ok(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub name: String,
    pub verdict: Verdict,
    pub metrics: Metrics,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl StageReport {
    pub fn new(name: &str) -> Self {
        Self { name: name.into(), verdict: Verdict::Pass, metrics: Metrics::default(), notes: Vec::new() }
    }

    pub fn metric(&self, key: &str) -> Option<f64> {
        self.metrics.get_f64(key)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigidityReport {
    pub format: u32,
    pub scenario: String,
    pub config_hash: String,
    pub seed: u64,
    pub verdict: Verdict,
    pub failed_stage: Option<String>,
    pub expectation_met: Option<bool>,
    pub stages: Vec<StageReport>,
    pub tolerances: Tolerances,
    pub resolutions: GridSpec,
    pub versions: BTreeMap<String, String>,
}

impl RigidityReport {
    pub fn stage(&self, name: &str) -> Option<&StageReport> {
        self.stages.iter().find(|s| s.name == name)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Verdict implied by a list of stage verdicts: pass only if every stage
/// passed.
pub fn combined_verdict(stages: &[StageReport]) -> Verdict {
    if stages.iter().all(|s| s.verdict == Verdict::Pass) {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

/// Structural checks on a report read back from disk. Returns the list of
/// violated invariants.
pub fn validate_report(value: &Value) -> Vec<String> {
    let mut problems = Vec::new();
    let report: RigidityReport = match serde_json::from_value(value.clone()) {
        Ok(r) => r,
        Err(e) => return vec![format!("not a report: {e}")],
    };
    if report.format != REPORT_FORMAT {
        problems.push(format!("unknown report format {}", report.format));
    }
    if report.config_hash.len() != 64 || !report.config_hash.chars().all(|c| c.is_ascii_hexdigit()) {
        problems.push("config_hash is not a SHA-256 hex digest".into());
    }
    let mut last = None;
    for s in &report.stages {
        match STAGE_NAMES.iter().position(|n| *n == s.name) {
            None => problems.push(format!("unknown stage `{}`", s.name)),
            Some(i) => {
                if last.is_some_and(|l| i <= l) {
                    problems.push(format!("stage `{}` is out of order", s.name));
                }
                last = Some(i);
            }
        }
    }
    let implied = combined_verdict(&report.stages);
    if implied != report.verdict {
        problems.push(format!("verdict {:?} disagrees with the stage verdicts ({implied:?})", report.verdict));
    }
    let first_bad = report.stages.iter().find(|s| s.verdict != Verdict::Pass).map(|s| s.name.clone());
    if first_bad != report.failed_stage {
        problems.push(format!("failed_stage {:?} does not name the first non-passing stage {first_bad:?}", report.failed_stage));
    }
    let t = &report.tolerances;
    for (name, x) in [
        ("isometry", t.isometry),
        ("agreement", t.agreement),
        ("motion", t.motion),
        ("ellipticity", t.ellipticity),
        ("straightness", t.straightness),
        ("curvature_match", t.curvature_match),
        ("continuation", t.continuation),
    ] {
        if !(x > 0.0) {
            problems.push(format!("tolerance `{name}` is not positive"));
        }
    }
    for s in &report.stages {
        if s.verdict == Verdict::Pass {
            if let Some(c) = s.metric("coverage") {
                if c < 1.0 {
                    problems.push(format!("stage `{}` passed with coverage {c}", s.name));
                }
            }
        }
    }
    problems
}
