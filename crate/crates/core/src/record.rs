//! Replayable run records. A record splits into `meta` (identity and
//! timing, different on every execution) and `body` (everything the run
//! computed, including the full call transcript). Two runs of the same
//! method over the same backend are equal exactly when their bodies are
//! equal, which [`RunRecord::content_digest`] makes checkable at a glance.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::eval::MetricReport;
use crate::gateway::CallRecord;
use crate::model::{PipelineParams, RuleSet, Solution, TaskSpec};
use crate::pipeline::{
    AnalogProblem, ExpansionRecord, HostSelection, MutatedRuleSpace, ScoredSolution,
    SubstitutionPlan, ThoughtPool,
};

/// The methods the engine can execute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Cuot,
    Euot,
    Tuot,
    ZeroShot,
    Cot,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Cuot,
        Method::Euot,
        Method::Tuot,
        Method::ZeroShot,
        Method::Cot,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Cuot => "cuot",
            Method::Euot => "euot",
            Method::Tuot => "tuot",
            Method::ZeroShot => "zero_shot",
            Method::Cot => "cot",
        }
    }

    /// Pipelines run the full multi-step flow; the rest are one-prompt
    /// baselines.
    pub fn is_pipeline(self) -> bool {
        matches!(self, Method::Cuot | Method::Euot | Method::Tuot)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Method, String> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Method::ALL.iter().map(|m| m.name()).collect();
                format!("unknown method `{s}`; supported methods: {}", names.join(", "))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    /// The run stopped at `step`; everything computed before it is still in
    /// the body.
    Failed { step: String, error: String },
}

impl RunStatus {
    pub fn is_completed(&self) -> bool {
        matches!(self, RunStatus::Completed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepTiming {
    pub step: String,
    pub elapsed_ms: u64,
}

/// Identity and wall-clock data, excluded from content comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub run_id: String,
    pub started_at_ms: u64,
    pub finished_at_ms: u64,
    #[serde(default)]
    pub timings: Vec<StepTiming>,
}

/// Everything a run computed. Sections irrelevant to a method stay empty:
/// a combinational run has no `spaces`, a baseline run only `candidates`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunBody {
    pub method: Method,
    pub task_id: String,
    pub backend_id: String,
    pub params: PipelineParams,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub known_solutions: Vec<Solution>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub problems: Vec<AnalogProblem>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub harvested: Vec<Solution>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pool: Option<ThoughtPool>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub expansions: Vec<ExpansionRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub hosts: Vec<HostSelection>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub plans: Vec<SubstitutionPlan>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub candidates: Vec<Solution>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub scored: Vec<ScoredSolution>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exposed_rules: Option<RuleSet>,
    #[serde(default, skip_serializing_if = "std::collections::BTreeMap::is_empty")]
    pub analogous_rules: std::collections::BTreeMap<String, Vec<crate::model::Rule>>,
    #[serde(default, skip_serializing_if = "std::collections::BTreeMap::is_empty")]
    pub rule_impacts: std::collections::BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub spaces: Vec<MutatedRuleSpace>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sub_runs: Vec<RunRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reports: Vec<MetricReport>,
    #[serde(default)]
    pub transcript: Vec<CallRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    pub status: RunStatus,
}

impl RunBody {
    pub fn new(method: Method, task: &TaskSpec, backend_id: &str, params: &PipelineParams) -> RunBody {
        RunBody {
            method,
            task_id: task.id.clone(),
            backend_id: backend_id.to_string(),
            params: params.clone(),
            known_solutions: Vec::new(),
            problems: Vec::new(),
            harvested: Vec::new(),
            pool: None,
            expansions: Vec::new(),
            hosts: Vec::new(),
            plans: Vec::new(),
            candidates: Vec::new(),
            scored: Vec::new(),
            exposed_rules: None,
            analogous_rules: std::collections::BTreeMap::new(),
            rule_impacts: std::collections::BTreeMap::new(),
            spaces: Vec::new(),
            sub_runs: Vec::new(),
            reports: Vec::new(),
            transcript: Vec::new(),
            warnings: Vec::new(),
            status: RunStatus::Completed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub meta: RunMeta,
    pub body: RunBody,
}

pub(crate) fn now_ms() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

impl RunRecord {
    pub fn new(body: RunBody, started_at_ms: u64, timings: Vec<StepTiming>) -> RunRecord {
        RunRecord {
            meta: RunMeta {
                run_id: uuid::Uuid::new_v4().to_string(),
                started_at_ms,
                finished_at_ms: now_ms(),
                timings,
            },
            body,
        }
    }

    /// The body as JSON with the meta of every nested sub-run stripped,
    /// i.e. exactly the content two equivalent runs must agree on.
    pub fn canonical_value(&self) -> serde_json::Value {
        let mut value = serde_json::to_value(&self.body).expect("run body serialises");
        if let Some(subs) = value.get_mut("sub_runs").and_then(|v| v.as_array_mut()) {
            for (slot, sub) in subs.iter_mut().zip(&self.body.sub_runs) {
                *slot = sub.canonical_value();
            }
        }
        value
    }

    /// Digest of [`RunRecord::canonical_value`]; equal digests mean the
    /// runs are identical modulo run ids and timestamps.
    pub fn content_digest(&self) -> String {
        crate::gateway::sha256_hex(self.canonical_value().to_string().as_bytes())
    }

    /// Every call this run and its sub-runs made, tagged with the path of
    /// the record it belongs to (the root path is empty).
    pub fn all_calls(&self) -> Vec<(String, &CallRecord)> {
        let mut out = Vec::new();
        self.collect_calls("", &mut out);
        out
    }

    fn collect_calls<'a>(&'a self, path: &str, out: &mut Vec<(String, &'a CallRecord)>) {
        for call in &self.body.transcript {
            out.push((path.to_string(), call));
        }
        for (i, sub) in self.body.sub_runs.iter().enumerate() {
            let sub_path = if path.is_empty() {
                format!("sub_runs[{i}]")
            } else {
                format!("{path}.sub_runs[{i}]")
            };
            sub.collect_calls(&sub_path, out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{PrimitiveRequest, ResponsePayload};
    use crate::model::PipelineParams;

    fn task() -> TaskSpec {
        TaskSpec {
            id: "t".into(),
            objective: "o".into(),
            context: "c".into(),
            explicit_rules: vec![],
            baseline_solution: "b".into(),
            optimal_solution: "opt".into(),
            feasibility_checklist: vec!["p".into()],
            notes: None,
            known_solutions: vec![],
        }
    }

    fn call(text: &str) -> CallRecord {
        let request = PrimitiveRequest::Embed { text: text.into() };
        let response = ResponsePayload::Vector(vec![1.0]);
        CallRecord {
            index: 0,
            request_digest: request.digest("b"),
            response_digest: response.digest(),
            request,
            response,
        }
    }

    fn record() -> RunRecord {
        let mut body = RunBody::new(Method::Cuot, &task(), "b", &PipelineParams::default());
        body.transcript.push(call("hello"));
        RunRecord::new(body, now_ms(), vec![])
    }

    #[test]
    fn method_names_round_trip() {
        for method in Method::ALL {
            assert_eq!(Method::from_str(method.name()).unwrap(), method);
        }
        let err = Method::from_str("banana").unwrap_err();
        assert!(err.contains("zero_shot"), "{err}");
        assert!(err.contains("tuot"), "{err}");
    }

    #[test]
    fn digest_ignores_meta_but_not_body() {
        let a = record();
        let mut b = a.clone();
        b.meta.run_id = "different".into();
        b.meta.started_at_ms += 1000;
        b.meta.timings.push(StepTiming {
            step: "x".into(),
            elapsed_ms: 1,
        });
        assert_eq!(a.content_digest(), b.content_digest());

        let mut c = a.clone();
        c.body.warnings.push("w".into());
        assert_ne!(a.content_digest(), c.content_digest());
    }

    #[test]
    fn digest_ignores_sub_run_meta_recursively() {
        let mut a = record();
        a.body.sub_runs.push(record());
        let mut b = a.clone();
        b.body.sub_runs[0].meta.run_id = "other".into();
        assert_eq!(a.content_digest(), b.content_digest());

        b.body.sub_runs[0].body.warnings.push("w".into());
        assert_ne!(a.content_digest(), b.content_digest());
    }

    #[test]
    fn all_calls_flattens_sub_runs_with_paths() {
        let mut root = record();
        let mut child = record();
        child.body.sub_runs.push(record());
        root.body.sub_runs.push(child);
        let calls = root.all_calls();
        let paths: Vec<&str> = calls.iter().map(|(p, _)| p.as_str()).collect();
        assert_eq!(paths, vec!["", "sub_runs[0]", "sub_runs[0].sub_runs[0]"]);
    }

    #[test]
    fn record_round_trips_through_json() {
        let a = record();
        let json = serde_json::to_string(&a).unwrap();
        let back: RunRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(a, back);
        assert_eq!(a.content_digest(), back.content_digest());
    }

    #[test]
    fn fresh_records_get_unique_ids() {
        let a = record();
        let b = record();
        assert_ne!(a.meta.run_id, b.meta.run_id);
    }
}
