//! Replay verification. A run record carries its full call transcript with
//! request and response digests; replaying re-derives every digest from the
//! recorded content and cross-checks calls that share a request. Any edit
//! to a prompt, a variable, or a response after the fact shows up as a
//! digest mismatch naming the exact call.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::GatewayError;
use crate::record::RunRecord;

/// Outcome of verifying one transcript call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallCheck {
    /// Which record the call belongs to; empty for the root run.
    pub location: String,
    pub index: usize,
    pub function: String,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub checks: Vec<CallCheck>,
}

impl ReplayReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.ok)
    }

    /// The first failing check, the one a tamper message should name.
    pub fn first_failure(&self) -> Option<&CallCheck> {
        self.checks.iter().find(|c| !c.ok)
    }
}

/// Re-verifies a record's transcript against its own digests.
///
/// Three checks per call: the request digest matches the recorded request
/// under the recorded backend, the response digest matches the recorded
/// response, and calls sharing a request digest carry identical responses
/// (a deterministic backend cannot answer one request two ways).
pub fn replay_log(record: &RunRecord) -> Result<ReplayReport, GatewayError> {
    let calls = record.all_calls();
    if calls.is_empty() && record.body.status.is_completed() {
        return Err(GatewayError::IncompleteTranscript(
            "a completed run must have at least one recorded call".into(),
        ));
    }
    let backend_id = &record.body.backend_id;
    let mut responses_by_request: HashMap<&str, &str> = HashMap::new();
    let mut checks = Vec::with_capacity(calls.len());
    for (location, call) in calls {
        let mut problems = Vec::new();
        let recomputed_request = call.request.digest(backend_id);
        if recomputed_request != call.request_digest {
            problems.push(format!(
                "request digest mismatch: recorded {}, recomputed {}",
                call.request_digest, recomputed_request
            ));
        }
        let recomputed_response = call.response.digest();
        if recomputed_response != call.response_digest {
            problems.push(format!(
                "response digest mismatch: recorded {}, recomputed {}",
                call.response_digest, recomputed_response
            ));
        }
        match responses_by_request.get(call.request_digest.as_str()) {
            Some(seen) if *seen != call.response_digest => {
                problems.push(
                    "conflicting responses recorded for one request digest".to_string(),
                );
            }
            Some(_) => {}
            None => {
                responses_by_request.insert(&call.request_digest, &call.response_digest);
            }
        }
        checks.push(CallCheck {
            location,
            index: call.index,
            function: call.request.function_name(),
            ok: problems.is_empty(),
            detail: if problems.is_empty() {
                None
            } else {
                Some(problems.join("; "))
            },
        });
    }
    Ok(ReplayReport { checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{PrimitiveRequest, ResponsePayload};
    use crate::model::{PipelineParams, TaskSpec};
    use crate::record::{Method, RunBody, RunRecord, RunStatus};

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

    fn record_with_calls(texts: &[&str]) -> RunRecord {
        let mut body = RunBody::new(Method::Cuot, &task(), "backend-1", &PipelineParams::default());
        for (i, text) in texts.iter().enumerate() {
            let request = PrimitiveRequest::Embed { text: text.to_string() };
            let response = ResponsePayload::Vector(vec![i as f64]);
            body.transcript.push(crate::gateway::CallRecord {
                index: i,
                request_digest: request.digest("backend-1"),
                response_digest: response.digest(),
                request,
                response,
            });
        }
        RunRecord::new(body, crate::record::now_ms(), vec![])
    }

    #[test]
    fn intact_record_passes() {
        let record = record_with_calls(&["a", "b", "c"]);
        let report = replay_log(&record).unwrap();
        assert!(report.passed());
        assert_eq!(report.checks.len(), 3);
        assert!(report.first_failure().is_none());
    }

    #[test]
    fn tampered_response_is_caught_and_named() {
        let mut record = record_with_calls(&["a", "b"]);
        record.body.transcript[1].response = ResponsePayload::Vector(vec![99.0]);
        let report = replay_log(&record).unwrap();
        assert!(!report.passed());
        let failure = report.first_failure().unwrap();
        assert_eq!(failure.index, 1);
        assert!(failure.detail.as_ref().unwrap().contains("response digest"));
    }

    #[test]
    fn tampered_request_is_caught() {
        let mut record = record_with_calls(&["a"]);
        record.body.transcript[0].request = PrimitiveRequest::Embed { text: "evil".into() };
        let report = replay_log(&record).unwrap();
        assert!(!report.passed());
        assert!(report.checks[0]
            .detail
            .as_ref()
            .unwrap()
            .contains("request digest"));
    }

    #[test]
    fn conflicting_answers_for_one_request_are_caught() {
        let mut record = record_with_calls(&["a", "a"]);
        // Re-stamp the second call with a different but self-consistent
        // response, as if someone rewrote it along with its digest.
        let forged = ResponsePayload::Vector(vec![123.0]);
        record.body.transcript[1].response_digest = forged.digest();
        record.body.transcript[1].response = forged;
        let report = replay_log(&record).unwrap();
        assert!(!report.passed());
        assert!(report.checks[1]
            .detail
            .as_ref()
            .unwrap()
            .contains("conflicting responses"));
    }

    #[test]
    fn sub_run_calls_are_verified_too() {
        let mut root = record_with_calls(&["a"]);
        let mut child = record_with_calls(&["b"]);
        child.body.transcript[0].response = ResponsePayload::Vector(vec![7.0]);
        root.body.sub_runs.push(child);
        let report = replay_log(&root).unwrap();
        assert!(!report.passed());
        let failure = report.first_failure().unwrap();
        assert_eq!(failure.location, "sub_runs[0]");
    }

    #[test]
    fn completed_run_with_empty_transcript_is_incomplete() {
        let record = record_with_calls(&[]);
        assert!(matches!(
            replay_log(&record),
            Err(GatewayError::IncompleteTranscript(_))
        ));
    }

    #[test]
    fn failed_run_with_empty_transcript_is_replayable() {
        let mut record = record_with_calls(&[]);
        record.body.status = RunStatus::Failed {
            step: "validate".into(),
            error: "bad params".into(),
        };
        let report = replay_log(&record).unwrap();
        assert!(report.passed());
        assert!(report.checks.is_empty());
    }
}
