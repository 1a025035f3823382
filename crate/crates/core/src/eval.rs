//! The offline benchmark: canonicalisation, feasibility / utility / novelty
//! scoring, creativity aggregation, baseline generators, and the method
//! comparison table.
//!
//! Utility is judged against the task's two anchors (baseline worth 0,
//! optimal worth 1); novelty is measured in embedding space against the
//! known solutions, normalised by how far the optimal sits from them; and
//! creativity is the mean of utility and novelty, reported both uncut and
//! restricted to candidates that clear the feasibility threshold.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::{
    EmbeddingRequest, Gateway, GatewayError, PromptRequest, Recorder, Sampling,
};
use crate::model::{PipelineParams, Solution, SolutionProvenance, TaskSpec};
use crate::parse;
use crate::record::{Method, RunBody, RunRecord, RunStatus, StepTiming};
use crate::selection::{self, SelectionError};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error("judge returned no parseable {expected}: {response:?}")]
    UnparseableJudge {
        expected: &'static str,
        response: String,
    },
    #[error("canonical idea has {core} tokens, more than the original's {original}")]
    CanonicalTooLong { core: usize, original: usize },
    #[error("canonicalisation produced an empty core idea")]
    EmptyCoreIdea,
    #[error("novelty needs at least one known solution")]
    NoKnownSolutions,
    #[error("novelty is undefined: a known solution coincides with the optimal")]
    DegenerateAnchors,
    #[error("method `{0}` is not a baseline; baselines are zero_shot and cot")]
    NotABaseline(String),
    #[error("backend produced no usable solution for {0}")]
    EmptySolution(String),
    #[error("no reports to aggregate")]
    NoReports,
}

fn token_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// A solution reduced to its core conceptual idea, plus the embedding of
/// that idea. All benchmark scoring runs on this form so that verbosity
/// neither hides nor inflates a concept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalSolution {
    pub solution_id: String,
    pub core_idea: String,
    pub surface_embedding: Vec<f64>,
}

/// Distils a solution to one core idea at judge temperature, enforcing
/// that the idea is non-empty and no longer than the original.
pub fn canonicalize_solution(
    recorder: &Recorder,
    solution: &Solution,
) -> Result<CanonicalSolution, EvalError> {
    let request = PromptRequest::from_template(
        "canonicalize",
        &[("solution", solution.text.clone())],
        Sampling::deterministic(),
    )?;
    let core_idea = recorder.complete(&request)?.trim().to_string();
    if core_idea.is_empty() {
        return Err(EvalError::EmptyCoreIdea);
    }
    let core = token_count(&core_idea);
    let original = token_count(&solution.text);
    if core > original {
        return Err(EvalError::CanonicalTooLong { core, original });
    }
    let embedded = recorder.embed(&EmbeddingRequest::surface(core_idea.clone()))?;
    Ok(CanonicalSolution {
        solution_id: solution.id.clone(),
        core_idea,
        surface_embedding: embedded.vector,
    })
}

/// Judges utility on the baseline-to-optimal scale. A core idea textually
/// equal to an anchor short-circuits to that anchor's score without
/// consulting the judge. Returns the score and the digests of the judge
/// calls made.
pub fn score_utility(
    recorder: &Recorder,
    canonical: &CanonicalSolution,
    task: &TaskSpec,
) -> Result<(f64, Vec<String>), EvalError> {
    if canonical.core_idea == task.baseline_solution {
        return Ok((0.0, Vec::new()));
    }
    if canonical.core_idea == task.optimal_solution {
        return Ok((1.0, Vec::new()));
    }
    let variables = |_template: &str| {
        vec![
            ("objective", task.objective.clone()),
            ("baseline", task.baseline_solution.clone()),
            ("optimal", task.optimal_solution.clone()),
            ("candidate", canonical.core_idea.clone()),
        ]
    };
    let mut calls = Vec::new();
    let request = PromptRequest::from_template(
        "judge_utility",
        &variables("judge_utility"),
        Sampling::deterministic(),
    )?;
    let (response, digest) = recorder.complete_with_digest(&request)?;
    calls.push(digest);
    if let Some(value) = parse::first_number(&response) {
        return Ok((value.clamp(0.0, 1.0), calls));
    }
    // One stricter re-prompt before giving up.
    let retry = PromptRequest::from_template(
        "judge_utility_retry",
        &variables("judge_utility_retry"),
        Sampling::deterministic(),
    )?;
    let (response, digest) = recorder.complete_with_digest(&retry)?;
    calls.push(digest);
    match parse::first_number(&response) {
        Some(value) => Ok((value.clamp(0.0, 1.0), calls)),
        None => Err(EvalError::UnparseableJudge {
            expected: "utility score",
            response,
        }),
    }
}

/// Novelty of a canonical idea: its embedding distance to the nearest
/// known solution, normalised by the distance from the known set to the
/// optimal, clamped to [0, 1]. Distances are cosine distances.
pub fn score_novelty_metric(
    canonical: &CanonicalSolution,
    known: &[Vec<f64>],
    optimal: &[f64],
) -> Result<f64, EvalError> {
    if known.is_empty() {
        return Err(EvalError::NoKnownSolutions);
    }
    let distance = |a: &[f64], b: &[f64]| -> Result<f64, EvalError> {
        Ok(1.0 - selection::cosine_similarity(a, b)?)
    };
    let mut to_candidate = f64::INFINITY;
    let mut to_optimal = f64::INFINITY;
    for member in known {
        to_candidate = to_candidate.min(distance(&canonical.surface_embedding, member)?);
        to_optimal = to_optimal.min(distance(member, optimal)?);
    }
    if to_optimal.abs() < 1e-12 {
        return Err(EvalError::DegenerateAnchors);
    }
    Ok((to_candidate / to_optimal).clamp(0.0, 1.0))
}

/// One checklist predicate's verdict. `judged` is false when the judge
/// failed or answered unparseably; such predicates count as failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChecklistResult {
    pub predicate: String,
    pub passed: bool,
    pub judged: bool,
}

/// Judges every checklist predicate against the solution text and returns
/// the pass fraction, the per-predicate verdicts, and the judge call
/// digests.
pub fn score_feasibility(
    recorder: &Recorder,
    solution_text: &str,
    task: &TaskSpec,
) -> Result<(f64, Vec<ChecklistResult>, Vec<String>), EvalError> {
    let mut results = Vec::with_capacity(task.feasibility_checklist.len());
    let mut calls = Vec::new();
    for predicate in &task.feasibility_checklist {
        let request = PromptRequest::from_template(
            "judge_feasibility",
            &[
                ("predicate", predicate.clone()),
                ("solution", solution_text.to_string()),
            ],
            Sampling::deterministic(),
        )?;
        let verdict = match recorder.complete_with_digest(&request) {
            Ok((response, digest)) => {
                calls.push(digest);
                parse::pass_fail(&response)
            }
            Err(_) => None,
        };
        results.push(ChecklistResult {
            predicate: predicate.clone(),
            passed: verdict.unwrap_or(false),
            judged: verdict.is_some(),
        });
    }
    let passed = results.iter().filter(|r| r.passed).count();
    let fraction = passed as f64 / results.len().max(1) as f64;
    Ok((fraction, results, calls))
}

/// All benchmark metrics for one solution. `creativity` is present only
/// when the solution clears the feasibility threshold; the raw mean is
/// always recoverable from `utility` and `novelty`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub solution_id: String,
    pub feasibility: f64,
    pub checklist: Vec<ChecklistResult>,
    pub utility: f64,
    pub novelty: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub creativity: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub judge_calls: Vec<String>,
}

pub fn creativity_of(utility: f64, novelty: f64) -> f64 {
    (utility + novelty) / 2.0
}

/// Runs the full benchmark on one solution.
pub fn metric_report(
    recorder: &Recorder,
    solution: &Solution,
    task: &TaskSpec,
    known: &[Vec<f64>],
    optimal: &[f64],
    params: &PipelineParams,
) -> Result<MetricReport, EvalError> {
    let (feasibility, checklist, mut calls) =
        score_feasibility(recorder, &solution.text, task)?;
    let canonical = canonicalize_solution(recorder, solution)?;
    let (utility, utility_calls) = score_utility(recorder, &canonical, task)?;
    calls.extend(utility_calls);
    let novelty = score_novelty_metric(&canonical, known, optimal)?;
    let creativity = if feasibility >= params.tau_feas {
        Some(creativity_of(utility, novelty))
    } else {
        None
    };
    Ok(MetricReport {
        solution_id: solution.id.clone(),
        feasibility,
        checklist,
        utility,
        novelty,
        creativity,
        judge_calls: calls,
    })
}

/// Means across a batch of reports. `mean_creativity_passing` restricts to
/// reports whose feasibility clears the threshold and is absent when none
/// does; `mean_creativity_all` averages the raw (utility+novelty)/2 of
/// every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreativitySummary {
    pub count: usize,
    pub passing: usize,
    pub mean_feasibility: f64,
    pub mean_utility: f64,
    pub mean_novelty: f64,
    pub mean_creativity_all: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_creativity_passing: Option<f64>,
}

pub fn aggregate_creativity(
    reports: &[MetricReport],
    params: &PipelineParams,
) -> Result<CreativitySummary, EvalError> {
    if reports.is_empty() {
        return Err(EvalError::NoReports);
    }
    let n = reports.len() as f64;
    let mean = |f: &dyn Fn(&MetricReport) -> f64| reports.iter().map(|r| f(r)).sum::<f64>() / n;
    let passing: Vec<&MetricReport> = reports
        .iter()
        .filter(|r| r.feasibility >= params.tau_feas)
        .collect();
    let mean_creativity_passing = if passing.is_empty() {
        None
    } else {
        Some(
            passing
                .iter()
                .map(|r| creativity_of(r.utility, r.novelty))
                .sum::<f64>()
                / passing.len() as f64,
        )
    };
    Ok(CreativitySummary {
        count: reports.len(),
        passing: passing.len(),
        mean_feasibility: mean(&|r| r.feasibility),
        mean_utility: mean(&|r| r.utility),
        mean_novelty: mean(&|r| r.novelty),
        mean_creativity_all: mean(&|r| creativity_of(r.utility, r.novelty)),
        mean_creativity_passing,
    })
}

/// Generates `count` solutions with a baseline method (zero-shot or
/// chain-of-thought). `start_index` keeps repeated batches distinct: the
/// attempt number is part of the prompt.
pub fn run_baseline(
    recorder: &Recorder,
    method: Method,
    task: &TaskSpec,
    count: usize,
    start_index: usize,
) -> Result<Vec<Solution>, EvalError> {
    let template = match method {
        Method::ZeroShot => "zero_shot",
        Method::Cot => "cot",
        other => return Err(EvalError::NotABaseline(other.name().to_string())),
    };
    let mut solutions = Vec::with_capacity(count);
    for i in 0..count {
        let attempt = start_index + i + 1;
        let request = PromptRequest::from_template(
            template,
            &[
                ("objective", task.objective.clone()),
                ("context", task.context.clone()),
                ("rules", task.rules_text()),
                ("index", attempt.to_string()),
            ],
            recorder.gateway().creative_sampling(),
        )?;
        let text = recorder.complete(&request)?.trim().to_string();
        if text.is_empty() {
            continue;
        }
        solutions.push(Solution::new(
            format!("{}-{attempt}", method.name()),
            text,
            task.id.clone(),
            SolutionProvenance::Synthesized,
        ));
    }
    if solutions.is_empty() {
        return Err(EvalError::EmptySolution(format!(
            "{} generation",
            method.name()
        )));
    }
    Ok(solutions)
}

/// Runs a baseline method as a self-contained run record, mirroring what
/// the pipelines produce.
pub fn run_baseline_record(
    gateway: &Gateway,
    method: Method,
    task: &TaskSpec,
    params: &PipelineParams,
    count: usize,
    start_index: usize,
) -> RunRecord {
    let started = crate::record::now_ms();
    let recorder = Recorder::new(gateway);
    let mut body = RunBody::new(method, task, gateway.backend_id(), params);
    let t0 = std::time::Instant::now();
    let status = match task
        .validate()
        .map_err(|e| e.to_string())
        .and_then(|()| params.validate().map_err(|e| e.to_string()))
        .and_then(|()| {
            run_baseline(&recorder, method, task, count, start_index).map_err(|e| e.to_string())
        }) {
        Ok(solutions) => {
            body.candidates = solutions;
            RunStatus::Completed
        }
        Err(error) => RunStatus::Failed {
            step: "generate".to_string(),
            error,
        },
    };
    let timings = vec![StepTiming {
        step: "generate".to_string(),
        elapsed_ms: t0.elapsed().as_millis() as u64,
    }];
    body.status = status;
    body.transcript = recorder.into_transcript();
    RunRecord::new(body, started, timings)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub method: String,
    pub summary: CreativitySummary,
}

/// Side-by-side creativity summaries, one row per method that contributed
/// at least one report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
}

pub fn compare_methods(
    results: &[(String, Vec<MetricReport>)],
    params: &PipelineParams,
) -> Result<ComparisonTable, EvalError> {
    let mut rows = Vec::new();
    for (method, reports) in results {
        if reports.is_empty() {
            continue;
        }
        rows.push(ComparisonRow {
            method: method.clone(),
            summary: aggregate_creativity(reports, params)?,
        });
    }
    Ok(ComparisonTable { rows })
}

impl std::fmt::Display for ComparisonTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "{:<12} {:>8} {:>8} {:>8} {:>8} {:>8} {:>5} {:>5}",
            "method", "C", "C(all)", "N", "U", "F", "n", "pass"
        )?;
        for row in &self.rows {
            let s = &row.summary;
            let passing = match s.mean_creativity_passing {
                Some(v) => format!("{v:8.3}"),
                None => format!("{:>8}", "-"),
            };
            writeln!(
                f,
                "{:<12} {} {:8.3} {:8.3} {:8.3} {:8.3} {:5} {:5}",
                row.method,
                passing,
                s.mean_creativity_all,
                s.mean_novelty,
                s.mean_utility,
                s.mean_feasibility,
                s.count,
                s.passing
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{Cache, PromptFunction, ScriptedBackend, ScriptedFixture};
    use approx::assert_abs_diff_eq;

    fn task() -> TaskSpec {
        TaskSpec {
            id: "demo".into(),
            objective: "Maximise flow".into(),
            context: "One narrow channel".into(),
            explicit_rules: vec![],
            baseline_solution: "fixed timer".into(),
            optimal_solution: "adaptive schedule".into(),
            feasibility_checklist: vec!["respects the channel".into(), "needs no new lane".into()],
            notes: None,
            known_solutions: vec![],
        }
    }

    fn solution(text: &str) -> Solution {
        Solution::new("s1", text, "demo", SolutionProvenance::Synthesized)
    }

    fn gateway_for(fixture: ScriptedFixture) -> Gateway {
        Gateway::new(Box::new(ScriptedBackend::new(fixture)), Cache::memory())
    }

    #[test]
    fn canonicalize_embeds_the_core_idea() {
        let gw = gateway_for(
            ScriptedFixture::new()
                .stub(PromptFunction::Canonicalize, &[], "a reservation ledger")
                .embedding("a reservation ledger", &[0.0, 1.0]),
        );
        let recorder = Recorder::new(&gw);
        let canonical =
            canonicalize_solution(&recorder, &solution("a much longer reservation ledger plan"))
                .unwrap();
        assert_eq!(canonical.core_idea, "a reservation ledger");
        assert_eq!(canonical.surface_embedding, vec![0.0, 1.0]);
        assert_eq!(recorder.len(), 2);
    }

    #[test]
    fn canonicalize_rejects_longer_or_empty_ideas() {
        let gw = gateway_for(ScriptedFixture::new().stub(
            PromptFunction::Canonicalize,
            &[],
            "five words is far too many",
        ));
        let recorder = Recorder::new(&gw);
        let err = canonicalize_solution(&recorder, &solution("two words")).unwrap_err();
        assert!(matches!(
            err,
            EvalError::CanonicalTooLong { core: 6, original: 2 }
        ));

        let gw = gateway_for(ScriptedFixture::new().stub(PromptFunction::Canonicalize, &[], "  "));
        let recorder = Recorder::new(&gw);
        assert!(matches!(
            canonicalize_solution(&recorder, &solution("two words")),
            Err(EvalError::EmptyCoreIdea)
        ));
    }

    fn canonical(text: &str, embedding: &[f64]) -> CanonicalSolution {
        CanonicalSolution {
            solution_id: "s1".into(),
            core_idea: text.into(),
            surface_embedding: embedding.to_vec(),
        }
    }

    #[test]
    fn utility_short_circuits_on_anchor_texts() {
        let gw = gateway_for(ScriptedFixture::new());
        let recorder = Recorder::new(&gw);
        let (value, calls) =
            score_utility(&recorder, &canonical("fixed timer", &[1.0]), &task()).unwrap();
        assert_eq!(value, 0.0);
        assert!(calls.is_empty());
        let (value, _) =
            score_utility(&recorder, &canonical("adaptive schedule", &[1.0]), &task()).unwrap();
        assert_eq!(value, 1.0);
        assert_eq!(gw.backend_calls(), 0);
    }

    #[test]
    fn utility_parses_and_clamps_the_judge_score() {
        let gw = gateway_for(ScriptedFixture::new().stub(
            PromptFunction::JudgeUtility,
            &[],
            "I'd score this 0.72 overall",
        ));
        let recorder = Recorder::new(&gw);
        let (value, calls) =
            score_utility(&recorder, &canonical("novel idea", &[1.0]), &task()).unwrap();
        assert_abs_diff_eq!(value, 0.72);
        assert_eq!(calls.len(), 1);

        let gw = gateway_for(ScriptedFixture::new().stub(PromptFunction::JudgeUtility, &[], "3.5"));
        let recorder = Recorder::new(&gw);
        let (value, _) = score_utility(&recorder, &canonical("x", &[1.0]), &task()).unwrap();
        assert_eq!(value, 1.0);
    }

    #[test]
    fn utility_retries_once_then_errors() {
        // A judge that never answers with a number exhausts the retry.
        let gw = gateway_for(ScriptedFixture::new().stub(
            PromptFunction::JudgeUtility,
            &[],
            "no number here",
        ));
        let recorder = Recorder::new(&gw);
        let err = score_utility(&recorder, &canonical("x", &[1.0]), &task()).unwrap_err();
        assert!(matches!(err, EvalError::UnparseableJudge { .. }));
        // Both the original and the retry template were consulted.
        assert_eq!(recorder.len(), 2);
    }

    #[test]
    fn novelty_matches_hand_computed_ratio() {
        // Candidate diagonal between axes; known = x-axis; optimal =
        // y-axis. Numerator: 1 - cos(45°); denominator: 1 - cos(90°) = 1.
        let c = canonical("idea", &[0.7071067811865475, 0.7071067811865475]);
        let known = vec![vec![1.0, 0.0]];
        let novelty = score_novelty_metric(&c, &known, &[0.0, 1.0]).unwrap();
        assert_abs_diff_eq!(novelty, 0.29289321881345254, epsilon = 1e-12);
    }

    #[test]
    fn novelty_clamps_and_detects_degenerate_anchors() {
        let c = canonical("idea", &[-1.0, 0.0]);
        let known = vec![vec![1.0, 0.0]];
        // Numerator 2, denominator 1: clamped to 1.
        assert_eq!(score_novelty_metric(&c, &known, &[0.0, 1.0]).unwrap(), 1.0);
        // Optimal coincides with a known solution.
        assert!(matches!(
            score_novelty_metric(&c, &known, &[2.0, 0.0]),
            Err(EvalError::DegenerateAnchors)
        ));
        assert!(matches!(
            score_novelty_metric(&c, &[], &[1.0, 0.0]),
            Err(EvalError::NoKnownSolutions)
        ));
    }

    #[test]
    fn feasibility_is_the_exact_pass_fraction() {
        let gw = gateway_for(
            ScriptedFixture::new()
                .stub(
                    PromptFunction::JudgeFeasibility,
                    &[("predicate", "*channel*")],
                    "PASS",
                )
                .stub(PromptFunction::JudgeFeasibility, &[], "FAIL"),
        );
        let recorder = Recorder::new(&gw);
        let (fraction, checklist, calls) =
            score_feasibility(&recorder, "anything", &task()).unwrap();
        assert_abs_diff_eq!(fraction, 0.5);
        assert_eq!(checklist.len(), 2);
        assert!(checklist[0].passed && checklist[0].judged);
        assert!(!checklist[1].passed && checklist[1].judged);
        assert_eq!(calls.len(), 2);
    }

    #[test]
    fn unparseable_feasibility_verdicts_count_as_flagged_failures() {
        let gw = gateway_for(ScriptedFixture::new().stub(
            PromptFunction::JudgeFeasibility,
            &[],
            "perhaps",
        ));
        let recorder = Recorder::new(&gw);
        let (fraction, checklist, _) = score_feasibility(&recorder, "x", &task()).unwrap();
        assert_eq!(fraction, 0.0);
        assert!(checklist.iter().all(|r| !r.passed && !r.judged));
    }

    fn report(f: f64, u: f64, n: f64) -> MetricReport {
        MetricReport {
            solution_id: "s".into(),
            feasibility: f,
            checklist: vec![],
            utility: u,
            novelty: n,
            creativity: None,
            judge_calls: vec![],
        }
    }

    #[test]
    fn aggregate_reports_both_means() {
        let params = PipelineParams::default();
        let reports = vec![report(1.0, 0.4, 0.8), report(0.0, 0.2, 0.2)];
        let summary = aggregate_creativity(&reports, &params).unwrap();
        assert_eq!(summary.count, 2);
        assert_eq!(summary.passing, 1);
        assert_abs_diff_eq!(summary.mean_creativity_all, (0.6 + 0.2) / 2.0);
        assert_abs_diff_eq!(summary.mean_creativity_passing.unwrap(), 0.6);
        assert_abs_diff_eq!(summary.mean_utility, 0.3);
        assert_abs_diff_eq!(summary.mean_novelty, 0.5);

        let none_pass = vec![report(0.2, 0.5, 0.5)];
        let summary = aggregate_creativity(&none_pass, &params).unwrap();
        assert_eq!(summary.mean_creativity_passing, None);

        assert!(matches!(
            aggregate_creativity(&[], &params),
            Err(EvalError::NoReports)
        ));
    }

    #[test]
    fn creativity_is_the_mean_of_utility_and_novelty() {
        assert_abs_diff_eq!(creativity_of(0.732, 0.400), 0.566);
        assert_abs_diff_eq!(creativity_of(0.590, 0.807), 0.6985);
    }

    fn baseline_fixture() -> ScriptedFixture {
        ScriptedFixture::new()
            .stub(
                PromptFunction::AnalogousSolutionGeneration,
                &[("index", "1")],
                "a staggered timetable",
            )
            .stub(
                PromptFunction::AnalogousSolutionGeneration,
                &[],
                "a generic scheme",
            )
    }

    #[test]
    fn baselines_generate_distinct_prompt_attempts() {
        let gw = gateway_for(baseline_fixture());
        let recorder = Recorder::new(&gw);
        let solutions = run_baseline(&recorder, Method::ZeroShot, &task(), 3, 0).unwrap();
        assert_eq!(solutions.len(), 3);
        assert_eq!(solutions[0].text, "a staggered timetable");
        assert_eq!(solutions[1].text, "a generic scheme");
        assert_eq!(solutions[0].id, "zero_shot-1");
        assert_eq!(solutions[2].id, "zero_shot-3");
        // Three distinct prompts reached the backend (no cache collapse).
        assert_eq!(gw.backend_calls(), 3);
    }

    #[test]
    fn non_baseline_methods_are_rejected_with_the_supported_list() {
        let gw = gateway_for(baseline_fixture());
        let recorder = Recorder::new(&gw);
        let err = run_baseline(&recorder, Method::Cuot, &task(), 1, 0).unwrap_err();
        let message = err.to_string();
        assert!(message.contains("zero_shot") && message.contains("cot"), "{message}");
    }

    #[test]
    fn baseline_record_carries_solutions_and_transcript() {
        let gw = gateway_for(baseline_fixture());
        let record = run_baseline_record(
            &gw,
            Method::Cot,
            &task(),
            &PipelineParams::default(),
            2,
            0,
        );
        assert!(record.body.status.is_completed());
        assert_eq!(record.body.candidates.len(), 2);
        assert_eq!(record.body.transcript.len(), 2);
        assert_eq!(record.body.method, Method::Cot);
    }

    #[test]
    fn comparison_table_renders_one_row_per_method() {
        let params = PipelineParams::default();
        let results = vec![
            ("zero_shot".to_string(), vec![report(1.0, 0.4, 0.73)]),
            ("cuot".to_string(), vec![report(1.0, 0.6, 0.73)]),
            ("euot".to_string(), vec![]),
        ];
        let table = compare_methods(&results, &params).unwrap();
        assert_eq!(table.rows.len(), 2);
        let rendered = table.to_string();
        assert!(rendered.contains("zero_shot"), "{rendered}");
        assert!(rendered.contains("0.565"), "{rendered}");
        assert!(!rendered.contains("euot"), "{rendered}");
    }
}
