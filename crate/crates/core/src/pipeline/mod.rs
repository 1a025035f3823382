//! The three creative pipelines. All of them recombine existing solution
//! fragments under a task's rules; they differ in where the fragments come
//! from:
//!
//! - combinational (`cuot`): harvest solutions from structurally analogous
//!   problems, decompose them into a thought pool, and substitute pooled
//!   thoughts into high-impact sites of known solutions;
//! - exploratory (`euot`): additionally grow the pool outward from its most
//!   dispersed seeds before substituting;
//! - transformative (`tuot`): first expose the task's explicit and hidden
//!   rules, mutate the rule set (drop / vary / add), and run the exploratory
//!   pipeline inside each mutated rule space.
//!
//! Every pipeline returns a [`RunRecord`] whose body holds each step's
//! intermediate artifacts and the full backend transcript; failures keep
//! everything computed before the failing step.

pub mod combinational;
pub mod exploratory;
#[cfg(test)]
pub(crate) mod testkit;
pub mod transformative;

use thiserror::Error;

use crate::eval::EvalError;
use crate::gateway::{
    EmbeddingRequest, Gateway, GatewayError, PromptRequest, Recorder,
};
use crate::model::{
    ModelError, PipelineParams, Solution, SolutionProvenance, TaskSpec, Thought,
};
use crate::parse;
use crate::record::{Method, RunBody, RunRecord, RunStatus, StepTiming};
use crate::selection::{DualEmbedding, SelectionError};

pub use combinational::{
    AnalogProblem, HostSelection, ScoredSolution, SubstitutionPlan, ThoughtPool,
};
pub use exploratory::ExpansionRecord;
pub use transformative::{apply_creative_filter, MutatedRuleSpace, MutationOrigin};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("no analogous problem survived retrieval: {considered} considered, {role_rejected} under the role-similarity threshold, {surface_rejected} under the surface-distance threshold")]
    EmptyRetrieval {
        considered: usize,
        role_rejected: usize,
        surface_rejected: usize,
    },
    #[error("harvested no solutions from {0} analogous problem(s)")]
    NoSolutions(usize),
    #[error("decomposition produced an empty thought pool")]
    EmptyPool,
    #[error("no rule reaches the impact threshold {0}; lower tau_impact to mutate this task")]
    NoImpactRules(f64),
    #[error("every mutated rule space failed exploration; last failure: {0}")]
    AllSpacesFailed(String),
    #[error("backend produced no usable output during {0}")]
    EmptyGeneration(String),
    #[error("`{0}` lacks the embeddings this step requires")]
    MissingEmbeddings(String),
}

/// Immutable surroundings of one pipeline run: where calls go, what task is
/// being solved, and with which knobs.
pub struct PipelineContext<'a> {
    pub recorder: &'a Recorder<'a>,
    pub task: &'a TaskSpec,
    pub params: &'a PipelineParams,
}

/// A mid-run failure annotated with the step that raised it.
pub(crate) struct StepFailure {
    pub step: String,
    pub error: String,
}

/// Runs pipeline steps while accumulating per-step wall-clock timings.
pub(crate) struct StepClock {
    pub timings: Vec<StepTiming>,
}

impl StepClock {
    pub(crate) fn new() -> StepClock {
        StepClock {
            timings: Vec::new(),
        }
    }

    pub(crate) fn run<T>(
        &mut self,
        step: &str,
        f: impl FnOnce() -> Result<T, PipelineError>,
    ) -> Result<T, StepFailure> {
        let t0 = std::time::Instant::now();
        let outcome = f();
        self.timings.push(StepTiming {
            step: step.to_string(),
            elapsed_ms: t0.elapsed().as_millis() as u64,
        });
        outcome.map_err(|error| StepFailure {
            step: step.to_string(),
            error: error.to_string(),
        })
    }
}

/// Runs the combinational pipeline end to end.
pub fn run_cuot(gateway: &Gateway, task: &TaskSpec, params: &PipelineParams) -> RunRecord {
    run_pipeline(gateway, Method::Cuot, task, params)
}

/// Runs the exploratory pipeline end to end.
pub fn run_euot(gateway: &Gateway, task: &TaskSpec, params: &PipelineParams) -> RunRecord {
    run_pipeline(gateway, Method::Euot, task, params)
}

/// Runs the transformative pipeline end to end.
pub fn run_tuot(gateway: &Gateway, task: &TaskSpec, params: &PipelineParams) -> RunRecord {
    run_pipeline(gateway, Method::Tuot, task, params)
}

pub(crate) fn run_pipeline(
    gateway: &Gateway,
    method: Method,
    task: &TaskSpec,
    params: &PipelineParams,
) -> RunRecord {
    let started = crate::record::now_ms();
    let recorder = Recorder::new(gateway);
    let mut body = RunBody::new(method, task, gateway.backend_id(), params);
    let mut clock = StepClock::new();
    let outcome = clock
        .run("validate", || {
            task.validate()?;
            params.validate()?;
            Ok(())
        })
        .and_then(|()| {
            let ctx = PipelineContext {
                recorder: &recorder,
                task,
                params,
            };
            match method {
                Method::Cuot => combinational::run_steps(&ctx, &mut body, &mut clock),
                Method::Euot => exploratory::run_steps(&ctx, &mut body, &mut clock),
                Method::Tuot => transformative::run_steps(&ctx, &mut body, &mut clock),
                Method::ZeroShot | Method::Cot => unreachable!("baselines have their own runner"),
            }
        });
    body.status = match outcome {
        Ok(()) => RunStatus::Completed,
        Err(failure) => RunStatus::Failed {
            step: failure.step,
            error: failure.error,
        },
    };
    body.transcript = recorder.into_transcript();
    RunRecord::new(body, started, clock.timings)
}

/// The task's conventional-solution library: the solutions shipped with the
/// task, or a bootstrapped set when it ships none. Every member is
/// surface-embedded for novelty scoring and host selection.
pub(crate) fn known_library(ctx: &PipelineContext) -> Result<Vec<Solution>, PipelineError> {
    let texts: Vec<String> = if ctx.task.known_solutions.is_empty() {
        let request = PromptRequest::from_template(
            "known_solution_bootstrap",
            &[
                ("count", ctx.params.known_solution_count.to_string()),
                ("objective", ctx.task.objective.clone()),
                ("context", ctx.task.context.clone()),
                ("rules", ctx.task.rules_text()),
            ],
            ctx.recorder.gateway().creative_sampling(),
        )?;
        let response = ctx.recorder.complete(&request)?;
        parse::numbered_list(&response, ctx.params.known_solution_count)
    } else {
        ctx.task.known_solutions.clone()
    };
    if texts.is_empty() {
        return Err(PipelineError::EmptyGeneration(
            "known-solution bootstrap".into(),
        ));
    }
    let mut library = Vec::with_capacity(texts.len());
    for (i, text) in texts.into_iter().enumerate() {
        let mut solution = Solution::new(
            format!("known-{}", i + 1),
            text,
            ctx.task.id.clone(),
            SolutionProvenance::Known,
        );
        let embedded = ctx
            .recorder
            .embed(&EmbeddingRequest::surface(solution.text.clone()))?;
        solution.surface_embedding = Some(embedded.vector);
        library.push(solution);
    }
    Ok(library)
}

/// The same conventional-solution library a pipeline run would assemble,
/// for callers that score solutions outside a run. The library anchors
/// novelty, so external and pipeline evaluations must share it.
pub fn conventional_library<'a>(
    recorder: &'a Recorder<'a>,
    task: &'a TaskSpec,
    params: &'a PipelineParams,
) -> Result<Vec<Solution>, PipelineError> {
    let ctx = PipelineContext {
        recorder,
        task,
        params,
    };
    known_library(&ctx)
}

/// Both views of a text: its functional abstract with the role embedding of
/// that abstract, and the surface embedding of the literal text.
pub(crate) struct DualView {
    pub functional_abstract: String,
    pub role: Vec<f64>,
    pub surface: Vec<f64>,
}

pub(crate) fn dual_view(ctx: &PipelineContext, text: &str) -> Result<DualView, PipelineError> {
    let role = ctx.recorder.embed(&EmbeddingRequest::role(text.to_string()))?;
    let surface = ctx
        .recorder
        .embed(&EmbeddingRequest::surface(text.to_string()))?;
    Ok(DualView {
        functional_abstract: role.functional_abstract.unwrap_or_default(),
        role: role.vector,
        surface: surface.vector,
    })
}

/// Builds a fully embedded thought from raw text.
pub(crate) fn make_thought(
    ctx: &PipelineContext,
    id: String,
    text: String,
    origin_solution: Option<String>,
) -> Result<Thought, PipelineError> {
    let view = dual_view(ctx, &text)?;
    Ok(Thought {
        id,
        text,
        functional_abstract: view.functional_abstract,
        origin_solution,
        role_embedding: Some(view.role),
        surface_embedding: Some(view.surface),
    })
}

pub(crate) fn solution_surface(solution: &Solution) -> Result<&Vec<f64>, PipelineError> {
    solution
        .surface_embedding
        .as_ref()
        .ok_or_else(|| PipelineError::MissingEmbeddings(solution.id.clone()))
}

pub(crate) fn thought_view<'a>(thought: &'a Thought) -> Result<DualEmbedding<'a>, PipelineError> {
    match (&thought.role_embedding, &thought.surface_embedding) {
        (Some(role), Some(surface)) => Ok(DualEmbedding { role, surface }),
        _ => Err(PipelineError::MissingEmbeddings(thought.id.clone())),
    }
}

pub(crate) fn thought_views<'a>(
    thoughts: &'a [Thought],
) -> Result<Vec<DualEmbedding<'a>>, PipelineError> {
    thoughts.iter().map(thought_view).collect()
}
