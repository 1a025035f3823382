//! The exploratory pipeline: the combinational flow with one extra step
//! after decomposition. The most mutually dispersed pool thoughts become
//! seeds; each seed is expanded into fresh candidate concepts, and the
//! best non-duplicate per seed (by the donor objective against its seed)
//! joins the pool before hosts are selected.

use serde::{Deserialize, Serialize};

use crate::gateway::PromptRequest;
use crate::model::Thought;
use crate::parse;
use crate::record::RunBody;
use crate::selection::{cosine_similarity, max_dispersion_subset, DispersionMetric};

use super::combinational::{
    self, decompose_into_pool, harvest_solutions, retrieve_analogous_problems, select_hosts,
    synthesize_candidates, ThoughtPool,
};
use super::{
    known_library, make_thought, PipelineContext, PipelineError, StepClock, StepFailure,
};
use crate::model::Solution;
use crate::pipeline::SubstitutionPlan;

/// What happened at one seed during expansion: everything generated, what
/// was discarded as a duplicate, and the accepted winner with its
/// objective value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionRecord {
    pub seed_id: String,
    pub generated: Vec<Thought>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub duplicates: Vec<String>,
    pub accepted: Thought,
    pub objective: f64,
}

pub(crate) fn run_steps(
    ctx: &PipelineContext,
    body: &mut RunBody,
    clock: &mut StepClock,
) -> Result<(), StepFailure> {
    let library = clock.run("known_library", || known_library(ctx))?;
    body.known_solutions = library.clone();
    let problems = clock.run("retrieve_problems", || retrieve_analogous_problems(ctx))?;
    body.problems = problems.clone();
    let harvested = clock.run("harvest_solutions", || harvest_solutions(ctx, &problems))?;
    body.harvested = harvested.clone();
    let mut pool = clock.run("decompose", || decompose_into_pool(ctx, &harvested))?;
    let expansions = clock.run("expand", || {
        expand_thought_pool(ctx, &mut pool, &mut body.warnings)
    })?;
    body.expansions = expansions;
    body.pool = Some(pool.clone());
    let hosts = clock.run("select_hosts", || {
        select_hosts(ctx, &library, &mut body.warnings)
    })?;
    body.hosts = hosts.clone();
    let candidates = clock.run("synthesize", || {
        synthesize_candidates(ctx, &hosts, &pool, &mut body.warnings)
    })?;
    body.candidates = candidates.iter().map(|(s, _)| s.clone()).collect();
    body.plans = candidates.iter().map(|(_, p)| p.clone()).collect();
    let paired: Vec<(Solution, Option<SubstitutionPlan>)> = candidates
        .into_iter()
        .map(|(s, p)| (s, Some(p)))
        .collect();
    let scored = clock.run("evaluate", || {
        combinational::evaluate_and_rank(ctx, &paired, &library)
    })?;
    body.scored = scored;
    Ok(())
}

/// Grows the pool outward. Seeds are chosen once, by surface dispersion
/// over the initial pool; each seed's expansion sees the pool as grown by
/// the seeds before it, so a concept accepted at one seed counts as a
/// duplicate at the next. Seeds whose every candidate is a duplicate are
/// noted in `warnings` and accept nothing.
pub(crate) fn expand_thought_pool(
    ctx: &PipelineContext,
    pool: &mut ThoughtPool,
    warnings: &mut Vec<String>,
) -> Result<Vec<ExpansionRecord>, PipelineError> {
    if pool.is_empty() {
        return Err(PipelineError::EmptyPool);
    }
    let mut seed_count = ctx.params.seed_count;
    if seed_count > pool.len() {
        warnings.push(format!(
            "seed_count {} exceeds the pool size {}; seeding from every thought",
            seed_count,
            pool.len()
        ));
        seed_count = pool.len();
    }
    let surfaces: Vec<Vec<f64>> = pool
        .thoughts
        .iter()
        .map(|t| {
            t.surface_embedding
                .clone()
                .ok_or_else(|| PipelineError::MissingEmbeddings(t.id.clone()))
        })
        .collect::<Result<_, _>>()?;
    let seeds: Vec<Thought> = max_dispersion_subset(
        &surfaces,
        seed_count,
        DispersionMetric::Euclidean,
        ctx.params.dispersion_exhaustive_limit,
    )?
    .into_iter()
    .map(|i| pool.thoughts[i].clone())
    .collect();

    let mut records = Vec::new();
    for seed in seeds {
        let seed_view = super::thought_view(&seed)?;
        let existing = pool
            .thoughts
            .iter()
            .map(|t| t.text.as_str())
            .collect::<Vec<_>>()
            .join("\n");
        let request = PromptRequest::from_template(
            "expand_thoughts",
            &[
                ("count", ctx.params.expansion_candidates.to_string()),
                ("seed", seed.text.clone()),
                ("existing", existing),
            ],
            ctx.recorder.gateway().creative_sampling(),
        )?;
        let response = ctx.recorder.complete(&request)?;
        let texts = parse::numbered_list(&response, ctx.params.expansion_candidates);

        let mut generated: Vec<Thought> = Vec::new();
        let mut duplicates = Vec::new();
        let mut best: Option<(f64, usize)> = None;
        for (j, text) in texts.into_iter().enumerate() {
            if pool.contains_text(&text) || generated.iter().any(|g| g.text == text) {
                duplicates.push(text);
                continue;
            }
            let thought = make_thought(
                ctx,
                format!("{}-g{}", seed.id, j + 1),
                text,
                Some(seed.id.clone()),
            )?;
            let view = super::thought_view(&thought)?;
            let role_similarity = cosine_similarity(seed_view.role, view.role)?;
            let surface_similarity = cosine_similarity(seed_view.surface, view.surface)?;
            let objective = role_similarity - ctx.params.lambda * surface_similarity;
            if best.map_or(true, |(value, _)| objective > value) {
                best = Some((objective, generated.len()));
            }
            generated.push(thought);
        }
        match best {
            None => warnings.push(format!(
                "seed `{}` produced no concept absent from the pool",
                seed.id
            )),
            Some((objective, winner)) => {
                let mut accepted = generated[winner].clone();
                accepted.id = format!("t{}", pool.len() + 1);
                pool.origins
                    .insert(accepted.id.clone(), vec![format!("expanded:{}", seed.id)]);
                pool.thoughts.push(accepted.clone());
                records.push(ExpansionRecord {
                    seed_id: seed.id.clone(),
                    generated,
                    duplicates,
                    accepted,
                    objective,
                });
            }
        }
    }
    Ok(records)
}
