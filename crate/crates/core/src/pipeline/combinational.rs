//! The combinational pipeline: retrieve structurally analogous problems,
//! harvest their solutions, decompose everything into a deduplicated
//! thought pool, and substitute pooled thoughts into high-impact sites of
//! diverse known solutions. Shared by the exploratory and transformative
//! pipelines, which insert extra steps around this core.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::eval::{self, CanonicalSolution, ChecklistResult};
use crate::gateway::{EmbeddingRequest, PromptRequest, Sampling};
use crate::model::{Solution, SolutionProvenance, Thought};
use crate::parse;
use crate::record::RunBody;
use crate::selection::{
    self, composite_score, cosine_similarity, donor_topk, max_dispersion_subset, CompositeScore,
    DispersionMetric,
};

use super::{
    dual_view, known_library, make_thought, solution_surface, thought_view, thought_views,
    PipelineContext, PipelineError, StepClock, StepFailure,
};

/// An analogous problem that passed both retrieval gates: functionally
/// similar (role) yet superficially distant (surface).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalogProblem {
    pub id: String,
    pub description: String,
    pub role_similarity: f64,
    pub surface_distance: f64,
    pub functional_abstract: String,
}

/// The deduplicated pool of thoughts mined from harvested solutions.
/// `origins` maps each thought to every solution it was extracted from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThoughtPool {
    pub thoughts: Vec<Thought>,
    pub origins: BTreeMap<String, Vec<String>>,
}

impl ThoughtPool {
    pub fn len(&self) -> usize {
        self.thoughts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thoughts.is_empty()
    }

    pub fn contains_text(&self, text: &str) -> bool {
        self.thoughts.iter().any(|t| t.text == text)
    }
}

/// One known solution chosen as a substitution host, its decomposed
/// thoughts' impact ratings, and the sites selected for substitution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HostSelection {
    pub host: Solution,
    pub sites: Vec<Thought>,
    pub impacts: BTreeMap<String, f64>,
}

/// Which donor replaced which site of which host to form a candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubstitutionPlan {
    pub host_id: String,
    pub site_id: String,
    pub donor_id: String,
}

/// A candidate that cleared the composite threshold, with everything the
/// judges said about it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredSolution {
    pub solution: Solution,
    pub score: CompositeScore,
    pub checklist: Vec<ChecklistResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<SubstitutionPlan>,
    /// For transformative runs: the mutated rule space this came from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule_space: Option<String>,
    /// For transformative runs: feasibility re-checked against the
    /// original, unmutated rules.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub original_feasibility: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub judge_calls: Vec<String>,
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
    let pool = clock.run("decompose", || decompose_into_pool(ctx, &harvested))?;
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
    let scored = clock.run("evaluate", || evaluate_and_rank(ctx, &paired, &library))?;
    body.scored = scored;
    Ok(())
}

/// Asks for candidate analogous problems and keeps those that are similar
/// in role and distant in surface from the task.
pub(crate) fn retrieve_analogous_problems(
    ctx: &PipelineContext,
) -> Result<Vec<AnalogProblem>, PipelineError> {
    let target = dual_view(ctx, &ctx.task.description())?;
    let request = PromptRequest::from_template(
        "analogous_problems",
        &[
            ("objective", ctx.task.objective.clone()),
            ("context", ctx.task.context.clone()),
            ("count", ctx.params.analog_problem_count.to_string()),
        ],
        ctx.recorder.gateway().creative_sampling(),
    )?;
    let response = ctx.recorder.complete(&request)?;
    let descriptions = parse::numbered_list(&response, ctx.params.analog_problem_count);

    let mut accepted = Vec::new();
    let mut considered = 0usize;
    let mut role_rejected = 0usize;
    let mut surface_rejected = 0usize;
    for description in descriptions {
        considered += 1;
        let view = dual_view(ctx, &description)?;
        let role_similarity = cosine_similarity(&target.role, &view.role)?;
        let surface_distance = 1.0 - cosine_similarity(&target.surface, &view.surface)?;
        let role_ok = role_similarity >= ctx.params.tau_role;
        let surface_ok = surface_distance >= ctx.params.tau_surf;
        if !role_ok {
            role_rejected += 1;
        }
        if !surface_ok {
            surface_rejected += 1;
        }
        if role_ok && surface_ok {
            accepted.push(AnalogProblem {
                id: format!("analog-{}", accepted.len() + 1),
                description,
                role_similarity,
                surface_distance,
                functional_abstract: view.functional_abstract,
            });
        }
    }
    if accepted.is_empty() {
        return Err(PipelineError::EmptyRetrieval {
            considered,
            role_rejected,
            surface_rejected,
        });
    }
    Ok(accepted)
}

/// Collects established solutions for each retrieved problem.
pub(crate) fn harvest_solutions(
    ctx: &PipelineContext,
    problems: &[AnalogProblem],
) -> Result<Vec<Solution>, PipelineError> {
    let mut harvested = Vec::new();
    for problem in problems {
        let request = PromptRequest::from_template(
            "harvest_solutions",
            &[
                ("count", ctx.params.solutions_per_analog.to_string()),
                ("problem", problem.description.clone()),
            ],
            ctx.recorder.gateway().creative_sampling(),
        )?;
        let response = ctx.recorder.complete(&request)?;
        for text in parse::numbered_list(&response, ctx.params.solutions_per_analog) {
            harvested.push(Solution::new(
                format!("harvest-{}", harvested.len() + 1),
                text,
                problem.id.clone(),
                SolutionProvenance::Harvested,
            ));
        }
    }
    if harvested.is_empty() {
        return Err(PipelineError::NoSolutions(problems.len()));
    }
    Ok(harvested)
}

/// Decomposes every harvested solution and pools the pieces, deduplicating
/// by exact text. The first occurrence names the thought; later occurrences
/// only extend its origin list.
pub(crate) fn decompose_into_pool(
    ctx: &PipelineContext,
    harvested: &[Solution],
) -> Result<ThoughtPool, PipelineError> {
    let mut pool = ThoughtPool {
        thoughts: Vec::new(),
        origins: BTreeMap::new(),
    };
    let mut by_text: BTreeMap<String, String> = BTreeMap::new();
    for solution in harvested {
        let request = PromptRequest::from_template(
            "solution_decomposition",
            &[("solution", solution.text.clone())],
            Sampling::deterministic(),
        )?;
        let response = ctx.recorder.complete(&request)?;
        for text in parse::numbered_list(&response, 0) {
            if let Some(id) = by_text.get(&text) {
                let origins = pool.origins.get_mut(id).expect("indexed thought");
                if !origins.contains(&solution.id) {
                    origins.push(solution.id.clone());
                }
                continue;
            }
            let id = format!("t{}", pool.thoughts.len() + 1);
            let thought = make_thought(ctx, id.clone(), text.clone(), Some(solution.id.clone()))?;
            by_text.insert(text, id.clone());
            pool.origins.insert(id, vec![solution.id.clone()]);
            pool.thoughts.push(thought);
        }
    }
    if pool.is_empty() {
        return Err(PipelineError::EmptyPool);
    }
    Ok(pool)
}

/// Picks the most mutually dispersed known solutions as hosts, decomposes
/// each, rates every piece's impact, and keeps the top-rated pieces as
/// substitution sites.
pub(crate) fn select_hosts(
    ctx: &PipelineContext,
    library: &[Solution],
    warnings: &mut Vec<String>,
) -> Result<Vec<HostSelection>, PipelineError> {
    let mut count = ctx.params.host_count;
    if count > library.len() {
        warnings.push(format!(
            "host_count {} exceeds the library size {}; using every known solution",
            count,
            library.len()
        ));
        count = library.len();
    }
    let surfaces: Vec<Vec<f64>> = library
        .iter()
        .map(|s| solution_surface(s).cloned())
        .collect::<Result<_, _>>()?;
    let chosen = max_dispersion_subset(
        &surfaces,
        count,
        DispersionMetric::Euclidean,
        ctx.params.dispersion_exhaustive_limit,
    )?;

    let mut hosts = Vec::with_capacity(chosen.len());
    for (position, &index) in chosen.iter().enumerate() {
        let mut host = library[index].clone();
        let request = PromptRequest::from_template(
            "solution_decomposition",
            &[("solution", host.text.clone())],
            Sampling::deterministic(),
        )?;
        let response = ctx.recorder.complete(&request)?;
        let mut impacts = BTreeMap::new();
        let mut thoughts = Vec::new();
        for (j, text) in parse::numbered_list(&response, 0).into_iter().enumerate() {
            let id = format!("h{}-t{}", position + 1, j + 1);
            let thought = make_thought(ctx, id.clone(), text, Some(host.id.clone()))?;
            let impact_request = PromptRequest::from_template(
                "site_impact",
                &[
                    ("objective", ctx.task.objective.clone()),
                    ("thought", thought.text.clone()),
                ],
                Sampling::deterministic(),
            )?;
            let impact_response = ctx.recorder.complete(&impact_request)?;
            let impact = match parse::first_number(&impact_response) {
                Some(value) => value.clamp(0.0, 1.0),
                None => {
                    warnings.push(format!(
                        "impact of site `{id}` was unparseable; treating it as 0"
                    ));
                    0.0
                }
            };
            impacts.insert(id, impact);
            thoughts.push(thought);
        }
        let mut order: Vec<usize> = (0..thoughts.len()).collect();
        order.sort_by(|&a, &b| {
            let ia = impacts[&thoughts[a].id];
            let ib = impacts[&thoughts[b].id];
            ib.total_cmp(&ia).then(a.cmp(&b))
        });
        let sites: Vec<Thought> = order
            .into_iter()
            .take(ctx.params.sites_per_host)
            .map(|i| thoughts[i].clone())
            .collect();
        host.thoughts = thoughts;
        hosts.push(HostSelection {
            host,
            sites,
            impacts,
        });
    }
    Ok(hosts)
}

/// For every site of every host, ranks the pool by the donor objective and
/// synthesizes one candidate per top-`k` donor.
pub(crate) fn synthesize_candidates(
    ctx: &PipelineContext,
    hosts: &[HostSelection],
    pool: &ThoughtPool,
    warnings: &mut Vec<String>,
) -> Result<Vec<(Solution, SubstitutionPlan)>, PipelineError> {
    if pool.is_empty() {
        return Err(PipelineError::EmptyPool);
    }
    let donors = thought_views(&pool.thoughts)?;
    let mut k = ctx.params.donor_k;
    if k > donors.len() {
        warnings.push(format!(
            "donor_k {} exceeds the pool size {}; trying every donor",
            k,
            donors.len()
        ));
        k = donors.len();
    }
    let mut candidates = Vec::new();
    for host in hosts {
        for site in &host.sites {
            let target = thought_view(site)?;
            for ranked in donor_topk(target, &donors, k, ctx.params.lambda)? {
                let donor = &pool.thoughts[ranked.index];
                let request = PromptRequest::from_template(
                    "creative_synthesis",
                    &[
                        ("objective", ctx.task.objective.clone()),
                        ("rules", ctx.task.rules_text()),
                        ("host", host.host.text.clone()),
                        ("site", site.text.clone()),
                        ("donor", donor.text.clone()),
                    ],
                    ctx.recorder.gateway().creative_sampling(),
                )?;
                let text = ctx.recorder.complete(&request)?.trim().to_string();
                let plan = SubstitutionPlan {
                    host_id: host.host.id.clone(),
                    site_id: site.id.clone(),
                    donor_id: donor.id.clone(),
                };
                if text.is_empty() {
                    warnings.push(format!(
                        "synthesis for host `{}` site `{}` donor `{}` returned nothing",
                        plan.host_id, plan.site_id, plan.donor_id
                    ));
                    continue;
                }
                let solution = Solution::new(
                    format!("cand-{}", candidates.len() + 1),
                    text,
                    ctx.task.id.clone(),
                    SolutionProvenance::Synthesized,
                );
                candidates.push((solution, plan));
            }
        }
    }
    if candidates.is_empty() {
        return Err(PipelineError::EmptyGeneration("creative synthesis".into()));
    }
    Ok(candidates)
}

/// Scores every candidate on feasibility, utility, and novelty against the
/// known library, keeps those whose composite clears the threshold, and
/// ranks them best-first (composite, then novelty, then arrival order).
pub(crate) fn evaluate_and_rank(
    ctx: &PipelineContext,
    candidates: &[(Solution, Option<SubstitutionPlan>)],
    library: &[Solution],
) -> Result<Vec<ScoredSolution>, PipelineError> {
    let known_surfaces: Vec<Vec<f64>> = library
        .iter()
        .map(|s| solution_surface(s).cloned())
        .collect::<Result<_, _>>()?;
    let weights = ctx.params.weights();
    let mut scored: Vec<(usize, ScoredSolution)> = Vec::new();
    for (index, (candidate, plan)) in candidates.iter().enumerate() {
        let (feasibility, checklist, mut judge_calls) =
            eval::score_feasibility(ctx.recorder, &candidate.text, ctx.task)?;
        let embedded = ctx
            .recorder
            .embed(&EmbeddingRequest::surface(candidate.text.clone()))?;
        let judged = CanonicalSolution {
            solution_id: candidate.id.clone(),
            core_idea: candidate.text.clone(),
            surface_embedding: embedded.vector.clone(),
        };
        let (utility, utility_calls) = eval::score_utility(ctx.recorder, &judged, ctx.task)?;
        judge_calls.extend(utility_calls);
        let novelty = selection::novelty_vs_set(&embedded.vector, &known_surfaces)?;
        let score = composite_score(feasibility, utility, novelty, &weights)?;
        let mut solution = candidate.clone();
        solution.surface_embedding = Some(embedded.vector);
        scored.push((
            index,
            ScoredSolution {
                solution,
                score,
                checklist,
                plan: plan.clone(),
                rule_space: None,
                original_feasibility: None,
                judge_calls,
            },
        ));
    }
    let mut retained: Vec<(usize, ScoredSolution)> = scored
        .into_iter()
        .filter(|(_, s)| s.score.composite >= ctx.params.tau_eval)
        .collect();
    retained.sort_by(|(ia, a), (ib, b)| {
        b.score
            .composite
            .total_cmp(&a.score.composite)
            .then(b.score.novelty.total_cmp(&a.score.novelty))
            .then(ia.cmp(ib))
    });
    Ok(retained.into_iter().map(|(_, s)| s).collect())
}

#[cfg(test)]
mod tests {
    use super::super::testkit;
    use super::super::{run_cuot, PipelineError};
    use super::*;
    use crate::gateway::Recorder;
    use crate::model::PipelineParams;
    use crate::record::RunStatus;

    #[test]
    fn retrieval_keeps_similar_role_distant_surface_problems() {
        let gw = testkit::gateway(testkit::fixture());
        let recorder = Recorder::new(&gw);
        let task = testkit::task();
        let params = PipelineParams::default();
        let ctx = PipelineContext {
            recorder: &recorder,
            task: &task,
            params: &params,
        };
        let problems = retrieve_analogous_problems(&ctx).unwrap();
        assert_eq!(problems.len(), 2);
        assert_eq!(problems[0].id, "analog-1");
        assert!(problems[0].description.contains("railway"));
        assert!(problems.iter().all(|p| p.role_similarity >= 0.6));
        assert!(problems.iter().all(|p| p.surface_distance >= 0.4));
        assert!(!problems[0].functional_abstract.is_empty());
    }

    #[test]
    fn retrieval_reports_why_everything_was_rejected() {
        // Both problems embed onto the task's own surface vector: similar
        // in wording, so the surface-distance gate rejects them.
        let fixture = testkit::fixture()
            .embedding("railway single track scheduling", &[1.0, 0.0, 0.0])
            .embedding("elevator peak dispatch", &[1.0, 0.0, 0.0]);
        let gw = testkit::gateway(fixture);
        let recorder = Recorder::new(&gw);
        let task = testkit::task();
        let params = PipelineParams::default();
        let ctx = PipelineContext {
            recorder: &recorder,
            task: &task,
            params: &params,
        };
        match retrieve_analogous_problems(&ctx).unwrap_err() {
            PipelineError::EmptyRetrieval {
                considered,
                role_rejected,
                surface_rejected,
            } => {
                assert_eq!(considered, 2);
                assert_eq!(role_rejected, 0);
                assert_eq!(surface_rejected, 2);
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn retrieval_rejects_role_mismatches() {
        // The railway problem gets its own abstract, orthogonal to the
        // task's abstract, so the role gate rejects it.
        let fixture = testkit::fixture_with(|f| {
            f.stub(
                crate::gateway::PromptFunction::FunctionalAbstract,
                &[("text", "*railway*")],
                "an isolated parcel routing role",
            )
        })
        .embedding("an isolated parcel routing role", &[1.0, -1.0, 0.0]);
        let gw = testkit::gateway(fixture);
        let recorder = Recorder::new(&gw);
        let task = testkit::task();
        let params = PipelineParams::default();
        let ctx = PipelineContext {
            recorder: &recorder,
            task: &task,
            params: &params,
        };
        let problems = retrieve_analogous_problems(&ctx).unwrap();
        assert_eq!(problems.len(), 1);
        assert!(problems[0].description.contains("elevator"));
    }

    #[test]
    fn harvest_collects_solutions_per_problem() {
        let gw = testkit::gateway(testkit::fixture());
        let recorder = Recorder::new(&gw);
        let task = testkit::task();
        let params = PipelineParams::default();
        let ctx = PipelineContext {
            recorder: &recorder,
            task: &task,
            params: &params,
        };
        let problems = retrieve_analogous_problems(&ctx).unwrap();
        let harvested = harvest_solutions(&ctx, &problems).unwrap();
        assert_eq!(harvested.len(), 3);
        assert_eq!(harvested[0].id, "harvest-1");
        assert_eq!(harvested[0].problem_id, "analog-1");
        assert_eq!(harvested[2].problem_id, "analog-2");
        assert!(harvested
            .iter()
            .all(|s| s.provenance == SolutionProvenance::Harvested));
    }

    #[test]
    fn pool_deduplicates_by_text_and_tracks_origins() {
        let gw = testkit::gateway(testkit::fixture());
        let recorder = Recorder::new(&gw);
        let task = testkit::task();
        let params = PipelineParams::default();
        let ctx = PipelineContext {
            recorder: &recorder,
            task: &task,
            params: &params,
        };
        let problems = retrieve_analogous_problems(&ctx).unwrap();
        let harvested = harvest_solutions(&ctx, &problems).unwrap();
        let pool = decompose_into_pool(&ctx, &harvested).unwrap();
        // "token granting exclusive access" appears in two solutions but is
        // pooled once.
        assert_eq!(pool.len(), 4);
        assert_eq!(pool.thoughts[0].id, "t1");
        assert_eq!(pool.thoughts[0].text, "token granting exclusive access");
        assert_eq!(
            pool.origins["t1"],
            vec!["harvest-1".to_string(), "harvest-2".to_string()]
        );
        assert_eq!(pool.origins["t2"], vec!["harvest-1".to_string()]);
        assert!(pool.thoughts.iter().all(|t| t.role_embedding.is_some()
            && t.surface_embedding.is_some()
            && !t.functional_abstract.is_empty()));
    }

    #[test]
    fn hosts_are_clamped_sites_ranked_by_impact() {
        let gw = testkit::gateway(testkit::fixture());
        let recorder = Recorder::new(&gw);
        let task = testkit::task();
        let params = PipelineParams::default();
        let ctx = PipelineContext {
            recorder: &recorder,
            task: &task,
            params: &params,
        };
        let library = known_library(&ctx).unwrap();
        let mut warnings = Vec::new();
        let hosts = select_hosts(&ctx, &library, &mut warnings).unwrap();
        // host_count 3 > 2 known solutions.
        assert_eq!(hosts.len(), 2);
        assert!(warnings[0].contains("host_count"), "{warnings:?}");
        let first = &hosts[0];
        assert_eq!(first.host.thoughts.len(), 2);
        // Impact 0.9 (timer) outranks 0.4 (switch).
        assert_eq!(first.sites.len(), 2);
        assert_eq!(first.sites[0].text, "a fixed timer");
        assert_eq!(first.impacts["h1-t1"], 0.9);
        assert_eq!(first.impacts["h1-t2"], 0.4);
        assert_eq!(hosts[1].sites.len(), 1);
    }

    #[test]
    fn synthesis_tries_k_donors_per_site() {
        let gw = testkit::gateway(testkit::fixture());
        let recorder = Recorder::new(&gw);
        let task = testkit::task();
        let params = PipelineParams::default();
        let ctx = PipelineContext {
            recorder: &recorder,
            task: &task,
            params: &params,
        };
        let library = known_library(&ctx).unwrap();
        let problems = retrieve_analogous_problems(&ctx).unwrap();
        let harvested = harvest_solutions(&ctx, &problems).unwrap();
        let pool = decompose_into_pool(&ctx, &harvested).unwrap();
        let mut warnings = Vec::new();
        let hosts = select_hosts(&ctx, &library, &mut warnings).unwrap();
        let candidates = synthesize_candidates(&ctx, &hosts, &pool, &mut warnings).unwrap();
        let site_count: usize = hosts.iter().map(|h| h.sites.len()).sum();
        assert_eq!(site_count, 3);
        assert_eq!(candidates.len(), site_count * params.donor_k);
        assert_eq!(candidates[0].0.id, "cand-1");
        assert_eq!(candidates.last().unwrap().0.id, "cand-9");
        // Every plan names a real host site and pool donor.
        for (_, plan) in &candidates {
            assert!(hosts.iter().any(|h| h.host.id == plan.host_id));
            assert!(hosts
                .iter()
                .flat_map(|h| &h.sites)
                .any(|s| s.id == plan.site_id));
            assert!(pool.thoughts.iter().any(|t| t.id == plan.donor_id));
        }
    }

    #[test]
    fn evaluate_filters_below_threshold_and_ranks_the_rest() {
        let gw = testkit::gateway(testkit::fixture());
        let recorder = Recorder::new(&gw);
        let task = testkit::task();
        let params = PipelineParams::default();
        let ctx = PipelineContext {
            recorder: &recorder,
            task: &task,
            params: &params,
        };
        let library = known_library(&ctx).unwrap();
        let a = Solution::new(
            "cand-1",
            "a synthesized crossing plan",
            "lane",
            SolutionProvenance::Synthesized,
        );
        let candidates = vec![(a, None)];
        let scored = evaluate_and_rank(&ctx, &candidates, &library).unwrap();
        assert_eq!(scored.len(), 1);
        let s = &scored[0];
        assert_eq!(s.score.feasibility, 1.0);
        assert_eq!(s.score.utility, 0.8);
        assert!((s.score.novelty - 0.292_893_218_813_452_5).abs() < 1e-12);
        assert!(s.score.composite >= params.tau_eval);
        assert_eq!(s.checklist.len(), 1);
        assert!(!s.judge_calls.is_empty());

        // A harsher utility judge pushes the composite under the threshold.
        let fixture = testkit::fixture_with(|f| {
            f.stub(crate::gateway::PromptFunction::JudgeUtility, &[], "0.1")
        });
        let gw = testkit::gateway(fixture);
        let recorder = Recorder::new(&gw);
        let ctx = PipelineContext {
            recorder: &recorder,
            task: &task,
            params: &params,
        };
        let library = known_library(&ctx).unwrap();
        let b = Solution::new(
            "cand-1",
            "a synthesized crossing plan",
            "lane",
            SolutionProvenance::Synthesized,
        );
        let scored = evaluate_and_rank(&ctx, &[(b, None)], &library).unwrap();
        assert!(scored.is_empty());
    }

    #[test]
    fn full_run_completes_with_consistent_record() {
        let gw = testkit::gateway(testkit::fixture());
        let task = testkit::task();
        let params = PipelineParams::default();
        let record = run_cuot(&gw, &task, &params);
        assert_eq!(record.body.status, RunStatus::Completed);
        assert_eq!(record.body.method, crate::record::Method::Cuot);
        assert_eq!(record.body.known_solutions.len(), 2);
        assert_eq!(record.body.problems.len(), 2);
        assert_eq!(record.body.harvested.len(), 3);
        assert_eq!(record.body.pool.as_ref().unwrap().len(), 4);
        assert_eq!(record.body.hosts.len(), 2);
        let expected: usize = record
            .body
            .hosts
            .iter()
            .map(|h| h.sites.len() * params.donor_k)
            .sum();
        assert_eq!(record.body.candidates.len(), expected);
        assert_eq!(record.body.plans.len(), expected);
        assert_eq!(record.body.scored.len(), expected);
        assert!(!record.body.transcript.is_empty());
        assert!(record
            .meta
            .timings
            .iter()
            .any(|t| t.step == "synthesize"));
        // Scores are sorted best-first.
        let composites: Vec<f64> = record
            .body
            .scored
            .iter()
            .map(|s| s.score.composite)
            .collect();
        assert!(composites.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn failures_keep_partial_progress() {
        // Empty harvest responses stop the run at that step; the retrieved
        // problems survive in the body.
        let fixture = testkit::fixture_with(|f| {
            f.stub(
                crate::gateway::PromptFunction::AnalogousSolutionGeneration,
                &[("problem", "*")],
                " ",
            )
        });
        let gw = testkit::gateway(fixture);
        let task = testkit::task();
        let record = run_cuot(&gw, &task, &PipelineParams::default());
        match &record.body.status {
            RunStatus::Failed { step, error } => {
                assert_eq!(step, "harvest_solutions");
                assert!(error.contains("2 analogous problem"), "{error}");
            }
            other => panic!("unexpected status {other:?}"),
        }
        assert_eq!(record.body.problems.len(), 2);
        assert!(record.body.pool.is_none());
        assert!(!record.body.transcript.is_empty());
    }
}
