//! The transformative pipeline: expose the task's full rule set (stated
//! plus hidden assumptions mined from the known solutions), import
//! analogous rules from other domains, mutate the high-impact rules by
//! dropping, varying, or adding, and run the exploratory pipeline inside
//! every mutated rule space. A final filter keeps candidates that either
//! still satisfy the original rules or are novel enough to justify
//! breaking them.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::gateway::{PromptRequest, Sampling};
use crate::model::{MutationOp, Rule, RuleOrigin, RuleSet, Solution, TaskSpec};
use crate::parse;
use crate::record::{Method, RunBody, RunRecord};
use crate::selection::cosine_similarity;

use super::combinational::ScoredSolution;
use super::{
    dual_view, known_library, PipelineContext, PipelineError, StepClock, StepFailure,
};

/// How a mutated rule space came to be.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MutationOrigin {
    pub operation: MutationOp,
    /// The rule dropped or varied; absent for additions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule_id: Option<String>,
    /// For additions: the id of the base space the addition extends.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extends: Option<String>,
}

/// One mutated rule space: the rules, the derived task that carries them,
/// and the mutation that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MutatedRuleSpace {
    pub id: String,
    pub rule_set: RuleSet,
    pub derived_task: TaskSpec,
    pub origin: MutationOrigin,
}

/// The final filter: a candidate survives when it still satisfies the
/// original rules, or when its novelty justifies breaking them.
pub fn apply_creative_filter(
    original_feasibility: f64,
    novelty: f64,
    tau_feas: f64,
    tau_creative: f64,
) -> bool {
    original_feasibility >= tau_feas || novelty >= tau_creative
}

pub(crate) fn run_steps(
    ctx: &PipelineContext,
    body: &mut RunBody,
    clock: &mut StepClock,
) -> Result<(), StepFailure> {
    let library = clock.run("known_library", || known_library(ctx))?;
    body.known_solutions = library.clone();
    let exposed = clock.run("expose_rules", || expose_rules(ctx, &library))?;
    body.exposed_rules = Some(exposed.clone());
    let analogous = clock.run("analogous_rules", || {
        discover_analogous_rules(ctx, &exposed)
    })?;
    body.analogous_rules = analogous.clone();
    let impacts = clock.run("rate_impacts", || {
        rate_rule_impacts(ctx, &exposed, &mut body.warnings)
    })?;
    body.rule_impacts = impacts.clone();
    let spaces = clock.run("mutate_rules", || {
        mutate_rule_sets(ctx, &library, &exposed, &analogous, &impacts, &mut body.warnings)
    })?;
    body.spaces = spaces.clone();
    let tagged = clock.run("explore_spaces", || {
        explore_rule_spaces(ctx, &spaces, &mut body.sub_runs, &mut body.warnings)
    })?;
    let scored = clock.run("final_filter", || {
        filter_final(ctx, tagged, &exposed, &mut body.warnings)
    })?;
    body.scored = scored;
    Ok(())
}

/// Exposes the complete rule set: the task's explicit rules plus every
/// hidden-assumption candidate that all known solutions verifiably
/// satisfy.
pub(crate) fn expose_rules(
    ctx: &PipelineContext,
    library: &[Solution],
) -> Result<RuleSet, PipelineError> {
    let mut rules = ctx.task.explicit_rules.clone();
    let solutions_text = library
        .iter()
        .map(|s| s.text.as_str())
        .collect::<Vec<_>>()
        .join("\n");
    let request = PromptRequest::from_template(
        "hidden_rules",
        &[
            ("objective", ctx.task.objective.clone()),
            ("context", ctx.task.context.clone()),
            ("rules", ctx.task.rules_text()),
            ("solutions", solutions_text),
        ],
        Sampling::deterministic(),
    )?;
    let response = ctx.recorder.complete(&request)?;
    let mut admitted = 0usize;
    for statement in parse::numbered_list(&response, 0) {
        let mut holds_everywhere = true;
        for solution in library {
            let verify = PromptRequest::from_template(
                "verify_rule",
                &[
                    ("rule", statement.clone()),
                    ("solution", solution.text.clone()),
                ],
                Sampling::deterministic(),
            )?;
            let verdict = ctx.recorder.complete(&verify)?;
            if parse::yes_no(&verdict) != Some(true) {
                holds_everywhere = false;
                break;
            }
        }
        if holds_everywhere {
            admitted += 1;
            rules.push(Rule::new(
                format!("h{admitted}"),
                statement,
                RuleOrigin::Hidden,
            ));
        }
    }
    Ok(RuleSet::new(rules)?)
}

/// How many analogous alternatives to request per rule.
const ALTERNATIVES_PER_RULE: usize = 3;

/// For each exposed rule, asks for rules playing the same structural role
/// in other domains and ranks them like donors: role-similar to the
/// original, surface-distant from it.
pub(crate) fn discover_analogous_rules(
    ctx: &PipelineContext,
    exposed: &RuleSet,
) -> Result<BTreeMap<String, Vec<Rule>>, PipelineError> {
    let mut map = BTreeMap::new();
    for rule in &exposed.rules {
        let original = dual_view(ctx, &rule.statement)?;
        let request = PromptRequest::from_template(
            "analogous_rules",
            &[
                ("count", ALTERNATIVES_PER_RULE.to_string()),
                ("rule", rule.statement.clone()),
            ],
            ctx.recorder.gateway().creative_sampling(),
        )?;
        let response = ctx.recorder.complete(&request)?;
        let mut ranked: Vec<(f64, usize, Rule)> = Vec::new();
        for (j, line) in parse::numbered_list(&response, ALTERNATIVES_PER_RULE)
            .into_iter()
            .enumerate()
        {
            let (statement, source_domain) = split_domain(&line);
            let view = dual_view(ctx, &statement)?;
            let role_similarity = cosine_similarity(&original.role, &view.role)?;
            let surface_similarity = cosine_similarity(&original.surface, &view.surface)?;
            let objective = role_similarity - ctx.params.lambda * surface_similarity;
            let mut alt = Rule::new(
                format!("{}-alt{}", rule.id, j + 1),
                statement,
                RuleOrigin::Analogous,
            );
            alt.source_domain = source_domain;
            ranked.push((objective, j, alt));
        }
        ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        map.insert(
            rule.id.clone(),
            ranked.into_iter().map(|(_, _, alt)| alt).collect(),
        );
    }
    Ok(map)
}

/// Splits a discovered rule line of the form `statement (from: domain)`.
fn split_domain(line: &str) -> (String, Option<String>) {
    if let Some(start) = line.rfind("(from:") {
        if let Some(close) = line[start..].find(')') {
            let domain = line[start + "(from:".len()..start + close].trim();
            let statement = line[..start].trim().trim_end_matches(',').trim();
            if !statement.is_empty() && !domain.is_empty() {
                return (statement.to_string(), Some(domain.to_string()));
            }
        }
    }
    (line.trim().to_string(), None)
}

/// Rates how strongly each exposed rule constrains the solution space.
/// Unparseable judgements rate 0 and leave a warning rather than aborting.
pub(crate) fn rate_rule_impacts(
    ctx: &PipelineContext,
    exposed: &RuleSet,
    warnings: &mut Vec<String>,
) -> Result<BTreeMap<String, f64>, PipelineError> {
    let mut impacts = BTreeMap::new();
    for rule in &exposed.rules {
        let request = PromptRequest::from_template(
            "rule_impact",
            &[
                ("objective", ctx.task.objective.clone()),
                ("rule", rule.statement.clone()),
            ],
            Sampling::deterministic(),
        )?;
        let response = ctx.recorder.complete(&request)?;
        let impact = match parse::first_number(&response) {
            Some(value) => value.clamp(0.0, 1.0),
            None => {
                warnings.push(format!(
                    "impact of rule `{}` was unparseable; treating it as 0",
                    rule.id
                ));
                0.0
            }
        };
        impacts.insert(rule.id.clone(), impact);
    }
    Ok(impacts)
}

/// Builds the mutated rule spaces: for every rule whose impact clears the
/// threshold, a drop space and (when an analogous alternative exists) a
/// vary space; then, for each of those bases, an add space whose new rule
/// must admit a witness solution to count as satisfiable.
pub(crate) fn mutate_rule_sets(
    ctx: &PipelineContext,
    library: &[Solution],
    exposed: &RuleSet,
    analogous: &BTreeMap<String, Vec<Rule>>,
    impacts: &BTreeMap<String, f64>,
    warnings: &mut Vec<String>,
) -> Result<Vec<MutatedRuleSpace>, PipelineError> {
    let impact_rules: Vec<&Rule> = exposed
        .rules
        .iter()
        .filter(|r| impacts.get(&r.id).copied().unwrap_or(0.0) >= ctx.params.tau_impact)
        .collect();
    if impact_rules.is_empty() {
        return Err(PipelineError::NoImpactRules(ctx.params.tau_impact));
    }
    let library_texts: Vec<String> = library.iter().map(|s| s.text.clone()).collect();
    let make_space = |id: String, rule_set: RuleSet, origin: MutationOrigin| {
        let mut derived_task = ctx.task.with_rules(&id, rule_set.rules.clone());
        // Derived tasks inherit the parent's library so sub-runs reuse it
        // instead of bootstrapping their own.
        derived_task.known_solutions = library_texts.clone();
        MutatedRuleSpace {
            id,
            rule_set,
            derived_task,
            origin,
        }
    };

    let mut spaces = Vec::new();
    for rule in &impact_rules {
        let dropped = exposed.apply(MutationOp::Drop, Some(&rule.id), None)?;
        spaces.push(make_space(
            format!("drop-{}", rule.id),
            dropped,
            MutationOrigin {
                operation: MutationOp::Drop,
                rule_id: Some(rule.id.clone()),
                extends: None,
            },
        ));
        match analogous.get(&rule.id).and_then(|alts| alts.first()) {
            Some(replacement) => {
                let varied =
                    exposed.apply(MutationOp::Vary, Some(&rule.id), Some(replacement.clone()))?;
                spaces.push(make_space(
                    format!("vary-{}", rule.id),
                    varied,
                    MutationOrigin {
                        operation: MutationOp::Vary,
                        rule_id: Some(rule.id.clone()),
                        extends: None,
                    },
                ));
            }
            None => warnings.push(format!(
                "no analogous alternative for rule `{}`; skipping its vary mutation",
                rule.id
            )),
        }
    }

    let bases: Vec<(String, RuleSet)> = spaces
        .iter()
        .map(|s| (s.id.clone(), s.rule_set.clone()))
        .collect();
    let mut added_counter = 0usize;
    for (base_id, base_set) in bases {
        let rules_text = base_set
            .rules
            .iter()
            .map(|r| r.statement.as_str())
            .collect::<Vec<_>>()
            .join("\n");
        let request = PromptRequest::from_template(
            "add_rule",
            &[
                ("objective", ctx.task.objective.clone()),
                ("rules", rules_text),
            ],
            ctx.recorder.gateway().creative_sampling(),
        )?;
        let statement = ctx.recorder.complete(&request)?.trim().to_string();
        if statement.is_empty() || statement.eq_ignore_ascii_case("none") {
            warnings.push(format!(
                "no rule proposed to extend `{base_id}`; skipping its add mutation"
            ));
            continue;
        }
        added_counter += 1;
        let extended = base_set.apply(
            MutationOp::Add,
            None,
            Some(Rule::new(
                format!("a{added_counter}"),
                statement,
                RuleOrigin::Added,
            )),
        )?;
        let witness_rules = extended
            .rules
            .iter()
            .map(|r| r.statement.as_str())
            .collect::<Vec<_>>()
            .join("\n");
        let witness_request = PromptRequest::from_template(
            "witness_check",
            &[("rules", witness_rules)],
            Sampling::deterministic(),
        )?;
        let witness = ctx.recorder.complete(&witness_request)?.trim().to_string();
        if witness.is_empty() || witness.eq_ignore_ascii_case("none") {
            warnings.push(format!(
                "added rule on `{base_id}` admits no witness solution; skipping the space"
            ));
            continue;
        }
        spaces.push(make_space(
            format!("{base_id}+add"),
            extended,
            MutationOrigin {
                operation: MutationOp::Add,
                rule_id: None,
                extends: Some(base_id),
            },
        ));
    }
    Ok(spaces)
}

/// Runs the exploratory pipeline inside every mutated rule space. Each
/// space yields a self-contained sub-run record (pushed to `sub_runs` even
/// on failure); the scored survivors of completed sub-runs are tagged with
/// their space and returned. Errors only when every space fails.
pub(crate) fn explore_rule_spaces(
    ctx: &PipelineContext,
    spaces: &[MutatedRuleSpace],
    sub_runs: &mut Vec<RunRecord>,
    warnings: &mut Vec<String>,
) -> Result<Vec<ScoredSolution>, PipelineError> {
    let gateway = ctx.recorder.gateway();
    let mut tagged = Vec::new();
    let mut failures = 0usize;
    let mut last_failure = String::new();
    for space in spaces {
        let record = super::run_pipeline(gateway, Method::Euot, &space.derived_task, ctx.params);
        match &record.body.status {
            crate::record::RunStatus::Completed => {
                for scored in &record.body.scored {
                    let mut entry = scored.clone();
                    entry.rule_space = Some(space.id.clone());
                    entry.solution.id = format!("{}::{}", space.id, entry.solution.id);
                    tagged.push(entry);
                }
            }
            crate::record::RunStatus::Failed { step, error } => {
                failures += 1;
                last_failure = format!("space `{}` failed at {step}: {error}", space.id);
                warnings.push(last_failure.clone());
            }
        }
        sub_runs.push(record);
    }
    if !spaces.is_empty() && failures == spaces.len() {
        return Err(PipelineError::AllSpacesFailed(last_failure));
    }
    Ok(tagged)
}

/// Re-checks every tagged candidate against the original exposed rules and
/// applies the creative filter, returning survivors best-first.
pub(crate) fn filter_final(
    ctx: &PipelineContext,
    tagged: Vec<ScoredSolution>,
    exposed: &RuleSet,
    warnings: &mut Vec<String>,
) -> Result<Vec<ScoredSolution>, PipelineError> {
    let mut kept: Vec<(usize, ScoredSolution)> = Vec::new();
    for (index, mut entry) in tagged.into_iter().enumerate() {
        let mut passed = 0usize;
        for rule in &exposed.rules {
            let request = PromptRequest::from_template(
                "verify_rule",
                &[
                    ("rule", rule.statement.clone()),
                    ("solution", entry.solution.text.clone()),
                ],
                Sampling::deterministic(),
            )?;
            let (response, digest) = ctx.recorder.complete_with_digest(&request)?;
            entry.judge_calls.push(digest);
            match parse::yes_no(&response) {
                Some(true) => passed += 1,
                Some(false) => {}
                None => warnings.push(format!(
                    "verdict for `{}` against rule `{}` was unparseable; counting it as a violation",
                    entry.solution.id, rule.id
                )),
            }
        }
        let feasibility = passed as f64 / exposed.rules.len().max(1) as f64;
        entry.original_feasibility = Some(feasibility);
        if apply_creative_filter(
            feasibility,
            entry.score.novelty,
            ctx.params.tau_feas,
            ctx.params.tau_creative,
        ) {
            kept.push((index, entry));
        }
    }
    kept.sort_by(|(ia, a), (ib, b)| {
        b.score
            .composite
            .total_cmp(&a.score.composite)
            .then(b.score.novelty.total_cmp(&a.score.novelty))
            .then(ia.cmp(ib))
    });
    Ok(kept.into_iter().map(|(_, entry)| entry).collect())
}
