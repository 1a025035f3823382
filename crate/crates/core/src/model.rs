//! Shared domain types: task specifications, rules and rule sets with
//! mutation lineage, solutions, thoughts, and pipeline parameters.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("failed to read task spec {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to parse task spec {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid task spec `{id}`: {reason}")]
    InvalidTask { id: String, reason: String },
    #[error("invalid params: {0}")]
    InvalidParams(String),
    #[error("duplicate rule id `{0}` in rule set")]
    DuplicateRule(String),
    #[error("rule `{0}` not found in rule set")]
    UnknownRule(String),
    #[error("invalid mutation: {0}")]
    InvalidMutation(String),
}

/// A benchmark task: the problem statement, its stated rules, the anchor
/// solutions used for utility scoring, and the feasibility checklist.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub id: String,
    pub objective: String,
    pub context: String,
    #[serde(default)]
    pub explicit_rules: Vec<Rule>,
    pub baseline_solution: String,
    pub optimal_solution: String,
    pub feasibility_checklist: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
    /// Conventional solutions shipped with the task. When empty, pipelines
    /// bootstrap a library by prompting the backend.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub known_solutions: Vec<String>,
}

impl TaskSpec {
    /// The problem statement as embedded and quoted in prompts.
    pub fn description(&self) -> String {
        format!("{}\n{}", self.objective, self.context)
    }

    /// Newline-joined rule statements, the form quoted in prompts.
    pub fn rules_text(&self) -> String {
        self.explicit_rules
            .iter()
            .map(|r| r.statement.as_str())
            .collect::<Vec<_>>()
            .join("\n")
    }

    /// A copy of this task constrained by a different rule set, used when a
    /// pipeline explores a mutated rule space.
    pub fn with_rules(&self, suffix: &str, rules: Vec<Rule>) -> TaskSpec {
        let mut derived = self.clone();
        derived.id = format!("{}::{}", self.id, suffix);
        derived.explicit_rules = rules;
        derived
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let fail = |reason: &str| {
            Err(ModelError::InvalidTask {
                id: self.id.clone(),
                reason: reason.to_string(),
            })
        };
        if self.id.trim().is_empty() {
            return fail("id must be non-empty");
        }
        if self.objective.trim().is_empty() {
            return fail("objective must be non-empty");
        }
        if self.baseline_solution.trim().is_empty() || self.optimal_solution.trim().is_empty() {
            return fail("baseline_solution and optimal_solution must be non-empty");
        }
        if self.baseline_solution == self.optimal_solution {
            return fail("baseline_solution and optimal_solution must be distinct");
        }
        if self.feasibility_checklist.is_empty() {
            return fail("feasibility_checklist must be non-empty");
        }
        if self.feasibility_checklist.iter().any(|p| p.trim().is_empty()) {
            return fail("feasibility_checklist entries must be non-empty");
        }
        let mut ids = BTreeSet::new();
        for rule in &self.explicit_rules {
            if !ids.insert(rule.id.as_str()) {
                return fail(&format!("duplicate rule id `{}`", rule.id));
            }
        }
        Ok(())
    }
}

/// Loads and validates a task spec from a JSON file.
pub fn load_task_spec(path: &Path) -> Result<TaskSpec, ModelError> {
    let display = path.display().to_string();
    let raw = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
        path: display.clone(),
        source,
    })?;
    let task: TaskSpec = serde_json::from_str(&raw).map_err(|source| ModelError::Parse {
        path: display,
        source,
    })?;
    task.validate()?;
    Ok(task)
}

/// Where a rule came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleOrigin {
    /// Stated in the task.
    Explicit,
    /// Unstated assumption surfaced from the known solutions.
    Hidden,
    /// Imported from another domain as a structural analogue.
    Analogous,
    /// Introduced by an add mutation.
    Added,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub id: String,
    pub statement: String,
    pub origin: RuleOrigin,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_domain: Option<String>,
}

impl Rule {
    pub fn new(id: impl Into<String>, statement: impl Into<String>, origin: RuleOrigin) -> Rule {
        Rule {
            id: id.into(),
            statement: statement.into(),
            origin,
            source_domain: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MutationOp {
    Drop,
    Vary,
    Add,
}

/// One step of rule-set lineage: which operation ran, which rule it removed
/// (`target`), and which rule it introduced (`replacement`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MutationRecord {
    pub operation: MutationOp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replacement: Option<String>,
}

/// A set of rules plus the mutation lineage that produced it from some
/// original set. An empty lineage means the set is original.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleSet {
    pub rules: Vec<Rule>,
    #[serde(default)]
    pub lineage: Vec<MutationRecord>,
}

impl RuleSet {
    pub fn new(rules: Vec<Rule>) -> Result<RuleSet, ModelError> {
        let mut seen = BTreeSet::new();
        for rule in &rules {
            if !seen.insert(rule.id.clone()) {
                return Err(ModelError::DuplicateRule(rule.id.clone()));
            }
        }
        Ok(RuleSet {
            rules,
            lineage: Vec::new(),
        })
    }

    pub fn rule(&self, id: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.id == id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.rule(id).is_some()
    }

    /// Applies one mutation, returning the mutated set with its lineage
    /// extended. `Vary` and `Add` take the introduced rule as `introduced`.
    pub fn apply(&self, op: MutationOp, target: Option<&str>, introduced: Option<Rule>) -> Result<RuleSet, ModelError> {
        let mut next = self.clone();
        let record = match op {
            MutationOp::Drop => {
                let id = target
                    .ok_or_else(|| ModelError::InvalidMutation("drop requires a target rule".into()))?;
                if !next.contains(id) {
                    return Err(ModelError::UnknownRule(id.to_string()));
                }
                next.rules.retain(|r| r.id != id);
                MutationRecord {
                    operation: MutationOp::Drop,
                    target: Some(id.to_string()),
                    replacement: None,
                }
            }
            MutationOp::Vary => {
                let id = target
                    .ok_or_else(|| ModelError::InvalidMutation("vary requires a target rule".into()))?;
                let replacement = introduced
                    .ok_or_else(|| ModelError::InvalidMutation("vary requires a replacement rule".into()))?;
                let slot = next
                    .rules
                    .iter_mut()
                    .find(|r| r.id == id)
                    .ok_or_else(|| ModelError::UnknownRule(id.to_string()))?;
                let replacement_id = replacement.id.clone();
                if replacement_id != id && self.contains(&replacement_id) {
                    return Err(ModelError::DuplicateRule(replacement_id));
                }
                *slot = replacement;
                MutationRecord {
                    operation: MutationOp::Vary,
                    target: Some(id.to_string()),
                    replacement: Some(replacement_id),
                }
            }
            MutationOp::Add => {
                let added = introduced
                    .ok_or_else(|| ModelError::InvalidMutation("add requires a new rule".into()))?;
                if next.contains(&added.id) {
                    return Err(ModelError::DuplicateRule(added.id));
                }
                let record = MutationRecord {
                    operation: MutationOp::Add,
                    target: None,
                    replacement: Some(added.id.clone()),
                };
                next.rules.push(added);
                record
            }
        };
        next.lineage.push(record);
        Ok(next)
    }

    /// Re-derives a mutated set by replaying `mutated.lineage` against
    /// `original`, resolving introduced rules from `mutated`. Returns the
    /// replayed set, which must equal `mutated` if the lineage is faithful.
    pub fn replay_lineage(original: &RuleSet, mutated: &RuleSet) -> Result<RuleSet, ModelError> {
        let mut current = original.clone();
        for record in &mutated.lineage {
            let introduced = match record.replacement.as_deref() {
                Some(id) => Some(
                    mutated
                        .rule(id)
                        .cloned()
                        .ok_or_else(|| ModelError::UnknownRule(id.to_string()))?,
                ),
                None => None,
            };
            current = current.apply(record.operation, record.target.as_deref(), introduced)?;
        }
        Ok(current)
    }
}

/// How a solution entered the system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolutionProvenance {
    /// Part of the task's conventional-solution library.
    Known,
    /// Collected from an analogous problem.
    Harvested,
    /// Produced by a pipeline or baseline method.
    Synthesized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub id: String,
    pub text: String,
    /// Task or analogous-problem this solution answers.
    pub problem_id: String,
    pub provenance: SolutionProvenance,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub thoughts: Vec<Thought>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role_embedding: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surface_embedding: Option<Vec<f64>>,
}

impl Solution {
    pub fn new(
        id: impl Into<String>,
        text: impl Into<String>,
        problem_id: impl Into<String>,
        provenance: SolutionProvenance,
    ) -> Solution {
        Solution {
            id: id.into(),
            text: text.into(),
            problem_id: problem_id.into(),
            provenance,
            thoughts: Vec::new(),
            role_embedding: None,
            surface_embedding: None,
        }
    }
}

/// An atomic conceptual component of a solution, carrying both views used
/// for matching: the literal text (surface) and a functional abstract (role).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thought {
    pub id: String,
    pub text: String,
    pub functional_abstract: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin_solution: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role_embedding: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surface_embedding: Option<Vec<f64>>,
}

/// Composite-score weights. Validated so the composite stays in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

/// Tunable knobs shared by the pipelines and the benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineParams {
    /// Minimum role similarity for an analogous problem to be retained.
    pub tau_role: f64,
    /// Minimum surface distance for an analogous problem to be retained.
    pub tau_surf: f64,
    /// Surface-similarity penalty in the donor objective.
    pub lambda: f64,
    /// Hosts selected for substitution.
    pub host_count: usize,
    /// Substitution sites rated per host.
    pub sites_per_host: usize,
    /// Donor thoughts tried per site.
    pub donor_k: usize,
    /// Seeds expanded in the exploratory step.
    pub seed_count: usize,
    /// Candidates generated per seed in the exploratory step.
    pub expansion_candidates: usize,
    /// Feasibility weight in the composite score.
    pub alpha: f64,
    /// Utility weight in the composite score.
    pub beta: f64,
    /// Novelty weight in the composite score.
    pub gamma: f64,
    /// Composite threshold a candidate must reach to be retained.
    pub tau_eval: f64,
    /// Feasibility threshold used by the benchmark and the final filter.
    pub tau_feas: f64,
    /// Impact threshold selecting which rules get mutated.
    pub tau_impact: f64,
    /// Novelty threshold that rescues infeasible candidates in the final filter.
    pub tau_creative: f64,
    /// Analogous problems retrieved.
    pub analog_problem_count: usize,
    /// Solutions harvested per analogous problem.
    pub solutions_per_analog: usize,
    /// Library size when known solutions must be bootstrapped.
    pub known_solution_count: usize,
    /// Largest item count for which diversity selection enumerates subsets
    /// exactly before falling back to the greedy heuristic.
    pub dispersion_exhaustive_limit: usize,
}

impl Default for PipelineParams {
    fn default() -> PipelineParams {
        PipelineParams {
            tau_role: 0.6,
            tau_surf: 0.4,
            lambda: 0.5,
            host_count: 3,
            sites_per_host: 2,
            donor_k: 3,
            seed_count: 5,
            expansion_candidates: 5,
            alpha: 1.0 / 3.0,
            beta: 1.0 / 3.0,
            gamma: 1.0 / 3.0,
            tau_eval: 0.5,
            tau_feas: 0.5,
            tau_impact: 0.6,
            tau_creative: 0.7,
            analog_problem_count: 4,
            solutions_per_analog: 3,
            known_solution_count: 5,
            dispersion_exhaustive_limit: 12,
        }
    }
}

impl PipelineParams {
    pub fn weights(&self) -> Weights {
        Weights {
            alpha: self.alpha,
            beta: self.beta,
            gamma: self.gamma,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let fail = |reason: String| Err(ModelError::InvalidParams(reason));
        for (name, value) in [
            ("tau_role", self.tau_role),
            ("tau_surf", self.tau_surf),
            ("tau_eval", self.tau_eval),
            ("tau_feas", self.tau_feas),
            ("tau_impact", self.tau_impact),
            ("tau_creative", self.tau_creative),
        ] {
            if !(0.0..=1.0).contains(&value) || !value.is_finite() {
                return fail(format!("{name} must lie in [0, 1], got {value}"));
            }
        }
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return fail(format!("lambda must be nonnegative, got {}", self.lambda));
        }
        for (name, value) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
        ] {
            if !value.is_finite() || value < 0.0 {
                return fail(format!("{name} must be nonnegative, got {value}"));
            }
        }
        let sum = self.alpha + self.beta + self.gamma;
        if (sum - 1.0).abs() > 1e-9 {
            return fail(format!("weights must sum to 1, got alpha+beta+gamma = {sum}"));
        }
        for (name, value) in [
            ("host_count", self.host_count),
            ("sites_per_host", self.sites_per_host),
            ("donor_k", self.donor_k),
            ("seed_count", self.seed_count),
            ("expansion_candidates", self.expansion_candidates),
            ("analog_problem_count", self.analog_problem_count),
            ("solutions_per_analog", self.solutions_per_analog),
            ("known_solution_count", self.known_solution_count),
        ] {
            if value == 0 {
                return fail(format!("{name} must be at least 1"));
            }
        }
        Ok(())
    }

    /// Validates and returns the parameters, the form used at entry points.
    pub fn validated(self) -> Result<PipelineParams, ModelError> {
        self.validate()?;
        Ok(self)
    }

    /// Sets a parameter by name, accepting the short aliases used on the
    /// command line (`m`, `k`, `l`, `a`).
    pub fn set_by_name(&mut self, name: &str, raw: &str) -> Result<(), ModelError> {
        let bad_value = |field: &str| {
            ModelError::InvalidParams(format!("cannot parse `{raw}` as a value for {field}"))
        };
        macro_rules! float {
            ($field:ident) => {{
                self.$field = raw.parse::<f64>().map_err(|_| bad_value(stringify!($field)))?;
            }};
        }
        macro_rules! count {
            ($field:ident) => {{
                self.$field = raw.parse::<usize>().map_err(|_| bad_value(stringify!($field)))?;
            }};
        }
        match name {
            "tau_role" => float!(tau_role),
            "tau_surf" => float!(tau_surf),
            "lambda" => float!(lambda),
            "host_count" | "m" => count!(host_count),
            "sites_per_host" => count!(sites_per_host),
            "donor_k" | "k" => count!(donor_k),
            "seed_count" | "l" => count!(seed_count),
            "expansion_candidates" => count!(expansion_candidates),
            "alpha" => float!(alpha),
            "beta" => float!(beta),
            "gamma" => float!(gamma),
            "tau_eval" => float!(tau_eval),
            "tau_feas" => float!(tau_feas),
            "tau_impact" => float!(tau_impact),
            "tau_creative" => float!(tau_creative),
            "analog_problem_count" | "a" => count!(analog_problem_count),
            "solutions_per_analog" => count!(solutions_per_analog),
            "known_solution_count" => count!(known_solution_count),
            "dispersion_exhaustive_limit" => count!(dispersion_exhaustive_limit),
            other => {
                return Err(ModelError::InvalidParams(format!(
                    "unknown parameter `{other}`"
                )))
            }
        }
        Ok(())
    }
}
