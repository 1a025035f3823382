//! The prompt template registry. Every LLM call in the engine goes through
//! one of these templates; template ids are stable so scripted fixtures,
//! caches, and replay logs stay valid across code changes that don't touch
//! the wording.

use std::collections::{BTreeMap, BTreeSet};

use super::PromptFunction;

#[derive(Debug, Clone, Copy)]
pub struct Template {
    pub id: &'static str,
    pub function: PromptFunction,
    pub text: &'static str,
}

pub const TEMPLATES: &[Template] = &[
    Template {
        id: "known_solution_bootstrap",
        function: PromptFunction::AnalogousSolutionGeneration,
        text: "List {count} conventional, widely used solutions to this problem, one per line.\nObjective: {objective}\nContext: {context}\nRules:\n{rules}",
    },
    Template {
        id: "zero_shot",
        function: PromptFunction::AnalogousSolutionGeneration,
        text: "{objective}\n{context}\nRules:\n{rules}\nPropose a solution. (attempt {index})",
    },
    Template {
        id: "cot",
        function: PromptFunction::AnalogousSolutionGeneration,
        text: "{objective}\n{context}\nRules:\n{rules}\nThink step by step: reason through the constraints one at a time, then state your final solution on the last line. (attempt {index})",
    },
    Template {
        id: "analogous_problems",
        function: PromptFunction::AnalogousProblemDiscovery,
        text: "You connect problems across domains by structure rather than wording.\nTarget objective: {objective}\nTarget context: {context}\nList {count} problems from other domains that share this structure but look different on the surface, one per line.",
    },
    Template {
        id: "harvest_solutions",
        function: PromptFunction::AnalogousSolutionGeneration,
        text: "List {count} established solutions to the following problem, one per line.\nProblem: {problem}",
    },
    Template {
        id: "solution_decomposition",
        function: PromptFunction::SolutionDecomposition,
        text: "Decompose the solution into its distinct conceptual components, one per line. Each component should be a short, self-contained mechanism.\nSolution: {solution}",
    },
    Template {
        id: "functional_abstract",
        function: PromptFunction::FunctionalAbstract,
        text: "In one sentence, describe the functional role the following plays, stripped of all domain-specific vocabulary.\n{text}",
    },
    Template {
        id: "site_impact",
        function: PromptFunction::JudgeImpact,
        text: "Rate from 0 to 1 how much this component contributes to the solution's effectiveness at the objective. Reply with a number only.\nObjective: {objective}\nComponent: {thought}",
    },
    Template {
        id: "creative_synthesis",
        function: PromptFunction::CreativeSynthesis,
        text: "Rewrite the host solution so the given component is replaced by the donor concept. Keep the result coherent and compliant with every rule.\nObjective: {objective}\nRules:\n{rules}\nHost solution: {host}\nComponent to replace: {site}\nDonor concept: {donor}\nReply with the full revised solution text.",
    },
    Template {
        id: "expand_thoughts",
        function: PromptFunction::CreativeSynthesis,
        text: "Propose {count} new concepts that play the same functional role as the seed but differ from it and from every existing concept on the surface, one per line.\nSeed concept: {seed}\nExisting concepts:\n{existing}",
    },
    Template {
        id: "hidden_rules",
        function: PromptFunction::RuleAssumptionIdentification,
        text: "List the unstated assumptions that constrain this problem's solutions. Derive them from what every known solution has in common, one per line.\nObjective: {objective}\nContext: {context}\nStated rules:\n{rules}\nKnown solutions:\n{solutions}",
    },
    Template {
        id: "verify_rule",
        function: PromptFunction::VerifyRule,
        text: "Does the solution satisfy the rule? Reply YES or NO.\nRule: {rule}\nSolution: {solution}",
    },
    Template {
        id: "analogous_rules",
        function: PromptFunction::AnalogousRuleDiscovery,
        text: "List {count} rules from other domains that play the same structural role as this rule in a different context, one per line, each ending with its domain in the form (from: domain).\nRule: {rule}",
    },
    Template {
        id: "rule_impact",
        function: PromptFunction::JudgeImpact,
        text: "Rate from 0 to 1 how strongly this rule constrains the space of possible solutions. Reply with a number only.\nObjective: {objective}\nRule: {rule}",
    },
    Template {
        id: "add_rule",
        function: PromptFunction::RuleSetMutation,
        text: "Propose one new rule that expands this rule set in a productive, coherent direction. Reply with the rule text only.\nObjective: {objective}\nCurrent rules:\n{rules}",
    },
    Template {
        id: "witness_check",
        function: PromptFunction::VerifyRule,
        text: "Give one concrete solution that satisfies all of the following rules at once, or reply NONE if no such solution exists.\nRules:\n{rules}",
    },
    Template {
        id: "canonicalize",
        function: PromptFunction::Canonicalize,
        text: "State the single core idea of this solution in one clause, using no more words than the original.\n{solution}",
    },
    Template {
        id: "judge_utility",
        function: PromptFunction::JudgeUtility,
        text: "Score how well the candidate achieves the objective. The baseline scores exactly 0.0 and the optimal scores exactly 1.0; interpolate between them. Reply with a number only.\nObjective: {objective}\nBaseline (0.0): {baseline}\nOptimal (1.0): {optimal}\nCandidate: {candidate}",
    },
    Template {
        id: "judge_utility_retry",
        function: PromptFunction::JudgeUtility,
        text: "Reply with one decimal number between 0 and 1 and nothing else: the candidate's score, where the baseline is worth 0.0 and the optimal is worth 1.0.\nObjective: {objective}\nBaseline (0.0): {baseline}\nOptimal (1.0): {optimal}\nCandidate: {candidate}",
    },
    Template {
        id: "judge_feasibility",
        function: PromptFunction::JudgeFeasibility,
        text: "Does the solution satisfy this requirement? Reply PASS or FAIL.\nRequirement: {predicate}\nSolution: {solution}",
    },
];

pub fn template(id: &str) -> Option<&'static Template> {
    TEMPLATES.iter().find(|t| t.id == id)
}

/// Placeholder names appearing in a template as `{name}`.
pub fn placeholders(text: &str) -> BTreeSet<&str> {
    let mut names = BTreeSet::new();
    let mut rest = text;
    while let Some(open) = rest.find('{') {
        rest = &rest[open + 1..];
        if let Some(close) = rest.find('}') {
            let name = &rest[..close];
            if !name.is_empty()
                && name
                    .chars()
                    .all(|c| c.is_ascii_lowercase() || c == '_')
            {
                names.insert(name);
            }
            rest = &rest[close + 1..];
        } else {
            break;
        }
    }
    names
}

/// Substitutes `{name}` placeholders from the variable map. Unbound
/// placeholders are left intact; request construction rejects them earlier.
pub fn render(text: &str, variables: &BTreeMap<String, String>) -> String {
    let mut out = text.to_string();
    for (name, value) in variables {
        out = out.replace(&format!("{{{name}}}"), value);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_ids_are_unique_and_resolvable() {
        let mut seen = BTreeSet::new();
        for t in TEMPLATES {
            assert!(seen.insert(t.id), "duplicate template id {}", t.id);
            assert!(template(t.id).is_some());
        }
        assert!(template("no_such_template").is_none());
    }

    #[test]
    fn placeholders_are_extracted() {
        let names = placeholders("A {b} and {c_d}, not {BAD} or {}");
        assert_eq!(
            names.into_iter().collect::<Vec<_>>(),
            vec!["b", "c_d"]
        );
    }

    #[test]
    fn render_substitutes_all_occurrences() {
        let vars: BTreeMap<String, String> = [
            ("x".to_string(), "1".to_string()),
            ("y".to_string(), "2".to_string()),
        ]
        .into();
        assert_eq!(render("{x}+{x}={y}", &vars), "1+1=2");
    }

    #[test]
    fn cot_template_instructs_stepwise_reasoning() {
        assert!(template("cot").unwrap().text.contains("step by step"));
    }

    #[test]
    fn every_template_has_placeholders() {
        for t in TEMPLATES {
            assert!(
                !placeholders(t.text).is_empty(),
                "template {} binds no variables",
                t.id
            );
        }
    }
}
