//! A miniature scripted world shared by the pipeline tests: a single-lane
//! crossing task with two known solutions, two analogous problems, and
//! canned judgements for every prompt a pipeline can issue. Tests override
//! behaviour by prepending stubs (first match wins) or re-registering
//! embeddings.

use crate::gateway::{Cache, Gateway, PromptFunction, ScriptedBackend, ScriptedFixture};
use crate::model::{Rule, RuleOrigin, TaskSpec};

pub(crate) fn task() -> TaskSpec {
    TaskSpec {
        id: "lane".into(),
        objective: "Cut queueing time.".into(),
        context: "One shared lane.".into(),
        explicit_rules: vec![Rule::new("r1", "No new lanes.", RuleOrigin::Explicit)],
        baseline_solution: "timer".into(),
        optimal_solution: "adaptive plan".into(),
        feasibility_checklist: vec!["keeps a single lane".into()],
        notes: None,
        known_solutions: vec!["alternate by timer".into(), "flagger control".into()],
    }
}

pub(crate) fn gateway(fixture: ScriptedFixture) -> Gateway {
    Gateway::new(Box::new(ScriptedBackend::new(fixture)), Cache::memory())
}

pub(crate) fn fixture() -> ScriptedFixture {
    fixture_with(|f| f)
}

/// The standard fixture with `leading` stubs inserted ahead of it, so a
/// test can shadow any standard response.
pub(crate) fn fixture_with(
    leading: impl FnOnce(ScriptedFixture) -> ScriptedFixture,
) -> ScriptedFixture {
    leading(ScriptedFixture::new())
        .stub(
            PromptFunction::AnalogousProblemDiscovery,
            &[],
            "railway single track scheduling\nelevator peak dispatch",
        )
        .stub(
            PromptFunction::AnalogousSolutionGeneration,
            &[("problem", "*railway*")],
            "token block system\nmeet at loops",
        )
        .stub(
            PromptFunction::AnalogousSolutionGeneration,
            &[("problem", "*elevator*")],
            "group by destination",
        )
        .stub(
            PromptFunction::SolutionDecomposition,
            &[("solution", "*token block*")],
            "token granting exclusive access\nfixed block sections",
        )
        .stub(
            PromptFunction::SolutionDecomposition,
            &[("solution", "*loops*")],
            "passing loops\ntoken granting exclusive access",
        )
        .stub(
            PromptFunction::SolutionDecomposition,
            &[("solution", "*destination*")],
            "destination batching",
        )
        .stub(
            PromptFunction::SolutionDecomposition,
            &[("solution", "*alternate*")],
            "a fixed timer\na direction switch",
        )
        .stub(
            PromptFunction::SolutionDecomposition,
            &[("solution", "*flagger*")],
            "a human flagger",
        )
        .stub(
            PromptFunction::FunctionalAbstract,
            &[],
            "shared access coordination",
        )
        .stub(PromptFunction::JudgeImpact, &[("thought", "*timer*")], "0.9")
        .stub(PromptFunction::JudgeImpact, &[("thought", "*switch*")], "0.4")
        .stub(PromptFunction::JudgeImpact, &[("thought", "*flagger*")], "0.7")
        .stub(PromptFunction::JudgeImpact, &[("rule", "*lanes*")], "0.8")
        .stub(PromptFunction::JudgeImpact, &[("rule", "*centrally*")], "0.3")
        // Expansion calls carry a `seed` variable; plain synthesis does not.
        .stub(
            PromptFunction::CreativeSynthesis,
            &[("seed", "*")],
            "relayed convoy escort\npriority boarding pass",
        )
        .stub(
            PromptFunction::CreativeSynthesis,
            &[],
            "a synthesized crossing plan",
        )
        .stub(PromptFunction::JudgeUtility, &[], "0.8")
        .stub(PromptFunction::JudgeFeasibility, &[], "PASS")
        .stub(
            PromptFunction::RuleAssumptionIdentification,
            &[],
            "crossing is controlled centrally\nvehicles cross one at a time",
        )
        .stub(
            PromptFunction::VerifyRule,
            &[("rule", "*one at a time*"), ("solution", "*flagger*")],
            "NO",
        )
        // Witness checks carry a `rules` variable; verifications carry `rule`.
        .stub(PromptFunction::VerifyRule, &[("rules", "*berths*")], "NONE")
        .stub(
            PromptFunction::VerifyRule,
            &[("rules", "*")],
            "A timed pedestrian window inside each cycle.",
        )
        .stub(PromptFunction::VerifyRule, &[("rule", "*")], "YES")
        .stub(
            PromptFunction::AnalogousRuleDiscovery,
            &[("rule", "*lanes*")],
            "No extra berths may be added (from: harbor operations)\nNo added court time (from: tournament scheduling)",
        )
        .stub(
            PromptFunction::AnalogousRuleDiscovery,
            &[("rule", "*centrally*")],
            "A single dispatcher assigns all work (from: taxi fleets)",
        )
        .stub(
            PromptFunction::RuleSetMutation,
            &[],
            "Pedestrians get a guaranteed window.",
        )
        .embedding("Cut queueing time.\nOne shared lane.", &[1.0, 0.0, 0.0])
        .embedding("shared access coordination", &[1.0, 1.0, 1.0])
        .embedding("railway single track scheduling", &[0.0, 1.0, 0.0])
        .embedding("elevator peak dispatch", &[0.0, 0.0, 1.0])
        .embedding("token granting exclusive access", &[1.0, 0.0, 0.0])
        .embedding("fixed block sections", &[0.0, 1.0, 0.0])
        .embedding("passing loops", &[0.0, 0.0, 1.0])
        .embedding("destination batching", &[1.0, 1.0, 0.0])
        .embedding("alternate by timer", &[1.0, 0.0, 0.0])
        .embedding("flagger control", &[0.0, 1.0, 0.0])
        .embedding("a fixed timer", &[0.9, 0.1, 0.0])
        .embedding("a direction switch", &[0.0, 0.9, 0.1])
        .embedding("a human flagger", &[0.1, 0.0, 0.9])
        .embedding("a synthesized crossing plan", &[0.5, 0.5, 0.0])
        .embedding("relayed convoy escort", &[0.0, 1.0, 1.0])
        .embedding("priority boarding pass", &[1.0, 0.0, 1.0])
        .embedding("No new lanes.", &[0.7, 0.3, 0.0])
        .embedding("crossing is controlled centrally", &[0.0, 0.3, 0.7])
        .embedding("No extra berths may be added", &[0.2, 0.8, 0.0])
        .embedding("No added court time", &[0.8, 0.2, 0.0])
        .embedding("A single dispatcher assigns all work", &[0.3, 0.3, 0.8])
}
