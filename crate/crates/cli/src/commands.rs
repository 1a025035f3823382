//! The harness commands. Each returns `Ok(())` only when its post-condition
//! held for every unit of work, so the process exit status is trustworthy.

use std::path::Path;

use anyhow::{anyhow, bail, ensure, Context, Result};
use uot_core::complexity::{gain_table, ComplexityParams, Variant};
use uot_core::eval::{
    aggregate_creativity, compare_methods, metric_report, run_baseline_record, ComparisonRow,
    ComparisonTable, MetricReport,
};
use uot_core::gateway::{replay_log, Cache, EmbeddingRequest, Gateway, Recorder};
use uot_core::model::{load_task_spec, PipelineParams, Solution, SolutionProvenance, TaskSpec};
use uot_core::pipeline::{conventional_library, run_cuot, run_euot, run_tuot};
use uot_core::record::{Method, RunRecord, RunStatus};

use crate::config::AppConfig;
use crate::store::RunStore;

fn execute(
    gateway: &Gateway,
    method: Method,
    task: &TaskSpec,
    params: &PipelineParams,
    attempt: usize,
) -> RunRecord {
    match method {
        Method::Cuot => run_cuot(gateway, task, params),
        Method::Euot => run_euot(gateway, task, params),
        Method::Tuot => run_tuot(gateway, task, params),
        Method::ZeroShot | Method::Cot => {
            run_baseline_record(gateway, method, task, params, 1, attempt)
        }
    }
}

/// Surface embeddings of the conventional-solution library: taken from the
/// record when the run assembled one, rebuilt the same way otherwise.
fn known_surfaces(
    recorder: &Recorder,
    record: &RunRecord,
    task: &TaskSpec,
    params: &PipelineParams,
) -> Result<Vec<Vec<f64>>> {
    let from_record: Vec<Vec<f64>> = record
        .body
        .known_solutions
        .iter()
        .filter_map(|s| s.surface_embedding.clone())
        .collect();
    if !from_record.is_empty() {
        return Ok(from_record);
    }
    let library = conventional_library(recorder, task, params)?;
    let surfaces: Vec<Vec<f64>> = library
        .into_iter()
        .filter_map(|s| s.surface_embedding)
        .collect();
    ensure!(
        !surfaces.is_empty(),
        "conventional-solution library has no surface embeddings"
    );
    Ok(surfaces)
}

/// Scores a completed run's headline output and appends the reports to the
/// record. Pipelines report their top-ranked candidate; baselines report
/// every generated solution.
fn attach_reports(
    gateway: &Gateway,
    record: &mut RunRecord,
    task: &TaskSpec,
    params: &PipelineParams,
) -> Result<()> {
    let recorder = Recorder::new(gateway);
    let known = known_surfaces(&recorder, record, task, params)?;
    let optimal = recorder
        .embed(&EmbeddingRequest::surface(task.optimal_solution.clone()))?
        .vector;
    let subjects: Vec<Solution> = if record.body.method.is_pipeline() {
        record
            .body
            .scored
            .first()
            .map(|s| s.solution.clone())
            .into_iter()
            .collect()
    } else {
        record.body.candidates.clone()
    };
    ensure!(!subjects.is_empty(), "run produced no solutions to score");
    for solution in &subjects {
        let report = metric_report(&recorder, solution, task, &known, &optimal, params)
            .with_context(|| format!("scoring `{}` failed", solution.id))?;
        record.body.reports.push(report);
    }
    Ok(())
}

pub fn cmd_run(
    config: &AppConfig,
    method_name: &str,
    task_path: &Path,
    runs_override: Option<usize>,
) -> Result<()> {
    let method: Method = method_name.parse().map_err(|e: String| anyhow!(e))?;
    let task = load_task_spec(task_path)?;
    let n_runs = runs_override.unwrap_or(config.runs);
    ensure!(n_runs > 0, "runs must be at least 1");
    let store = RunStore::open(&config.store_dir)?;
    let mut reports: Vec<MetricReport> = Vec::new();
    let mut failures = 0usize;
    for i in 0..n_runs {
        let gateway = config.build_gateway()?;
        let mut record = execute(&gateway, method, &task, &config.params, i);
        let mut note = String::new();
        if record.body.status.is_completed() {
            match attach_reports(&gateway, &mut record, &task, &config.params) {
                Ok(()) => reports.extend(record.body.reports.iter().cloned()),
                Err(err) => {
                    failures += 1;
                    note = format!("; scoring failed: {err:#}");
                }
            }
        } else if let RunStatus::Failed { step, error } = &record.body.status {
            failures += 1;
            note = format!("; failed at {step}: {error}");
        }
        let digest = record.content_digest();
        store.save(&record)?;
        println!(
            "run {:>2}/{n_runs}: {method} {} candidates={} reports={} digest={}{note}",
            i + 1,
            if record.body.status.is_completed() {
                "completed"
            } else {
                "failed"
            },
            record.body.candidates.len(),
            record.body.reports.len(),
            &digest[..12],
        );
    }
    if reports.is_empty() {
        bail!("no run produced metric reports");
    }
    let summary = aggregate_creativity(&reports, &config.params)?;
    let table = ComparisonTable {
        rows: vec![ComparisonRow {
            method: method.name().to_string(),
            summary,
        }],
    };
    print!("{table}");
    if failures > 0 {
        bail!("{failures} of {n_runs} run(s) failed");
    }
    Ok(())
}

/// Parses an external solutions file: a JSON array whose entries are either
/// bare strings or objects with `text` and an optional `id`.
fn load_solutions_file(path: &Path, task: &TaskSpec) -> Result<Vec<Solution>> {
    let raw = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read solutions {}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&raw)
        .with_context(|| format!("{} is not valid JSON", path.display()))?;
    let entries = value
        .as_array()
        .ok_or_else(|| anyhow!("{}: expected a top-level array of solutions", path.display()))?;
    ensure!(!entries.is_empty(), "{}: no solutions in file", path.display());
    let mut solutions = Vec::with_capacity(entries.len());
    for (i, entry) in entries.iter().enumerate() {
        let (id, text) = match entry {
            serde_json::Value::String(text) => (format!("ext-{}", i + 1), text.clone()),
            serde_json::Value::Object(map) => {
                let text = map
                    .get("text")
                    .and_then(|v| v.as_str())
                    .ok_or_else(|| anyhow!("solutions[{i}]: missing string field `text`"))?;
                let id = map
                    .get("id")
                    .and_then(|v| v.as_str())
                    .map(str::to_string)
                    .unwrap_or_else(|| format!("ext-{}", i + 1));
                (id, text.to_string())
            }
            _ => bail!("solutions[{i}]: expected a string or an object with `text`"),
        };
        ensure!(!text.trim().is_empty(), "solutions[{i}]: `text` is empty");
        solutions.push(Solution::new(
            id,
            text,
            task.id.clone(),
            SolutionProvenance::Synthesized,
        ));
    }
    Ok(solutions)
}

pub fn cmd_evaluate(config: &AppConfig, solutions_path: &Path, task_path: &Path) -> Result<()> {
    let task = load_task_spec(task_path)?;
    let solutions = load_solutions_file(solutions_path, &task)?;
    let gateway = config.build_gateway()?;
    let recorder = Recorder::new(&gateway);
    let library = conventional_library(&recorder, &task, &config.params)?;
    let known: Vec<Vec<f64>> = library
        .into_iter()
        .filter_map(|s| s.surface_embedding)
        .collect();
    ensure!(
        !known.is_empty(),
        "conventional-solution library has no surface embeddings"
    );
    let optimal = recorder
        .embed(&EmbeddingRequest::surface(task.optimal_solution.clone()))?
        .vector;
    let mut reports = Vec::with_capacity(solutions.len());
    for solution in &solutions {
        let report = metric_report(&recorder, solution, &task, &known, &optimal, &config.params)
            .with_context(|| format!("scoring `{}` failed", solution.id))?;
        let creativity = match report.creativity {
            Some(c) => format!("{c:.3}"),
            None => "-".to_string(),
        };
        println!(
            "{:<12} F={:.3} U={:.3} N={:.3} C={creativity}",
            report.solution_id, report.feasibility, report.utility, report.novelty
        );
        reports.push(report);
    }
    let label = solutions_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("external")
        .to_string();
    let table = compare_methods(&[(label, reports)], &config.params)?;
    print!("{table}");
    Ok(())
}

const SWEEPABLE: [(&str, &str); 6] = [
    ("analog_problem_count", "a"),
    ("solutions_per_analog", ""),
    ("seed_count", "l"),
    ("donor_k", "k"),
    ("host_count", "m"),
    ("lambda", ""),
];

fn sweepable(name: &str) -> bool {
    SWEEPABLE
        .iter()
        .any(|(full, short)| name == *full || (!short.is_empty() && name == *short))
}

fn sweep_usage() -> String {
    let names: Vec<String> = SWEEPABLE
        .iter()
        .map(|(full, short)| {
            if short.is_empty() {
                (*full).to_string()
            } else {
                format!("{full} ({short})")
            }
        })
        .collect();
    format!("sweepable parameters: {}", names.join(", "))
}

pub fn cmd_sweep(
    config: &AppConfig,
    method_name: &str,
    task_path: &Path,
    param: &str,
    values: &[String],
    reps: usize,
) -> Result<()> {
    let method: Method = method_name.parse().map_err(|e: String| anyhow!(e))?;
    ensure!(sweepable(param), "cannot sweep `{param}`; {}", sweep_usage());
    ensure!(!values.is_empty(), "--values must list at least one value");
    ensure!(reps > 0, "--reps must be at least 1");
    let task = load_task_spec(task_path)?;
    let store = RunStore::open(&config.store_dir)?;
    println!(
        "{:<24} {:>8} {:>8} {:>8} {:>8} {:>5}",
        param, "C", "N", "U", "F", "n"
    );
    let mut failed_cells = 0usize;
    for value in values {
        let mut params = config.params.clone();
        params
            .set_by_name(param, value)
            .map_err(|e| anyhow!("{e}; {}", sweep_usage()))?;
        let mut cell_reports: Vec<MetricReport> = Vec::new();
        let mut cell_errors = 0usize;
        for rep in 0..reps {
            let gateway = config.build_gateway()?;
            let mut record = execute(&gateway, method, &task, &params, rep);
            if record.body.status.is_completed() {
                match attach_reports(&gateway, &mut record, &task, &params) {
                    Ok(()) => cell_reports.extend(record.body.reports.iter().cloned()),
                    Err(_) => cell_errors += 1,
                }
            } else {
                cell_errors += 1;
            }
            store.save(&record)?;
        }
        if cell_errors > 0 || cell_reports.is_empty() {
            failed_cells += 1;
            println!(
                "{value:<24} {:>8} {:>8} {:>8} {:>8} {:>5}",
                "-",
                "-",
                "-",
                "-",
                cell_reports.len()
            );
        } else {
            let s = aggregate_creativity(&cell_reports, &params)?;
            println!(
                "{value:<24} {:8.3} {:8.3} {:8.3} {:8.3} {:5}",
                s.mean_creativity_all, s.mean_novelty, s.mean_utility, s.mean_feasibility, s.count
            );
        }
    }
    if failed_cells > 0 {
        bail!("{failed_cells} sweep cell(s) failed");
    }
    Ok(())
}

pub fn cmd_replay(config: &AppConfig, run_id: &str) -> Result<()> {
    let store = RunStore::open(&config.store_dir)?;
    let record = store.load(run_id)?;
    let report = replay_log(&record)?;
    match report.first_failure() {
        None => {
            println!(
                "replay {run_id}: ok ({} calls verified)",
                report.checks.len()
            );
            Ok(())
        }
        Some(check) => {
            let location = if check.location.is_empty() {
                "root"
            } else {
                &check.location
            };
            println!(
                "replay {run_id}: FAILED at {location} call #{} ({}): {}",
                check.index,
                check.function,
                check.detail.as_deref().unwrap_or("digest mismatch"),
            );
            bail!("run {run_id} failed verification")
        }
    }
}

#[derive(Debug, clap::Args)]
pub struct ComplexityArgs {
    /// Domain counts d; comma-separated grid values.
    #[arg(long, value_delimiter = ',', default_value = "10")]
    pub domains: Vec<u64>,
    /// Solutions per domain s.
    #[arg(long, value_delimiter = ',', default_value = "5")]
    pub solutions_per_domain: Vec<u64>,
    /// Thoughts per solution c, also the composed-chain length.
    #[arg(long, value_delimiter = ',', default_value = "4")]
    pub thoughts_per_solution: Vec<u64>,
    /// Analogous domains a guided run consults.
    #[arg(long, value_delimiter = ',', default_value = "4")]
    pub analog_domains: Vec<u64>,
    /// Thoughts reachable only through exploratory expansion.
    #[arg(long, value_delimiter = ',', default_value = "10")]
    pub outside_thoughts: Vec<u64>,
    /// Rules whose mutations multiply the transformative space.
    #[arg(long, value_delimiter = ',', default_value = "4")]
    pub rule_count: Vec<u64>,
    /// Fraction of retrieved analogues that are relevant.
    #[arg(long, value_delimiter = ',', default_value = "1.0")]
    pub eta_analog: Vec<f64>,
    /// Fraction of syntheses that produce usable candidates.
    #[arg(long, value_delimiter = ',', default_value = "1.0")]
    pub eta_synth: Vec<f64>,
    /// Fraction of rule mutations that yield workable spaces.
    #[arg(long, value_delimiter = ',', default_value = "1.0")]
    pub eta_rules: Vec<f64>,
    /// Variants to tabulate; all three when omitted.
    #[arg(long, value_delimiter = ',', value_enum)]
    pub variant: Option<Vec<VariantArg>>,
    /// Largest pool for which the exact cross-check is computed.
    #[arg(long, default_value_t = 20)]
    pub exact_limit: u64,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum VariantArg {
    Combinational,
    Exploratory,
    Transformative,
}

impl VariantArg {
    fn to_variant(self) -> Variant {
        match self {
            VariantArg::Combinational => Variant::Combinational,
            VariantArg::Exploratory => Variant::Exploratory,
            VariantArg::Transformative => Variant::Transformative,
        }
    }
}

pub fn cmd_complexity(args: &ComplexityArgs) -> Result<()> {
    let mut grid = Vec::new();
    for &domains in &args.domains {
        for &solutions_per_domain in &args.solutions_per_domain {
            for &thoughts_per_solution in &args.thoughts_per_solution {
                for &analog_domains in &args.analog_domains {
                    for &outside_thoughts in &args.outside_thoughts {
                        for &rule_count in &args.rule_count {
                            for &eta_analog in &args.eta_analog {
                                for &eta_synth in &args.eta_synth {
                                    for &eta_rules in &args.eta_rules {
                                        grid.push(ComplexityParams {
                                            domains,
                                            solutions_per_domain,
                                            thoughts_per_solution,
                                            analog_domains,
                                            outside_thoughts,
                                            rule_count,
                                            eta_analog,
                                            eta_synth,
                                            eta_rules,
                                        });
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    let variants: Vec<Variant> = match &args.variant {
        Some(list) => list.iter().map(|v| v.to_variant()).collect(),
        None => vec![
            Variant::Combinational,
            Variant::Exploratory,
            Variant::Transformative,
        ],
    };
    println!(
        "{:<16} {:>4} {:>4} {:>4} {:>4} {:>4} {:>4} {:>5} {:>5} {:>5} {:>12} {:>10} {:>10} {:>12} {:>12}",
        "variant", "d", "s", "c", "a", "o", "r", "ea", "es", "er", "ln(base)", "ln(uot)", "ln(gain)",
        "gain", "exact"
    );
    for variant in variants {
        for row in gain_table(variant, &grid, args.exact_limit)? {
            let p = row.params;
            let exact = match row.exact_gain {
                Some(v) => format!("{v:12.4e}"),
                None => format!("{:>12}", "-"),
            };
            println!(
                "{:<16} {:>4} {:>4} {:>4} {:>4} {:>4} {:>4} {:>5.2} {:>5.2} {:>5.2} {:>12.3} {:>10.3} {:>10.3} {:>12.4e} {exact}",
                row.variant.name(),
                p.domains,
                p.solutions_per_domain,
                p.thoughts_per_solution,
                p.analog_domains,
                p.outside_thoughts,
                p.rule_count,
                p.eta_analog,
                p.eta_synth,
                p.eta_rules,
                row.log_baseline,
                row.log_uot,
                row.log_gain,
                row.gain,
            );
        }
    }
    Ok(())
}

pub fn cmd_cache_clear(config: &AppConfig) -> Result<()> {
    match &config.cache_dir {
        Some(dir) => {
            let removed = Cache::persistent(dir)?.clear()?;
            println!("cache clear: removed {removed} entries from {}", dir.display());
        }
        None => println!("cache clear: no persistent cache configured; nothing to remove"),
    }
    Ok(())
}
