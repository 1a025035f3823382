//! Append-only run store: one JSON record file per run, named by run id,
//! with a JSON-lines transcript digest sidecar. Existing records are never
//! rewritten.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use uot_core::record::RunRecord;

pub struct RunStore {
    dir: PathBuf,
}

impl RunStore {
    pub fn open(dir: &Path) -> Result<RunStore> {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("cannot create run store {}", dir.display()))?;
        Ok(RunStore {
            dir: dir.to_path_buf(),
        })
    }

    /// Persists a record and its transcript sidecar, refusing to overwrite.
    pub fn save(&self, record: &RunRecord) -> Result<PathBuf> {
        let path = self.record_path(&record.meta.run_id);
        if path.exists() {
            bail!(
                "run {} already exists in {}; the store is append-only",
                record.meta.run_id,
                self.dir.display()
            );
        }
        let json = serde_json::to_string_pretty(record).context("run record serialises")?;
        std::fs::write(&path, json)
            .with_context(|| format!("cannot write {}", path.display()))?;
        let mut lines = String::new();
        for (location, call) in record.all_calls() {
            let line = serde_json::json!({
                "location": location,
                "index": call.index,
                "function": call.request.function_name(),
                "request_digest": call.request_digest,
                "response_digest": call.response_digest,
            });
            lines.push_str(&line.to_string());
            lines.push('\n');
        }
        let sidecar = self.dir.join(format!("{}.transcript.jsonl", record.meta.run_id));
        std::fs::write(&sidecar, lines)
            .with_context(|| format!("cannot write {}", sidecar.display()))?;
        Ok(path)
    }

    pub fn load(&self, run_id: &str) -> Result<RunRecord> {
        let path = self.record_path(run_id);
        let raw = match std::fs::read_to_string(&path) {
            Ok(raw) => raw,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                bail!("no run record `{run_id}` in {}", self.dir.display())
            }
            Err(e) => {
                return Err(e).with_context(|| format!("cannot read {}", path.display()))
            }
        };
        serde_json::from_str(&raw)
            .with_context(|| format!("{} is not a valid run record", path.display()))
    }

    fn record_path(&self, run_id: &str) -> PathBuf {
        self.dir.join(format!("{run_id}.json"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use uot_core::model::{PipelineParams, TaskSpec};
    use uot_core::record::{Method, RunBody};

    fn record() -> RunRecord {
        let task = TaskSpec {
            id: "t".into(),
            objective: "o".into(),
            context: "c".into(),
            explicit_rules: vec![],
            baseline_solution: "b".into(),
            optimal_solution: "opt".into(),
            feasibility_checklist: vec!["p".into()],
            notes: None,
            known_solutions: vec![],
        };
        let body = RunBody::new(Method::Cuot, &task, "backend", &PipelineParams::default());
        RunRecord::new(body, 0, vec![])
    }

    #[test]
    fn saves_and_loads_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let store = RunStore::open(dir.path()).unwrap();
        let record = record();
        store.save(&record).unwrap();
        let loaded = store.load(&record.meta.run_id).unwrap();
        assert_eq!(loaded, record);
        assert!(dir
            .path()
            .join(format!("{}.transcript.jsonl", record.meta.run_id))
            .exists());
    }

    #[test]
    fn refuses_to_overwrite() {
        let dir = tempfile::tempdir().unwrap();
        let store = RunStore::open(dir.path()).unwrap();
        let record = record();
        store.save(&record).unwrap();
        let err = store.save(&record).unwrap_err();
        assert!(err.to_string().contains("append-only"));
    }

    #[test]
    fn missing_record_is_a_not_found_error() {
        let dir = tempfile::tempdir().unwrap();
        let store = RunStore::open(dir.path()).unwrap();
        let err = store.load("nope").unwrap_err();
        assert!(err.to_string().contains("no run record `nope`"));
    }
}
