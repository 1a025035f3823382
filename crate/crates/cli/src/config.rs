//! Harness configuration: pipeline parameters plus backend, store, and
//! sampling settings, loaded from a JSON file and overridable from the
//! command line.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use uot_core::gateway::{
    Backend, Cache, Gateway, LiveBackend, LiveConfig, ScriptedBackend, ScriptedFixture,
};
use uot_core::model::PipelineParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    /// Deterministic fixture-driven backend; needs `fixtures`.
    Scripted,
    /// HTTP backend; reads the API key from the configured env var.
    Live,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    pub params: PipelineParams,
    pub backend: BackendKind,
    /// Fixture file for the scripted backend.
    pub fixtures: Option<PathBuf>,
    pub live: LiveConfig,
    /// Directory of persisted run records, one file per run.
    pub store_dir: PathBuf,
    /// Response cache directory; in-memory cache when unset.
    pub cache_dir: Option<PathBuf>,
    /// How many times `run` executes its method.
    pub runs: usize,
    pub generation_temperature: f64,
    pub max_output_tokens: u32,
}

impl Default for AppConfig {
    fn default() -> AppConfig {
        AppConfig {
            params: PipelineParams::default(),
            backend: BackendKind::Scripted,
            fixtures: None,
            live: LiveConfig::default(),
            store_dir: PathBuf::from("runs"),
            cache_dir: None,
            runs: 10,
            generation_temperature: 0.7,
            max_output_tokens: 1024,
        }
    }
}

impl AppConfig {
    pub fn load(path: Option<&Path>) -> Result<AppConfig> {
        let Some(path) = path else {
            return Ok(AppConfig::default());
        };
        let raw = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        serde_json::from_str(&raw).with_context(|| format!("invalid config {}", path.display()))
    }

    /// Builds a gateway from the configured backend, cache, and sampling.
    pub fn build_gateway(&self) -> Result<Gateway> {
        let cache = match &self.cache_dir {
            Some(dir) => Cache::persistent(dir)?,
            None => Cache::memory(),
        };
        let backend: Box<dyn Backend> = match self.backend {
            BackendKind::Scripted => {
                let path = self.fixtures.as_ref().ok_or_else(|| {
                    anyhow!(
                        "the scripted backend needs a fixture file; \
                         pass --fixtures <path> or set `fixtures` in the config"
                    )
                })?;
                let fixture = ScriptedFixture::load(path)
                    .with_context(|| format!("cannot load fixtures {}", path.display()))?;
                Box::new(ScriptedBackend::new(fixture))
            }
            BackendKind::Live => Box::new(LiveBackend::new(self.live.clone())?),
        };
        Ok(Gateway::new(backend, cache)
            .with_sampling(self.generation_temperature, self.max_output_tokens))
    }

    /// Applies one `NAME=VALUE` parameter override.
    pub fn apply_override(&mut self, pair: &str) -> Result<()> {
        let (name, value) = pair
            .split_once('=')
            .ok_or_else(|| anyhow!("--seed-params expects NAME=VALUE, got `{pair}`"))?;
        self.params
            .set_by_name(name.trim(), value.trim())
            .map_err(|e| anyhow!("{e}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_apply_without_a_config_file() {
        let config = AppConfig::load(None).unwrap();
        assert_eq!(config.backend, BackendKind::Scripted);
        assert_eq!(config.runs, 10);
        assert_eq!(config.params, PipelineParams::default());
    }

    #[test]
    fn partial_config_fills_in_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.json");
        std::fs::write(&path, r#"{"runs": 3, "params": {"donor_k": 7}}"#).unwrap();
        let config = AppConfig::load(Some(&path)).unwrap();
        assert_eq!(config.runs, 3);
        assert_eq!(config.params.donor_k, 7);
        assert_eq!(config.params.host_count, PipelineParams::default().host_count);
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.json");
        std::fs::write(&path, r#"{"runz": 3}"#).unwrap();
        let err = AppConfig::load(Some(&path)).unwrap_err();
        assert!(format!("{err:#}").contains("invalid config"));
    }

    #[test]
    fn overrides_reach_the_params() {
        let mut config = AppConfig::default();
        config.apply_override("k=9").unwrap();
        config.apply_override("lambda=0.25").unwrap();
        assert_eq!(config.params.donor_k, 9);
        assert_eq!(config.params.lambda, 0.25);
        assert!(config.apply_override("k").is_err());
        assert!(config.apply_override("bogus=1").is_err());
    }

    #[test]
    fn scripted_backend_without_fixtures_is_an_error() {
        let config = AppConfig::default();
        match config.build_gateway() {
            Ok(_) => panic!("gateway built without fixtures"),
            Err(err) => assert!(err.to_string().contains("--fixtures")),
        }
    }
}
