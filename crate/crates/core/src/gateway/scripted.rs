//! The scripted backend: serves completions and embeddings from a fixture
//! file instead of a model. A request that no fixture entry covers is an
//! error, never a silent default — fixtures are meant to pin down a run
//! exactly.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Backend, GatewayError, PromptFunction, PromptRequest, sha256_hex, truncate};

/// One canned response: matches a function, optionally a template id, plus
/// glob patterns over request variables. An empty `when` matches every call
/// of the function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureEntry {
    pub function: PromptFunction,
    /// Glob over the template id, for functions served by several templates
    /// with identical variables.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub when: BTreeMap<String, String>,
    pub response: String,
}

/// A deterministic script for a whole run: ordered response entries
/// (first match wins) and exact-text embeddings.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScriptedFixture {
    #[serde(default)]
    pub responses: Vec<FixtureEntry>,
    #[serde(default)]
    pub embeddings: BTreeMap<String, Vec<f64>>,
}

impl ScriptedFixture {
    pub fn new() -> ScriptedFixture {
        ScriptedFixture::default()
    }

    pub fn load(path: &Path) -> Result<ScriptedFixture, GatewayError> {
        let fail = |reason: String| GatewayError::FixtureLoad {
            path: path.display().to_string(),
            reason,
        };
        let raw = std::fs::read_to_string(path).map_err(|e| fail(e.to_string()))?;
        serde_json::from_str(&raw).map_err(|e| fail(e.to_string()))
    }

    /// Appends a response entry; builder form used by tests.
    pub fn stub(mut self, function: PromptFunction, when: &[(&str, &str)], response: &str) -> ScriptedFixture {
        self.responses.push(FixtureEntry {
            function,
            template: None,
            when: when
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
            response: response.to_string(),
        });
        self
    }

    /// Appends a response entry restricted to one template id.
    pub fn stub_template(
        mut self,
        function: PromptFunction,
        template: &str,
        when: &[(&str, &str)],
        response: &str,
    ) -> ScriptedFixture {
        self.responses.push(FixtureEntry {
            function,
            template: Some(template.to_string()),
            when: when
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
            response: response.to_string(),
        });
        self
    }

    /// Registers an exact-text embedding; builder form used by tests.
    pub fn embedding(mut self, text: &str, vector: &[f64]) -> ScriptedFixture {
        self.embeddings.insert(text.to_string(), vector.to_vec());
        self
    }

    pub fn digest(&self) -> String {
        sha256_hex(
            serde_json::to_string(self)
                .expect("fixture serialises")
                .as_bytes(),
        )
    }

    pub fn lookup(&self, request: &PromptRequest) -> Result<&str, GatewayError> {
        for entry in &self.responses {
            if entry.function != request.function {
                continue;
            }
            if let Some(pattern) = &entry.template {
                if !glob_match(pattern, &request.template_id) {
                    continue;
                }
            }
            let matches = entry.when.iter().all(|(variable, pattern)| {
                request
                    .variables
                    .get(variable)
                    .map(|value| glob_match(pattern, value))
                    .unwrap_or(false)
            });
            if matches {
                return Ok(&entry.response);
            }
        }
        let variables = request
            .variables
            .iter()
            .map(|(k, v)| format!("{k}={:?}", truncate(v, 60)))
            .collect::<Vec<_>>()
            .join(", ");
        Err(GatewayError::FixtureMiss {
            function: request.function.name().to_string(),
            variables,
        })
    }

    pub fn lookup_embedding(&self, text: &str) -> Result<Vec<f64>, GatewayError> {
        self.embeddings
            .get(text)
            .cloned()
            .ok_or_else(|| GatewayError::MissingEmbedding(truncate(text, 120)))
    }
}

/// Minimal glob: `*` matches any run of characters (including none);
/// everything else matches literally. A pattern without `*` must equal the
/// value exactly.
pub fn glob_match(pattern: &str, value: &str) -> bool {
    if !pattern.contains('*') {
        return pattern == value;
    }
    let parts: Vec<&str> = pattern.split('*').collect();
    let mut rest = value;
    let first = parts[0];
    if !rest.starts_with(first) {
        return false;
    }
    rest = &rest[first.len()..];
    let last = parts[parts.len() - 1];
    for part in &parts[1..parts.len() - 1] {
        if part.is_empty() {
            continue;
        }
        match rest.find(part) {
            Some(at) => rest = &rest[at + part.len()..],
            None => return false,
        }
    }
    last.is_empty() || rest.ends_with(last)
}

pub struct ScriptedBackend {
    fixture: ScriptedFixture,
    id: String,
}

impl ScriptedBackend {
    pub fn new(fixture: ScriptedFixture) -> ScriptedBackend {
        let id = format!("scripted-{}", &fixture.digest()[..12]);
        ScriptedBackend { fixture, id }
    }
}

impl Backend for ScriptedBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn complete(&self, request: &PromptRequest) -> Result<String, GatewayError> {
        self.fixture.lookup(request).map(|s| s.to_string())
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, GatewayError> {
        self.fixture.lookup_embedding(text)
    }
}
