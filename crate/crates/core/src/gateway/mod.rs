//! The single funnel for everything an LLM backend does: prompted
//! completions and text embeddings. Requests are canonicalised and
//! content-addressed, responses are cached and recorded, and the scripted
//! backend makes every higher layer runnable offline with byte-identical
//! results.
//!
//! Role embeddings deserve a note: embedding a text "by role" first asks
//! the backend for a functional abstract of the text and then embeds that
//! abstract, so one role embedding produces two primitive calls in the
//! transcript.

pub mod cache;
pub mod live;
pub mod prompts;
pub mod replay;
pub mod scripted;

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use cache::Cache;
pub use live::{LiveBackend, LiveConfig};
pub use replay::{replay_log, CallCheck, ReplayReport};
pub use scripted::{ScriptedBackend, ScriptedFixture};

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("unknown prompt template `{0}`")]
    UnknownTemplate(String),
    #[error("template `{template}` placeholder `{placeholder}` is not bound by the request variables")]
    UnboundPlaceholder { template: String, placeholder: String },
    #[error("embedding text must be non-empty")]
    EmptyEmbeddingText,
    #[error("scripted fixture has no response for `{function}` call with variables {variables}")]
    FixtureMiss { function: String, variables: String },
    #[error("scripted fixture has no embedding for text {0:?}")]
    MissingEmbedding(String),
    #[error("failed to load fixture {path}: {reason}")]
    FixtureLoad { path: String, reason: String },
    #[error("backend `{backend}` request failed after {attempts} attempt(s): {reason}")]
    BackendFailure {
        backend: String,
        attempts: u32,
        reason: String,
    },
    #[error("backend response malformed: {0}")]
    MalformedResponse(String),
    #[error("api key environment variable `{0}` is not set")]
    MissingApiKey(String),
    #[error("cache i/o at {path}: {reason}")]
    CacheIo { path: String, reason: String },
    #[error("transcript incomplete: {0}")]
    IncompleteTranscript(String),
}

/// The closed set of LLM-facing functions. Template ids distinguish the
/// different uses of one function; nothing outside this set ever reaches a
/// backend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptFunction {
    RuleAssumptionIdentification,
    AnalogousRuleDiscovery,
    RuleSetMutation,
    AnalogousProblemDiscovery,
    AnalogousSolutionGeneration,
    SolutionDecomposition,
    CreativeSynthesis,
    EvaluationAndRanking,
    Canonicalize,
    JudgeUtility,
    JudgeFeasibility,
    JudgeImpact,
    VerifyRule,
    FunctionalAbstract,
}

impl PromptFunction {
    pub fn name(self) -> &'static str {
        match self {
            PromptFunction::RuleAssumptionIdentification => "rule_assumption_identification",
            PromptFunction::AnalogousRuleDiscovery => "analogous_rule_discovery",
            PromptFunction::RuleSetMutation => "rule_set_mutation",
            PromptFunction::AnalogousProblemDiscovery => "analogous_problem_discovery",
            PromptFunction::AnalogousSolutionGeneration => "analogous_solution_generation",
            PromptFunction::SolutionDecomposition => "solution_decomposition",
            PromptFunction::CreativeSynthesis => "creative_synthesis",
            PromptFunction::EvaluationAndRanking => "evaluation_and_ranking",
            PromptFunction::Canonicalize => "canonicalize",
            PromptFunction::JudgeUtility => "judge_utility",
            PromptFunction::JudgeFeasibility => "judge_feasibility",
            PromptFunction::JudgeImpact => "judge_impact",
            PromptFunction::VerifyRule => "verify_rule",
            PromptFunction::FunctionalAbstract => "functional_abstract",
        }
    }
}

impl std::fmt::Display for PromptFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Sampling settings carried by every completion request and folded into
/// its cache key.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sampling {
    pub temperature: f64,
    pub max_output_tokens: u32,
}

impl Sampling {
    /// Temperature-zero sampling for judges, verifiers, and abstracts.
    pub fn deterministic() -> Sampling {
        Sampling {
            temperature: 0.0,
            max_output_tokens: 512,
        }
    }

    pub fn creative(temperature: f64, max_output_tokens: u32) -> Sampling {
        Sampling {
            temperature,
            max_output_tokens,
        }
    }
}

/// A validated completion request: a registered template plus bindings for
/// all of its placeholders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptRequest {
    pub function: PromptFunction,
    pub template_id: String,
    pub variables: BTreeMap<String, String>,
    pub sampling: Sampling,
}

impl PromptRequest {
    pub fn from_template(
        template_id: &str,
        variables: &[(&str, String)],
        sampling: Sampling,
    ) -> Result<PromptRequest, GatewayError> {
        let template = prompts::template(template_id)
            .ok_or_else(|| GatewayError::UnknownTemplate(template_id.to_string()))?;
        let variables: BTreeMap<String, String> = variables
            .iter()
            .map(|(k, v)| (k.to_string(), v.clone()))
            .collect();
        for placeholder in prompts::placeholders(template.text) {
            if !variables.contains_key(placeholder) {
                return Err(GatewayError::UnboundPlaceholder {
                    template: template_id.to_string(),
                    placeholder: placeholder.to_string(),
                });
            }
        }
        Ok(PromptRequest {
            function: template.function,
            template_id: template_id.to_string(),
            variables,
            sampling,
        })
    }

    /// The fully substituted prompt text sent to live backends.
    pub fn render(&self) -> String {
        let template = prompts::template(&self.template_id)
            .expect("validated at construction");
        prompts::render(template.text, &self.variables)
    }

    fn primitive(&self) -> PrimitiveRequest {
        PrimitiveRequest::Complete {
            function: self.function,
            template_id: self.template_id.clone(),
            variables: self.variables.clone(),
            temperature: self.sampling.temperature,
            max_output_tokens: self.sampling.max_output_tokens,
        }
    }
}

/// Which view of a text an embedding request asks for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingKind {
    /// Embed the text literally.
    Surface,
    /// Abstract the text's functional role first, then embed the abstract.
    Role,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRequest {
    pub text: String,
    pub kind: EmbeddingKind,
}

impl EmbeddingRequest {
    pub fn surface(text: impl Into<String>) -> EmbeddingRequest {
        EmbeddingRequest {
            text: text.into(),
            kind: EmbeddingKind::Surface,
        }
    }

    pub fn role(text: impl Into<String>) -> EmbeddingRequest {
        EmbeddingRequest {
            text: text.into(),
            kind: EmbeddingKind::Role,
        }
    }
}

/// An embedding plus, for role embeddings, the abstract that was embedded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingResult {
    pub vector: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub functional_abstract: Option<String>,
}

/// The canonical form of one backend call, the unit that is cached,
/// digested, and recorded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PrimitiveRequest {
    Complete {
        function: PromptFunction,
        template_id: String,
        variables: BTreeMap<String, String>,
        temperature: f64,
        max_output_tokens: u32,
    },
    Embed { text: String },
}

impl PrimitiveRequest {
    pub fn function_name(&self) -> String {
        match self {
            PrimitiveRequest::Complete { function, .. } => function.name().to_string(),
            PrimitiveRequest::Embed { .. } => "embed".to_string(),
        }
    }

    /// Content digest of the request as served by a specific backend.
    /// Variables live in a sorted map, so the digest is independent of the
    /// order call sites listed them in.
    pub fn digest(&self, backend_id: &str) -> String {
        let canonical = serde_json::json!({
            "backend": backend_id,
            "request": self,
        });
        sha256_hex(canonical.to_string().as_bytes())
    }
}

/// What a backend returned for one primitive request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", content = "value")]
pub enum ResponsePayload {
    Text(String),
    Vector(Vec<f64>),
}

impl ResponsePayload {
    pub fn digest(&self) -> String {
        sha256_hex(
            serde_json::to_string(self)
                .expect("payload serialises")
                .as_bytes(),
        )
    }
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hex::encode(hasher.finalize())
}

/// One entry of a run transcript: the canonical request, the response, and
/// digests of both so replay can detect tampering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallRecord {
    pub index: usize,
    pub request: PrimitiveRequest,
    pub request_digest: String,
    pub response: ResponsePayload,
    pub response_digest: String,
}

/// A completion-and-embedding provider. Implementations must be
/// deterministic for temperature-zero requests if replay is to verify.
pub trait Backend: Send + Sync {
    fn id(&self) -> &str;
    fn complete(&self, request: &PromptRequest) -> Result<String, GatewayError>;
    fn embed(&self, text: &str) -> Result<Vec<f64>, GatewayError>;
}

/// Front door to a backend: canonicalises requests, consults the cache,
/// counts real backend invocations, and stamps every response with digests.
pub struct Gateway {
    backend: Box<dyn Backend>,
    cache: Cache,
    backend_calls: AtomicUsize,
    generation_temperature: f64,
    max_output_tokens: u32,
}

impl Gateway {
    pub fn new(backend: Box<dyn Backend>, cache: Cache) -> Gateway {
        Gateway {
            backend,
            cache,
            backend_calls: AtomicUsize::new(0),
            generation_temperature: 0.7,
            max_output_tokens: 1024,
        }
    }

    pub fn with_sampling(mut self, temperature: f64, max_output_tokens: u32) -> Gateway {
        self.generation_temperature = temperature;
        self.max_output_tokens = max_output_tokens;
        self
    }

    pub fn backend_id(&self) -> &str {
        self.backend.id()
    }

    /// How many requests actually reached the backend (cache misses).
    pub fn backend_calls(&self) -> usize {
        self.backend_calls.load(Ordering::SeqCst)
    }

    /// Sampling for generative prompts, from the configured settings.
    pub fn creative_sampling(&self) -> Sampling {
        Sampling::creative(self.generation_temperature, self.max_output_tokens)
    }

    fn execute<F>(&self, request: PrimitiveRequest, call: F) -> Result<(ResponsePayload, CallRecord), GatewayError>
    where
        F: FnOnce() -> Result<ResponsePayload, GatewayError>,
    {
        let key = request.digest(self.backend_id());
        let payload = match self.cache.get(&key)? {
            Some(hit) => hit,
            None => {
                let fresh = call()?;
                self.backend_calls.fetch_add(1, Ordering::SeqCst);
                self.cache.put(&key, &fresh)?;
                fresh
            }
        };
        let record = CallRecord {
            index: 0,
            request_digest: key,
            response_digest: payload.digest(),
            response: payload.clone(),
            request,
        };
        Ok((payload, record))
    }

    /// Runs one completion, returning the text and its transcript entry.
    pub fn complete(&self, request: &PromptRequest) -> Result<(String, CallRecord), GatewayError> {
        let (payload, record) = self.execute(request.primitive(), || {
            self.backend.complete(request).map(ResponsePayload::Text)
        })?;
        match payload {
            ResponsePayload::Text(text) => Ok((text, record)),
            ResponsePayload::Vector(_) => Err(GatewayError::MalformedResponse(
                "cache returned a vector for a completion request".into(),
            )),
        }
    }

    /// Embeds a text literally, returning the vector and its transcript
    /// entry.
    pub fn embed_text(&self, text: &str) -> Result<(Vec<f64>, CallRecord), GatewayError> {
        if text.trim().is_empty() {
            return Err(GatewayError::EmptyEmbeddingText);
        }
        let request = PrimitiveRequest::Embed {
            text: text.to_string(),
        };
        let (payload, record) = self.execute(request, || {
            self.backend.embed(text).map(ResponsePayload::Vector)
        })?;
        match payload {
            ResponsePayload::Vector(vector) => Ok((vector, record)),
            ResponsePayload::Text(_) => Err(GatewayError::MalformedResponse(
                "cache returned text for an embedding request".into(),
            )),
        }
    }
}

/// Wraps a [`Gateway`] and accumulates the transcript of every call made
/// through it, in order. One recorder corresponds to one run record.
pub struct Recorder<'a> {
    gateway: &'a Gateway,
    transcript: RefCell<Vec<CallRecord>>,
}

impl<'a> Recorder<'a> {
    pub fn new(gateway: &'a Gateway) -> Recorder<'a> {
        Recorder {
            gateway,
            transcript: RefCell::new(Vec::new()),
        }
    }

    pub fn gateway(&self) -> &Gateway {
        self.gateway
    }

    fn push(&self, mut record: CallRecord) -> CallRecord {
        let mut transcript = self.transcript.borrow_mut();
        record.index = transcript.len();
        transcript.push(record.clone());
        record
    }

    pub fn complete(&self, request: &PromptRequest) -> Result<String, GatewayError> {
        let (text, record) = self.gateway.complete(request)?;
        self.push(record);
        Ok(text)
    }

    /// Like [`Recorder::complete`] but also returns the request digest, for
    /// callers that cite judge calls in their outputs.
    pub fn complete_with_digest(
        &self,
        request: &PromptRequest,
    ) -> Result<(String, String), GatewayError> {
        let (text, record) = self.gateway.complete(request)?;
        let record = self.push(record);
        Ok((text, record.request_digest))
    }

    /// Resolves an embedding request. Surface embeddings are one primitive
    /// call; role embeddings are two (abstract, then embed).
    pub fn embed(&self, request: &EmbeddingRequest) -> Result<EmbeddingResult, GatewayError> {
        match request.kind {
            EmbeddingKind::Surface => {
                let (vector, record) = self.gateway.embed_text(&request.text)?;
                self.push(record);
                Ok(EmbeddingResult {
                    vector,
                    functional_abstract: None,
                })
            }
            EmbeddingKind::Role => {
                let abstract_request = PromptRequest::from_template(
                    "functional_abstract",
                    &[("text", request.text.clone())],
                    Sampling::deterministic(),
                )?;
                let functional_abstract = self.complete(&abstract_request)?.trim().to_string();
                if functional_abstract.is_empty() {
                    return Err(GatewayError::MalformedResponse(format!(
                        "empty functional abstract for {:?}",
                        truncate(&request.text, 80)
                    )));
                }
                let (vector, record) = self.gateway.embed_text(&functional_abstract)?;
                self.push(record);
                Ok(EmbeddingResult {
                    vector,
                    functional_abstract: Some(functional_abstract),
                })
            }
        }
    }

    pub fn len(&self) -> usize {
        self.transcript.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Consumes the recorder, yielding the transcript.
    pub fn into_transcript(self) -> Vec<CallRecord> {
        self.transcript.into_inner()
    }
}

pub(crate) fn truncate(text: &str, limit: usize) -> String {
    if text.chars().count() <= limit {
        text.to_string()
    } else {
        let cut: String = text.chars().take(limit).collect();
        format!("{cut}…")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> ScriptedFixture {
        ScriptedFixture::new()
            .stub(
                PromptFunction::JudgeFeasibility,
                &[("predicate", "*wheels*")],
                "PASS",
            )
            .stub(PromptFunction::JudgeFeasibility, &[], "FAIL")
            .stub(
                PromptFunction::FunctionalAbstract,
                &[("text", "*bicycle*")],
                "A human-powered personal transport mechanism.",
            )
            .embedding("a red bicycle", &[1.0, 0.0])
            .embedding("A human-powered personal transport mechanism.", &[0.0, 1.0])
    }

    fn gateway() -> Gateway {
        Gateway::new(
            Box::new(ScriptedBackend::new(fixture())),
            Cache::memory(),
        )
    }

    fn feasibility_request(predicate: &str) -> PromptRequest {
        PromptRequest::from_template(
            "judge_feasibility",
            &[
                ("predicate", predicate.to_string()),
                ("solution", "a red bicycle".to_string()),
            ],
            Sampling::deterministic(),
        )
        .unwrap()
    }

    #[test]
    fn unknown_template_is_rejected() {
        let err = PromptRequest::from_template("nope", &[], Sampling::deterministic()).unwrap_err();
        assert!(matches!(err, GatewayError::UnknownTemplate(_)));
    }

    #[test]
    fn unbound_placeholder_is_rejected() {
        let err = PromptRequest::from_template(
            "judge_feasibility",
            &[("predicate", "has wheels".to_string())],
            Sampling::deterministic(),
        )
        .unwrap_err();
        match err {
            GatewayError::UnboundPlaceholder { placeholder, .. } => {
                assert_eq!(placeholder, "solution")
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn render_substitutes_variables() {
        let request = feasibility_request("has wheels");
        let rendered = request.render();
        assert!(rendered.contains("Requirement: has wheels"));
        assert!(rendered.contains("Solution: a red bicycle"));
        assert!(!rendered.contains('{'));
    }

    #[test]
    fn digest_is_invariant_to_variable_listing_order() {
        let a = PromptRequest::from_template(
            "judge_feasibility",
            &[
                ("predicate", "p".to_string()),
                ("solution", "s".to_string()),
            ],
            Sampling::deterministic(),
        )
        .unwrap();
        let b = PromptRequest::from_template(
            "judge_feasibility",
            &[
                ("solution", "s".to_string()),
                ("predicate", "p".to_string()),
            ],
            Sampling::deterministic(),
        )
        .unwrap();
        assert_eq!(a.primitive().digest("x"), b.primitive().digest("x"));
        // Different backends address different cache slots.
        assert_ne!(a.primitive().digest("x"), a.primitive().digest("y"));
    }

    #[test]
    fn sampling_changes_the_digest() {
        let a = feasibility_request("p");
        let mut b = a.clone();
        b.sampling.temperature = 0.9;
        assert_ne!(
            a.primitive().digest("x"),
            b.primitive().digest("x")
        );
    }

    #[test]
    fn repeated_request_hits_cache_once() {
        let gw = gateway();
        let request = feasibility_request("has wheels");
        let (first, _) = gw.complete(&request).unwrap();
        let (second, _) = gw.complete(&request).unwrap();
        assert_eq!(first, "PASS");
        assert_eq!(second, "PASS");
        assert_eq!(gw.backend_calls(), 1);
    }

    #[test]
    fn recorder_captures_calls_in_order() {
        let gw = gateway();
        let recorder = Recorder::new(&gw);
        recorder.complete(&feasibility_request("has wheels")).unwrap();
        recorder.complete(&feasibility_request("flies")).unwrap();
        let transcript = recorder.into_transcript();
        assert_eq!(transcript.len(), 2);
        assert_eq!(transcript[0].index, 0);
        assert_eq!(transcript[1].index, 1);
        assert_eq!(transcript[0].response, ResponsePayload::Text("PASS".into()));
        assert_eq!(transcript[1].response, ResponsePayload::Text("FAIL".into()));
        for call in &transcript {
            assert_eq!(call.request_digest, call.request.digest(gw.backend_id()));
            assert_eq!(call.response_digest, call.response.digest());
        }
    }

    #[test]
    fn surface_embedding_is_one_call_role_is_two() {
        let gw = gateway();
        let recorder = Recorder::new(&gw);
        let surface = recorder
            .embed(&EmbeddingRequest::surface("a red bicycle"))
            .unwrap();
        assert_eq!(surface.vector, vec![1.0, 0.0]);
        assert_eq!(surface.functional_abstract, None);
        assert_eq!(recorder.len(), 1);

        let role = recorder.embed(&EmbeddingRequest::role("a red bicycle")).unwrap();
        assert_eq!(role.vector, vec![0.0, 1.0]);
        assert_eq!(
            role.functional_abstract.as_deref(),
            Some("A human-powered personal transport mechanism.")
        );
        assert_eq!(recorder.len(), 3);
    }

    #[test]
    fn empty_embedding_text_is_rejected() {
        let gw = gateway();
        assert!(matches!(
            gw.embed_text("  "),
            Err(GatewayError::EmptyEmbeddingText)
        ));
    }
}
