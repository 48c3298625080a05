//! Prompt construction and BT generators: a JSON-over-HTTP chat endpoint
//! plus deterministic mock and scripted stand-ins.

use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::bench::TaskSpec;
use crate::manifest::{render_action_list, PrimitiveManifest};

pub const SYSTEM_INSTRUCTION: &str = "You are a robot task planner that writes behavior trees. \
Answer with a single BehaviorTree.CPP v4 XML document wrapped in <root BTCPP_format=\"4\"> and nothing else. \
Use only the control nodes Sequence, Fallback, ReactiveFallback, Parallel, Inverter, RetryUntilSuccessful, \
Repeat, Timeout, ForceSuccess and ForceFailure, and only the robot actions listed in the input, \
with exactly the parameters shown for each action.";

/// Alpaca-style request: fixed instruction, task-specific input, and an
/// expected output for exemplars and dataset records.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptRecord {
    pub instruction: String,
    pub input: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptMode {
    ZeroShot,
    OneShot(PromptRecord),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub endpoint_url: String,
    pub model_name: String,
    pub temperature: f64,
    pub top_p: f64,
    pub max_output_tokens: u32,
    pub one_shot: bool,
    pub timeout_secs: f64,
    /// Dot-separated path to the generated text in the response body.
    pub response_path: String,
    pub auth_header: String,
    /// Environment variable holding the auth header value.
    pub auth_env: Option<String>,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            endpoint_url: String::new(),
            model_name: "btgen".into(),
            temperature: 0.2,
            top_p: 0.95,
            max_output_tokens: 2048,
            one_shot: false,
            timeout_secs: 120.0,
            response_path: "choices.0.message.content".into(),
            auth_header: "Authorization".into(),
            auth_env: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("temperature must be >= 0")]
    Temperature,
    #[error("top_p must be in (0, 1]")]
    TopP,
    #[error("timeout must be positive")]
    Timeout,
    #[error("one-shot exemplar has no output")]
    EmptyExemplar,
}

impl GeneratorConfig {
    // Negated comparisons so NaN is rejected too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn check(&self) -> Result<(), ConfigError> {
        if !(self.temperature >= 0.0) {
            return Err(ConfigError::Temperature);
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(ConfigError::TopP);
        }
        if !(self.timeout_secs > 0.0) {
            return Err(ConfigError::Timeout);
        }
        Ok(())
    }
}

pub(crate) fn task_input(description: &str, m: &PrimitiveManifest) -> String {
    format!(
        "Task: {}\n\nAvailable actions:\n{}",
        description.trim(),
        render_action_list(m)
    )
}

/// Builds the request for a task. One-shot mode places the exemplar's input
/// and output ahead of the task.
pub fn build_prompt(task: &TaskSpec, mode: &PromptMode) -> Result<PromptRecord, ConfigError> {
    let mut input = String::new();
    if let PromptMode::OneShot(ex) = mode {
        let out = ex
            .output
            .as_deref()
            .filter(|o| !o.trim().is_empty())
            .ok_or(ConfigError::EmptyExemplar)?;
        input.push_str("Example input:\n");
        input.push_str(&ex.input);
        input.push_str("\n\nExample output:\n");
        input.push_str(out);
        input.push_str("\n\n");
    }
    input.push_str(&task_input(&task.description, &task.manifest));
    Ok(PromptRecord {
        instruction: SYSTEM_INSTRUCTION.to_string(),
        input,
        output: None,
    })
}

/// The prompt mode a task gets under `cfg`: one-shot only when enabled and
/// the task ships an exemplar.
pub fn mode_for(task: &TaskSpec, cfg: &GeneratorConfig) -> PromptMode {
    match (&task.exemplar, cfg.one_shot) {
        (Some(ex), true) => PromptMode::OneShot(ex.clone()),
        _ => PromptMode::ZeroShot,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransportError {
    #[error("request timed out")]
    Timeout,
    #[error("endpoint returned HTTP {0}")]
    Status(u16),
    #[error("transport failure: {0}")]
    Io(String),
    #[error("unexpected response: {0}")]
    BadResponse(String),
    #[error("generator script has no entries")]
    EmptyScript,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generation {
    pub text: String,
    pub latency_secs: f64,
}

pub trait Generator: Send + Sync {
    /// Produces raw model text for a prompt.
    fn complete(&self, prompt: &PromptRecord) -> Result<String, TransportError>;

    /// [`Generator::complete`] with wall-clock latency.
    fn request_bt(&self, prompt: &PromptRecord) -> Result<Generation, TransportError> {
        let start = Instant::now();
        let text = self.complete(prompt)?;
        Ok(Generation {
            text,
            latency_secs: start.elapsed().as_secs_f64(),
        })
    }
}

impl<G: Generator + ?Sized> Generator for &G {
    fn complete(&self, prompt: &PromptRecord) -> Result<String, TransportError> {
        (**self).complete(prompt)
    }
}

impl<G: Generator + ?Sized> Generator for Box<G> {
    fn complete(&self, prompt: &PromptRecord) -> Result<String, TransportError> {
        (**self).complete(prompt)
    }
}

impl<G: Generator + ?Sized> Generator for std::sync::Arc<G> {
    fn complete(&self, prompt: &PromptRecord) -> Result<String, TransportError> {
        (**self).complete(prompt)
    }
}

/// Chat-completion style endpoint.
pub struct HttpGenerator {
    cfg: GeneratorConfig,
    auth_value: Option<String>,
    agent: ureq::Agent,
}

impl HttpGenerator {
    pub fn new(cfg: GeneratorConfig) -> Result<Self, ConfigError> {
        cfg.check()?;
        let auth_value = cfg.auth_env.as_ref().and_then(|v| std::env::var(v).ok());
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(cfg.timeout_secs)))
            .build()
            .into();
        Ok(HttpGenerator { cfg, auth_value, agent })
    }

    fn body(&self, prompt: &PromptRecord) -> Value {
        json!({
            "model": self.cfg.model_name,
            "messages": [
                {"role": "system", "content": prompt.instruction},
                {"role": "user", "content": prompt.input},
            ],
            "temperature": self.cfg.temperature,
            "top_p": self.cfg.top_p,
            "max_tokens": self.cfg.max_output_tokens,
        })
    }

    fn attempt(&self, body: &Value) -> Result<String, TransportError> {
        let mut req = self.agent.post(&self.cfg.endpoint_url);
        if let Some(v) = &self.auth_value {
            req = req.header(self.cfg.auth_header.as_str(), v.as_str());
        }
        let mut resp = req.send_json(body).map_err(transport_error)?;
        let value: Value = resp.body_mut().read_json().map_err(transport_error)?;
        extract_text(&value, &self.cfg.response_path)
    }
}

fn transport_error(e: ureq::Error) -> TransportError {
    match e {
        ureq::Error::Timeout(_) => TransportError::Timeout,
        ureq::Error::StatusCode(c) => TransportError::Status(c),
        ureq::Error::Json(e) => TransportError::BadResponse(e.to_string()),
        other => TransportError::Io(other.to_string()),
    }
}

/// Follows a dotted path (`choices.0.message.content`) into a JSON value.
pub fn extract_text(value: &Value, path: &str) -> Result<String, TransportError> {
    let mut cur = value;
    for seg in path.split('.').filter(|s| !s.is_empty()) {
        cur = match cur {
            Value::Array(items) => seg.parse::<usize>().ok().and_then(|i| items.get(i)),
            Value::Object(map) => map.get(seg),
            _ => None,
        }
        .ok_or_else(|| TransportError::BadResponse(format!("no `{seg}` in response at `{path}`")))?;
    }
    cur.as_str()
        .map(str::to_string)
        .ok_or_else(|| TransportError::BadResponse(format!("`{path}` is not a string")))
}

impl Generator for HttpGenerator {
    fn complete(&self, prompt: &PromptRecord) -> Result<String, TransportError> {
        let body = self.body(prompt);
        self.attempt(&body).or_else(|_| self.attempt(&body))
    }
}

/// Returns the same text for every prompt, optionally after a delay.
#[derive(Debug, Clone)]
pub struct MockGenerator {
    pub text: String,
    pub delay: Duration,
}

impl MockGenerator {
    pub fn new(text: impl Into<String>) -> Self {
        MockGenerator {
            text: text.into(),
            delay: Duration::ZERO,
        }
    }

    pub fn with_delay(mut self, delay: Duration) -> Self {
        self.delay = delay;
        self
    }
}

impl Generator for MockGenerator {
    fn complete(&self, _prompt: &PromptRecord) -> Result<String, TransportError> {
        if !self.delay.is_zero() {
            std::thread::sleep(self.delay);
        }
        Ok(self.text.clone())
    }
}

/// Yields script entries in order and then repeats the last one. Records
/// every prompt it is given.
#[derive(Debug, Default)]
pub struct ScriptedGenerator {
    script: Vec<String>,
    state: Mutex<ScriptState>,
}

#[derive(Debug, Default)]
struct ScriptState {
    next: usize,
    prompts: Vec<PromptRecord>,
}

impl ScriptedGenerator {
    pub fn new<S: Into<String>>(script: impl IntoIterator<Item = S>) -> Self {
        ScriptedGenerator {
            script: script.into_iter().map(Into::into).collect(),
            state: Mutex::default(),
        }
    }

    pub fn prompts(&self) -> Vec<PromptRecord> {
        self.state.lock().expect("script lock").prompts.clone()
    }

    pub fn requests(&self) -> usize {
        self.state.lock().expect("script lock").prompts.len()
    }
}

impl Generator for ScriptedGenerator {
    fn complete(&self, prompt: &PromptRecord) -> Result<String, TransportError> {
        let last = self.script.len().checked_sub(1).ok_or(TransportError::EmptyScript)?;
        let mut st = self.state.lock().expect("script lock");
        st.prompts.push(prompt.clone());
        let i = st.next.min(last);
        st.next += 1;
        Ok(self.script[i].clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prompt() -> PromptRecord {
        PromptRecord {
            instruction: "i".into(),
            input: "x".into(),
            output: None,
        }
    }

    #[test]
    fn scripted_repeats_last_and_logs() {
        let g = ScriptedGenerator::new(["a", "b"]);
        let got: Vec<String> = (0..4).map(|_| g.complete(&prompt()).unwrap()).collect();
        assert_eq!(got, ["a", "b", "b", "b"]);
        assert_eq!(g.requests(), 4);
        assert!(ScriptedGenerator::new(Vec::<String>::new())
            .complete(&prompt())
            .is_err());
    }

    #[test]
    fn mock_latency_includes_delay() {
        let g = MockGenerator::new("t").with_delay(Duration::from_millis(50));
        let out = g.request_bt(&prompt()).unwrap();
        assert_eq!(out.text, "t");
        assert!(out.latency_secs >= 0.05);
    }

    #[test]
    fn response_path() {
        let v = json!({"choices": [{"message": {"content": "<root/>"}}]});
        assert_eq!(extract_text(&v, "choices.0.message.content").unwrap(), "<root/>");
        assert!(extract_text(&v, "choices.1.message.content").is_err());
        assert!(extract_text(&v, "choices.0.message").is_err());
        assert_eq!(extract_text(&json!({"text": "t"}), "text").unwrap(), "t");
    }

    #[test]
    fn unreachable_endpoint_is_transport_error() {
        let cfg = GeneratorConfig {
            endpoint_url: "http://127.0.0.1:9/v1/chat/completions".into(),
            timeout_secs: 2.0,
            ..GeneratorConfig::default()
        };
        let g = HttpGenerator::new(cfg).unwrap();
        assert!(g.request_bt(&prompt()).is_err());
    }

    #[test]
    fn config_ranges() {
        let ok = GeneratorConfig::default();
        assert!(ok.check().is_ok());
        assert_eq!(
            GeneratorConfig {
                top_p: 0.0,
                ..ok.clone()
            }
            .check(),
            Err(ConfigError::TopP)
        );
        assert_eq!(
            GeneratorConfig {
                temperature: -1.0,
                ..ok
            }
            .check(),
            Err(ConfigError::Temperature)
        );
    }
}
