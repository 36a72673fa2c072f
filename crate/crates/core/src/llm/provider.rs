use std::collections::BTreeMap;
use std::path::Path;
use std::sync::atomic::{AtomicU32, Ordering};

use serde_json::{json, Value};

use crate::error::{Error, Result};

use super::endpoint::{EndpointConfig, MockSettings, ProviderKind};
use super::label::Label;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CallError {
    /// Worth retrying: timeouts, rate limits, server errors.
    Transient(String),
    Fatal(String),
}

pub trait Provider: Send + Sync {
    fn complete(&self, prompt: &str) -> std::result::Result<String, CallError>;
}

/// Builds the provider an endpoint describes. Relative mock label paths
/// resolve against `base_dir`.
pub fn build_provider(config: &EndpointConfig, base_dir: &Path) -> Result<Box<dyn Provider>> {
    config.validate()?;
    Ok(match config.provider {
        ProviderKind::Mock => Box::new(MockProvider::from_settings(&config.mock, base_dir)?),
        ProviderKind::Openai | ProviderKind::Anthropic => Box::new(HttpProvider::new(config)?),
    })
}

/// Chat endpoint over HTTP.
pub struct HttpProvider {
    kind: ProviderKind,
    url: String,
    model: String,
    key: Option<String>,
    max_tokens: u32,
    agent: ureq::Agent,
}

impl HttpProvider {
    pub fn new(config: &EndpointConfig) -> Result<Self> {
        let key = match &config.auth_env {
            Some(var) => Some(std::env::var(var).map_err(|_| {
                Error::Config(format!(
                    "endpoint `{}`: environment variable `{var}` is not set",
                    config.name
                ))
            })?),
            None => None,
        };
        let url = match config.provider {
            ProviderKind::Openai => format!("{}/chat/completions", config.base_url),
            ProviderKind::Anthropic => format!("{}/v1/messages", config.base_url),
            ProviderKind::Mock => unreachable!("mock endpoints do not use HTTP"),
        };
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout()))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(HttpProvider {
            kind: config.provider,
            url,
            model: config.model.clone(),
            key,
            max_tokens: config.max_tokens,
            agent,
        })
    }
}

/// Request body for a single-turn prompt with deterministic decoding. Both
/// supported APIs accept the same shape.
pub fn request_body(model: &str, max_tokens: u32, prompt: &str) -> Value {
    json!({
        "model": model,
        "max_tokens": max_tokens,
        "temperature": 0,
        "messages": [{ "role": "user", "content": prompt }],
    })
}

/// Pulls the answer text out of a response body.
pub fn response_text(kind: ProviderKind, body: &Value) -> Option<String> {
    match kind {
        ProviderKind::Anthropic => {
            let parts: Vec<&str> = body["content"]
                .as_array()?
                .iter()
                .filter(|b| b["type"] == "text")
                .filter_map(|b| b["text"].as_str())
                .collect();
            (!parts.is_empty()).then(|| parts.concat())
        }
        _ => body["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string),
    }
}

impl Provider for HttpProvider {
    fn complete(&self, prompt: &str) -> std::result::Result<String, CallError> {
        let body = request_body(&self.model, self.max_tokens, prompt);
        let mut req = self
            .agent
            .post(&self.url)
            .header("content-type", "application/json");
        match (self.kind, &self.key) {
            (ProviderKind::Anthropic, key) => {
                req = req.header("anthropic-version", "2023-06-01");
                if let Some(k) = key {
                    req = req.header("x-api-key", k);
                }
            }
            (_, Some(k)) => req = req.header("authorization", format!("Bearer {k}")),
            _ => {}
        }
        let mut resp = req
            .send_json(&body)
            .map_err(|e| CallError::Transient(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| CallError::Transient(e.to_string()))?;
        match status {
            200..=299 => {}
            408 | 409 | 425 | 429 | 500..=599 => {
                return Err(CallError::Transient(format!("HTTP {status}: {}", excerpt(&text))))
            }
            _ => return Err(CallError::Fatal(format!("HTTP {status}: {}", excerpt(&text)))),
        }
        let value: Value =
            serde_json::from_str(&text).map_err(|e| CallError::Transient(format!("bad JSON: {e}")))?;
        response_text(self.kind, &value)
            .ok_or_else(|| CallError::Transient(format!("no answer text in {}", excerpt(&text))))
    }
}

fn excerpt(s: &str) -> &str {
    match s.char_indices().nth(200) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

/// Answers from a fixed label table. Reads the token list back out of the
/// prompt, so it exercises rendering and parsing end to end.
#[derive(Debug, Default)]
pub struct MockProvider {
    labels: BTreeMap<String, Label>,
    default_label: Option<Label>,
    omit: Vec<String>,
    omit_single: Vec<String>,
    transient_failures: u32,
    down: bool,
    calls: AtomicU32,
}

impl MockProvider {
    pub fn new(labels: impl IntoIterator<Item = (String, Label)>, default_label: Label) -> Self {
        MockProvider {
            labels: labels.into_iter().collect(),
            default_label: Some(default_label),
            ..Default::default()
        }
    }

    pub fn from_settings(s: &MockSettings, base_dir: &Path) -> Result<Self> {
        let mut labels = s.labels.clone();
        if let Some(p) = &s.labels_path {
            let path = if p.is_relative() {
                base_dir.join(p)
            } else {
                p.clone()
            };
            labels.extend(read_label_table(&path)?);
        }
        Ok(MockProvider {
            labels,
            default_label: s.default_label,
            omit: s.omit.clone(),
            omit_single: s.omit_single.clone(),
            transient_failures: s.transient_failures,
            down: s.down,
            calls: AtomicU32::new(0),
        })
    }

    pub fn calls(&self) -> u32 {
        self.calls.load(Ordering::SeqCst)
    }

    fn answer(&self, surface: &str) -> Option<Label> {
        self.labels.get(surface).copied().or(self.default_label)
    }
}

/// Reads a `surface<TAB>LABEL` table.
pub fn read_label_table(path: &Path) -> Result<BTreeMap<String, Label>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (s, l) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(path, i + 1, "expected `surface<TAB>LABEL`"))?;
        let label = Label::parse_answer(l.trim())
            .ok_or_else(|| Error::parse(path, i + 1, format!("unknown label `{l}`")))?;
        out.insert(s.trim().to_lowercase(), label);
    }
    Ok(out)
}

impl Provider for MockProvider {
    fn complete(&self, prompt: &str) -> std::result::Result<String, CallError> {
        let n = self.calls.fetch_add(1, Ordering::SeqCst);
        if self.down {
            return Err(CallError::Transient("mock endpoint is down".into()));
        }
        if n < self.transient_failures {
            return Err(CallError::Transient("mock transient failure".into()));
        }
        let single = prompt.contains("Answer with ONLY the label");
        let mut out = String::new();
        for line in prompt.lines() {
            let Some(surface) = line.strip_prefix("TOKEN: ") else {
                continue;
            };
            let skip = if single { &self.omit_single } else { &self.omit };
            if skip.iter().any(|s| s == surface) {
                out.push_str(surface);
                out.push_str(": not sure\n");
                continue;
            }
            if let Some(label) = self.answer(surface) {
                out.push_str(surface);
                out.push(':');
                out.push_str(label.as_str());
                out.push('\n');
            }
        }
        Ok(out)
    }
}
