use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::label::Label;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    /// OpenAI-compatible `/chat/completions`.
    Openai,
    /// Anthropic `/v1/messages`.
    Anthropic,
    /// Deterministic in-process answers.
    Mock,
}

impl FromStr for ProviderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "openai" => Ok(ProviderKind::Openai),
            "anthropic" => Ok(ProviderKind::Anthropic),
            "mock" => Ok(ProviderKind::Mock),
            _ => Err(Error::Config(format!(
                "unknown provider `{s}` (expected openai, anthropic or mock)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Voter,
    Verifier,
}

impl FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "voter" => Ok(Role::Voter),
            "verifier" => Ok(Role::Verifier),
            _ => Err(Error::Config(format!(
                "unknown role `{s}` (expected voter or verifier)"
            ))),
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Voter => "voter",
            Role::Verifier => "verifier",
        })
    }
}

/// Knobs for the mock provider.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MockSettings {
    /// TSV `surface<TAB>LABEL`.
    pub labels_path: Option<PathBuf>,
    pub labels: BTreeMap<String, Label>,
    pub default_label: Option<Label>,
    /// Surfaces left out of batched answers, forcing a retry.
    pub omit: Vec<String>,
    /// Surfaces answered with garbage on retry as well.
    pub omit_single: Vec<String>,
    /// Calls failing transiently before the mock starts answering.
    pub transient_failures: u32,
    /// Every call fails.
    pub down: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointConfig {
    pub name: String,
    pub provider: ProviderKind,
    pub base_url: String,
    pub model: String,
    /// Environment variable holding the API key.
    pub auth_env: Option<String>,
    pub role: Role,
    /// 0 disables rate limiting.
    pub requests_per_minute: f64,
    pub burst: u32,
    /// Batches in flight at once.
    pub concurrency: usize,
    pub max_retries: u32,
    pub backoff_ms: u64,
    pub timeout_secs: u64,
    pub max_tokens: u32,
    pub mock: MockSettings,
}

impl EndpointConfig {
    pub fn new(name: impl Into<String>, provider: ProviderKind, role: Role) -> Self {
        let mock = provider == ProviderKind::Mock;
        EndpointConfig {
            name: name.into(),
            provider,
            base_url: match provider {
                ProviderKind::Openai => "https://api.openai.com/v1".into(),
                ProviderKind::Anthropic => "https://api.anthropic.com".into(),
                ProviderKind::Mock => String::new(),
            },
            model: String::new(),
            auth_env: None,
            role,
            requests_per_minute: if mock { 0.0 } else { 60.0 },
            burst: 1,
            concurrency: 1,
            max_retries: 5,
            backoff_ms: if mock { 1 } else { 1000 },
            timeout_secs: 120,
            max_tokens: 512,
            mock: MockSettings::default(),
        }
    }

    /// Sets one `endpoint.<name>.<key>` value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad =
            |what: &str| Error::Config(format!("endpoint `{}`: bad {key} `{value}`: {what}", self.name));
        let list = || -> Vec<String> {
            value
                .split(',')
                .map(|s| s.trim().to_lowercase())
                .filter(|s| !s.is_empty())
                .collect()
        };
        match key {
            "provider" => self.provider = value.parse()?,
            "base_url" => self.base_url = value.trim_end_matches('/').to_string(),
            "model" => self.model = value.to_string(),
            "auth_env" => self.auth_env = (!value.is_empty()).then(|| value.to_string()),
            "role" => self.role = value.parse()?,
            "requests_per_minute" => {
                self.requests_per_minute = value.parse().map_err(|_| bad("expected a number"))?
            }
            "burst" => self.burst = value.parse().map_err(|_| bad("expected an integer"))?,
            "concurrency" => self.concurrency = value.parse().map_err(|_| bad("expected an integer"))?,
            "max_retries" => self.max_retries = value.parse().map_err(|_| bad("expected an integer"))?,
            "backoff_ms" => self.backoff_ms = value.parse().map_err(|_| bad("expected an integer"))?,
            "timeout_secs" => self.timeout_secs = value.parse().map_err(|_| bad("expected an integer"))?,
            "max_tokens" => self.max_tokens = value.parse().map_err(|_| bad("expected an integer"))?,
            "mock_labels" => self.mock.labels_path = Some(PathBuf::from(value)),
            "mock_default" => {
                self.mock.default_label =
                    Some(Label::parse_answer(value).ok_or_else(|| bad("expected a label"))?)
            }
            "mock_omit" => self.mock.omit = list(),
            "mock_omit_single" => self.mock.omit_single = list(),
            "mock_transient_failures" => {
                self.mock.transient_failures = value.parse().map_err(|_| bad("expected an integer"))?
            }
            "mock_down" => self.mock.down = value.parse().map_err(|_| bad("expected true or false"))?,
            _ => {
                return Err(Error::Config(format!(
                    "endpoint `{}`: unknown key `{key}`",
                    self.name
                )))
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(Error::Config(format!("endpoint `{}`: {m}", self.name)));
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
        {
            return err("names may only use letters, digits, `_`, `-` and `.`".into());
        }
        if self.provider != ProviderKind::Mock {
            if self.model.is_empty() {
                return err("model is required".into());
            }
            if self.base_url.is_empty() {
                return err("base_url is required".into());
            }
        }
        if !(self.requests_per_minute >= 0.0 && self.requests_per_minute.is_finite()) {
            return err("requests_per_minute must be >= 0".into());
        }
        if self.concurrency == 0 {
            return err("concurrency must be >= 1".into());
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs(self.timeout_secs)
    }
}
