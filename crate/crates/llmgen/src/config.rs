use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::GenError;

/// Paraphrase of the standard free-association instructions.
pub const DEFAULT_TEMPLATE: &str = "You will see a word. Write down the first three words that come to mind \
when you read it. Give only single words, separated by commas, with no explanation.\nWord: {cue}";

pub const CUE_PLACEHOLDER: &str = "{cue}";

/// Generation settings. Read from a flat TOML table; every key but
/// `endpoint` and `model` has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenConfig {
    pub endpoint: String,
    pub model: String,
    pub template: String,
    pub repetitions: usize,
    pub temperature: Option<f64>,
    pub max_tokens: Option<u32>,
    /// Total tries per request, including the first.
    pub max_attempts: u32,
    pub backoff_ms: u64,
    pub max_backoff_ms: u64,
    /// Requests per second; `None` disables the limiter.
    pub rate_limit: Option<f64>,
    pub max_in_flight: usize,
    pub timeout_secs: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            endpoint: String::new(),
            model: String::new(),
            template: DEFAULT_TEMPLATE.to_string(),
            repetitions: 100,
            temperature: None,
            max_tokens: Some(32),
            max_attempts: 5,
            backoff_ms: 500,
            max_backoff_ms: 30_000,
            rate_limit: None,
            max_in_flight: 8,
            timeout_secs: 60,
        }
    }
}

impl GenConfig {
    pub fn from_toml(text: &str) -> Result<Self, GenError> {
        let cfg: GenConfig = toml::from_str(text).map_err(|e| GenError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GenError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| GenError::Io(path.display().to_string(), e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), GenError> {
        let bad = |m: &str| Err(GenError::Config(m.to_string()));
        if self.template.matches(CUE_PLACEHOLDER).count() != 1 {
            return bad("template must contain {cue} exactly once");
        }
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1");
        }
        if self.model.is_empty() {
            return bad("model is required");
        }
        if self.max_attempts == 0 {
            return bad("max_attempts must be at least 1");
        }
        if self.max_in_flight == 0 {
            return bad("max_in_flight must be at least 1");
        }
        if let Some(r) = self.rate_limit {
            if !(r.is_finite() && r > 0.0) {
                return bad("rate_limit must be positive");
            }
        }
        Ok(())
    }

    pub fn prompt(&self, cue: &str) -> String {
        self.template.replacen(CUE_PLACEHOLDER, cue, 1)
    }

    /// Delay before retry number `retry` (1-based), doubling up to the cap.
    pub fn backoff(&self, retry: u32) -> Duration {
        let factor = 1u64.checked_shl(retry.saturating_sub(1)).unwrap_or(u64::MAX);
        Duration::from_millis(self.backoff_ms.saturating_mul(factor).min(self.max_backoff_ms))
    }
}
