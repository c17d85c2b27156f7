//! LLM-prompted header extraction.
//!
//! [`prompt`] renders the four prompt variants, [`client`] speaks the
//! chat-completion wire protocol with retries, [`replay`] records and replays
//! interactions so runs are reproducible offline, [`parse`] pulls header
//! lists out of free-form model output, and [`extract`] ties them together
//! (with optional chunking and bounded concurrency for batches).

pub mod client;
pub mod extract;
pub mod parse;
pub mod prompt;
pub mod replay;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use client::{complete, ChatClient, ChatMessage, ChatRequest, ClientError, Completion, HttpChatClient, HttpReply};
pub use extract::{extract_batch, extract_headers, BatchOutcome};
pub use parse::parse_llm_response;
pub use prompt::{build_messages, build_prompt, PromptMessages, PromptStrategy, StrategyKind};
pub use replay::{prompt_hash, RecordingClient, ReplayClient};

/// Settings for one chat-completion endpoint. Sampling defaults are fully
/// deterministic (temperature and both penalties 0, 1000 max tokens).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmConfig {
    pub endpoint_url: String,
    pub model_name: String,
    pub temperature: f64,
    pub frequency_penalty: f64,
    pub presence_penalty: f64,
    pub max_tokens: u32,
    pub timeout_secs: u64,
    pub max_retries: u32,
    pub max_in_flight: usize,
    /// Base delay for exponential backoff, doubled per retry.
    pub backoff_ms: u64,
    /// Name of the environment variable holding the bearer token.
    pub api_key_env: Option<String>,
    /// Split documents longer than this many characters; `None` disables chunking.
    pub context_budget_chars: Option<usize>,
    pub chunk_overlap_chars: usize,
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig {
            endpoint_url: "http://localhost:8000/v1/chat/completions".into(),
            model_name: "gpt-4".into(),
            temperature: 0.0,
            frequency_penalty: 0.0,
            presence_penalty: 0.0,
            max_tokens: 1000,
            timeout_secs: 120,
            max_retries: 3,
            max_in_flight: 4,
            backoff_ms: 500,
            api_key_env: Some("SECTIONID_API_KEY".into()),
            context_budget_chars: None,
            chunk_overlap_chars: 200,
        }
    }
}

impl LlmConfig {
    pub fn validate(&self) -> Result<(), LlmError> {
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(LlmError::InvalidConfig("temperature must be ≥ 0".into()));
        }
        if self.max_tokens == 0 {
            return Err(LlmError::InvalidConfig("max_tokens must be ≥ 1".into()));
        }
        if self.max_in_flight == 0 {
            return Err(LlmError::InvalidConfig("max_in_flight must be ≥ 1".into()));
        }
        if let Some(budget) = self.context_budget_chars {
            if budget <= self.chunk_overlap_chars {
                return Err(LlmError::InvalidConfig(
                    "context_budget_chars must exceed chunk_overlap_chars".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs(self.timeout_secs)
    }
}

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("invalid LLM configuration: {0}")]
    InvalidConfig(String),
    #[error("prompt strategy is missing {0}")]
    MissingField(&'static str),
    #[error("transport failed after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("endpoint rejected credentials (HTTP {status})")]
    Auth { status: u16 },
    #[error("endpoint returned HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("malformed completion response: {0}")]
    Response(String),
    #[error("no recorded interaction for prompt hash {0}")]
    ReplayMiss(String),
    #[error("no header list found in model output")]
    Parse(#[from] parse::ParseError),
    #[error("replay store error: {0}")]
    Store(String),
}
