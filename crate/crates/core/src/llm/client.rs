//! Chat-completion wire protocol and the retrying `complete` call.

use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::prompt::PromptMessages;
use super::{LlmConfig, LlmError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

/// Request body POSTed to the endpoint. Field order is fixed, which keeps
/// the serialized form (and therefore replay hashes) stable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub max_tokens: u32,
    pub frequency_penalty: f64,
    pub presence_penalty: f64,
}

impl ChatRequest {
    pub fn new(config: &LlmConfig, messages: &PromptMessages) -> Self {
        ChatRequest {
            model: config.model_name.clone(),
            messages: vec![
                ChatMessage {
                    role: "system".into(),
                    content: messages.system.clone(),
                },
                ChatMessage {
                    role: "user".into(),
                    content: messages.user.clone(),
                },
            ],
            temperature: config.temperature,
            max_tokens: config.max_tokens,
            frequency_penalty: config.frequency_penalty,
            presence_penalty: config.presence_penalty,
        }
    }
}

/// Raw HTTP outcome.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpReply {
    pub status: u16,
    pub body: String,
}

impl HttpReply {
    /// A 200 reply carrying `content` as the assistant message.
    pub fn ok_with_content(content: &str, finish_reason: &str) -> Self {
        let body = serde_json::json!({
            "choices": [{
                "index": 0,
                "message": { "role": "assistant", "content": content },
                "finish_reason": finish_reason,
            }]
        });
        HttpReply {
            status: 200,
            body: body.to_string(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ClientError {
    /// Connection, timeout or I/O failure; retried.
    #[error("{0}")]
    Transport(String),
    #[error("no recorded interaction for prompt hash {0}")]
    ReplayMiss(String),
    #[error("{0}")]
    Store(String),
}

/// Anything that can deliver a chat request and return the HTTP reply.
pub trait ChatClient: Send + Sync {
    fn send(&self, endpoint: &str, request: &ChatRequest) -> Result<HttpReply, ClientError>;
}

impl<C: ChatClient + ?Sized> ChatClient for &C {
    fn send(&self, endpoint: &str, request: &ChatRequest) -> Result<HttpReply, ClientError> {
        (**self).send(endpoint, request)
    }
}

/// Blocking HTTP client with bearer-token auth read from the environment.
pub struct HttpChatClient {
    agent: ureq::Agent,
    token: Option<String>,
}

impl HttpChatClient {
    pub fn new(config: &LlmConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout()))
            .http_status_as_error(false)
            .build()
            .into();
        let token = config
            .api_key_env
            .as_deref()
            .and_then(|var| std::env::var(var).ok())
            .filter(|t| !t.is_empty());
        HttpChatClient { agent, token }
    }
}

impl ChatClient for HttpChatClient {
    fn send(&self, endpoint: &str, request: &ChatRequest) -> Result<HttpReply, ClientError> {
        let mut req = self.agent.post(endpoint).header("Content-Type", "application/json");
        if let Some(token) = &self.token {
            req = req.header("Authorization", format!("Bearer {token}"));
        }
        let body = serde_json::to_string(request).map_err(|e| ClientError::Transport(e.to_string()))?;
        let mut resp = req
            .send(body.as_bytes())
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let body = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        Ok(HttpReply { status, body })
    }
}

/// One assistant message plus bookkeeping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub content: String,
    pub attempts: u32,
    /// The endpoint stopped because it hit `max_tokens`.
    pub truncated: bool,
}

#[derive(Deserialize)]
struct ResponseBody {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ResponseMessage,
    #[serde(default)]
    finish_reason: Option<String>,
}

#[derive(Deserialize)]
struct ResponseMessage {
    #[serde(default)]
    content: Option<String>,
}

fn backoff(config: &LlmConfig, retry: u32) -> Duration {
    let factor = 1u64 << retry.min(16);
    Duration::from_millis(config.backoff_ms.saturating_mul(factor))
}

/// One chat-completion round trip. Transport failures, 429 and 5xx replies
/// are retried with exponential backoff up to `max_retries` times; 401/403
/// fail immediately.
pub fn complete(
    config: &LlmConfig,
    messages: &PromptMessages,
    client: &dyn ChatClient,
) -> Result<Completion, LlmError> {
    config.validate()?;
    let request = ChatRequest::new(config, messages);
    let max_attempts = config.max_retries + 1;
    let mut attempts = 0;
    loop {
        attempts += 1;
        let failure = match client.send(&config.endpoint_url, &request) {
            Ok(reply) if reply.status == 200 => return read_completion(&reply.body, attempts),
            Ok(reply) if matches!(reply.status, 401 | 403) => {
                return Err(LlmError::Auth { status: reply.status })
            }
            Ok(reply) if reply.status == 429 || reply.status >= 500 => {
                format!("HTTP {}", reply.status)
            }
            Ok(reply) => {
                return Err(LlmError::Http {
                    status: reply.status,
                    body: reply.body,
                })
            }
            Err(ClientError::Transport(msg)) => msg,
            Err(ClientError::ReplayMiss(hash)) => return Err(LlmError::ReplayMiss(hash)),
            Err(ClientError::Store(msg)) => return Err(LlmError::Store(msg)),
        };
        if attempts >= max_attempts {
            return Err(LlmError::Transport {
                attempts,
                message: failure,
            });
        }
        log::warn!("attempt {attempts} failed ({failure}); retrying");
        thread::sleep(backoff(config, attempts - 1));
    }
}

fn read_completion(body: &str, attempts: u32) -> Result<Completion, LlmError> {
    let parsed: ResponseBody = serde_json::from_str(body).map_err(|e| LlmError::Response(e.to_string()))?;
    let choice = parsed
        .choices
        .into_iter()
        .next()
        .ok_or_else(|| LlmError::Response("no choices".into()))?;
    let truncated = choice.finish_reason.as_deref() == Some("length");
    if truncated {
        log::warn!("completion hit max_tokens and may be truncated");
    }
    Ok(Completion {
        content: choice.message.content.unwrap_or_default(),
        attempts,
        truncated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::prompt::{build_messages, PromptStrategy};
    use std::sync::Mutex;

    /// Replies with a scripted sequence of statuses, then 200.
    struct Scripted {
        statuses: Mutex<Vec<u16>>,
        calls: Mutex<u32>,
    }

    impl Scripted {
        fn new(statuses: &[u16]) -> Self {
            Scripted {
                statuses: Mutex::new(statuses.iter().rev().copied().collect()),
                calls: Mutex::new(0),
            }
        }
    }

    impl ChatClient for Scripted {
        fn send(&self, _: &str, _: &ChatRequest) -> Result<HttpReply, ClientError> {
            *self.calls.lock().unwrap() += 1;
            match self.statuses.lock().unwrap().pop() {
                Some(0) => Err(ClientError::Transport("connection reset".into())),
                Some(status) => Ok(HttpReply { status, body: "{}".into() }),
                None => Ok(HttpReply::ok_with_content("[]", "stop")),
            }
        }
    }

    fn config() -> LlmConfig {
        LlmConfig {
            backoff_ms: 0,
            max_retries: 3,
            ..LlmConfig::default()
        }
    }

    fn msgs() -> PromptMessages {
        build_messages(&PromptStrategy::ZeroShot, "Plan: rest").unwrap()
    }

    #[test]
    fn retries_rate_limits() {
        let client = Scripted::new(&[429, 429]);
        let c = complete(&config(), &msgs(), &client).unwrap();
        assert_eq!(c.attempts, 3);
        assert_eq!(c.content, "[]");
        assert!(!c.truncated);
    }

    #[test]
    fn auth_failure_is_immediate() {
        let client = Scripted::new(&[401]);
        assert!(matches!(complete(&config(), &msgs(), &client), Err(LlmError::Auth { status: 401 })));
        assert_eq!(*client.calls.lock().unwrap(), 1);
    }

    #[test]
    fn gives_up_after_max_retries() {
        let client = Scripted::new(&[503, 0, 500, 502, 500]);
        match complete(&config(), &msgs(), &client) {
            Err(LlmError::Transport { attempts, .. }) => assert_eq!(attempts, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn client_errors_are_not_retried() {
        let client = Scripted::new(&[400]);
        assert!(matches!(complete(&config(), &msgs(), &client), Err(LlmError::Http { status: 400, .. })));
        assert_eq!(*client.calls.lock().unwrap(), 1);
    }

    #[test]
    fn flags_truncation() {
        struct Long;
        impl ChatClient for Long {
            fn send(&self, _: &str, _: &ChatRequest) -> Result<HttpReply, ClientError> {
                Ok(HttpReply::ok_with_content("[{\"section_title\":\"HP", "length"))
            }
        }
        assert!(complete(&config(), &msgs(), &Long).unwrap().truncated);
    }

    #[test]
    fn request_body_field_order() {
        let req = ChatRequest::new(&config(), &msgs());
        let json = serde_json::to_string(&req).unwrap();
        assert!(json.starts_with(r#"{"model":"gpt-4","messages":[{"role":"system","content":"You are a clinician"#));
        assert!(json.ends_with(r#""temperature":0.0,"max_tokens":1000,"frequency_penalty":0.0,"presence_penalty":0.0}"#));
    }
}
