//! Record/replay of chat interactions.
//!
//! Each interaction is one JSON file:
//! `{"prompt_hash": str, "request": {...}, "response_content": str}` where
//! `prompt_hash` is the SHA-256 of the serialized request (model, messages
//! and sampling settings). File names are free-form; recordings are written
//! as `<prompt_hash>.json`.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::client::{ChatClient, ChatRequest, ClientError, HttpReply};
use super::LlmError;

/// Hex SHA-256 of the request's canonical JSON form.
pub fn prompt_hash(request: &ChatRequest) -> String {
    let json = serde_json::to_string(request).expect("request serializes");
    hex::encode(Sha256::digest(json.as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayRecord {
    pub prompt_hash: String,
    pub request: ChatRequest,
    pub response_content: String,
}

impl ReplayRecord {
    pub fn new(request: ChatRequest, response_content: impl Into<String>) -> Self {
        ReplayRecord {
            prompt_hash: prompt_hash(&request),
            request,
            response_content: response_content.into(),
        }
    }

    /// Write as `<dir>/<prompt_hash>.json`.
    pub fn write_to(&self, dir: &Path) -> Result<PathBuf, LlmError> {
        fs::create_dir_all(dir).map_err(|e| LlmError::Store(e.to_string()))?;
        let path = dir.join(format!("{}.json", self.prompt_hash));
        let mut json = serde_json::to_string_pretty(self).expect("record serializes");
        json.push('\n');
        fs::write(&path, json).map_err(|e| LlmError::Store(format!("{}: {e}", path.display())))?;
        Ok(path)
    }
}

/// Serves recorded responses keyed by prompt hash; never touches the network.
#[derive(Debug, Clone, Default)]
pub struct ReplayClient {
    responses: HashMap<String, String>,
}

impl ReplayClient {
    /// Load every `*.json` record in `dir`.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self, LlmError> {
        let dir = dir.as_ref();
        let entries = fs::read_dir(dir).map_err(|e| LlmError::Store(format!("{}: {e}", dir.display())))?;
        let mut paths: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        let mut records = Vec::with_capacity(paths.len());
        for path in paths {
            let text = fs::read_to_string(&path).map_err(|e| LlmError::Store(format!("{}: {e}", path.display())))?;
            let record: ReplayRecord =
                serde_json::from_str(&text).map_err(|e| LlmError::Store(format!("{}: {e}", path.display())))?;
            if prompt_hash(&record.request) != record.prompt_hash {
                return Err(LlmError::Store(format!(
                    "{}: prompt_hash does not match the recorded request",
                    path.display()
                )));
            }
            records.push(record);
        }
        Ok(Self::from_records(records))
    }

    pub fn from_records(records: impl IntoIterator<Item = ReplayRecord>) -> Self {
        ReplayClient {
            responses: records
                .into_iter()
                .map(|r| (r.prompt_hash, r.response_content))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }
}

impl ChatClient for ReplayClient {
    fn send(&self, _endpoint: &str, request: &ChatRequest) -> Result<HttpReply, ClientError> {
        let hash = prompt_hash(request);
        match self.responses.get(&hash) {
            Some(content) => Ok(HttpReply::ok_with_content(content, "stop")),
            None => Err(ClientError::ReplayMiss(hash)),
        }
    }
}

/// Wraps a live client and writes every successful interaction to disk.
pub struct RecordingClient<C> {
    inner: C,
    dir: PathBuf,
}

impl<C: ChatClient> RecordingClient<C> {
    pub fn new(inner: C, dir: impl Into<PathBuf>) -> Self {
        RecordingClient {
            inner,
            dir: dir.into(),
        }
    }
}

#[derive(Deserialize)]
struct Body {
    choices: Vec<Choice>,
}
#[derive(Deserialize)]
struct Choice {
    message: Message,
}
#[derive(Deserialize)]
struct Message {
    #[serde(default)]
    content: Option<String>,
}

impl<C: ChatClient> ChatClient for RecordingClient<C> {
    fn send(&self, endpoint: &str, request: &ChatRequest) -> Result<HttpReply, ClientError> {
        let reply = self.inner.send(endpoint, request)?;
        if reply.status == 200 {
            if let Ok(body) = serde_json::from_str::<Body>(&reply.body) {
                let content = body
                    .choices
                    .into_iter()
                    .next()
                    .and_then(|c| c.message.content)
                    .unwrap_or_default();
                ReplayRecord::new(request.clone(), content)
                    .write_to(&self.dir)
                    .map_err(|e| ClientError::Store(e.to_string()))?;
            }
        }
        Ok(reply)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::prompt::{build_messages, PromptStrategy};
    use crate::llm::{complete, LlmConfig};

    struct Canned;
    impl ChatClient for Canned {
        fn send(&self, _: &str, _: &ChatRequest) -> Result<HttpReply, ClientError> {
            Ok(HttpReply::ok_with_content("[{\"section_title\":\"Plan\"}]\n", "stop"))
        }
    }

    #[test]
    fn record_then_replay_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let config = LlmConfig::default();
        let msgs = build_messages(&PromptStrategy::ZeroShot, "Plan: rest").unwrap();
        let live = complete(&config, &msgs, &RecordingClient::new(Canned, dir.path())).unwrap();

        let replay = ReplayClient::load(dir.path()).unwrap();
        assert_eq!(replay.len(), 1);
        let again = complete(&config, &msgs, &replay).unwrap();
        assert_eq!(again.content, live.content);

        // a different prompt is a miss, not a retry loop
        let other = build_messages(&PromptStrategy::ZeroShot, "HPI: none").unwrap();
        assert!(matches!(complete(&config, &other, &replay), Err(LlmError::ReplayMiss(_))));
    }

    #[test]
    fn hash_depends_on_sampling_settings() {
        let msgs = build_messages(&PromptStrategy::ZeroShot, "x").unwrap();
        let a = ChatRequest::new(&LlmConfig::default(), &msgs);
        let b = ChatRequest::new(
            &LlmConfig {
                temperature: 0.7,
                ..LlmConfig::default()
            },
            &msgs,
        );
        assert_ne!(prompt_hash(&a), prompt_hash(&b));
        assert_eq!(prompt_hash(&a).len(), 64);
    }

    #[test]
    fn rejects_tampered_record() {
        let dir = tempfile::tempdir().unwrap();
        let msgs = build_messages(&PromptStrategy::ZeroShot, "x").unwrap();
        let mut rec = ReplayRecord::new(ChatRequest::new(&LlmConfig::default(), &msgs), "[]");
        rec.prompt_hash = "0".repeat(64);
        std::fs::write(dir.path().join("d1.json"), serde_json::to_string(&rec).unwrap()).unwrap();
        assert!(matches!(ReplayClient::load(dir.path()), Err(LlmError::Store(_))));
    }
}
