//! The four prompt variants: zero-shot, one-shot, chain-of-thought and
//! close-ended. The instruction block goes in the system message and the note
//! in the user message, delimited by `###`.

use serde::{Deserialize, Serialize};

use super::LlmError;

const ROLE: &str =
    "You are a clinician and you read the given clinical document and identify section headers from them.";
const FIND_ONLY: &str = "Find section headers only from the clinical text.";
const RETURN_JSON: &str =
    "For each section header, return the answer as a JSON object by filling in the following dictionary.";
const RETURN_JSON_ONE_SHOT: &str =
    "For each section header return the answer as a JSON object by filling in the following dictionary.";
const TITLE_FIELD: &str = "{section_title: // string representing the section header}";
const TITLE_AND_COT_FIELDS: &str =
    "{section_title: // string representing the section header\nCoT: // string describing thinking step by step }";
const CLASSIFY: &str = "Classify the section headers into one of the following section type labels.";
const NONE_CLAUSE: &str =
    "If the section headers do not belong to any of the above section type labels, classify them as 'None'.";
const PRINT_LIST: &str = "Only print the section types identified in a list.";
const NOTE_LEAD: &str = "Here are some clinical notes of a patient from a doctor.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum StrategyKind {
    ZeroShot,
    OneShot,
    ChainOfThought,
    CloseEnded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PromptStrategy {
    ZeroShot,
    /// Shows one worked example: a note and its header list.
    OneShot {
        example_text: String,
        example_headers: Vec<String>,
    },
    ChainOfThought,
    /// Restricts answers to a fixed label set, with `None` for anything else.
    CloseEnded { labels: Vec<String> },
}

impl PromptStrategy {
    pub fn kind(&self) -> StrategyKind {
        match self {
            PromptStrategy::ZeroShot => StrategyKind::ZeroShot,
            PromptStrategy::OneShot { .. } => StrategyKind::OneShot,
            PromptStrategy::ChainOfThought => StrategyKind::ChainOfThought,
            PromptStrategy::CloseEnded { .. } => StrategyKind::CloseEnded,
        }
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        match self {
            PromptStrategy::OneShot { example_text, example_headers } => {
                if example_text.trim().is_empty() {
                    return Err(LlmError::MissingField("example_doc"));
                }
                if example_headers.iter().all(|h| h.trim().is_empty()) {
                    return Err(LlmError::MissingField("example_headers"));
                }
            }
            PromptStrategy::CloseEnded { labels } => {
                if labels.iter().all(|l| l.trim().is_empty()) {
                    return Err(LlmError::MissingField("label_set"));
                }
            }
            PromptStrategy::ZeroShot | PromptStrategy::ChainOfThought => {}
        }
        Ok(())
    }
}

/// A rendered prompt split by chat role.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptMessages {
    pub system: String,
    pub user: String,
}

impl PromptMessages {
    /// Both messages as one block of text.
    pub fn joined(&self) -> String {
        format!("{}\n{}", self.system, self.user)
    }

    /// The note text between the `###` delimiters of the user message.
    pub fn context_text(&self) -> Option<&str> {
        self.user
            .strip_prefix(NOTE_LEAD)?
            .strip_prefix(" ### ")?
            .strip_suffix(" ###")
    }
}

pub fn build_messages(strategy: &PromptStrategy, text: &str) -> Result<PromptMessages, LlmError> {
    strategy.validate()?;
    let lines: Vec<String> = match strategy {
        PromptStrategy::ZeroShot => vec![ROLE.into(), FIND_ONLY.into(), RETURN_JSON.into(), TITLE_FIELD.into()],
        PromptStrategy::ChainOfThought => vec![
            ROLE.into(),
            FIND_ONLY.into(),
            RETURN_JSON.into(),
            TITLE_AND_COT_FIELDS.into(),
        ],
        PromptStrategy::OneShot { example_text, example_headers } => {
            let answer: Vec<serde_json::Value> = example_headers
                .iter()
                .filter(|h| !h.trim().is_empty())
                .map(|h| serde_json::json!({ "section_title": h }))
                .collect();
            vec![
                ROLE.into(),
                FIND_ONLY.into(),
                format!("Example clinical text: {example_text}"),
                format!("Answer: {}", serde_json::Value::Array(answer)),
                RETURN_JSON_ONE_SHOT.into(),
                TITLE_FIELD.into(),
            ]
        }
        PromptStrategy::CloseEnded { labels } => {
            let labels: Vec<&str> = labels.iter().map(|l| l.trim()).filter(|l| !l.is_empty()).collect();
            vec![
                ROLE.into(),
                CLASSIFY.into(),
                format!("section types: {}", labels.join(", ")),
                NONE_CLAUSE.into(),
                PRINT_LIST.into(),
            ]
        }
    };
    Ok(PromptMessages {
        system: lines.join("\n"),
        user: format!("{NOTE_LEAD} ### {text} ###"),
    })
}

/// Render the full prompt for `text` as a single string.
pub fn build_prompt(strategy: &PromptStrategy, text: &str) -> Result<String, LlmError> {
    build_messages(strategy, text).map(|m| m.joined())
}
