//! Extract header lists from model output.
//!
//! Accepted shapes, anywhere in the text or inside fenced code blocks:
//! a JSON array of `{"section_title": ...}` objects, newline-separated
//! objects, a JSON array of plain strings (close-ended answers), and as a
//! last resort unquoted `section_title: "..."` pairs or single-quoted lists.
//! `CoT` fields and surrounding prose are ignored.

use std::sync::OnceLock;

use regex::Regex;
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("no extractable header structure in model output")]
pub struct ParseError;

const TITLE_KEY: &str = "section_title";

fn fence_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?s)```[A-Za-z0-9_-]*[ \t]*\r?\n?(.*?)```").unwrap())
}

fn loose_title_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r#"['"]?section_title['"]?\s*:\s*(?:"([^"\n]*)"|'([^'\n]*)')"#).unwrap())
}

fn quoted_list_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\[\s*'[^\]]*'\s*\]").unwrap())
}

fn single_quoted_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"'([^']*)'").unwrap())
}

pub fn parse_llm_response(raw: &str) -> Result<Vec<String>, ParseError> {
    let fenced: Vec<&str> = fence_re()
        .captures_iter(raw)
        .filter_map(|c| c.get(1).map(|m| m.as_str()))
        .collect();
    let regions: Vec<&str> = if fenced.is_empty() { vec![raw] } else { fenced };

    let mut found_structure = false;
    let mut headers = Vec::new();
    for region in &regions {
        for value in json_values(region) {
            found_structure |= collect_titles(&value, &mut headers);
        }
    }
    if !found_structure {
        for region in &regions {
            for caps in loose_title_re().captures_iter(region) {
                found_structure = true;
                if let Some(m) = caps.get(1).or_else(|| caps.get(2)) {
                    headers.push(m.as_str().to_string());
                }
            }
        }
    }
    if !found_structure {
        for region in &regions {
            for list in quoted_list_re().find_iter(region) {
                found_structure = true;
                headers.extend(
                    single_quoted_re()
                        .captures_iter(list.as_str())
                        .map(|c| c[1].to_string()),
                );
            }
        }
    }
    if !found_structure {
        return Err(ParseError);
    }

    let mut out: Vec<String> = Vec::with_capacity(headers.len());
    for h in headers {
        let h = h.trim();
        if h.is_empty() || out.last().is_some_and(|prev| prev == h) {
            continue;
        }
        out.push(h.to_string());
    }
    Ok(out)
}

/// Every top-level JSON array or object embedded in `text`, in order.
fn json_values(text: &str) -> Vec<Value> {
    let mut values = Vec::new();
    let mut pos = 0;
    while let Some(offset) = text[pos..].find(['[', '{']) {
        let start = pos + offset;
        let mut stream = serde_json::Deserializer::from_str(&text[start..]).into_iter::<Value>();
        match stream.next() {
            Some(Ok(v)) => {
                values.push(v);
                pos = start + stream.byte_offset();
            }
            _ => pos = start + 1,
        }
    }
    values
}

/// Append titles found in `value`; returns whether `value` had a recognised
/// header shape (even an empty list counts).
fn collect_titles(value: &Value, out: &mut Vec<String>) -> bool {
    match value {
        Value::Object(map) => {
            if let Some(title) = map.get(TITLE_KEY) {
                if let Some(s) = title.as_str() {
                    out.push(s.to_string());
                }
                return true;
            }
            let mut any = false;
            for v in map.values() {
                if matches!(v, Value::Array(_) | Value::Object(_)) {
                    any |= collect_titles(v, out);
                }
            }
            any
        }
        Value::Array(items) => {
            if items.is_empty() {
                return true;
            }
            let mut any = false;
            for item in items {
                match item {
                    Value::String(s) => {
                        out.push(s.clone());
                        any = true;
                    }
                    Value::Object(_) | Value::Array(_) => any |= collect_titles(item, out),
                    _ => {}
                }
            }
            any
        }
        _ => false,
    }
}
