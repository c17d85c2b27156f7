//! Non-LLM segmenters: keyword lexicon, regular-expression rules, and a
//! hybrid of the two.
//!
//! All three only look at the start of each line, return spans in document
//! order, and never return overlapping spans.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Document;
use crate::ontology::Ontology;
use crate::span::Span;
use crate::tokenize::tokenize;
use crate::Prediction;

const TOP_SECTION_NAMES: &str = include_str!("../data/top50_sections.txt");

/// Line-initial Title-Case or ALL-CAPS phrase followed by a colon.
pub const TITLE_COLON_PATTERN: &str = r"^[ \t]*(?P<header>\p{Lu}[\p{L}\p{N}'’./&()-]*(?:[ \t]+(?:[\p{Lu}\p{N}][\p{L}\p{N}'’./&()-]*|&|/|-|of|and|or|the|at|for|to|in|on|with|a|an|as|by))*)[ \t]*:";
/// A whole line in capitals, optionally ending in a colon.
pub const ALL_CAPS_LINE_PATTERN: &str = r"^[ \t]*(?P<header>\p{Lu}[\p{Lu}\p{N}'’./&()-]*(?:[ \t]+[\p{Lu}\p{N}'’./&()-]+)*)[ \t]*:?[ \t]*$";

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("rule {name:?} does not compile: {message}")]
    InvalidPattern { name: String, message: String },
    #[error("invalid lexicon: {0}")]
    InvalidLexicon(String),
    #[error("invalid rule configuration: {0}")]
    InvalidConfig(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("ruleset format error: {0}")]
    Format(String),
}

/// Where a baseline header came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchOrigin {
    Keyword,
    Rule,
}

/// A grounded header found by a baseline segmenter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeaderMatch {
    pub text: String,
    pub span: Span,
    pub origin: MatchOrigin,
    /// Name of the regex rule, for rule matches.
    pub rule: Option<String>,
}

fn into_prediction(matches: Vec<HeaderMatch>) -> Prediction {
    let (headers, spans) = matches.into_iter().map(|m| (m.text, m.span)).unzip();
    Prediction::grounded(headers, spans)
}

/// The shipped list of the 50 most frequent section names, in rank order.
pub fn top_section_names() -> Vec<String> {
    TOP_SECTION_NAMES
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect()
}

/// A set of header surface forms.
#[derive(Debug, Clone)]
pub struct HeaderLexicon {
    entries: BTreeSet<String>,
    case_sensitive: bool,
    // (entry chars, entry) longest first, lowercased when case-insensitive
    by_length: Vec<(Vec<char>, String)>,
}

impl HeaderLexicon {
    pub fn new<I, S>(entries: I, case_sensitive: bool) -> Result<Self, BaselineError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut set = BTreeSet::new();
        for e in entries {
            let e = e.as_ref().trim();
            if e.is_empty() {
                return Err(BaselineError::InvalidLexicon("whitespace-only entry".into()));
            }
            set.insert(e.split_whitespace().collect::<Vec<_>>().join(" "));
        }
        if set.is_empty() {
            return Err(BaselineError::InvalidLexicon("no entries".into()));
        }
        let mut by_length: Vec<(Vec<char>, String)> = set
            .iter()
            .map(|e| {
                let key = if case_sensitive { e.clone() } else { e.to_lowercase() };
                (key.chars().collect(), e.clone())
            })
            .collect();
        by_length.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.1.cmp(&b.1)));
        Ok(HeaderLexicon {
            entries: set,
            case_sensitive,
            by_length,
        })
    }

    /// Lexicon file: one surface form per line, `#` starts a comment.
    pub fn parse(content: &str, case_sensitive: bool) -> Result<Self, BaselineError> {
        let entries = content
            .lines()
            .map(|l| l.split('#').next().unwrap_or_default().trim())
            .filter(|l| !l.is_empty());
        Self::new(entries, case_sensitive)
    }

    pub fn load(path: impl AsRef<Path>, case_sensitive: bool) -> Result<Self, BaselineError> {
        let path = path.as_ref();
        let content = fs::read_to_string(path).map_err(|source| BaselineError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&content, case_sensitive)
    }

    /// The 50 most frequent real-world section names plus every surface form
    /// of `ontology`, matched case-insensitively.
    pub fn default_for(ontology: &Ontology) -> Self {
        let mut entries = top_section_names();
        entries.extend(ontology.surface_forms(crate::ontology::Level::Coarse).iter().cloned());
        Self::new(entries, false).expect("default lexicon is non-empty")
    }

    pub fn entries(&self) -> &BTreeSet<String> {
        &self.entries
    }

    pub fn case_sensitive(&self) -> bool {
        self.case_sensitive
    }

    /// Longest entry matching at the start of `line` (chars), with a word
    /// boundary after it. Returns the match length in chars.
    fn longest_prefix(&self, line: &[char]) -> Option<usize> {
        let fold = |c: char| -> char {
            if self.case_sensitive {
                c
            } else {
                c.to_lowercase().next().unwrap_or(c)
            }
        };
        self.by_length.iter().find_map(|(entry, _)| {
            let n = entry.len();
            if n > line.len() {
                return None;
            }
            let matches = entry.iter().zip(line).all(|(&e, &c)| {
                // lexicon entries use single spaces; a tab in the text also counts
                e == fold(c) || (e == ' ' && c.is_whitespace() && c != '\n')
            });
            let boundary = line.get(n).is_none_or(|c| !c.is_alphanumeric());
            (matches && boundary).then_some(n)
        })
    }
}

/// A named regular-expression rule. The `header` capture group, when
/// present, marks the header text; otherwise the whole match is used.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RuleSpec {
    pub name: String,
    pub pattern: String,
}

#[derive(Debug, Clone)]
pub struct RuleConfig {
    rules: Vec<(String, Regex)>,
    pub max_header_tokens: usize,
    pub require_line_start: bool,
}

impl Default for RuleConfig {
    fn default() -> Self {
        Self::new(
            vec![
                RuleSpec {
                    name: "title_colon".into(),
                    pattern: TITLE_COLON_PATTERN.into(),
                },
                RuleSpec {
                    name: "all_caps_line".into(),
                    pattern: ALL_CAPS_LINE_PATTERN.into(),
                },
            ],
            8,
            true,
        )
        .expect("default rules compile")
    }
}

impl RuleConfig {
    pub fn new(
        rules: Vec<RuleSpec>,
        max_header_tokens: usize,
        require_line_start: bool,
    ) -> Result<Self, BaselineError> {
        if rules.is_empty() {
            return Err(BaselineError::InvalidConfig("no rules".into()));
        }
        if max_header_tokens == 0 {
            return Err(BaselineError::InvalidConfig("max_header_tokens must be ≥ 1".into()));
        }
        let compiled = rules
            .into_iter()
            .map(|r| {
                Regex::new(&r.pattern)
                    .map(|re| (r.name.clone(), re))
                    .map_err(|e| BaselineError::InvalidPattern {
                        name: r.name,
                        message: e.to_string(),
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(RuleConfig {
            rules: compiled,
            max_header_tokens,
            require_line_start,
        })
    }

    /// Ruleset file: a JSON list of `{"name": ..., "pattern": ...}`.
    pub fn load(path: impl AsRef<Path>, max_header_tokens: usize) -> Result<Self, BaselineError> {
        let path = path.as_ref();
        let content = fs::read_to_string(path).map_err(|source| BaselineError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let specs: Vec<RuleSpec> =
            serde_json::from_str(&content).map_err(|e| BaselineError::Format(e.to_string()))?;
        Self::new(specs, max_header_tokens, true)
    }

    pub fn rule_names(&self) -> impl Iterator<Item = &str> {
        self.rules.iter().map(|(n, _)| n.as_str())
    }
}

/// Lines of a document as (first char offset, chars), newline excluded.
fn lines(doc: &Document) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut offset = 0;
    for line in doc.text.split('\n') {
        out.push((offset, line));
        offset += line.chars().count() + 1;
    }
    out
}

fn leading_blank(line: &str) -> usize {
    line.chars().take_while(|c| *c == ' ' || *c == '\t').count()
}

pub fn keyword_matches(doc: &Document, lexicon: &HeaderLexicon) -> Vec<HeaderMatch> {
    let mut out = Vec::new();
    for (offset, line) in lines(doc) {
        let chars: Vec<char> = line.trim_end_matches('\r').chars().collect();
        let lead = leading_blank(line);
        if let Some(n) = lexicon.longest_prefix(&chars[lead..]) {
            let span = Span::new(offset + lead, offset + lead + n);
            out.push(HeaderMatch {
                text: chars[lead..lead + n].iter().collect(),
                span,
                origin: MatchOrigin::Keyword,
                rule: None,
            });
        }
    }
    out
}

/// Every line-initial lexicon entry, longest match per line.
pub fn keyword_segment(doc: &Document, lexicon: &HeaderLexicon) -> Prediction {
    into_prediction(keyword_matches(doc, lexicon))
}

pub fn regex_matches(doc: &Document, config: &RuleConfig) -> Vec<HeaderMatch> {
    let mut out = Vec::new();
    for (offset, raw_line) in lines(doc) {
        let line = raw_line.trim_end_matches('\r');
        let lead_bytes = line.len() - line.trim_start_matches([' ', '\t']).len();
        for (name, re) in &config.rules {
            let Some(caps) = re.captures(line) else { continue };
            let m = caps.name("header").unwrap_or_else(|| caps.get(0).unwrap());
            let whole = caps.get(0).unwrap();
            if config.require_line_start && whole.start() > lead_bytes {
                continue;
            }
            let text = m.as_str().trim_end().trim_end_matches(':').trim_end();
            let text = text.trim_start();
            if text.is_empty() || !text.chars().any(char::is_alphabetic) {
                continue;
            }
            if tokenize(text).len() > config.max_header_tokens {
                continue;
            }
            let start_byte = m.start() + (m.as_str().len() - m.as_str().trim_start().len());
            let start = offset + line[..start_byte].chars().count();
            out.push(HeaderMatch {
                text: text.to_string(),
                span: Span::new(start, start + text.chars().count()),
                origin: MatchOrigin::Rule,
                rule: Some(name.clone()),
            });
            break;
        }
    }
    out
}

/// Apply the ordered rules to each line; first matching rule wins.
pub fn regex_segment(doc: &Document, config: &RuleConfig) -> Prediction {
    into_prediction(regex_matches(doc, config))
}

/// Union of keyword and rule matches, deduplicated by overlap with keyword
/// matches taking precedence.
pub fn rule_matches(doc: &Document, lexicon: &HeaderLexicon, config: &RuleConfig) -> Vec<HeaderMatch> {
    let keyword = keyword_matches(doc, lexicon);
    let mut merged = keyword.clone();
    for m in regex_matches(doc, config) {
        if !keyword.iter().any(|k| k.span.overlaps(&m.span)) {
            merged.push(m);
        }
    }
    merged.sort_by_key(|m| m.span.start);
    // drop any later match overlapping a kept one
    let mut out: Vec<HeaderMatch> = Vec::with_capacity(merged.len());
    for m in merged {
        if out.last().is_none_or(|p| p.span.end <= m.span.start) {
            out.push(m);
        }
    }
    out
}

pub fn rule_segment(doc: &Document, lexicon: &HeaderLexicon, config: &RuleConfig) -> Prediction {
    into_prediction(rule_matches(doc, lexicon, config))
}
