//! Gold-annotated corpora: JSONL loading, validation and summary statistics.
//!
//! One document per line:
//!
//! ```json
//! {"id": "d1", "text": "Allergies: none", "source_kind": "ehr_clean",
//!  "sections": [{"label": "Allergies", "header_span": [0, 10], "body_span": [10, 15]}]}
//! ```
//!
//! `source_kind` defaults to `ehr_clean`; `body_span` is optional. A section
//! may carry `raw_header`, in which case it must equal the text under
//! `header_span`.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::span::{CharIndex, Span};
use crate::tokenize::Tokenizer;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    #[default]
    EhrClean,
    OcrNoisy,
}

/// A note's text plus identity. Offsets into `text` are character offsets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub source_kind: SourceKind,
    index: CharIndex,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>, source_kind: SourceKind) -> Self {
        let text = text.into();
        let index = CharIndex::new(&text);
        Document {
            id: id.into(),
            text,
            source_kind,
            index,
        }
    }

    /// Length in characters.
    pub fn char_len(&self) -> usize {
        self.index.char_len()
    }

    pub fn slice(&self, span: Span) -> Option<&str> {
        self.index.slice(&self.text, span)
    }

    pub fn char_index(&self) -> &CharIndex {
        &self.index
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SectionAnnotation {
    pub label: String,
    pub header_span: Span,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body_span: Option<Span>,
    pub raw_header: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedDocument {
    pub document: Document,
    pub sections: Vec<SectionAnnotation>,
}

impl AnnotatedDocument {
    pub fn id(&self) -> &str {
        &self.document.id
    }

    pub fn header_spans(&self) -> Vec<Span> {
        self.sections.iter().map(|s| s.header_span).collect()
    }

    pub fn raw_headers(&self) -> Vec<&str> {
        self.sections.iter().map(|s| s.raw_header.as_str()).collect()
    }

    /// Serialize to one JSONL line in the gold interchange format.
    pub fn to_json_line(&self) -> String {
        let record = DocRecord {
            id: self.document.id.clone(),
            text: self.document.text.clone(),
            source_kind: self.document.source_kind,
            sections: self
                .sections
                .iter()
                .map(|s| SectionRecord {
                    label: s.label.clone(),
                    header_span: s.header_span,
                    body_span: s.body_span,
                    raw_header: None,
                })
                .collect(),
        };
        serde_json::to_string(&record).expect("document serializes")
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct DocRecord {
    id: String,
    text: String,
    #[serde(default)]
    source_kind: SourceKind,
    #[serde(default)]
    sections: Vec<SectionRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SectionRecord {
    label: String,
    header_span: Span,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    body_span: Option<Span>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    raw_header: Option<String>,
}

/// One violated corpus invariant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValidationIssue {
    EmptyId { position: usize },
    DuplicateId { id: String },
    EmptySpan { doc: String, section: usize, span: Span },
    OutOfBounds { doc: String, section: usize, span: Span, text_len: usize },
    SubstringMismatch { doc: String, section: usize, expected: String, found: String },
    UnsortedSections { doc: String, section: usize },
    OverlappingSpans { doc: String, first: Span, second: Span },
    InvalidBodySpan { doc: String, section: usize, body: Span },
}

impl ValidationIssue {
    /// Stable name of the violation class.
    pub fn kind(&self) -> &'static str {
        match self {
            ValidationIssue::EmptyId { .. } => "empty_id",
            ValidationIssue::DuplicateId { .. } => "duplicate_id",
            ValidationIssue::EmptySpan { .. } => "empty_span",
            ValidationIssue::OutOfBounds { .. } => "out_of_bounds",
            ValidationIssue::SubstringMismatch { .. } => "substring_mismatch",
            ValidationIssue::UnsortedSections { .. } => "unsorted_sections",
            ValidationIssue::OverlappingSpans { .. } => "overlapping_spans",
            ValidationIssue::InvalidBodySpan { .. } => "invalid_body_span",
        }
    }
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationIssue::EmptyId { position } => write!(f, "document #{position} has an empty id"),
            ValidationIssue::DuplicateId { id } => write!(f, "duplicate document id {id:?}"),
            ValidationIssue::EmptySpan { doc, section, span } => {
                write!(f, "{doc}: section {section} has empty header span {span}")
            }
            ValidationIssue::OutOfBounds { doc, section, span, text_len } => write!(
                f,
                "{doc}: section {section} header span {span} exceeds text length {text_len}"
            ),
            ValidationIssue::SubstringMismatch { doc, section, expected, found } => write!(
                f,
                "{doc}: section {section} raw_header {expected:?} does not match text {found:?}"
            ),
            ValidationIssue::UnsortedSections { doc, section } => {
                write!(f, "{doc}: section {section} starts before its predecessor")
            }
            ValidationIssue::OverlappingSpans { doc, first, second } => {
                write!(f, "{doc}: header spans {first} and {second} overlap")
            }
            ValidationIssue::InvalidBodySpan { doc, section, body } => {
                write!(f, "{doc}: section {section} body span {body} is out of place")
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("document {doc:?}: {issue}")]
    Span { doc: String, issue: ValidationIssue },
    #[error("{0}")]
    Invalid(ValidationIssue),
    #[error("corpus is empty")]
    EmptyCorpus,
}

/// Result of a corpus load: the documents plus anything dropped in lenient mode.
#[derive(Debug, Clone, Default)]
pub struct LoadedCorpus {
    pub documents: Vec<AnnotatedDocument>,
    pub dropped: Vec<ValidationIssue>,
}

/// Load a gold JSONL corpus.
///
/// In strict mode the first invariant violation is an error. In lenient mode
/// offending sections are dropped (and reported in [`LoadedCorpus::dropped`]);
/// documents themselves are always kept.
pub fn load_gold_corpus(path: impl AsRef<Path>, strict: bool) -> Result<LoadedCorpus, CorpusError> {
    let path = path.as_ref();
    let content = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_gold_corpus(&content, strict)
}

/// [`load_gold_corpus`] over an in-memory JSONL string.
pub fn parse_gold_corpus(content: &str, strict: bool) -> Result<LoadedCorpus, CorpusError> {
    let mut loaded = LoadedCorpus::default();
    for (lineno, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: DocRecord = serde_json::from_str(line).map_err(|e| CorpusError::Format {
            line: lineno + 1,
            message: e.to_string(),
        })?;
        let doc = build_document(record, strict, &mut loaded.dropped)?;
        loaded.documents.push(doc);
    }
    let mut seen: HashMap<&str, usize> = HashMap::new();
    for (i, doc) in loaded.documents.iter().enumerate() {
        let id = doc.id();
        let issue = if id.is_empty() {
            Some(ValidationIssue::EmptyId { position: i })
        } else if seen.insert(id, i).is_some() {
            Some(ValidationIssue::DuplicateId { id: id.to_string() })
        } else {
            None
        };
        if let Some(issue) = issue {
            if strict {
                return Err(CorpusError::Invalid(issue));
            }
            loaded.dropped.push(issue);
        }
    }
    Ok(loaded)
}

fn build_document(
    record: DocRecord,
    strict: bool,
    dropped: &mut Vec<ValidationIssue>,
) -> Result<AnnotatedDocument, CorpusError> {
    let document = Document::new(record.id, record.text, record.source_kind);
    let doc_id = document.id.clone();
    let fail = |issue: ValidationIssue| CorpusError::Span {
        doc: doc_id.clone(),
        issue,
    };

    let mut candidates: Vec<(usize, SectionRecord)> = record.sections.into_iter().enumerate().collect();
    let sorted = candidates
        .windows(2)
        .position(|w| w[1].1.header_span.start < w[0].1.header_span.start);
    if let Some(pos) = sorted {
        let issue = ValidationIssue::UnsortedSections {
            doc: doc_id.clone(),
            section: pos + 1,
        };
        if strict {
            return Err(fail(issue));
        }
        dropped.push(issue);
        candidates.sort_by_key(|(_, s)| s.header_span.start);
    }

    let mut sections: Vec<SectionAnnotation> = Vec::with_capacity(candidates.len());
    for (i, sec) in candidates {
        let span = sec.header_span;
        let issue = if span.is_empty() {
            Some(ValidationIssue::EmptySpan { doc: doc_id.clone(), section: i, span })
        } else if span.end > document.char_len() {
            Some(ValidationIssue::OutOfBounds {
                doc: doc_id.clone(),
                section: i,
                span,
                text_len: document.char_len(),
            })
        } else {
            let found = document.slice(span).unwrap_or_default();
            match &sec.raw_header {
                Some(expected) if expected != found => Some(ValidationIssue::SubstringMismatch {
                    doc: doc_id.clone(),
                    section: i,
                    expected: expected.clone(),
                    found: found.to_string(),
                }),
                _ => sections
                    .last()
                    .filter(|prev| prev.header_span.end > span.start)
                    .map(|prev| ValidationIssue::OverlappingSpans {
                        doc: doc_id.clone(),
                        first: prev.header_span,
                        second: span,
                    }),
            }
        };
        if let Some(issue) = issue {
            if strict {
                return Err(fail(issue));
            }
            dropped.push(issue);
            continue;
        }
        let raw_header = document.slice(span).unwrap_or_default().to_string();
        sections.push(SectionAnnotation {
            label: sec.label,
            header_span: span,
            body_span: sec.body_span,
            raw_header,
        });
    }

    // body spans are checked once neighbours are known
    let len = document.char_len();
    for i in 0..sections.len() {
        let Some(body) = sections[i].body_span else { continue };
        let limit = sections.get(i + 1).map_or(len, |next| next.header_span.start);
        if body.start < sections[i].header_span.end || body.end < body.start || body.end > limit {
            let issue = ValidationIssue::InvalidBodySpan { doc: doc_id.clone(), section: i, body };
            if strict {
                return Err(fail(issue));
            }
            dropped.push(issue);
            sections[i].body_span = None;
        }
    }

    Ok(AnnotatedDocument { document, sections })
}

/// Check every corpus invariant, returning one issue per violation.
pub fn validate_corpus(docs: &[AnnotatedDocument]) -> Vec<ValidationIssue> {
    let mut issues = Vec::new();
    let mut seen: HashMap<&str, ()> = HashMap::new();
    for (pos, doc) in docs.iter().enumerate() {
        let id = doc.id();
        if id.is_empty() {
            issues.push(ValidationIssue::EmptyId { position: pos });
        } else if seen.insert(id, ()).is_some() {
            issues.push(ValidationIssue::DuplicateId { id: id.to_string() });
        }
        let len = doc.document.char_len();
        for (i, sec) in doc.sections.iter().enumerate() {
            let span = sec.header_span;
            if span.is_empty() {
                issues.push(ValidationIssue::EmptySpan { doc: id.to_string(), section: i, span });
            } else if span.end > len {
                issues.push(ValidationIssue::OutOfBounds {
                    doc: id.to_string(),
                    section: i,
                    span,
                    text_len: len,
                });
            } else {
                let found = doc.document.slice(span).unwrap_or_default();
                if found != sec.raw_header {
                    issues.push(ValidationIssue::SubstringMismatch {
                        doc: id.to_string(),
                        section: i,
                        expected: sec.raw_header.clone(),
                        found: found.to_string(),
                    });
                }
            }
            if let Some(body) = sec.body_span {
                let limit = doc.sections.get(i + 1).map_or(len, |n| n.header_span.start);
                if body.start < span.end || body.end < body.start || body.end > limit {
                    issues.push(ValidationIssue::InvalidBodySpan {
                        doc: id.to_string(),
                        section: i,
                        body,
                    });
                }
            }
        }
        for (i, w) in doc.sections.windows(2).enumerate() {
            let (a, b) = (w[0].header_span, w[1].header_span);
            if b.start < a.start {
                issues.push(ValidationIssue::UnsortedSections {
                    doc: id.to_string(),
                    section: i + 1,
                });
            } else if b.start < a.end {
                issues.push(ValidationIssue::OverlappingSpans {
                    doc: id.to_string(),
                    first: a,
                    second: b,
                });
            }
        }
    }
    issues
}

/// Corpus summary. Standard deviations are population (divide by N).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub document_count: usize,
    pub mean_token_length: f64,
    pub stddev_token_length: f64,
    pub mean_sections_per_doc: f64,
    pub stddev_sections_per_doc: f64,
}

pub fn corpus_stats(docs: &[AnnotatedDocument], tokenizer: &dyn Tokenizer) -> Result<CorpusStats, CorpusError> {
    if docs.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    let token_counts: Vec<f64> = docs
        .iter()
        .map(|d| tokenizer.tokenize(&d.document.text).len() as f64)
        .collect();
    let section_counts: Vec<f64> = docs.iter().map(|d| d.sections.len() as f64).collect();
    let (mean_tok, sd_tok) = mean_and_population_sd(&token_counts);
    let (mean_sec, sd_sec) = mean_and_population_sd(&section_counts);
    Ok(CorpusStats {
        document_count: docs.len(),
        mean_token_length: mean_tok,
        stddev_token_length: sd_tok,
        mean_sections_per_doc: mean_sec,
        stddev_sections_per_doc: sd_sec,
    })
}

fn mean_and_population_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Write documents back out as gold JSONL.
pub fn write_gold_corpus<W: Write>(docs: &[AnnotatedDocument], mut out: W) -> io::Result<()> {
    for doc in docs {
        writeln!(out, "{}", doc.to_json_line())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokenize::DefaultTokenizer;

    const ONE: &str =
        r#"{"id":"d1","text":"Allergies: none","sections":[{"label":"Allergies","header_span":[0,10]}]}"#;

    fn doc(id: &str, text: &str, spans: &[(usize, usize)]) -> AnnotatedDocument {
        let document = Document::new(id, text, SourceKind::EhrClean);
        let sections = spans
            .iter()
            .map(|&(s, e)| SectionAnnotation {
                label: "x".into(),
                header_span: Span::new(s, e),
                body_span: None,
                raw_header: document.slice(Span::new(s, e)).unwrap_or_default().to_string(),
            })
            .collect();
        AnnotatedDocument { document, sections }
    }

    #[test]
    fn loads_single_document() {
        let loaded = parse_gold_corpus(ONE, true).unwrap();
        assert_eq!(loaded.documents.len(), 1);
        let d = &loaded.documents[0];
        assert_eq!(d.sections[0].raw_header, "Allergies:");
        assert_eq!(d.document.source_kind, SourceKind::EhrClean);
        assert!(loaded.dropped.is_empty());
    }

    #[test]
    fn empty_input_is_empty_corpus() {
        assert!(parse_gold_corpus("", true).unwrap().documents.is_empty());
        assert!(parse_gold_corpus("\n\n", false).unwrap().documents.is_empty());
    }

    #[test]
    fn out_of_bounds_span_names_document() {
        let line = ONE.replace("[0,10]", "[0,99]");
        let err = parse_gold_corpus(&line, true).unwrap_err();
        match err {
            CorpusError::Span { doc, issue } => {
                assert_eq!(doc, "d1");
                assert_eq!(issue.kind(), "out_of_bounds");
            }
            other => panic!("unexpected {other:?}"),
        }
        // lenient keeps the document, drops the section
        let loaded = parse_gold_corpus(&line, false).unwrap();
        assert_eq!(loaded.documents.len(), 1);
        assert!(loaded.documents[0].sections.is_empty());
        assert_eq!(loaded.dropped.len(), 1);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let input = format!("{ONE}\n{{not json\n");
        match parse_gold_corpus(&input, false).unwrap_err() {
            CorpusError::Format { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn raw_header_mismatch_is_span_error() {
        let line = r#"{"id":"d1","text":"Allergies: none","sections":[{"label":"A","header_span":[0,9],"raw_header":"Allergy"}]}"#;
        let err = parse_gold_corpus(line, true).unwrap_err();
        assert!(matches!(err, CorpusError::Span { ref issue, .. } if issue.kind() == "substring_mismatch"));
    }

    #[test]
    fn validation_issues() {
        let good = doc("d1", "Allergies: none", &[(0, 10)]);
        assert!(validate_corpus(std::slice::from_ref(&good)).is_empty());

        let dupes = vec![good.clone(), doc("d1", "Plan: rest", &[(0, 4)])];
        let issues = validate_corpus(&dupes);
        assert_eq!(issues, vec![ValidationIssue::DuplicateId { id: "d1".into() }]);

        let overlapping = doc("d2", "Allergies: none today", &[(0, 10), (5, 12)]);
        let issues = validate_corpus(&[overlapping]);
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].kind(), "overlapping_spans");
    }

    #[test]
    fn stats_use_population_sd() {
        let ten = ["w"; 10].join(" ");
        let twenty = vec!["w"; 20].join(" ");
        let docs = vec![doc("a", &ten, &[]), doc("b", &twenty, &[])];
        let stats = corpus_stats(&docs, &DefaultTokenizer).unwrap();
        assert_eq!(stats.mean_token_length, 15.0);
        assert_eq!(stats.stddev_token_length, 5.0);

        let three = doc("c", "A: x\nB: y\nC: z", &[(0, 1), (5, 6), (10, 11)]);
        let stats = corpus_stats(&[three], &DefaultTokenizer).unwrap();
        assert_eq!(stats.mean_sections_per_doc, 3.0);
        assert_eq!(stats.stddev_sections_per_doc, 0.0);

        assert!(matches!(corpus_stats(&[], &DefaultTokenizer), Err(CorpusError::EmptyCorpus)));
    }
}
