//! Section header identification for clinical documents.
//!
//! The crate is organised around one pipeline:
//!
//! ```text
//! corpus ──► segmenter (baselines | llm) ──► align ──► ontology ──► eval
//! ```
//!
//! - [`corpus`] reads gold-annotated notes from JSONL and summarises them.
//! - [`tokenize`] turns text into character-offset tokens and converts between
//!   header spans and IOB tags.
//! - [`baselines`] holds the keyword, regular-expression and hybrid rule segmenters.
//! - [`llm`] builds the four prompt variants, talks to a chat-completion endpoint
//!   (or a record/replay store) and parses header lists out of model output.
//! - [`align`] grounds free-text header strings to character spans, tolerating
//!   OCR noise.
//! - [`ontology`] maps surface forms to coarse section categories.
//! - [`eval`] scores predictions (token P/R/F1, accuracy, exact match) and
//!   computes annotator agreement.
//! - [`cli`] wires the above into the `sectionid` binary.
//!
//! All offsets are Unicode scalar value (character) offsets, end-exclusive.

pub mod align;
pub mod baselines;
pub mod cli;
pub mod corpus;
pub mod eval;
pub mod llm;
pub mod ontology;
pub mod span;
pub mod tokenize;

pub use align::{align_headers, sections_from_alignment, AlignmentResult, MatchKind};
pub use corpus::{AnnotatedDocument, Document, SectionAnnotation, SourceKind};
pub use eval::{evaluate_run, MetricsReport};
pub use ontology::Ontology;
pub use span::Span;
pub use tokenize::{tokenize, IobTag, Token};

/// An ordered list of header strings produced by a segmenter, optionally
/// grounded to character spans.
#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Prediction {
    pub headers: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spans: Option<Vec<Span>>,
}

impl Prediction {
    /// An ungrounded prediction.
    pub fn ungrounded<I, S>(headers: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Prediction {
            headers: headers.into_iter().map(Into::into).collect(),
            spans: None,
        }
    }

    /// A grounded prediction; `headers` and `spans` must be parallel.
    pub fn grounded(headers: Vec<String>, spans: Vec<Span>) -> Self {
        assert_eq!(headers.len(), spans.len(), "headers and spans must be parallel");
        Prediction {
            headers,
            spans: Some(spans),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.headers.is_empty()
    }

    pub fn len(&self) -> usize {
        self.headers.len()
    }

    pub fn is_grounded(&self) -> bool {
        self.spans.is_some()
    }
}
