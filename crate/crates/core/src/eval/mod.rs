//! Scoring: token-level metrics over IOB tags, header exact match, the
//! run-level [`MetricsReport`], and annotator agreement.

mod iaa;
mod metrics;
mod report;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::align::{align_headers, DEFAULT_MAX_EDIT_RATIO};
use crate::corpus::AnnotatedDocument;
use crate::ontology::{normalize_surface, Ontology, UNKNOWN};
use crate::span::Span;
use crate::tokenize::{spans_to_iob, tokenize, IobError};
use crate::Prediction;

pub use iaa::{iaa_report, jaccard, AnnotationPair, IaaReport};
pub use metrics::{exact_match, exact_match_count, f1_score, token_counts, token_metrics, TokenCounts, TokenScores};
pub use report::{render_report, ReportFormat};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("tag sequences differ in length: gold {gold}, prediction {pred}")]
    LengthMismatch { gold: usize, pred: usize },
    #[error("{0} tags are not a valid IOB sequence")]
    MalformedTags(&'static str),
    #[error("document {doc}: {source}")]
    Iob { doc: String, source: IobError },
    #[error("nothing to evaluate")]
    EmptyInput,
}

/// How predictions are compared with gold.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    /// Ground headers to spans and score tokens.
    #[default]
    Open,
    /// Compare the multiset of categories per document; each header counts
    /// as one unit instead of its tokens.
    CloseEnded,
}

#[derive(Debug, Clone)]
pub struct EvalOptions<'a> {
    pub method: String,
    pub corpus: String,
    pub mode: EvalMode,
    pub max_edit_ratio: f64,
    /// Used to map labels to categories in close-ended mode. Without it,
    /// labels are compared by normalized surface form.
    pub ontology: Option<&'a Ontology>,
}

impl Default for EvalOptions<'_> {
    fn default() -> Self {
        EvalOptions {
            method: String::new(),
            corpus: String::new(),
            mode: EvalMode::Open,
            max_edit_ratio: DEFAULT_MAX_EDIT_RATIO,
            ontology: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub accuracy: f64,
    pub all_token_accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub em: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    #[serde(flatten)]
    pub tokens: TokenCounts,
    pub gold_headers: u64,
    pub matched_exact: u64,
    pub documents: u64,
    /// Documents with no prediction record; scored as empty predictions.
    pub missing_predictions: u64,
    /// Predicted headers that could not be grounded in the text.
    pub unmatched_predictions: u64,
}

impl std::ops::AddAssign for Counts {
    fn add_assign(&mut self, o: Self) {
        self.tokens += o.tokens;
        self.gold_headers += o.gold_headers;
        self.matched_exact += o.matched_exact;
        self.documents += o.documents;
        self.missing_predictions += o.missing_predictions;
        self.unmatched_predictions += o.unmatched_predictions;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocMetrics {
    pub id: String,
    pub scores: Scores,
    pub counts: Counts,
}

/// Scores for one method on one corpus. Token scores are micro-averaged;
/// `em` is the mean of per-document exact match.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub method: String,
    pub corpus: String,
    #[serde(default)]
    pub mode: EvalMode,
    pub scores: Scores,
    pub counts: Counts,
    pub per_doc: Vec<DocMetrics>,
}

fn scores_from(counts: &Counts, em: f64) -> Scores {
    let t = counts.tokens.scores();
    Scores {
        accuracy: t.accuracy,
        all_token_accuracy: t.all_token_accuracy,
        precision: t.precision,
        recall: t.recall,
        f1: t.f1,
        em,
    }
}

fn em_ratio(matched: u64, gold: u64, pred: u64) -> f64 {
    match (gold, pred) {
        (0, 0) => 1.0,
        (0, _) => 0.0,
        _ => matched as f64 / gold as f64,
    }
}

/// Gold headers can be matched by either their label or their surface text.
fn match_headers(gold: &[(String, String)], pred: &[String]) -> u64 {
    let mut used = vec![false; pred.len()];
    let mut matched = 0;
    for (label, raw) in gold {
        let hit = (0..pred.len()).find(|&i| !used[i] && (pred[i] == *label || pred[i] == *raw));
        if let Some(i) = hit {
            used[i] = true;
            matched += 1;
        }
    }
    matched
}

/// Drop spans that overlap an earlier one so the rest can be tagged.
fn disjoint(mut spans: Vec<Span>) -> Vec<Span> {
    spans.sort_by_key(|s| (s.start, s.end));
    let mut out: Vec<Span> = Vec::with_capacity(spans.len());
    for s in spans {
        if out.last().is_none_or(|p| s.start >= p.end) {
            out.push(s);
        }
    }
    out
}

fn open_doc(doc: &AnnotatedDocument, pred: &Prediction, max_edit_ratio: f64) -> Result<Counts, EvalError> {
    let tokens = tokenize(&doc.document.text);
    let iob = |spans: &[Span]| {
        spans_to_iob(&tokens, spans).map_err(|source| EvalError::Iob {
            doc: doc.id().to_string(),
            source,
        })
    };
    let gold = iob(&doc.header_spans())?;
    let alignment = align_headers(&doc.document, pred, max_edit_ratio);
    let predicted = iob(&disjoint(alignment.spans()))?;
    let tokens = token_counts(&gold, &predicted)?;

    let gold_headers: Vec<(String, String)> = doc
        .sections
        .iter()
        .map(|s| (normalize_surface(&s.label), normalize_surface(&s.raw_header)))
        .collect();
    let pred_headers: Vec<String> = pred.headers.iter().map(|h| normalize_surface(h)).collect();
    Ok(Counts {
        tokens,
        gold_headers: gold_headers.len() as u64,
        matched_exact: match_headers(&gold_headers, &pred_headers),
        documents: 1,
        missing_predictions: 0,
        unmatched_predictions: alignment.unmatched_predictions.len() as u64,
    })
}

fn close_ended_doc(doc: &AnnotatedDocument, pred: &Prediction, ont: Option<&Ontology>) -> Counts {
    let key = |name: &str| -> String {
        match ont.map(|o| o.categorize(name, true)) {
            Some(cat) if cat != UNKNOWN => cat.to_string(),
            _ => normalize_surface(name),
        }
    };
    let gold: Vec<String> = doc.sections.iter().map(|s| key(&s.label)).collect();
    let mut pool: Vec<Option<String>> = pred.headers.iter().map(|h| Some(key(h))).collect();
    let mut tp = 0u64;
    for g in &gold {
        if let Some(slot) = pool.iter_mut().find(|p| p.as_deref() == Some(g.as_str())) {
            *slot = None;
            tp += 1;
        }
    }
    let (g, p) = (gold.len() as u64, pred.headers.len() as u64);
    Counts {
        tokens: TokenCounts {
            tp,
            fp: p - tp,
            fn_: g - tp,
            gold_tokens: g,
            pred_tokens: p,
            role_correct: tp,
            total_tokens: g,
            correct_tokens: tp,
        },
        gold_headers: g,
        matched_exact: tp,
        documents: 1,
        missing_predictions: 0,
        unmatched_predictions: 0,
    }
}

/// Score `predictions` (keyed by document id) against `corpus`. Documents
/// without a prediction are scored as if nothing was predicted; predictions
/// for unknown ids are ignored.
pub fn evaluate_run(
    corpus: &[AnnotatedDocument],
    predictions: &HashMap<String, Prediction>,
    options: &EvalOptions<'_>,
) -> Result<MetricsReport, EvalError> {
    if corpus.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let empty = Prediction::default();
    let mut total = Counts::default();
    let mut per_doc = Vec::with_capacity(corpus.len());
    for doc in corpus {
        let (pred, missing) = match predictions.get(doc.id()) {
            Some(p) => (p, 0),
            None => (&empty, 1),
        };
        let mut counts = match options.mode {
            EvalMode::Open => open_doc(doc, pred, options.max_edit_ratio)?,
            EvalMode::CloseEnded => close_ended_doc(doc, pred, options.ontology),
        };
        counts.missing_predictions = missing;
        total += counts;
        let em = em_ratio(counts.matched_exact, counts.gold_headers, pred.len() as u64);
        per_doc.push(DocMetrics {
            id: doc.id().to_string(),
            scores: scores_from(&counts, em),
            counts,
        });
    }
    // sort before summing so the mean does not depend on corpus order
    let mut ems: Vec<f64> = per_doc.iter().map(|d| d.scores.em).collect();
    ems.sort_by(f64::total_cmp);
    let em = ems.iter().sum::<f64>() / ems.len() as f64;
    Ok(MetricsReport {
        method: options.method.clone(),
        corpus: options.corpus.clone(),
        mode: options.mode,
        scores: scores_from(&total, em),
        counts: total,
        per_doc,
    })
}
