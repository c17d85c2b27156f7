//! Ground free-text header strings to character spans.
//!
//! Matching is greedy and left to right. A cursor starts at 0; each predicted
//! header is searched for from the cursor as (1) an exact substring, then
//! (2) a case-insensitive substring, then (3) a fuzzy match against line
//! prefixes, where the Levenshtein distance divided by the longer length must
//! not exceed `max_edit_ratio`. A match moves the cursor to its end; a miss is
//! recorded and leaves the cursor alone.

use serde::{Deserialize, Serialize};

use crate::corpus::{Document, SectionAnnotation};
use crate::span::Span;
use crate::Prediction;

pub const DEFAULT_MAX_EDIT_RATIO: f64 = 0.2;

/// Fuzzy candidates are drawn from at most this many characters of a line.
pub const FUZZY_WINDOW_CHARS: usize = 80;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchKind {
    Exact,
    CaseInsensitive,
    Fuzzy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CursorPolicy {
    InOrder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedHeader {
    pub prediction_index: usize,
    pub header: String,
    pub span: Span,
    pub kind: MatchKind,
    /// Edit distance for fuzzy matches, 0 otherwise.
    pub distance: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentResult {
    pub matches: Vec<AlignedHeader>,
    pub unmatched_predictions: Vec<usize>,
    pub cursor_policy: CursorPolicy,
}

impl AlignmentResult {
    pub fn spans(&self) -> Vec<Span> {
        self.matches.iter().map(|m| m.span).collect()
    }

    /// Span for each prediction index, `None` where unmatched.
    pub fn spans_by_prediction(&self, n: usize) -> Vec<Option<Span>> {
        let mut out = vec![None; n];
        for m in &self.matches {
            if m.prediction_index < n {
                out[m.prediction_index] = Some(m.span);
            }
        }
        out
    }
}

fn fold(c: char) -> char {
    c.to_lowercase().next().unwrap_or(c)
}

fn find_chars(hay: &[char], needle: &[char], from: usize) -> Option<usize> {
    if needle.is_empty() || needle.len() > hay.len() {
        return None;
    }
    (from..=hay.len() - needle.len()).find(|&i| hay[i..i + needle.len()] == *needle)
}

struct Text {
    chars: Vec<char>,
    folded: Vec<char>,
    line_starts: Vec<usize>,
}

impl Text {
    fn new(text: &str) -> Self {
        let chars: Vec<char> = text.chars().collect();
        let folded = chars.iter().map(|&c| fold(c)).collect();
        let line_starts = std::iter::once(0)
            .chain(chars.iter().enumerate().filter(|(_, c)| **c == '\n').map(|(i, _)| i + 1))
            .collect();
        Text {
            chars,
            folded,
            line_starts,
        }
    }

    fn line_end(&self, from: usize) -> usize {
        self.chars[from..]
            .iter()
            .position(|&c| c == '\n')
            .map_or(self.chars.len(), |p| from + p)
    }

    /// Best fuzzy match in the line region starting at `start`.
    fn fuzzy_in_line(&self, start: usize, pred: &[char], max_ratio: f64) -> Option<(Span, usize)> {
        let end = self.line_end(start).min(start + FUZZY_WINDOW_CHARS);
        let region = &self.folded[start..end];
        // strsim's generic form wants sized IntoIterator references
        let pred_vec = pred.to_vec();
        let mut best: Option<(usize, usize)> = None; // (distance, len)
        for len in 1..=region.len() {
            // candidates end where a token ends
            let last = region[len - 1];
            let next = region.get(len).copied();
            let token_end = match next {
                None => true,
                Some(n) => !(last.is_alphanumeric() && n.is_alphanumeric()) && !last.is_whitespace(),
            };
            if !token_end {
                continue;
            }
            let longest = pred.len().max(len);
            if pred.len().abs_diff(len) as f64 > max_ratio * longest as f64 {
                continue;
            }
            let d = strsim::generic_levenshtein(&pred_vec, &region[..len].to_vec());
            if d as f64 / longest as f64 <= max_ratio && best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, len));
            }
        }
        best.map(|(d, len)| (Span::new(start, start + len), d))
    }

    fn fuzzy(&self, cursor: usize, pred: &[char], max_ratio: f64) -> Option<(Span, usize)> {
        let skip_blank = |mut i: usize| {
            while i < self.chars.len() && self.chars[i] != '\n' && !self.chars[i].is_alphanumeric() {
                i += 1;
            }
            i
        };
        // remainder of the cursor's own line, then every later line
        let mut starts = vec![skip_blank(cursor)];
        starts.extend(
            self.line_starts
                .iter()
                .filter(|&&s| s > cursor)
                .map(|&s| skip_blank(s)),
        );
        starts.dedup();
        starts
            .into_iter()
            .filter(|&s| s < self.chars.len() && self.chars[s] != '\n')
            .find_map(|s| self.fuzzy_in_line(s, pred, max_ratio))
    }
}

/// Ground each predicted header to a span of `doc`. Grounded predictions are
/// passed through unchanged.
pub fn align_headers(doc: &Document, pred: &Prediction, max_edit_ratio: f64) -> AlignmentResult {
    if let Some(spans) = &pred.spans {
        return AlignmentResult {
            matches: pred
                .headers
                .iter()
                .zip(spans)
                .enumerate()
                .map(|(i, (h, s))| AlignedHeader {
                    prediction_index: i,
                    header: h.clone(),
                    span: *s,
                    kind: MatchKind::Exact,
                    distance: 0,
                })
                .collect(),
            unmatched_predictions: Vec::new(),
            cursor_policy: CursorPolicy::InOrder,
        };
    }

    let text = Text::new(&doc.text);
    let mut cursor = 0;
    let mut matches = Vec::new();
    let mut unmatched = Vec::new();
    for (i, header) in pred.headers.iter().enumerate() {
        let needle: Vec<char> = header.chars().collect();
        let folded: Vec<char> = needle.iter().map(|&c| fold(c)).collect();
        let found = if needle.iter().all(|c| c.is_whitespace()) {
            None
        } else if let Some(pos) = find_chars(&text.chars, &needle, cursor) {
            Some((Span::new(pos, pos + needle.len()), MatchKind::Exact, 0))
        } else if let Some(pos) = find_chars(&text.folded, &folded, cursor) {
            Some((Span::new(pos, pos + needle.len()), MatchKind::CaseInsensitive, 0))
        } else {
            text.fuzzy(cursor, &folded, max_edit_ratio)
                .map(|(span, d)| (span, MatchKind::Fuzzy, d))
        };
        match found {
            Some((span, kind, distance)) => {
                cursor = span.end;
                matches.push(AlignedHeader {
                    prediction_index: i,
                    header: header.clone(),
                    span,
                    kind,
                    distance,
                });
            }
            None => unmatched.push(i),
        }
    }
    AlignmentResult {
        matches,
        unmatched_predictions: unmatched,
        cursor_policy: CursorPolicy::InOrder,
    }
}

/// Turn matched headers into sections: each body runs to the next header
/// (or the end of the document).
pub fn sections_from_alignment(doc: &Document, alignment: &AlignmentResult) -> Vec<SectionAnnotation> {
    let len = doc.char_len();
    alignment
        .matches
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let body_end = alignment.matches.get(i + 1).map_or(len, |n| n.span.start);
            SectionAnnotation {
                label: m.header.clone(),
                header_span: m.span,
                body_span: Some(Span::new(m.span.end, body_end)),
                raw_header: doc.slice(m.span).unwrap_or_default().to_string(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::SourceKind;

    fn doc(text: &str) -> Document {
        Document::new("t", text, SourceKind::EhrClean)
    }

    #[test]
    fn exact_matches_in_order() {
        let d = doc("HPI: 61M w/ hematuria\nPlan: rest");
        let a = align_headers(&d, &Prediction::ungrounded(["HPI", "Plan"]), DEFAULT_MAX_EDIT_RATIO);
        assert_eq!(a.spans(), [Span::new(0, 3), Span::new(22, 26)]);
        assert!(a.matches.iter().all(|m| m.kind == MatchKind::Exact));
        assert!(a.unmatched_predictions.is_empty());
    }

    #[test]
    fn case_insensitive_before_fuzzy() {
        let d = doc("ALLERGIES: none");
        let a = align_headers(&d, &Prediction::ungrounded(["Allergies"]), DEFAULT_MAX_EDIT_RATIO);
        assert_eq!(a.matches[0].kind, MatchKind::CaseInsensitive);
        assert_eq!(a.matches[0].span, Span::new(0, 9));
    }

    #[test]
    fn fuzzy_absorbs_ocr_error() {
        let d = doc("Allergies: none");
        let a = align_headers(&d, &Prediction::ungrounded(["Allergles"]), DEFAULT_MAX_EDIT_RATIO);
        let m = &a.matches[0];
        assert_eq!(m.kind, MatchKind::Fuzzy);
        assert_eq!(m.distance, 1);
        assert_eq!(m.span, Span::new(0, 9));
    }

    #[test]
    fn summarized_title_is_unmatched() {
        let d = doc("Chief Complaint: cough\nHistory of Present Illness: 3 days\nPatient Information: redacted");
        let a = align_headers(
            &d,
            &Prediction::ungrounded(["Patient Information and Visit Details"]),
            DEFAULT_MAX_EDIT_RATIO,
        );
        assert!(a.matches.is_empty());
        assert_eq!(a.unmatched_predictions, [0]);
    }

    #[test]
    fn out_of_order_prediction_is_unmatched() {
        let d = doc("Plan: rest\nHPI: cough");
        let a = align_headers(&d, &Prediction::ungrounded(["HPI", "Plan"]), DEFAULT_MAX_EDIT_RATIO);
        assert_eq!(a.matches.len(), 1);
        assert_eq!(a.unmatched_predictions, [1]);
    }

    #[test]
    fn grounded_passes_through() {
        let d = doc("Plan: rest");
        let p = Prediction::grounded(vec!["Plan".into()], vec![Span::new(0, 4)]);
        assert_eq!(align_headers(&d, &p, 0.0).spans(), [Span::new(0, 4)]);
    }

    #[test]
    fn sections_cover_bodies() {
        let text = "Alpha: xxxxxxxxxxx\nBeta: yyyy";
        let d = doc(text);
        assert_eq!(d.char_len(), 29);
        let a = align_headers(&d, &Prediction::ungrounded(["Alpha", "Beta"]), 0.2);
        let s = sections_from_alignment(&d, &a);
        assert_eq!(s[0].body_span, Some(Span::new(5, 19)));
        assert_eq!(s[1].body_span, Some(Span::new(23, 29)));
        assert_eq!(s[1].raw_header, "Beta");

        let none = align_headers(&d, &Prediction::default(), 0.2);
        assert!(sections_from_alignment(&d, &none).is_empty());
    }
}
