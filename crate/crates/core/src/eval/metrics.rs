//! Token-level IOB metrics and header exact match.

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::ontology::normalize_surface;
use crate::tokenize::{is_well_formed, IobTag};

/// Raw positional counts behind the token metrics. Header tokens are those
/// tagged `B` or `I`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenCounts {
    /// Header in both gold and prediction.
    pub tp: u64,
    /// Header in prediction only.
    pub fp: u64,
    /// Header in gold only.
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub gold_tokens: u64,
    pub pred_tokens: u64,
    /// Gold header tokens whose predicted tag has the same B/I role.
    pub role_correct: u64,
    pub total_tokens: u64,
    /// Positions where the tags agree exactly.
    pub correct_tokens: u64,
}

impl std::ops::AddAssign for TokenCounts {
    fn add_assign(&mut self, o: Self) {
        self.tp += o.tp;
        self.fp += o.fp;
        self.fn_ += o.fn_;
        self.gold_tokens += o.gold_tokens;
        self.pred_tokens += o.pred_tokens;
        self.role_correct += o.role_correct;
        self.total_tokens += o.total_tokens;
        self.correct_tokens += o.correct_tokens;
    }
}

fn ratio_or_one(num: u64, den: u64) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

/// Harmonic mean, 0 when both inputs are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TokenScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Share of gold header tokens predicted with the correct B/I role.
    pub accuracy: f64,
    /// Share of all tokens whose tag matches exactly.
    pub all_token_accuracy: f64,
}

impl TokenCounts {
    /// Precision is 1 when nothing was predicted; recall and both accuracies
    /// are 1 when their denominators are empty.
    pub fn scores(&self) -> TokenScores {
        let precision = ratio_or_one(self.tp, self.pred_tokens);
        let recall = ratio_or_one(self.tp, self.gold_tokens);
        TokenScores {
            precision,
            recall,
            f1: f1_score(precision, recall),
            accuracy: ratio_or_one(self.role_correct, self.gold_tokens),
            all_token_accuracy: ratio_or_one(self.correct_tokens, self.total_tokens),
        }
    }
}

pub fn token_counts(gold: &[IobTag], pred: &[IobTag]) -> Result<TokenCounts, EvalError> {
    if gold.len() != pred.len() {
        return Err(EvalError::LengthMismatch {
            gold: gold.len(),
            pred: pred.len(),
        });
    }
    if !is_well_formed(gold) {
        return Err(EvalError::MalformedTags("gold"));
    }
    if !is_well_formed(pred) {
        return Err(EvalError::MalformedTags("prediction"));
    }
    let mut c = TokenCounts {
        total_tokens: gold.len() as u64,
        ..TokenCounts::default()
    };
    for (&g, &p) in gold.iter().zip(pred) {
        match (g.is_header(), p.is_header()) {
            (true, true) => c.tp += 1,
            (false, true) => c.fp += 1,
            (true, false) => c.fn_ += 1,
            (false, false) => {}
        }
        c.gold_tokens += u64::from(g.is_header());
        c.pred_tokens += u64::from(p.is_header());
        c.role_correct += u64::from(g.is_header() && g == p);
        c.correct_tokens += u64::from(g == p);
    }
    Ok(c)
}

/// Precision, recall, F1 and accuracy over header tokens.
pub fn token_metrics(gold: &[IobTag], pred: &[IobTag]) -> Result<TokenScores, EvalError> {
    token_counts(gold, pred).map(|c| c.scores())
}

/// Number of gold headers reproduced by some prediction after normalization.
/// Each prediction can be used once; gold headers claim the first unused
/// equal prediction in order.
pub fn exact_match_count<G: AsRef<str>, P: AsRef<str>>(gold: &[G], pred: &[P]) -> usize {
    let pred: Vec<String> = pred.iter().map(|p| normalize_surface(p.as_ref())).collect();
    let mut used = vec![false; pred.len()];
    let mut matched = 0;
    for g in gold {
        let g = normalize_surface(g.as_ref());
        if let Some(i) = (0..pred.len()).find(|&i| !used[i] && pred[i] == g) {
            used[i] = true;
            matched += 1;
        }
    }
    matched
}

/// Share of gold headers matched. 1 when both sides are empty, 0 when only
/// the gold side is.
pub fn exact_match<G: AsRef<str>, P: AsRef<str>>(gold: &[G], pred: &[P]) -> f64 {
    if gold.is_empty() {
        return if pred.is_empty() { 1.0 } else { 0.0 };
    }
    exact_match_count(gold, pred) as f64 / gold.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use IobTag::*;

    #[test]
    fn partial_overlap() {
        let c = token_counts(&[B, I, O, O, B], &[B, O, O, O, B]).unwrap();
        assert_eq!((c.tp, c.fp, c.fn_), (2, 0, 1));
        let s = c.scores();
        assert_eq!(s.precision, 1.0);
        assert_eq!(s.recall, 2.0 / 3.0);
        assert!((s.f1 - 0.8).abs() < 1e-12);
        assert_eq!(s.all_token_accuracy, 4.0 / 5.0);
    }

    #[test]
    fn identity_and_empty_prediction() {
        let gold = [B, I, O, B];
        let s = token_metrics(&gold, &gold).unwrap();
        assert_eq!((s.precision, s.recall, s.f1, s.accuracy), (1.0, 1.0, 1.0, 1.0));

        let s = token_metrics(&gold, &[O, O, O, O]).unwrap();
        assert_eq!((s.precision, s.recall, s.f1), (1.0, 0.0, 0.0));
    }

    #[test]
    fn role_accuracy_penalizes_wrong_boundary() {
        // prediction splits one gold header into two
        let s = token_metrics(&[B, I, I], &[B, B, I]).unwrap();
        assert_eq!(s.recall, 1.0);
        assert_eq!(s.accuracy, 2.0 / 3.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(token_metrics(&[B], &[B, O]), Err(EvalError::LengthMismatch { .. })));
        assert!(matches!(token_metrics(&[I], &[O]), Err(EvalError::MalformedTags("gold"))));
    }

    #[test]
    fn exact_match_cases() {
        assert_eq!(exact_match(&["Allergies", "Plan"], &["Allergies", "Assessment"]), 0.5);
        assert_eq!(exact_match(&["Allergies", "Plan"], &["allergies:", "PLAN"]), 1.0);
        assert_eq!(exact_match(&["Plan"], &[] as &[&str]), 0.0);
        assert_eq!(exact_match(&[] as &[&str], &[] as &[&str]), 1.0);
        // one prediction cannot satisfy two gold headers
        assert_eq!(exact_match(&["Plan", "Plan"], &["Plan"]), 0.5);
    }
}
