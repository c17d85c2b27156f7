//! Inter-annotator agreement as Jaccard similarity of header sets.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::ontology::normalize_surface;

/// `|a ∩ b| / |a ∪ b|` over normalized surface forms; 1 when both are empty.
pub fn jaccard<A: AsRef<str>, B: AsRef<str>>(a: &[A], b: &[B]) -> f64 {
    let norm = |xs: &mut dyn Iterator<Item = &str>| -> BTreeSet<String> {
        xs.map(normalize_surface).filter(|s| !s.is_empty()).collect()
    };
    let a = norm(&mut a.iter().map(|x| x.as_ref()));
    let b = norm(&mut b.iter().map(|x| x.as_ref()));
    let union = a.union(&b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(&b).count() as f64 / union as f64
}

/// Two annotators' header lists for one document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationPair {
    pub id: String,
    pub annotator_a: Vec<String>,
    pub annotator_b: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IaaReport {
    /// Mean per-document Jaccard similarity.
    pub mean_jaccard_similarity: f64,
    /// `1 - mean_jaccard_similarity`.
    pub mean_jaccard_distance: f64,
    pub per_doc: Vec<(String, f64)>,
}

pub fn iaa_report(pairs: &[AnnotationPair]) -> Result<IaaReport, EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let per_doc: Vec<(String, f64)> = pairs
        .iter()
        .map(|p| (p.id.clone(), jaccard(&p.annotator_a, &p.annotator_b)))
        .collect();
    let mean = per_doc.iter().map(|(_, j)| j).sum::<f64>() / per_doc.len() as f64;
    Ok(IaaReport {
        mean_jaccard_similarity: mean,
        mean_jaccard_distance: 1.0 - mean,
        per_doc,
    })
}
