//! Agreement between two annotators' header sets.

use sectionid::eval::{iaa_report, AnnotationPair};

fn pair(id: &str, a: &[&str], b: &[&str]) -> AnnotationPair {
    AnnotationPair {
        id: id.into(),
        annotator_a: a.iter().map(|s| s.to_string()).collect(),
        annotator_b: b.iter().map(|s| s.to_string()).collect(),
    }
}

fn main() {
    let pairs = [
        pair("n1", &["HPI", "Allergies", "Medications", "Plan"], &["HPI", "Allergies", "Plan"]),
        pair("n2", &["Chief Complaint", "Vitals", "Assessment"], &["Reason for Visit", "Vitals", "Assessment and Plan"]),
        pair("n3", &["Orders"], &["orders:"]),
    ];
    let report = iaa_report(&pairs).expect("non-empty");
    for (id, j) in &report.per_doc {
        println!("{id}: {j:.3}");
    }
    println!(
        "mean Jaccard similarity {:.3} (distance {:.3})",
        report.mean_jaccard_similarity, report.mean_jaccard_distance
    );
}
