//! Ground free-text headers in an OCR-noisy note and derive sections.

use sectionid::{align_headers, sections_from_alignment, Document, Prediction, SourceKind};

fn main() {
    let text = "PATIENT NAME: [redacted]\nAllergles:\nSulfa drugs\nCurrent Medicatons:\nMetformin 500 mg\nAssesment:\nType 2 diabetes, stable.";
    let doc = Document::new("ocr", text, SourceKind::OcrNoisy);
    let pred = Prediction::ungrounded([
        "Patient Name",
        "Allergies",
        "Current Medications",
        "Assessment",
        "Patient Information and Visit Details",
    ]);

    let alignment = align_headers(&doc, &pred, 0.2);
    for m in &alignment.matches {
        println!("{:<22} {:?} d={} {}", m.header, m.kind, m.distance, m.span);
    }
    for &i in &alignment.unmatched_predictions {
        println!("{:<22} unmatched", pred.headers[i]);
    }
    for s in sections_from_alignment(&doc, &alignment) {
        let body = s.body_span.and_then(|b| doc.slice(b)).unwrap_or_default();
        println!("[{}] {:?}", s.raw_header, body.trim());
    }
}
