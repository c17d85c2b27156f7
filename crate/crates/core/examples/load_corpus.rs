//! Load a gold corpus, validate it, and print summary statistics.
//!
//!     cargo run --example load_corpus [-- path/to/corpus.jsonl]

use sectionid::corpus::{corpus_stats, load_gold_corpus, validate_corpus};
use sectionid::tokenize::DefaultTokenizer;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/replay_corpus.jsonl").into());
    let loaded = load_gold_corpus(&path, false)?;
    for issue in &loaded.dropped {
        println!("dropped: {issue}");
    }
    assert!(validate_corpus(&loaded.documents).is_empty());

    for doc in &loaded.documents {
        println!("{} ({:?}): {:?}", doc.id(), doc.document.source_kind, doc.raw_headers());
    }
    let stats = corpus_stats(&loaded.documents, &DefaultTokenizer)?;
    println!(
        "{} documents, {:.1} ± {:.1} tokens, {:.2} sections each",
        stats.document_count, stats.mean_token_length, stats.stddev_token_length, stats.mean_sections_per_doc
    );
    Ok(())
}
