//! Run the LLM segmenter offline against recorded responses, then ground and
//! categorize the headers.
//!
//! To record fresh fixtures against a live endpoint, wrap `HttpChatClient` in
//! `RecordingClient` and point it at an empty directory.

use sectionid::corpus::load_gold_corpus;
use sectionid::llm::{extract_batch, LlmConfig, PromptStrategy, ReplayClient};
use sectionid::{align_headers, Document, Ontology};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures");
    let corpus = load_gold_corpus(format!("{dir}/replay_corpus.jsonl"), true)?.documents;
    let docs: Vec<Document> = corpus.into_iter().map(|d| d.document).collect();
    let client = ReplayClient::load(format!("{dir}/replay"))?;
    let config = LlmConfig::default();
    let ontology = Ontology::shipped();

    let outcome = extract_batch(&docs, &PromptStrategy::ZeroShot, &config, &client, 4);
    for (doc, result) in docs.iter().zip(&outcome.results) {
        let pred = match result {
            Ok(p) => p,
            Err(e) => {
                println!("{}: {e}", doc.id);
                continue;
            }
        };
        println!("{}", doc.id);
        let alignment = align_headers(doc, pred, 0.2);
        for m in &alignment.matches {
            println!(
                "  {:<28} {:<10} {:?} -> {}",
                m.header,
                m.span.to_string(),
                m.kind,
                ontology.categorize(&m.header, true)
            );
        }
        for &i in &alignment.unmatched_predictions {
            println!("  {:<28} (not found in text)", pred.headers[i]);
        }
    }
    Ok(())
}
