//! Score two segmenters on the fixture corpus and print the comparison table.

use std::collections::HashMap;

use sectionid::baselines::{regex_segment, RuleConfig};
use sectionid::corpus::load_gold_corpus;
use sectionid::eval::{render_report, EvalOptions, ReportFormat};
use sectionid::llm::{extract_batch, LlmConfig, PromptStrategy, ReplayClient};
use sectionid::{evaluate_run, Document, Prediction};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures");
    let corpus = load_gold_corpus(format!("{dir}/replay_corpus.jsonl"), true)?.documents;
    let docs: Vec<Document> = corpus.iter().map(|d| d.document.clone()).collect();
    let ids = docs.iter().map(|d| d.id.clone());

    let rules = RuleConfig::default();
    let regex: HashMap<String, Prediction> = ids.clone().zip(docs.iter().map(|d| regex_segment(d, &rules))).collect();

    let client = ReplayClient::load(format!("{dir}/replay"))?;
    let llm_out = extract_batch(&docs, &PromptStrategy::ZeroShot, &LlmConfig::default(), &client, 2);
    let llm: HashMap<String, Prediction> = ids.zip(llm_out.predictions()).collect();

    let mut reports = Vec::new();
    for (method, preds) in [("regex", &regex), ("zero_shot", &llm)] {
        let opts = EvalOptions {
            method: method.into(),
            corpus: "fixtures".into(),
            ..EvalOptions::default()
        };
        reports.push(evaluate_run(&corpus, preds, &opts)?);
    }
    print!("{}", render_report(&reports, ReportFormat::TableText));
    println!();
    print!("{}", render_report(&reports, ReportFormat::Csv));

    let r = &reports[1];
    println!("\nper document ({}):", r.method);
    for d in &r.per_doc {
        println!("  {} F1 {:.3} EM {:.3}", d.id, d.scores.f1, d.scores.em);
    }
    Ok(())
}
