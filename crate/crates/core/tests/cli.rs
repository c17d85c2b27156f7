//! End-to-end runs of the command line through `cli::run`, checking exit
//! codes and written files.

use std::fs;
use std::path::{Path, PathBuf};

use sectionid::cli::{run, PredictionRecord};
use sectionid::MetricsReport;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn corpus() -> String {
    fixtures().join("replay_corpus.jsonl").display().to_string()
}

fn sectionid(args: &[&str]) -> i32 {
    run(std::iter::once("sectionid").chain(args.iter().copied()))
}

fn records(path: &Path) -> Vec<PredictionRecord> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn segment_with_regex_writes_predictions_and_snapshot() {
    let out = tempfile::tempdir().unwrap();
    let dir = out.path().to_str().unwrap();
    assert_eq!(sectionid(&["segment", "--corpus", &corpus(), "--segmenter", "regex", "--out", dir]), 0);
    let recs = records(&out.path().join("predictions.jsonl"));
    assert_eq!(recs.len(), 5);
    assert_eq!(recs[0].id, "f1");
    assert!(recs[0].headers.contains(&"History of Present Illness".to_string()));
    assert!(recs.iter().all(|r| r.spans.len() == r.headers.len() && r.categories.len() == r.headers.len()));
    let snapshot: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.path().join("run_config.json")).unwrap()).unwrap();
    assert_eq!(snapshot["segmenter"], "regex");
}

#[test]
fn llm_replay_runs_are_byte_identical() {
    let replay = fixtures().join("replay").display().to_string();
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let out = tempfile::tempdir().unwrap();
        let dir = out.path().to_str().unwrap();
        let code = sectionid(&[
            "segment", "--corpus", &corpus(), "--segmenter", "llm", "--strategy", "zero_shot", "--replay", &replay,
            "--workers", "3", "--out", dir,
        ]);
        assert_eq!(code, 0);
        outputs.push(fs::read(out.path().join("predictions.jsonl")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn llm_replay_then_evaluate_matches_fixture_report() {
    let replay = fixtures().join("replay").display().to_string();
    let out = tempfile::tempdir().unwrap();
    let dir = out.path().to_str().unwrap();
    assert_eq!(
        sectionid(&["segment", "--corpus", &corpus(), "--segmenter", "llm", "--replay", &replay, "--out", dir]),
        0
    );
    let preds = out.path().join("predictions.jsonl").display().to_string();
    let code = sectionid(&["evaluate", "--corpus", &corpus(), "--predictions", &preds, "--method", "zero_shot", "--out", dir]);
    assert_eq!(code, 0);
    let report: MetricsReport =
        serde_json::from_str(&fs::read_to_string(out.path().join("report.json")).unwrap()).unwrap();
    let c = report.counts.tokens;
    assert_eq!((c.tp, c.fp, c.fn_, c.gold_tokens, c.pred_tokens), (25, 2, 6, 31, 27));
    assert_eq!(report.scores.em, (1.0 / 3.0 + 2.0 / 3.0 + 0.75 + 1.0 + 1.0) / 5.0);
    let csv = fs::read_to_string(out.path().join("report.csv")).unwrap();
    assert!(csv.starts_with("method,accuracy,precision,recall,f1,em\nzero_shot,"));
}

#[test]
fn replay_miss_is_a_partial_failure() {
    let replay = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let code = sectionid(&[
        "segment",
        "--corpus",
        &corpus(),
        "--segmenter",
        "llm",
        "--replay",
        replay.path().to_str().unwrap(),
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 2);
    let recs = records(&out.path().join("predictions.jsonl"));
    assert!(recs.iter().all(|r| r.error.is_some() && r.headers.is_empty()));
}

#[test]
fn missing_corpus_is_fatal() {
    let out = tempfile::tempdir().unwrap();
    let code = sectionid(&["segment", "--corpus", "/nonexistent/corpus.jsonl", "--out", out.path().to_str().unwrap()]);
    assert_eq!(code, 1);
    assert_eq!(sectionid(&["segment", "--out", out.path().to_str().unwrap()]), 1);
    assert_eq!(sectionid(&["segment", "--segmenter", "nonsense"]), 1);
}

fn gold_echo_file(dir: &Path) -> PathBuf {
    let loaded = sectionid::corpus::load_gold_corpus(fixtures().join("replay_corpus.jsonl"), true).unwrap();
    let lines: Vec<String> = loaded
        .documents
        .iter()
        .map(|d| {
            serde_json::to_string(&PredictionRecord {
                id: d.id().to_string(),
                headers: d.raw_headers().iter().map(|s| s.to_string()).collect(),
                spans: vec![],
                categories: vec![],
                error: None,
            })
            .unwrap()
        })
        .collect();
    let path = dir.join("echo.jsonl");
    fs::write(&path, lines.join("\n") + "\n").unwrap();
    path
}

#[test]
fn evaluate_gold_echo_prints_all_hundreds() {
    let out = tempfile::tempdir().unwrap();
    let preds = gold_echo_file(out.path());
    let code = sectionid(&[
        "evaluate",
        "--corpus",
        &corpus(),
        "--predictions",
        preds.to_str().unwrap(),
        "--method",
        "echo",
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let table = fs::read_to_string(out.path().join("report.txt")).unwrap();
    let row = table.lines().nth(2).unwrap();
    assert!(row.starts_with("echo"));
    assert_eq!(row.matches("100.00").count(), 5, "{row}");
}

#[test]
fn evaluate_empty_predictions_is_partial() {
    let out = tempfile::tempdir().unwrap();
    let empty = out.path().join("empty.jsonl");
    fs::write(&empty, "").unwrap();
    let code = sectionid(&[
        "evaluate",
        "--corpus",
        &corpus(),
        "--predictions",
        empty.to_str().unwrap(),
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 2);
    let report: MetricsReport =
        serde_json::from_str(&fs::read_to_string(out.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report.scores.em, 0.0);
    assert_eq!(report.counts.missing_predictions, 5);
}

#[test]
fn evaluate_unknown_id_is_partial() {
    let out = tempfile::tempdir().unwrap();
    let preds = gold_echo_file(out.path());
    let mut text = fs::read_to_string(&preds).unwrap();
    text.push_str(r#"{"id":"stranger","headers":["Plan"]}"#);
    fs::write(&preds, text).unwrap();
    let code = sectionid(&[
        "evaluate",
        "--corpus",
        &corpus(),
        "--predictions",
        preds.to_str().unwrap(),
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 2);
}

#[test]
fn normalize_medication_variants() {
    let out = tempfile::tempdir().unwrap();
    let names = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/medication_variants.txt");
    let code = sectionid(&["normalize", names.to_str().unwrap(), "--out", out.path().to_str().unwrap()]);
    assert_eq!(code, 0);
    let tsv = fs::read_to_string(out.path().join("normalized.tsv")).unwrap();
    let rows: Vec<&str> = tsv.lines().skip(1).collect();
    assert_eq!(rows.len(), 23);
    assert!(rows.iter().all(|r| r.ends_with("\tMedications Section")), "{tsv}");
}

#[test]
fn stats_on_two_documents() {
    let dir = tempfile::tempdir().unwrap();
    // 10 and 20 tokens
    let ten = ["w"; 10].join(" ");
    let twenty = ["w"; 20].join(" ");
    let corpus = dir.path().join("two.jsonl");
    fs::write(
        &corpus,
        format!("{{\"id\":\"a\",\"text\":\"{ten}\"}}\n{{\"id\":\"b\",\"text\":\"{twenty}\"}}\n"),
    )
    .unwrap();
    let code = sectionid(&["stats", "--corpus", corpus.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 0);
    let stats: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("stats.json")).unwrap()).unwrap();
    assert_eq!(stats["corpus"]["mean_token_length"], 15.0);
    assert_eq!(stats["corpus"]["stddev_token_length"], 5.0);
}

#[test]
fn iaa_identical_pair_is_one() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("pairs.jsonl");
    fs::write(
        &manifest,
        r#"{"id":"d1","annotator_a":["HPI","Plan"],"annotator_b":["Plan","HPI"]}"#.to_string() + "\n",
    )
    .unwrap();
    let code = sectionid(&["iaa", manifest.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 0);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("iaa.json")).unwrap()).unwrap();
    assert_eq!(report["mean_jaccard_similarity"], 1.0);
}
