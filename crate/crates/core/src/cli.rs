//! The `sectionid` command line: `segment`, `evaluate`, `stats`, `normalize`
//! and `iaa`.
//!
//! Settings come from an optional JSON [`RunConfig`] with flag overrides.
//! `segment` and `evaluate` write a `run_config.json` snapshot of the
//! resolved settings next to their outputs. Exit codes: 0 clean, 2 partial
//! (per-document failures, id mismatches, empty predictions), 1 fatal.

use std::collections::{HashMap, HashSet};
use std::error::Error;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::align::{align_headers, DEFAULT_MAX_EDIT_RATIO};
use crate::baselines::{keyword_segment, regex_segment, rule_segment, top_section_names, HeaderLexicon, RuleConfig};
use crate::corpus::{corpus_stats, load_gold_corpus, AnnotatedDocument, Document};
use crate::eval::{evaluate_run, iaa_report, render_report, AnnotationPair, EvalMode, EvalOptions, ReportFormat};
use crate::llm::{
    extract_batch, ChatClient, HttpChatClient, LlmConfig, PromptStrategy, RecordingClient, ReplayClient, StrategyKind,
};
use crate::ontology::{category_stats, load_ontology, Level, Ontology, OntologyError};
use crate::span::Span;
use crate::tokenize::DefaultTokenizer;
use crate::Prediction;

type Fallible<T> = Result<T, Box<dyn Error>>;

const SHIPPED_ONE_SHOT: &str = include_str!("../data/one_shot_example.json");

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SegmenterKind {
    Keyword,
    #[default]
    Regex,
    Rules,
    Llm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlignmentConfig {
    pub max_edit_ratio: f64,
}

impl Default for AlignmentConfig {
    fn default() -> Self {
        AlignmentConfig {
            max_edit_ratio: DEFAULT_MAX_EDIT_RATIO,
        }
    }
}

/// Everything a run depends on. Secrets are never stored here; the bearer
/// token is read from the environment variable named in `llm.api_key_env`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub corpus_path: Option<PathBuf>,
    pub segmenter: SegmenterKind,
    pub strategy: StrategyKind,
    pub llm: LlmConfig,
    /// Taxonomy CSV; the shipped taxonomy when unset.
    pub ontology_path: Option<PathBuf>,
    pub alignment: AlignmentConfig,
    pub output_dir: PathBuf,
    /// Reserved for sampling; every shipped component is deterministic.
    pub seed: u64,
    pub replay_dir: Option<PathBuf>,
    /// When set (and not replaying), live responses are recorded here.
    pub record_dir: Option<PathBuf>,
    pub workers: usize,
    pub strict: bool,
    /// Keyword lexicon file; defaults to the shipped one.
    pub lexicon_path: Option<PathBuf>,
    /// Regex ruleset JSON; defaults to the built-in rules.
    pub rules_path: Option<PathBuf>,
    /// `{"text": ..., "headers": [...]}` used by the one-shot prompt.
    pub one_shot_example_path: Option<PathBuf>,
    /// Label list (one per line) for the close-ended prompt; defaults to the
    /// 50 most frequent section names.
    pub label_set_path: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            corpus_path: None,
            segmenter: SegmenterKind::default(),
            strategy: StrategyKind::ZeroShot,
            llm: LlmConfig::default(),
            ontology_path: None,
            alignment: AlignmentConfig::default(),
            output_dir: PathBuf::from("out"),
            seed: 0,
            replay_dir: None,
            record_dir: None,
            workers: 1,
            strict: false,
            lexicon_path: None,
            rules_path: None,
            one_shot_example_path: None,
            label_set_path: None,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "sectionid", version, about = "Section header identification for clinical notes")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Gold corpus (JSONL).
    #[arg(long, global = true)]
    pub corpus: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub segmenter: Option<SegmenterKind>,
    /// Prompt strategy for the llm segmenter.
    #[arg(long, global = true, value_enum)]
    pub strategy: Option<StrategyKind>,
    /// Taxonomy CSV.
    #[arg(long, global = true)]
    pub ontology: Option<PathBuf>,
    /// Largest normalized edit distance accepted when grounding headers.
    #[arg(long, global = true)]
    pub max_edit_ratio: Option<f64>,
    /// Directory of recorded LLM interactions to answer from.
    #[arg(long, global = true)]
    pub replay: Option<PathBuf>,
    /// Worker threads for LLM segmentation.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Fail on the first malformed corpus record instead of skipping it.
    #[arg(long, global = true)]
    pub strict: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Predict headers for every document and write predictions.jsonl.
    Segment,
    /// Score a predictions file against the gold corpus.
    Evaluate {
        #[arg(long)]
        predictions: PathBuf,
        /// Method name for the report row; defaults to the segmenter name.
        #[arg(long)]
        method: Option<String>,
        /// Compare categories instead of token spans.
        #[arg(long)]
        close_ended: bool,
    },
    /// Corpus length and section statistics.
    Stats,
    /// Categorize each line of a file of section names.
    Normalize {
        names_file: PathBuf,
        #[arg(long, value_enum, default_value = "coarse")]
        level: LevelArg,
        /// Only accept exact (normalized) matches.
        #[arg(long)]
        no_fuzzy: bool,
    },
    /// Jaccard agreement over a JSONL manifest of
    /// `{"id", "annotator_a", "annotator_b"}` records.
    Iaa { pairs: PathBuf },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum LevelArg {
    Coarse,
    Fine,
}

impl RunConfig {
    pub fn load(path: &Path) -> Fallible<Self> {
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()).into())
    }

    /// Resolve the config file (if any) and apply flag overrides.
    pub fn resolve(args: &CommonArgs) -> Fallible<Self> {
        let mut cfg = match &args.config {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        if let Some(v) = &args.corpus {
            cfg.corpus_path = Some(v.clone());
        }
        if let Some(v) = &args.out {
            cfg.output_dir = v.clone();
        }
        if let Some(v) = args.segmenter {
            cfg.segmenter = v;
        }
        if let Some(v) = args.strategy {
            cfg.strategy = v;
        }
        if let Some(v) = &args.ontology {
            cfg.ontology_path = Some(v.clone());
        }
        if let Some(v) = args.max_edit_ratio {
            cfg.alignment.max_edit_ratio = v;
        }
        if let Some(v) = &args.replay {
            cfg.replay_dir = Some(v.clone());
        }
        if let Some(v) = args.workers {
            cfg.workers = v;
        }
        cfg.strict |= args.strict;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Fallible<()> {
        if !(0.0..1.0).contains(&self.alignment.max_edit_ratio) {
            return Err("max_edit_ratio must be within [0, 1)".into());
        }
        if self.workers == 0 {
            return Err("workers must be ≥ 1".into());
        }
        self.llm.validate()?;
        Ok(())
    }

    fn corpus(&self) -> Fallible<Vec<AnnotatedDocument>> {
        let path = self.corpus_path.as_ref().ok_or("no corpus given (use --corpus)")?;
        let loaded = load_gold_corpus(path, self.strict)?;
        for issue in &loaded.dropped {
            log::warn!("{}: {issue}", path.display());
        }
        Ok(loaded.documents)
    }

    fn ontology(&self) -> Fallible<Ontology> {
        Ok(match &self.ontology_path {
            Some(p) => load_ontology(p)?,
            None => Ontology::shipped(),
        })
    }

    fn prompt_strategy(&self) -> Fallible<PromptStrategy> {
        #[derive(Deserialize)]
        struct Example {
            text: String,
            headers: Vec<String>,
        }
        Ok(match self.strategy {
            StrategyKind::ZeroShot => PromptStrategy::ZeroShot,
            StrategyKind::ChainOfThought => PromptStrategy::ChainOfThought,
            StrategyKind::OneShot => {
                let raw = match &self.one_shot_example_path {
                    Some(p) => fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?,
                    None => SHIPPED_ONE_SHOT.to_string(),
                };
                let ex: Example = serde_json::from_str(&raw)?;
                PromptStrategy::OneShot {
                    example_text: ex.text,
                    example_headers: ex.headers,
                }
            }
            StrategyKind::CloseEnded => {
                let labels = match &self.label_set_path {
                    Some(p) => read_lines(p)?,
                    None => top_section_names(),
                };
                PromptStrategy::CloseEnded { labels }
            }
        })
    }

    fn snapshot(&self, dir: &Path) -> Fallible<()> {
        fs::write(dir.join("run_config.json"), serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

fn read_lines(path: &Path) -> Fallible<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect())
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Fallible<Vec<T>> {
    let file = fs::File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| format!("{}:{}: {e}", path.display(), i + 1))?);
    }
    Ok(out)
}

/// One line of `predictions.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub headers: Vec<String>,
    /// Grounded span per header, `null` where the header was not found.
    #[serde(default)]
    pub spans: Vec<Option<Span>>,
    #[serde(default)]
    pub categories: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl PredictionRecord {
    /// Grounded when every header has a span; otherwise the headers are
    /// re-aligned at evaluation time.
    pub fn to_prediction(&self) -> Prediction {
        let spans: Option<Vec<Span>> = self.spans.iter().copied().collect();
        match spans {
            Some(s) if s.len() == self.headers.len() => Prediction::grounded(self.headers.clone(), s),
            _ => Prediction::ungrounded(self.headers.iter().cloned()),
        }
    }
}

fn segment_all(cfg: &RunConfig, docs: &[Document], ont: &Ontology) -> Fallible<Vec<Result<Prediction, String>>> {
    Ok(match cfg.segmenter {
        SegmenterKind::Keyword => {
            let lex = match &cfg.lexicon_path {
                Some(p) => HeaderLexicon::load(p, false)?,
                None => HeaderLexicon::default_for(ont),
            };
            docs.iter().map(|d| Ok(keyword_segment(d, &lex))).collect()
        }
        SegmenterKind::Regex => {
            let rules = rule_config(cfg)?;
            docs.iter().map(|d| Ok(regex_segment(d, &rules))).collect()
        }
        SegmenterKind::Rules => {
            let lex = match &cfg.lexicon_path {
                Some(p) => HeaderLexicon::load(p, false)?,
                None => HeaderLexicon::default_for(ont),
            };
            let rules = rule_config(cfg)?;
            docs.iter().map(|d| Ok(rule_segment(d, &lex, &rules))).collect()
        }
        SegmenterKind::Llm => {
            let strategy = cfg.prompt_strategy()?;
            strategy.validate()?;
            let client: Box<dyn ChatClient> = match (&cfg.replay_dir, &cfg.record_dir) {
                (Some(dir), _) => Box::new(ReplayClient::load(dir)?),
                (None, Some(dir)) => Box::new(RecordingClient::new(HttpChatClient::new(&cfg.llm), dir.clone())),
                (None, None) => Box::new(HttpChatClient::new(&cfg.llm)),
            };
            extract_batch(docs, &strategy, &cfg.llm, client.as_ref(), cfg.workers)
                .results
                .into_iter()
                .map(|r| r.map_err(|e| e.to_string()))
                .collect()
        }
    })
}

fn rule_config(cfg: &RunConfig) -> Fallible<RuleConfig> {
    Ok(match &cfg.rules_path {
        Some(p) => RuleConfig::load(p, RuleConfig::default().max_header_tokens)?,
        None => RuleConfig::default(),
    })
}

fn cmd_segment(cfg: &RunConfig) -> Fallible<i32> {
    let corpus = cfg.corpus()?;
    let ont = cfg.ontology()?;
    let docs: Vec<Document> = corpus.into_iter().map(|d| d.document).collect();
    let results = segment_all(cfg, &docs, &ont)?;

    let mut out = String::new();
    let mut failures = 0;
    for (doc, result) in docs.iter().zip(results) {
        let (pred, error) = match result {
            Ok(p) => (p, None),
            Err(e) => {
                failures += 1;
                log::error!("{}: {e}", doc.id);
                (Prediction::default(), Some(e))
            }
        };
        let alignment = align_headers(doc, &pred, cfg.alignment.max_edit_ratio);
        let record = PredictionRecord {
            id: doc.id.clone(),
            spans: alignment.spans_by_prediction(pred.len()),
            categories: pred.headers.iter().map(|h| ont.categorize(h, true).to_string()).collect(),
            headers: pred.headers,
            error,
        };
        out += &serde_json::to_string(&record)?;
        out.push('\n');
    }
    fs::create_dir_all(&cfg.output_dir)?;
    fs::write(cfg.output_dir.join("predictions.jsonl"), out)?;
    cfg.snapshot(&cfg.output_dir)?;
    if failures > 0 {
        eprintln!("{failures} of {} document(s) failed", docs.len());
        return Ok(2);
    }
    Ok(0)
}

fn cmd_evaluate(cfg: &RunConfig, predictions: &Path, method: Option<String>, close_ended: bool) -> Fallible<i32> {
    let corpus = cfg.corpus()?;
    let ont = cfg.ontology()?;
    let records: Vec<PredictionRecord> = read_jsonl(predictions)?;
    let mut partial = records.is_empty();
    if records.is_empty() {
        eprintln!("{}: no predictions", predictions.display());
    }

    let gold_ids: HashSet<&str> = corpus.iter().map(|d| d.id()).collect();
    let preds: HashMap<String, Prediction> = records.iter().map(|r| (r.id.clone(), r.to_prediction())).collect();
    for r in &records {
        if !gold_ids.contains(r.id.as_str()) {
            eprintln!("prediction for unknown document {}", r.id);
            partial = true;
        }
    }
    for d in &corpus {
        if !preds.contains_key(d.id()) {
            eprintln!("no prediction for document {}; scored as empty", d.id());
            partial = true;
        }
    }

    let method = method.unwrap_or_else(|| {
        let seg = cfg.segmenter.to_possible_value().map(|v| v.get_name().to_string());
        seg.unwrap_or_default()
    });
    let options = EvalOptions {
        method,
        corpus: cfg
            .corpus_path
            .as_ref()
            .and_then(|p| p.file_stem())
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
        mode: if close_ended { EvalMode::CloseEnded } else { EvalMode::Open },
        max_edit_ratio: cfg.alignment.max_edit_ratio,
        ontology: Some(&ont),
    };
    let report = evaluate_run(&corpus, &preds, &options)?;
    let reports = std::slice::from_ref(&report);
    let table = render_report(reports, ReportFormat::TableText);

    fs::create_dir_all(&cfg.output_dir)?;
    fs::write(cfg.output_dir.join("report.txt"), &table)?;
    fs::write(cfg.output_dir.join("report.csv"), render_report(reports, ReportFormat::Csv))?;
    fs::write(cfg.output_dir.join("report.json"), serde_json::to_string_pretty(&report)? + "\n")?;
    cfg.snapshot(&cfg.output_dir)?;
    print!("{table}");
    Ok(if partial { 2 } else { 0 })
}

/// Print `json` and, when `--out` was given, also write it to `out/name`.
fn emit(args: &CommonArgs, name: &str, json: String) -> Fallible<()> {
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(name), &json)?;
    }
    print!("{json}");
    Ok(())
}

fn cmd_stats(args: &CommonArgs, cfg: &RunConfig) -> Fallible<i32> {
    let corpus = cfg.corpus()?;
    let ont = cfg.ontology()?;
    #[derive(Serialize)]
    struct Stats {
        corpus: crate::corpus::CorpusStats,
        /// Absent when no document has sections.
        categories: Option<crate::ontology::CategoryStats>,
    }
    let stats = Stats {
        corpus: corpus_stats(&corpus, &DefaultTokenizer)?,
        categories: match category_stats(&corpus, &ont) {
            Ok(c) => Some(c),
            Err(OntologyError::EmptyCorpus) => None,
            Err(e) => return Err(e.into()),
        },
    };
    emit(args, "stats.json", serde_json::to_string_pretty(&stats)? + "\n")?;
    Ok(0)
}

fn cmd_normalize(args: &CommonArgs, cfg: &RunConfig, names: &Path, level: LevelArg, fuzzy: bool) -> Fallible<i32> {
    let ont = cfg.ontology()?;
    let level = match level {
        LevelArg::Coarse => Level::Coarse,
        LevelArg::Fine => Level::Fine,
    };
    let text = fs::read_to_string(names).map_err(|e| format!("{}: {e}", names.display()))?;
    let mut w = csv::WriterBuilder::new().delimiter(b'\t').from_writer(Vec::new());
    w.write_record(["name", "category"])?;
    for name in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
        w.write_record([name, ont.categorize_level(name, level, fuzzy)])?;
    }
    let out = String::from_utf8(w.into_inner()?)?;
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("normalized.tsv"), &out)?;
    }
    print!("{out}");
    Ok(0)
}

fn cmd_iaa(args: &CommonArgs, pairs: &Path) -> Fallible<i32> {
    let pairs: Vec<AnnotationPair> = read_jsonl(pairs)?;
    let report = iaa_report(&pairs)?;
    emit(args, "iaa.json", serde_json::to_string_pretty(&report)? + "\n")?;
    Ok(0)
}

fn dispatch(cli: Cli) -> Fallible<i32> {
    let cfg = RunConfig::resolve(&cli.common)?;
    match cli.command {
        Command::Segment => cmd_segment(&cfg),
        Command::Evaluate {
            predictions,
            method,
            close_ended,
        } => cmd_evaluate(&cfg, &predictions, method, close_ended),
        Command::Stats => cmd_stats(&cli.common, &cfg),
        Command::Normalize {
            names_file,
            level,
            no_fuzzy,
        } => cmd_normalize(&cli.common, &cfg, &names_file, level, !no_fuzzy),
        Command::Iaa { pairs } => cmd_iaa(&cli.common, &pairs),
    }
}

/// Run with explicit arguments (the first being the program name) and
/// return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

pub fn main() -> i32 {
    run(std::env::args_os())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        fs::write(&path, r#"{"segmenter": "keyword", "workers": 3, "alignment": {"max_edit_ratio": 0.1}}"#).unwrap();
        let cli = Cli::try_parse_from(["sectionid", "stats", "--config", path.to_str().unwrap(), "--workers", "5"]).unwrap();
        let cfg = RunConfig::resolve(&cli.common).unwrap();
        assert_eq!(cfg.segmenter, SegmenterKind::Keyword);
        assert_eq!(cfg.workers, 5);
        assert_eq!(cfg.alignment.max_edit_ratio, 0.1);
    }

    #[test]
    fn rejects_bad_ratio() {
        let cli = Cli::try_parse_from(["sectionid", "stats", "--max-edit-ratio", "1.5"]).unwrap();
        assert!(RunConfig::resolve(&cli.common).is_err());
    }

    #[test]
    fn record_grounding() {
        let rec = PredictionRecord {
            id: "d".into(),
            headers: vec!["A".into(), "B".into()],
            spans: vec![Some(Span::new(0, 1)), None],
            categories: vec![],
            error: None,
        };
        assert!(!rec.to_prediction().is_grounded());
        let rec = PredictionRecord {
            spans: vec![Some(Span::new(0, 1)), Some(Span::new(3, 4))],
            ..rec
        };
        assert!(rec.to_prediction().is_grounded());
    }
}
