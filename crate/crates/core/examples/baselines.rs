//! The three rule-based segmenters on one note.

use sectionid::baselines::{keyword_matches, regex_matches, rule_matches, HeaderLexicon, RuleConfig};
use sectionid::{Document, Ontology, SourceKind};

const NOTE: &str = "CHIEF COMPLAINT
Cough for two weeks.
History of Present Illness: dry cough, worse at night.
Allergies
Penicillin
Vital Signs: BP 120/80
Assessment and Plan:
Likely post-viral cough. Follow up in 2 weeks.";

fn main() {
    let doc = Document::new("demo", NOTE, SourceKind::EhrClean);
    let lexicon = HeaderLexicon::default_for(&Ontology::shipped());
    let rules = RuleConfig::default();

    println!("keyword:");
    for m in keyword_matches(&doc, &lexicon) {
        println!("  {:<30} {}", m.text, m.span);
    }
    println!("regex:");
    for m in regex_matches(&doc, &rules) {
        println!("  {:<30} {} ({})", m.text, m.span, m.rule.unwrap_or_default());
    }
    println!("rules (union, keyword wins):");
    for m in rule_matches(&doc, &lexicon, &rules) {
        println!("  {:<30} {} {:?}", m.text, m.span, m.origin);
    }
}
