//! Synthetic corpora and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use sectionid::baselines::top_section_names;
use sectionid::{AnnotatedDocument, Document, IobTag, SectionAnnotation, SourceKind, Span};

pub const BODY_WORDS: &[&str] = &[
    "patient", "reports", "mild", "pain", "since", "monday", "denies", "fever", "taking", "daily", "dose",
    "stable", "improved", "left", "knee", "swelling", "blood", "pressure", "normal", "rate", "rhythm", "clear",
    "lungs", "soft", "tender", "walks", "without", "aid", "sleeps", "well", "eats", "weight", "unchanged",
    "mg", "twice", "week", "months", "ago", "no", "new", "complaints", "tolerating", "diet", "x-ray",
];

/// Header names with at least one letter, from the shipped top-50 list.
pub fn header_pool() -> Vec<String> {
    top_section_names()
}

fn body_line<R: Rng>(rng: &mut R) -> String {
    let n = rng.gen_range(2..9);
    (0..n).map(|_| *BODY_WORDS.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
}

/// Build a note whose sections have the given `(text_in_document, label)`
/// headers, each on its own line, optionally followed by a colon, with one to
/// three lines of lowercase body text. Bodies never contain any header
/// case-insensitively.
pub fn synthetic_doc<R: Rng>(rng: &mut R, id: &str, headers: &[(String, String)]) -> AnnotatedDocument {
    let folded: Vec<String> = headers
        .iter()
        .flat_map(|(t, l)| [t.to_lowercase(), l.to_lowercase()])
        .collect();
    let mut text = String::new();
    let mut len = 0usize;
    let mut sections = Vec::new();
    let push = |text: &mut String, len: &mut usize, s: &str| {
        text.push_str(s);
        *len += s.chars().count();
    };
    if rng.gen_bool(0.3) {
        let l = body_line(rng);
        push(&mut text, &mut len, &l);
        push(&mut text, &mut len, "\n");
    }
    for (surface, label) in headers {
        let start = len;
        push(&mut text, &mut len, surface);
        let span = Span::new(start, len);
        if rng.gen_bool(0.5) {
            push(&mut text, &mut len, ":");
        }
        for _ in 0..rng.gen_range(1..4) {
            push(&mut text, &mut len, "\n");
            let line = loop {
                let l = body_line(rng);
                if !folded.iter().any(|h| !h.is_empty() && l.contains(h.as_str())) {
                    break l;
                }
            };
            push(&mut text, &mut len, &line);
        }
        push(&mut text, &mut len, "\n");
        sections.push(SectionAnnotation {
            label: label.clone(),
            header_span: span,
            body_span: None,
            raw_header: surface.clone(),
        });
    }
    AnnotatedDocument {
        document: Document::new(id, text, SourceKind::EhrClean),
        sections,
    }
}

/// Distinct headers from the pool such that none contains another
/// (case-insensitively) and none occurs inside an earlier one.
pub fn pick_headers<R: Rng>(rng: &mut R, pool: &[String], n: usize) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let mut order: Vec<&String> = pool.iter().collect();
    order.shuffle(rng);
    for h in order {
        if out.len() == n {
            break;
        }
        let hl = h.to_lowercase();
        if out.iter().all(|o| {
            let ol = o.to_lowercase();
            !ol.contains(&hl) && !hl.contains(&ol)
        }) {
            out.push(h.clone());
        }
    }
    out
}

/// Headers drawn with replacement, so repeats and nested names occur.
pub fn random_corpus<R: Rng>(rng: &mut R, docs: usize) -> Vec<AnnotatedDocument> {
    let pool = header_pool();
    (0..docs)
        .map(|i| {
            let n = rng.gen_range(0..7);
            let headers: Vec<(String, String)> = (0..n)
                .map(|_| {
                    let h = pool.choose(rng).unwrap().clone();
                    (h.clone(), h)
                })
                .collect();
            synthetic_doc(rng, &format!("doc{i}"), &headers)
        })
        .collect()
}

/// A well-formed random IOB sequence.
pub fn random_tags<R: Rng>(rng: &mut R, n: usize) -> Vec<IobTag> {
    let mut tags = Vec::with_capacity(n);
    for _ in 0..n {
        let t = match rng.gen_range(0..3) {
            0 => IobTag::B,
            1 => IobTag::I,
            _ => IobTag::O,
        };
        let t = if t == IobTag::I && tags.last().is_none_or(|p| *p == IobTag::O) {
            IobTag::B
        } else {
            t
        };
        tags.push(t);
    }
    tags
}

/// Positional counts, computed independently of the library:
/// (tp, fp, fn, gold header tokens, predicted header tokens).
pub fn brute_force_counts(gold: &[IobTag], pred: &[IobTag]) -> (u64, u64, u64, u64, u64) {
    let h = |t: &IobTag| matches!(t, IobTag::B | IobTag::I);
    let mut c = (0, 0, 0, 0, 0);
    for i in 0..gold.len() {
        let (g, p) = (h(&gold[i]), h(&pred[i]));
        if g && p {
            c.0 += 1;
        }
        if !g && p {
            c.1 += 1;
        }
        if g && !p {
            c.2 += 1;
        }
        if g {
            c.3 += 1;
        }
        if p {
            c.4 += 1;
        }
    }
    c
}
