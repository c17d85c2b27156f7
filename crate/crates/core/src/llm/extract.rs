//! Prompt → complete → parse, per document and in bounded-concurrency batches.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Condvar, Mutex};
use std::thread;

use super::client::{complete, ChatClient, ChatRequest, ClientError, HttpReply};
use super::parse::parse_llm_response;
use super::prompt::{build_messages, PromptStrategy};
use super::{LlmConfig, LlmError};
use crate::corpus::Document;
use crate::Prediction;

/// Split `text` into overlapping character ranges of at most `budget` chars,
/// cutting at line starts where possible.
pub fn chunk_ranges(text: &str, budget: usize, overlap: usize) -> Vec<(usize, usize)> {
    let len = text.chars().count();
    let line_starts: Vec<usize> = std::iter::once(0)
        .chain(text.chars().enumerate().filter(|(_, c)| *c == '\n').map(|(i, _)| i + 1))
        .filter(|&i| i < len)
        .collect();
    // largest line start in (lo, hi]
    let line_start_in = |lo: usize, hi: usize| -> Option<usize> {
        let idx = line_starts.partition_point(|&s| s <= hi);
        line_starts[..idx].last().copied().filter(|&s| s > lo)
    };

    let mut ranges = Vec::new();
    let mut start = 0;
    loop {
        if len - start <= budget {
            ranges.push((start, len));
            return ranges;
        }
        let limit = start + budget;
        let end = line_start_in(start, limit).unwrap_or(limit);
        ranges.push((start, end));
        start = if end - start > overlap {
            line_start_in(start, end - overlap).unwrap_or(end - overlap)
        } else {
            end
        };
    }
}

/// Append `next` to `acc`, dropping the longest prefix of `next` that
/// repeats the tail of `acc`.
fn join_dedup(acc: &mut Vec<String>, next: Vec<String>) {
    let max_k = acc.len().min(next.len());
    let k = (1..=max_k)
        .rev()
        .find(|&k| acc[acc.len() - k..] == next[..k])
        .unwrap_or(0);
    acc.extend(next.into_iter().skip(k));
}

fn query(
    text: &str,
    strategy: &PromptStrategy,
    config: &LlmConfig,
    client: &dyn ChatClient,
) -> Result<Vec<String>, LlmError> {
    let messages = build_messages(strategy, text)?;
    let completion = complete(config, &messages, client)?;
    let mut headers = parse_llm_response(&completion.content)?;
    if matches!(strategy, PromptStrategy::CloseEnded { .. }) {
        headers.retain(|h| !h.eq_ignore_ascii_case("none"));
    }
    Ok(headers)
}

/// Ask the model for the document's section headers. The result is
/// ungrounded; see [`crate::align`] for span grounding.
pub fn extract_headers(
    doc: &Document,
    strategy: &PromptStrategy,
    config: &LlmConfig,
    client: &dyn ChatClient,
) -> Result<Prediction, LlmError> {
    strategy.validate()?;
    config.validate()?;
    if doc.text.trim().is_empty() {
        return Ok(Prediction::default());
    }
    let headers = match config.context_budget_chars {
        Some(budget) if doc.char_len() > budget => {
            let mut acc = Vec::new();
            for (start, end) in chunk_ranges(&doc.text, budget, config.chunk_overlap_chars) {
                let chunk = doc.slice(crate::span::Span::new(start, end)).unwrap_or_default();
                join_dedup(&mut acc, query(chunk, strategy, config, client)?);
            }
            acc
        }
        _ => query(&doc.text, strategy, config, client)?,
    };
    Ok(Prediction::ungrounded(headers))
}

/// Counting semaphore.
struct Limiter {
    count: Mutex<usize>,
    freed: Condvar,
    max: usize,
}

impl Limiter {
    fn new(max: usize) -> Self {
        Limiter {
            count: Mutex::new(0),
            freed: Condvar::new(),
            max,
        }
    }

    fn acquire(&self) {
        let mut n = self.count.lock().unwrap();
        while *n >= self.max {
            n = self.freed.wait(n).unwrap();
        }
        *n += 1;
    }

    fn release(&self) {
        *self.count.lock().unwrap() -= 1;
        self.freed.notify_one();
    }
}

struct Bounded<'a> {
    inner: &'a dyn ChatClient,
    limiter: Limiter,
}

impl ChatClient for Bounded<'_> {
    fn send(&self, endpoint: &str, request: &ChatRequest) -> Result<HttpReply, ClientError> {
        self.limiter.acquire();
        let out = self.inner.send(endpoint, request);
        self.limiter.release();
        out
    }
}

/// Per-document outcomes of a batch, in input order.
#[derive(Debug)]
pub struct BatchOutcome {
    pub results: Vec<Result<Prediction, LlmError>>,
}

impl BatchOutcome {
    /// Predictions with failed documents replaced by empty predictions.
    pub fn predictions(&self) -> Vec<Prediction> {
        self.results
            .iter()
            .map(|r| r.as_ref().cloned().unwrap_or_default())
            .collect()
    }

    pub fn failure_count(&self) -> usize {
        self.results.iter().filter(|r| r.is_err()).count()
    }
}

/// Run [`extract_headers`] over many documents with `workers` threads, never
/// exceeding `config.max_in_flight` concurrent requests.
pub fn extract_batch(
    docs: &[Document],
    strategy: &PromptStrategy,
    config: &LlmConfig,
    client: &dyn ChatClient,
    workers: usize,
) -> BatchOutcome {
    let bounded = Bounded {
        inner: client,
        limiter: Limiter::new(config.max_in_flight.max(1)),
    };
    let slots: Vec<Mutex<Option<Result<Prediction, LlmError>>>> =
        docs.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = workers.clamp(1, docs.len().max(1));
    thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(doc) = docs.get(i) else { break };
                let result = extract_headers(doc, strategy, config, &bounded);
                if let Err(e) = &result {
                    log::warn!("document {}: {e}", doc.id);
                }
                *slots[i].lock().unwrap() = Some(result);
            });
        }
    });
    BatchOutcome {
        results: slots
            .into_iter()
            .map(|s| s.into_inner().unwrap().expect("every slot filled"))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::SourceKind;

    #[test]
    fn chunks_cover_text_with_overlap() {
        let text: String = (0..40).map(|i| format!("line {i:02} ........\n")).collect();
        let ranges = chunk_ranges(&text, 100, 30);
        assert!(ranges.len() > 1);
        assert_eq!(ranges[0].0, 0);
        assert_eq!(ranges.last().unwrap().1, text.chars().count());
        for w in ranges.windows(2) {
            assert!(w[1].0 < w[0].1, "chunks overlap");
            assert!(w[0].1 - w[1].0 >= 30);
        }
        assert!(ranges.iter().all(|(s, e)| e - s <= 100));
    }

    #[test]
    fn single_long_line_is_hard_split() {
        let text = "x".repeat(250);
        let ranges = chunk_ranges(&text, 100, 20);
        assert_eq!(ranges, [(0, 100), (80, 180), (160, 250)]);
    }

    #[test]
    fn seam_duplicates_dropped() {
        let mut acc = vec!["HPI".to_string(), "Plan".to_string()];
        join_dedup(&mut acc, vec!["Plan".into(), "Follow-up".into()]);
        assert_eq!(acc, ["HPI", "Plan", "Follow-up"]);
        join_dedup(&mut acc, vec!["Labs".into()]);
        assert_eq!(acc, ["HPI", "Plan", "Follow-up", "Labs"]);
    }

    #[test]
    fn empty_document_makes_no_call() {
        struct Panics;
        impl ChatClient for Panics {
            fn send(&self, _: &str, _: &ChatRequest) -> Result<HttpReply, ClientError> {
                panic!("no request expected")
            }
        }
        let doc = Document::new("e", "  \n", SourceKind::EhrClean);
        let p = extract_headers(&doc, &PromptStrategy::ZeroShot, &LlmConfig::default(), &Panics).unwrap();
        assert!(p.is_empty());
    }
}
