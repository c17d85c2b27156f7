//! Deterministic tokenization and span <-> IOB conversion.
//!
//! Tokens are maximal runs of alphanumeric characters; every other
//! non-whitespace character is a token of its own. Whitespace never forms a
//! token. There is a single header class, so tags are plain `B`/`I`/`O`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::span::Span;

/// A token with character offsets into its source text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

impl Token {
    pub fn span(&self) -> Span {
        Span::new(self.start, self.end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IobTag {
    B,
    I,
    O,
}

impl IobTag {
    /// B or I.
    pub fn is_header(self) -> bool {
        !matches!(self, IobTag::O)
    }
}

impl fmt::Display for IobTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IobTag::B => "B",
            IobTag::I => "I",
            IobTag::O => "O",
        })
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IobError {
    #[error("header spans {0} and {1} overlap or are out of order")]
    Overlap(Span, Span),
    #[error("{tokens} tokens but {tags} tags")]
    LengthMismatch { tokens: usize, tags: usize },
    #[error("malformed tag sequence: I at position {0} does not continue a header")]
    MalformedTags(usize),
}

/// Anything that can split text into offset tokens.
pub trait Tokenizer {
    fn tokenize(&self, text: &str) -> Vec<Token>;
}

/// The default alphanumeric-run tokenizer.
#[derive(Debug, Clone, Copy, Default)]
pub struct DefaultTokenizer;

impl Tokenizer for DefaultTokenizer {
    fn tokenize(&self, text: &str) -> Vec<Token> {
        tokenize(text)
    }
}

pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    // (start char, start byte) of the alphanumeric run in progress
    let mut run: Option<(usize, usize)> = None;
    let mut char_pos = 0;
    for (byte_pos, c) in text.char_indices() {
        if c.is_alphanumeric() {
            if run.is_none() {
                run = Some((char_pos, byte_pos));
            }
        } else {
            if let Some((start, start_byte)) = run.take() {
                tokens.push(Token {
                    text: text[start_byte..byte_pos].to_string(),
                    start,
                    end: char_pos,
                });
            }
            if !c.is_whitespace() {
                tokens.push(Token {
                    text: c.to_string(),
                    start: char_pos,
                    end: char_pos + 1,
                });
            }
        }
        char_pos += 1;
    }
    if let Some((start, start_byte)) = run {
        tokens.push(Token {
            text: text[start_byte..].to_string(),
            start,
            end: char_pos,
        });
    }
    tokens
}

/// True iff no `I` opens the sequence or directly follows an `O`.
pub fn is_well_formed(tags: &[IobTag]) -> bool {
    first_malformed(tags).is_none()
}

fn first_malformed(tags: &[IobTag]) -> Option<usize> {
    let mut prev = IobTag::O;
    for (i, &tag) in tags.iter().enumerate() {
        if tag == IobTag::I && prev == IobTag::O {
            return Some(i);
        }
        prev = tag;
    }
    None
}

/// Tag tokens against sorted, non-overlapping header spans.
///
/// A token belongs to a span when their character ranges overlap. The first
/// token of each span is `B`, later ones `I`. A token overlapping two spans is
/// claimed by the earlier one.
pub fn spans_to_iob(tokens: &[Token], header_spans: &[Span]) -> Result<Vec<IobTag>, IobError> {
    for w in header_spans.windows(2) {
        if w[1].start < w[0].end {
            return Err(IobError::Overlap(w[0], w[1]));
        }
    }
    let mut tags = vec![IobTag::O; tokens.len()];
    let mut ti = 0;
    for span in header_spans {
        // tokens are sorted; skip those ending before the span
        while ti < tokens.len() && tokens[ti].end <= span.start {
            ti += 1;
        }
        let mut first = true;
        let mut j = ti;
        while j < tokens.len() && tokens[j].start < span.end {
            if tags[j] == IobTag::O && tokens[j].span().overlaps(span) {
                tags[j] = if first { IobTag::B } else { IobTag::I };
                first = false;
            }
            j += 1;
        }
    }
    Ok(tags)
}

/// Recover header spans from a tag sequence: each maximal `B I*` run becomes
/// one span from its first token's start to its last token's end.
pub fn iob_to_spans(tokens: &[Token], tags: &[IobTag]) -> Result<Vec<Span>, IobError> {
    if tokens.len() != tags.len() {
        return Err(IobError::LengthMismatch {
            tokens: tokens.len(),
            tags: tags.len(),
        });
    }
    if let Some(pos) = first_malformed(tags) {
        return Err(IobError::MalformedTags(pos));
    }
    let mut spans = Vec::new();
    let mut current: Option<Span> = None;
    for (tok, &tag) in tokens.iter().zip(tags) {
        match tag {
            IobTag::B => {
                spans.extend(current.take());
                current = Some(tok.span());
            }
            IobTag::I => {
                if let Some(span) = current.as_mut() {
                    span.end = tok.end;
                }
            }
            IobTag::O => spans.extend(current.take()),
        }
    }
    spans.extend(current);
    Ok(spans)
}

#[cfg(test)]
mod tests {
    use super::*;
    use IobTag::*;

    fn texts(tokens: &[Token]) -> Vec<&str> {
        tokens.iter().map(|t| t.text.as_str()).collect()
    }

    #[test]
    fn tokenizes_header_line() {
        let toks = tokenize("Allergies: none");
        assert_eq!(
            toks,
            vec![
                Token { text: "Allergies".into(), start: 0, end: 9 },
                Token { text: ":".into(), start: 9, end: 10 },
                Token { text: "none".into(), start: 11, end: 15 },
            ]
        );
        assert!(tokenize("").is_empty());
        assert!(tokenize(" \n\t ").is_empty());
        assert_eq!(texts(&tokenize("HPI:61M w/")), ["HPI", ":", "61M", "w", "/"]);
    }

    #[test]
    fn offsets_are_characters() {
        let toks = tokenize("Exämen: ñ");
        assert_eq!(toks[0].span(), Span::new(0, 6));
        assert_eq!(toks[2].span(), Span::new(8, 9));
    }

    #[test]
    fn header_span_tags() {
        let toks = tokenize("Allergies: none");
        let tags = spans_to_iob(&toks, &[Span::new(0, 10)]).unwrap();
        assert_eq!(tags, [B, I, O]);
        assert_eq!(iob_to_spans(&toks, &tags).unwrap(), [Span::new(0, 10)]);
        assert_eq!(spans_to_iob(&toks, &[]).unwrap(), [O, O, O]);
    }

    #[test]
    fn adjacent_spans_each_start_with_b() {
        // "abc defg hi jk": spans cover "abc" and "defg"
        let toks = tokenize("abc defg hi jk");
        let tags = spans_to_iob(&toks, &[Span::new(0, 3), Span::new(4, 8)]).unwrap();
        assert_eq!(tags, [B, B, O, O]);
        let tags = spans_to_iob(&toks, &[Span::new(0, 3), Span::new(4, 11)]).unwrap();
        assert_eq!(tags, [B, B, I, O]);
    }

    #[test]
    fn span_cutting_a_token_still_tags_it() {
        let toks = tokenize("Allergies none");
        assert_eq!(spans_to_iob(&toks, &[Span::new(2, 5)]).unwrap(), [B, O]);
    }

    #[test]
    fn overlapping_spans_rejected() {
        let toks = tokenize("Allergies: none");
        assert!(matches!(
            spans_to_iob(&toks, &[Span::new(0, 10), Span::new(5, 12)]),
            Err(IobError::Overlap(..))
        ));
    }

    #[test]
    fn runs_to_spans() {
        let toks = tokenize("Allergies: none");
        assert!(iob_to_spans(&toks, &[O, O, O]).unwrap().is_empty());
        assert_eq!(
            iob_to_spans(&toks, &[B, O, B]).unwrap(),
            [Span::new(0, 9), Span::new(11, 15)]
        );
        assert_eq!(
            iob_to_spans(&toks, &[B, O]),
            Err(IobError::LengthMismatch { tokens: 3, tags: 2 })
        );
        assert_eq!(iob_to_spans(&toks, &[I, O, O]), Err(IobError::MalformedTags(0)));
        assert_eq!(iob_to_spans(&toks, &[B, O, I]), Err(IobError::MalformedTags(2)));
    }
}
