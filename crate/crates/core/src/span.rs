//! Character-offset spans and text slicing by character position.

use std::fmt;

use serde::{Deserialize, Serialize};

/// A half-open `[start, end)` range of character offsets.
///
/// Serialized as a two-element array `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub const fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    /// True when the two ranges share at least one character.
    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }
}

impl From<[usize; 2]> for Span {
    fn from(v: [usize; 2]) -> Self {
        Span::new(v[0], v[1])
    }
}

impl From<Span> for [usize; 2] {
    fn from(s: Span) -> Self {
        [s.start, s.end]
    }
}

impl From<(usize, usize)> for Span {
    fn from((start, end): (usize, usize)) -> Self {
        Span::new(start, end)
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{})", self.start, self.end)
    }
}

/// Byte offsets of every character boundary in a string, so character
/// offsets can be sliced in O(1).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CharIndex {
    // boundaries[i] is the byte offset of char i; the last entry is text.len()
    boundaries: Vec<usize>,
}

impl CharIndex {
    pub fn new(text: &str) -> Self {
        let mut boundaries: Vec<usize> = text.char_indices().map(|(b, _)| b).collect();
        boundaries.push(text.len());
        CharIndex { boundaries }
    }

    /// Number of characters in the indexed text.
    pub fn char_len(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn byte_offset(&self, char_offset: usize) -> usize {
        self.boundaries[char_offset]
    }

    /// Character offset of a byte offset that lies on a char boundary.
    pub fn char_offset(&self, byte_offset: usize) -> usize {
        self.boundaries
            .binary_search(&byte_offset)
            .expect("byte offset is not on a character boundary")
    }

    /// Slice `text` by a character span. Returns `None` when out of bounds.
    pub fn slice<'a>(&self, text: &'a str, span: Span) -> Option<&'a str> {
        if span.start > span.end || span.end > self.char_len() {
            return None;
        }
        Some(&text[self.boundaries[span.start]..self.boundaries[span.end]])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slices_multibyte_text_by_chars() {
        let text = "Ällergies: né";
        let idx = CharIndex::new(text);
        assert_eq!(idx.char_len(), 13);
        assert_eq!(idx.slice(text, Span::new(0, 9)), Some("Ällergies"));
        assert_eq!(idx.slice(text, Span::new(11, 13)), Some("né"));
        assert_eq!(idx.slice(text, Span::new(11, 14)), None);
        assert_eq!(idx.char_offset(idx.byte_offset(12)), 12);
    }

    #[test]
    fn span_serializes_as_pair() {
        let s: Span = serde_json::from_str("[3,7]").unwrap();
        assert_eq!(s, Span::new(3, 7));
        assert_eq!(serde_json::to_string(&s).unwrap(), "[3,7]");
        assert!(Span::new(0, 10).overlaps(&Span::new(5, 12)));
        assert!(!Span::new(0, 4).overlaps(&Span::new(4, 8)));
    }
}
