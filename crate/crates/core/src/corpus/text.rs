//! Character-offset text utilities: tokenization, sentence splitting, and
//! length-bounded chunking.
//!
//! Every offset in this crate counts Unicode scalar values, not bytes.

use std::num::NonZeroUsize;

/// Sentence-final words that end in a period but do not end a sentence.
pub const ABBREVIATIONS: &[&str] = &[
    "approx.", "no.", "ca.", "vs.", "fig.", "e.g.", "i.e.", "cf.", "dr.", "st.", "incl.",
    "resp.", "nos.", "pt.",
];

/// A half-open `[start, end)` range of character offsets.
pub type Span = (usize, usize);

/// Maps character offsets to byte offsets for one text.
#[derive(Debug, Clone)]
pub struct CharIndex<'a> {
    text: &'a str,
    bytes: Vec<usize>,
}

impl<'a> CharIndex<'a> {
    pub fn new(text: &'a str) -> Self {
        let mut bytes: Vec<usize> = text.char_indices().map(|(b, _)| b).collect();
        bytes.push(text.len());
        CharIndex { text, bytes }
    }

    /// Length in characters.
    pub fn len(&self) -> usize {
        self.bytes.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Returns `text[start..end]` in character offsets, or `None` when the
    /// range is empty, reversed, or out of bounds.
    pub fn slice(&self, start: usize, end: usize) -> Option<&'a str> {
        if start >= end || end > self.len() {
            return None;
        }
        Some(&self.text[self.bytes[start]..self.bytes[end]])
    }

    /// Character offset of a byte offset that lies on a char boundary.
    pub fn char_offset(&self, byte: usize) -> usize {
        self.bytes.partition_point(|&b| b < byte)
    }
}

/// Splits text into tokens: maximal runs of alphanumeric characters, or a
/// single punctuation character. Whitespace separates tokens and is never
/// part of one.
pub fn tokenize(text: &str) -> Vec<Span> {
    let mut tokens = Vec::new();
    let mut run_start: Option<usize> = None;
    for (i, c) in text.chars().enumerate() {
        if c.is_alphanumeric() {
            run_start.get_or_insert(i);
            continue;
        }
        if let Some(s) = run_start.take() {
            tokens.push((s, i));
        }
        if !c.is_whitespace() {
            tokens.push((i, i + 1));
        }
    }
    if let Some(s) = run_start {
        tokens.push((s, text.chars().count()));
    }
    tokens
}

/// Rule-based sentence splitter.
///
/// A sentence ends after `.`, `!` or `?` when followed by whitespace or the
/// end of text, unless the word carrying the period is in [`ABBREVIATIONS`].
/// A line break ends a sentence when it is followed by whitespace, an
/// uppercase letter, or the end of text. Returned spans are trimmed of
/// surrounding whitespace and never empty.
pub fn split_sentences(text: &str) -> Vec<Span> {
    let chars: Vec<char> = text.chars().collect();
    let n = chars.len();
    let mut spans = Vec::new();
    let mut seg_start = 0;

    for i in 0..n {
        let next = chars.get(i + 1).copied();
        let boundary = match chars[i] {
            '.' | '!' | '?' => {
                next.is_none_or(char::is_whitespace)
                    && !(chars[i] == '.' && is_guarded_abbreviation(&chars, i))
            }
            '\n' => next.is_none_or(|c| c.is_whitespace() || c.is_uppercase()),
            _ => false,
        };
        if boundary {
            push_trimmed(&chars, seg_start, i + 1, &mut spans);
            seg_start = i + 1;
        }
    }
    push_trimmed(&chars, seg_start, n, &mut spans);
    spans
}

fn is_guarded_abbreviation(chars: &[char], period: usize) -> bool {
    let word_start = chars[..period]
        .iter()
        .rposition(|c| c.is_whitespace())
        .map_or(0, |p| p + 1);
    let word: String = chars[word_start..=period]
        .iter()
        .flat_map(|c| c.to_lowercase())
        .collect();
    // Strip leading brackets/quotes so "(approx." still counts.
    let word = word.trim_start_matches(|c: char| !c.is_alphanumeric());
    ABBREVIATIONS.contains(&word)
}

fn push_trimmed(chars: &[char], mut start: usize, mut end: usize, out: &mut Vec<Span>) {
    while start < end && chars[start].is_whitespace() {
        start += 1;
    }
    while end > start && chars[end - 1].is_whitespace() {
        end -= 1;
    }
    if start < end {
        out.push((start, end));
    }
}

/// Greedy left-to-right split of a token sequence into chunks of at most
/// `max_len` tokens. All chunks except the last have exactly `max_len`.
pub fn chunk_sentence<T>(tokens: &[T], max_len: NonZeroUsize) -> Vec<&[T]> {
    tokens.chunks(max_len.get()).collect()
}

/// Index of the sentence containing character `pos`, if any.
pub fn sentence_of(sentences: &[Span], pos: usize) -> Option<usize> {
    let idx = sentences.partition_point(|&(_, end)| end <= pos);
    sentences
        .get(idx)
        .filter(|&&(start, _)| start <= pos)
        .map(|_| idx)
}
