//! Tokenization, sentence splitting and sliding-window segmentation.
//!
//! Token offsets are byte offsets into the original text, so
//! `&text[tok.start..tok.end]` always recovers the raw surface.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// Lowercase; split on every non-alphanumeric character.
    #[default]
    LowerAlnum,
    /// Split on whitespace only; case preserved.
    WhitespaceOnly,
}

impl std::str::FromStr for Normalization {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "lower-alnum" => Ok(Normalization::LowerAlnum),
            "whitespace-only" | "whitespace" => Ok(Normalization::WhitespaceOnly),
            other => Err(format!("unknown tokenizer mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenSequence {
    pub tokens: Vec<Token>,
    pub normalization: Normalization,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn surfaces(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.surface.as_str()).collect()
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.tokens.iter().map(|t| t.surface.clone()).collect()
    }

    /// Keeps only the first `n` tokens.
    pub fn truncated(&self, n: usize) -> TokenSequence {
        TokenSequence {
            tokens: self.tokens.iter().take(n).cloned().collect(),
            normalization: self.normalization,
        }
    }
}

pub fn tokenize(text: &str, mode: Normalization) -> TokenSequence {
    let is_sep: fn(char) -> bool = match mode {
        Normalization::LowerAlnum => |c: char| !c.is_alphanumeric(),
        Normalization::WhitespaceOnly => char::is_whitespace,
    };

    let mut tokens = Vec::new();
    let mut start: Option<usize> = None;
    for (i, c) in text.char_indices() {
        match (is_sep(c), start) {
            (true, Some(s)) => {
                tokens.push(make_token(text, s, i, mode));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        tokens.push(make_token(text, s, text.len(), mode));
    }

    TokenSequence {
        tokens,
        normalization: mode,
    }
}

fn make_token(text: &str, start: usize, end: usize, mode: Normalization) -> Token {
    let raw = &text[start..end];
    let surface = match mode {
        Normalization::LowerAlnum => raw.to_lowercase(),
        Normalization::WhitespaceOnly => raw.to_string(),
    };
    Token {
        surface,
        start,
        end,
    }
}

/// Word count under the default `LowerAlnum` convention.
pub fn word_count(text: &str) -> usize {
    tokenize(text, Normalization::LowerAlnum).len()
}

const ABBREVIATIONS: &[&str] = &["dr", "mr", "mrs", "ms", "vs", "e.g", "i.e"];

/// Splits `text` into sentence byte spans `(start, end)`.
///
/// A sentence ends at `.`, `!` or `?` when the next character is whitespace
/// or the end of text. A period directly after one of the known
/// abbreviations does not end a sentence. Spans are trimmed and
/// whitespace-only sentences are dropped.
pub fn split_sentences(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut sent_start = 0;
    let mut iter = text.char_indices().peekable();

    while let Some((i, c)) = iter.next() {
        if !matches!(c, '.' | '!' | '?') {
            continue;
        }
        let at_boundary = match iter.peek() {
            None => true,
            Some(&(_, next)) => next.is_whitespace(),
        };
        if !at_boundary {
            continue;
        }
        if c == '.' && ends_with_abbreviation(&text[sent_start..i]) {
            continue;
        }
        push_trimmed(text, sent_start, i + c.len_utf8(), &mut spans);
        sent_start = i + c.len_utf8();
    }
    push_trimmed(text, sent_start, text.len(), &mut spans);
    spans
}

pub fn sentence_count(text: &str) -> usize {
    split_sentences(text).len()
}

fn ends_with_abbreviation(before: &str) -> bool {
    let word = before
        .rsplit(char::is_whitespace)
        .next()
        .unwrap_or_default()
        .trim_start_matches(|c: char| !c.is_alphanumeric());
    ABBREVIATIONS
        .iter()
        .any(|abbr| word.eq_ignore_ascii_case(abbr))
}

fn push_trimmed(text: &str, start: usize, end: usize, spans: &mut Vec<(usize, usize)>) {
    let slice = &text[start..end];
    let lead = slice.len() - slice.trim_start().len();
    let trimmed = slice.trim();
    if !trimmed.is_empty() {
        let s = start + lead;
        spans.push((s, s + trimmed.len()));
    }
}

/// Sliding-window parameters. `overlap < max_len` is enforced on construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    max_len: usize,
    overlap: usize,
}

impl Default for Window {
    fn default() -> Self {
        Window {
            max_len: 512,
            overlap: 100,
        }
    }
}

impl Window {
    pub fn new(max_len: usize, overlap: usize) -> Result<Self> {
        if overlap >= max_len {
            return Err(Error::InvalidWindow { max_len, overlap });
        }
        Ok(Window { max_len, overlap })
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn overlap(&self) -> usize {
        self.overlap
    }

    pub fn stride(&self) -> usize {
        self.max_len - self.overlap
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
    pub index: usize,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

/// Segments `[k*stride, min(k*stride + max_len, n))`, stopping at the first
/// segment that reaches `n`. Sequences of at most `max_len` tokens
/// (including the empty one) yield exactly one segment.
pub fn segment_sliding(n: usize, window: Window) -> Vec<Segment> {
    let stride = window.stride();
    let mut segments = Vec::new();
    let mut index = 0;
    loop {
        let start = index * stride;
        let end = (start + window.max_len).min(n);
        segments.push(Segment { start, end, index });
        if end >= n {
            break;
        }
        index += 1;
    }
    segments
}
