use std::collections::HashSet;
use std::ops::Range;
use std::path::Path;

use crate::error::{Error, Result};

const ENGLISH_STOPWORDS: &str = include_str!("../../data/stopwords/en.txt");

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stopwords(HashSet<String>);

impl Stopwords {
    pub fn english() -> Self {
        Self::parse(ENGLISH_STOPWORDS)
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Self {
        Stopwords(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_lowercase)
                .collect(),
        )
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<S: Into<String>> FromIterator<S> for Stopwords {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Stopwords(iter.into_iter().map(|s| s.into().to_lowercase()).collect())
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Byte spans of candidate words in `text`, before lowercasing and
/// stopword removal. Placeholders (`⟦...⟧`) are skipped entirely. An
/// apostrophe joins two word runs (`don't`); every other non-word character
/// separates.
pub fn token_spans(text: &str) -> Vec<Range<usize>> {
    let mut spans = Vec::new();
    let mut chars = text.char_indices().peekable();
    let mut start: Option<usize> = None;

    while let Some((i, c)) = chars.next() {
        if c == '⟦' {
            if let Some(s) = start.take() {
                spans.push(s..i);
            }
            for (_, c2) in chars.by_ref() {
                if c2 == '⟧' {
                    break;
                }
            }
            continue;
        }
        if is_word_char(c) {
            start.get_or_insert(i);
            continue;
        }
        if c == '\'' && start.is_some() && chars.peek().is_some_and(|&(_, n)| is_word_char(n)) {
            continue;
        }
        if let Some(s) = start.take() {
            spans.push(s..i);
        }
    }
    if let Some(s) = start {
        spans.push(s..text.len());
    }
    spans
}

/// Splits preprocessed text into lowercased surface forms, dropping
/// punctuation, whitespace, placeholders and stopwords.
pub fn tokenize(text: &str, stopwords: &Stopwords) -> Vec<String> {
    token_spans(text)
        .into_iter()
        .map(|r| text[r].to_lowercase())
        .filter(|t| !stopwords.contains(t))
        .collect()
}

pub trait Tokenizer: Send + Sync {
    fn spans(&self, text: &str) -> Vec<Range<usize>>;

    fn is_stopword(&self, lowered: &str) -> bool;

    fn tokenize(&self, text: &str) -> Vec<String> {
        self.spans(text)
            .into_iter()
            .map(|r| text[r].to_lowercase())
            .filter(|t| !self.is_stopword(t))
            .collect()
    }
}

/// Deterministic rule-based word-boundary tokenizer.
#[derive(Debug, Clone, Default)]
pub struct RuleTokenizer {
    pub stopwords: Stopwords,
}

impl RuleTokenizer {
    pub fn new(stopwords: Stopwords) -> Self {
        RuleTokenizer { stopwords }
    }

    pub fn english() -> Self {
        Self::new(Stopwords::english())
    }
}

impl Tokenizer for RuleTokenizer {
    fn spans(&self, text: &str) -> Vec<Range<usize>> {
        token_spans(text)
    }

    fn is_stopword(&self, lowered: &str) -> bool {
        self.stopwords.contains(lowered)
    }
}
