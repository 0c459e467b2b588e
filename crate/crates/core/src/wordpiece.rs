//! Greedy longest-match-first WordPiece tokenization and corpus-level
//! unknown-token accounting.
//!
//! Pre-tokenization splits on Unicode whitespace and makes every punctuation
//! codepoint a token of its own. Each resulting word is then covered left to
//! right by the longest vocabulary piece available at the current position;
//! pieces after the first carry the `##` continuation prefix. A word with any
//! uncoverable position becomes a single unknown token.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_general_category::{get_general_category, GeneralCategory};

use crate::corpus::LabeledDataset;

pub const CONTINUATION_PREFIX: &str = "##";
pub const DEFAULT_UNK: &str = "[UNK]";
pub const DEFAULT_MAX_WORD_CHARS: usize = 100;

#[derive(Debug, Error)]
pub enum VocabError {
    #[error("vocab line {line}: duplicate entry {entry:?}")]
    Duplicate { line: usize, entry: String },
    #[error("vocab lacks the unknown token {0:?}")]
    MissingUnk(String),
    #[error("vocab line {0}: empty entry")]
    Empty(usize),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// ASCII symbol ranges (as BERT treats them) plus every Unicode `P*` category.
pub fn is_punctuation(c: char) -> bool {
    if c.is_ascii() {
        return c.is_ascii_punctuation();
    }
    matches!(
        get_general_category(c),
        GeneralCategory::ConnectorPunctuation
            | GeneralCategory::DashPunctuation
            | GeneralCategory::OpenPunctuation
            | GeneralCategory::ClosePunctuation
            | GeneralCategory::InitialPunctuation
            | GeneralCategory::FinalPunctuation
            | GeneralCategory::OtherPunctuation
    )
}

/// A pre-token as a byte range into the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PreToken {
    pub start: usize,
    pub end: usize,
    pub punct: bool,
}

impl PreToken {
    pub fn as_str<'a>(&self, text: &'a str) -> &'a str {
        &text[self.start..self.end]
    }
}

pub fn pre_tokenize(text: &str) -> Vec<PreToken> {
    let mut out = Vec::new();
    let mut word_start: Option<usize> = None;
    for (i, c) in text.char_indices() {
        if c.is_whitespace() || is_punctuation(c) {
            if let Some(s) = word_start.take() {
                out.push(PreToken { start: s, end: i, punct: false });
            }
            if !c.is_whitespace() {
                out.push(PreToken { start: i, end: i + c.len_utf8(), punct: true });
            }
        } else if word_start.is_none() {
            word_start = Some(i);
        }
    }
    if let Some(s) = word_start {
        out.push(PreToken { start: s, end: text.len(), punct: false });
    }
    out
}

/// Non-punctuation pre-tokens, in order.
pub fn words(text: &str) -> Vec<&str> {
    pre_tokenize(text).into_iter().filter(|t| !t.punct).map(|t| t.as_str(text)).collect()
}

#[derive(Debug, Clone)]
pub struct SubwordVocab {
    entries: Vec<String>,
    lookup: HashSet<String>,
    unk_token: String,
    max_word_chars: usize,
    lowercase: bool,
}

impl SubwordVocab {
    /// Builds a vocabulary from ordered entries; line numbers in errors are
    /// 1-based positions in `entries`.
    pub fn from_entries<I, S>(entries: I, unk_token: &str) -> Result<Self, VocabError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut ordered = Vec::new();
        let mut lookup = HashSet::new();
        for (i, e) in entries.into_iter().enumerate() {
            let e: String = e.into();
            if e.is_empty() {
                return Err(VocabError::Empty(i + 1));
            }
            if !lookup.insert(e.clone()) {
                return Err(VocabError::Duplicate { line: i + 1, entry: e });
            }
            ordered.push(e);
        }
        if !lookup.contains(unk_token) {
            return Err(VocabError::MissingUnk(unk_token.to_string()));
        }
        Ok(SubwordVocab {
            entries: ordered,
            lookup,
            unk_token: unk_token.to_string(),
            max_word_chars: DEFAULT_MAX_WORD_CHARS,
            lowercase: false,
        })
    }

    pub fn with_lowercase(mut self, lowercase: bool) -> Self {
        self.lowercase = lowercase;
        self
    }

    pub fn with_max_word_chars(mut self, max: usize) -> Self {
        self.max_word_chars = max;
        self
    }

    pub fn entries(&self) -> &[String] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, piece: &str) -> bool {
        self.lookup.contains(piece)
    }

    pub fn unk_token(&self) -> &str {
        &self.unk_token
    }

    /// Greedy longest-prefix cover of a single word.
    pub fn tokenize_word(&self, word: &str) -> Vec<String> {
        let bounds: Vec<usize> = word.char_indices().map(|(i, _)| i).chain([word.len()]).collect();
        let n_chars = bounds.len() - 1;
        if n_chars == 0 {
            return Vec::new();
        }
        if n_chars > self.max_word_chars {
            return vec![self.unk_token.clone()];
        }
        let mut pieces = Vec::new();
        let mut start = 0;
        let mut candidate = String::new();
        while start < n_chars {
            let mut found = None;
            for end in (start + 1..=n_chars).rev() {
                candidate.clear();
                if start > 0 {
                    candidate.push_str(CONTINUATION_PREFIX);
                }
                candidate.push_str(&word[bounds[start]..bounds[end]]);
                if self.lookup.contains(&candidate) {
                    found = Some(end);
                    break;
                }
            }
            match found {
                Some(end) => {
                    pieces.push(candidate.clone());
                    start = end;
                }
                None => return vec![self.unk_token.clone()],
            }
        }
        pieces
    }

    pub fn tokenize_text(&self, text: &str) -> Vec<String> {
        let lowered;
        let text = if self.lowercase {
            lowered = text.to_lowercase();
            lowered.as_str()
        } else {
            text
        };
        pre_tokenize(text).iter().flat_map(|t| self.tokenize_word(t.as_str(text))).collect()
    }

    pub fn unk_report(&self, ds: &LabeledDataset) -> UnkReport {
        let mut total = 0;
        let mut unk = 0;
        for t in &ds.tweets {
            for piece in self.tokenize_text(&t.text) {
                total += 1;
                if piece == self.unk_token {
                    unk += 1;
                }
            }
        }
        UnkReport::new(total, unk)
    }
}

/// One piece per line; line order is preserved.
pub fn load_vocab(path: &Path) -> Result<SubwordVocab, VocabError> {
    let content = fs::read_to_string(path)
        .map_err(|source| VocabError::Io { path: path.display().to_string(), source })?;
    parse_vocab(&content)
}

pub fn parse_vocab(content: &str) -> Result<SubwordVocab, VocabError> {
    let content = content.strip_suffix('\n').unwrap_or(content);
    SubwordVocab::from_entries(
        content.split('\n').map(|l| l.strip_suffix('\r').unwrap_or(l)),
        DEFAULT_UNK,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnkReport {
    pub total_pieces: usize,
    pub unk_pieces: usize,
    pub unk_percent: f64,
}

impl UnkReport {
    pub fn new(total_pieces: usize, unk_pieces: usize) -> Self {
        let unk_percent =
            if total_pieces == 0 { 0.0 } else { 100.0 * unk_pieces as f64 / total_pieces as f64 };
        UnkReport { total_pieces, unk_pieces, unk_percent }
    }
}

/// Single-line TSV `total\tunk\tpercent`, percent to three decimals.
impl fmt::Display for UnkReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}\t{:.3}", self.total_pieces, self.unk_pieces, self.unk_percent)
    }
}
