//! Labeled tweet datasets: TSV ingestion and persistence, descriptive
//! statistics, and seeded stratified splitting.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::wordpiece::is_punctuation;

pub const CANONICAL_HEADER: [&str; 4] = ["topic_id", "tweet_id", "tweet_text", "check_worthiness"];
const ORIGIN_COLUMN: &str = "origin";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("split error: {0}")]
    Split(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CorpusError {
    fn parse(line: usize, reason: impl Into<String>) -> Self {
        CorpusError::Parse { line, reason: reason.into() }
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CorpusError::Io { path: path.display().to_string(), source }
    }
}

/// Binary check-worthiness label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    NotCheckWorthy,
    CheckWorthy,
}

impl Label {
    pub fn is_positive(self) -> bool {
        self == Label::CheckWorthy
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::NotCheckWorthy => "0",
            Label::CheckWorthy => "1",
        }
    }

    pub fn as_f64(self) -> f64 {
        if self.is_positive() {
            1.0
        } else {
            0.0
        }
    }
}

impl From<bool> for Label {
    fn from(positive: bool) -> Self {
        if positive {
            Label::CheckWorthy
        } else {
            Label::NotCheckWorthy
        }
    }
}

/// Where a tweet came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Original,
    Augmented,
    Backtranslated,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Original => "original",
            Origin::Augmented => "augmented",
            Origin::Backtranslated => "backtranslated",
        }
    }
}

impl FromStr for Origin {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "original" => Ok(Origin::Original),
            "augmented" => Ok(Origin::Augmented),
            "backtranslated" => Ok(Origin::Backtranslated),
            other => Err(format!("unknown origin {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tweet {
    pub topic_id: String,
    pub tweet_id: String,
    pub text: String,
    pub label: Label,
    pub origin: Origin,
}

impl Tweet {
    pub fn new(
        topic_id: impl Into<String>,
        tweet_id: impl Into<String>,
        text: impl Into<String>,
        label: Label,
    ) -> Self {
        Tweet {
            topic_id: topic_id.into(),
            tweet_id: tweet_id.into(),
            text: text.into(),
            label,
            origin: Origin::Original,
        }
    }
}

/// Input file layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    /// Fixed header, escaped text, optional trailing `origin` column.
    Canonical,
    /// Organizer files: columns located by header name, text unescaped,
    /// extra columns ignored.
    Checkthat,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "canonical" => Ok(Format::Canonical),
            "checkthat" => Ok(Format::Checkthat),
            other => Err(format!("unknown format {other:?} (expected canonical or checkthat)")),
        }
    }
}

/// An ordered collection of tweets. Order is significant: ranking ties are
/// broken by it.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub name: String,
    pub tweets: Vec<Tweet>,
}

impl LabeledDataset {
    pub fn new(name: impl Into<String>, tweets: Vec<Tweet>) -> Self {
        LabeledDataset { name: name.into(), tweets }
    }

    pub fn len(&self) -> usize {
        self.tweets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tweets.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.tweets.iter().filter(|t| t.label.is_positive()).count()
    }

    pub fn negatives(&self) -> usize {
        self.len() - self.positives()
    }

    pub fn ids(&self) -> HashSet<&str> {
        self.tweets.iter().map(|t| t.tweet_id.as_str()).collect()
    }

    /// Checks the dataset-level invariants that `parse_dataset` enforces.
    pub fn validate(&self) -> Result<(), CorpusError> {
        let mut seen = HashSet::with_capacity(self.len());
        for (i, t) in self.tweets.iter().enumerate() {
            if t.text.trim().is_empty() {
                return Err(CorpusError::parse(i + 1, "empty tweet text"));
            }
            if !seen.insert(t.tweet_id.as_str()) {
                return Err(CorpusError::parse(i + 1, format!("duplicate tweet_id {:?}", t.tweet_id)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub n_samples: usize,
    pub n_positive: usize,
    pub positive_rate: f64,
    pub unique_word_count: usize,
}

pub fn parse_dataset(path: &Path, format: Format) -> Result<LabeledDataset, CorpusError> {
    let content = fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_str(&name, &content, format)
}

pub fn parse_str(name: &str, content: &str, format: Format) -> Result<LabeledDataset, CorpusError> {
    let mut lines = content.split('\n').enumerate().map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)));
    let (_, header) = lines.next().ok_or_else(|| CorpusError::parse(1, "missing header"))?;
    let header: Vec<&str> = header.split('\t').collect();

    let layout = match format {
        Format::Canonical => canonical_layout(&header)?,
        Format::Checkthat => checkthat_layout(&header)?,
    };

    let mut tweets = Vec::new();
    let mut seen = HashSet::new();
    for (line_no, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != header.len() {
            return Err(CorpusError::parse(
                line_no,
                format!("column count: expected {}, found {}", header.len(), fields.len()),
            ));
        }
        let text = match format {
            Format::Canonical => unescape(fields[layout.text]).map_err(|r| CorpusError::parse(line_no, r))?,
            Format::Checkthat => fields[layout.text].to_string(),
        };
        if text.trim().is_empty() {
            return Err(CorpusError::parse(line_no, "empty tweet text"));
        }
        let label = match fields[layout.label].trim() {
            "0" => Label::NotCheckWorthy,
            "1" => Label::CheckWorthy,
            other => return Err(CorpusError::parse(line_no, format!("non-binary label {other:?}"))),
        };
        let origin = match layout.origin {
            Some(i) => fields[i].parse().map_err(|r: String| CorpusError::parse(line_no, r))?,
            None => Origin::Original,
        };
        let tweet_id = fields[layout.tweet_id].trim().to_string();
        if tweet_id.is_empty() {
            return Err(CorpusError::parse(line_no, "empty tweet_id"));
        }
        if !seen.insert(tweet_id.clone()) {
            return Err(CorpusError::parse(line_no, format!("duplicate tweet_id {tweet_id:?}")));
        }
        tweets.push(Tweet {
            topic_id: fields[layout.topic_id].trim().to_string(),
            tweet_id,
            text,
            label,
            origin,
        });
    }
    Ok(LabeledDataset::new(name, tweets))
}

struct Layout {
    topic_id: usize,
    tweet_id: usize,
    text: usize,
    label: usize,
    origin: Option<usize>,
}

fn canonical_layout(header: &[&str]) -> Result<Layout, CorpusError> {
    let base_ok = header.len() >= 4 && header[..4] == CANONICAL_HEADER;
    let origin = match header.len() {
        4 => None,
        5 if header[4] == ORIGIN_COLUMN => Some(4),
        _ => None,
    };
    if !base_ok || (header.len() != 4 && origin.is_none()) {
        return Err(CorpusError::parse(
            1,
            format!("bad header: expected {:?} with optional {ORIGIN_COLUMN:?}", CANONICAL_HEADER.join("\t")),
        ));
    }
    Ok(Layout { topic_id: 0, tweet_id: 1, text: 2, label: 3, origin })
}

fn checkthat_layout(header: &[&str]) -> Result<Layout, CorpusError> {
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| CorpusError::parse(1, format!("header lacks column {name:?}")))
    };
    Ok(Layout {
        topic_id: find("topic_id")?,
        tweet_id: find("tweet_id")?,
        text: find("tweet_text")?,
        label: find("check_worthiness")?,
        origin: None,
    })
}

/// Serializes in canonical TSV. The `origin` column is written only when
/// some tweet is not an original.
pub fn to_canonical_tsv(ds: &LabeledDataset) -> String {
    let with_origin = ds.tweets.iter().any(|t| t.origin != Origin::Original);
    let mut out = CANONICAL_HEADER.join("\t");
    if with_origin {
        out.push('\t');
        out.push_str(ORIGIN_COLUMN);
    }
    out.push('\n');
    for t in &ds.tweets {
        out.push_str(&t.topic_id);
        out.push('\t');
        out.push_str(&t.tweet_id);
        out.push('\t');
        out.push_str(&escape(&t.text));
        out.push('\t');
        out.push_str(t.label.as_str());
        if with_origin {
            out.push('\t');
            out.push_str(t.origin.as_str());
        }
        out.push('\n');
    }
    out
}

pub fn write_dataset(ds: &LabeledDataset, path: &Path) -> Result<(), CorpusError> {
    fs::write(path, to_canonical_tsv(ds)).map_err(|e| CorpusError::io(path, e))
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(field: &str) -> Result<String, String> {
    let mut out = String::with_capacity(field.len());
    let mut chars = field.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some(other) => return Err(format!("unknown escape \\{other}")),
            None => return Err("dangling backslash".to_string()),
        }
    }
    Ok(out)
}

/// Word types for `unique_word_count`: lowercase, split on Unicode
/// whitespace, strip leading/trailing punctuation, drop empties.
pub fn word_types(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split_whitespace().filter_map(|w| {
        let stripped = w.trim_matches(is_punctuation);
        (!stripped.is_empty()).then(|| stripped.to_lowercase())
    })
}

pub fn stats(ds: &LabeledDataset) -> DatasetStats {
    let n_samples = ds.len();
    let n_positive = ds.positives();
    let positive_rate = if n_samples == 0 { 0.0 } else { n_positive as f64 / n_samples as f64 };
    let unique: HashSet<String> = ds.tweets.iter().flat_map(|t| word_types(&t.text)).collect();
    DatasetStats { n_samples, n_positive, positive_rate, unique_word_count: unique.len() }
}

impl fmt::Display for DatasetStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "samples={} positive={} positive_rate={:.4} unique_words={}",
            self.n_samples, self.n_positive, self.positive_rate, self.unique_word_count
        )
    }
}

/// `round-half-up(fraction × n)`, tolerant of binary representation error
/// (0.7 × 5 must give 4, not 3).
fn round_half_up(fraction: f64, n: usize) -> usize {
    (fraction * n as f64 + 0.5 + 1e-9).floor() as usize
}

/// Per-class seeded shuffle, then the first `round-half-up(fraction × size)`
/// members of each class go to train. Both outputs keep input order.
pub fn stratified_split(
    ds: &LabeledDataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset), CorpusError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(CorpusError::Split(format!("train_fraction {train_fraction} not in (0, 1)")));
    }
    let mut in_train = vec![false; ds.len()];
    for (class_no, label) in [Label::NotCheckWorthy, Label::CheckWorthy].into_iter().enumerate() {
        let mut members: Vec<usize> = ds
            .tweets
            .iter()
            .enumerate()
            .filter(|(_, t)| t.label == label)
            .map(|(i, _)| i)
            .collect();
        if members.is_empty() {
            return Err(CorpusError::Split(format!("class {} has no samples", label.as_str())));
        }
        let n_train = round_half_up(train_fraction, members.len());
        if n_train == 0 || n_train == members.len() {
            return Err(CorpusError::Split(format!(
                "class {} ({} samples) would leave an empty {} side at fraction {train_fraction}",
                label.as_str(),
                members.len(),
                if n_train == 0 { "train" } else { "holdout" },
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(crate::seeding::mix(&[seed, class_no as u64]));
        members.shuffle(&mut rng);
        for &i in &members[..n_train] {
            in_train[i] = true;
        }
    }
    let (mut train, mut holdout) = (Vec::new(), Vec::new());
    for (t, keep) in ds.tweets.iter().zip(in_train) {
        if keep {
            train.push(t.clone());
        } else {
            holdout.push(t.clone());
        }
    }
    Ok((
        LabeledDataset::new(format!("{}.train", ds.name), train),
        LabeledDataset::new(format!("{}.holdout", ds.name), holdout),
    ))
}
