//! Synthetic check-worthy samples and the epoch-wise balancing loop.
//!
//! Every augmenter is a pure function of `(tweet, epoch, config)`: the RNG
//! for one record is seeded from `hash(seed, tweet_id, epoch)`, so running
//! records in parallel produces the same bytes as running them serially.

mod eda;
mod translate;

use std::collections::HashSet;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Label, LabeledDataset, Origin, Tweet};
use crate::lm_scorer::{Candidate, CandidateScorer, ScorerError};
use crate::seeding::record_seed;
use crate::wordpiece::pre_tokenize;

pub use eda::{eda_op, EdaAugmenter, EdaOp, EdaResources, SynonymLexicon};
pub use translate::{
    back_translate, BackTranslateAugmenter, HttpTranslator, IdentityTranslator, ReversingTranslator, Translator,
    TranslatorError, TOKEN_ENV,
};

/// Words of context passed to a scorer on each side of the slot.
pub const CONTEXT_WINDOW: usize = 10;

#[derive(Debug, Error)]
pub enum AugmentError {
    #[error(transparent)]
    Scorer(#[from] ScorerError),
    #[error(transparent)]
    Translator(#[from] TranslatorError),
    #[error("invalid augment config: {0}")]
    Config(String),
    #[error("synonym replacement needs a synonym lexicon")]
    MissingLexicon,
    #[error("training set has no positive original samples")]
    NoPositives,
    #[error("training set has no negative samples")]
    NoNegatives,
    #[error("augmented tweet_id {0:?} collides with an existing id")]
    DuplicateId(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Substitute,
    Insert,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "substitute" => Ok(Mode::Substitute),
            "insert" => Ok(Mode::Insert),
            other => Err(format!("unknown mode {other:?} (expected substitute or insert)")),
        }
    }
}

/// How a replacement is picked from the scorer's candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    Argmax,
    /// Sample from the top k candidates, weights `exp(logprob)`.
    SampleTopK(usize),
}

impl Default for Selection {
    fn default() -> Self {
        Selection::SampleTopK(10)
    }
}

impl FromStr for Selection {
    type Err = String;

    /// `argmax`, `sample` (k = 10) or `sample:<k>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "argmax" => Ok(Selection::Argmax),
            "sample" => Ok(Selection::default()),
            _ => s
                .strip_prefix("sample:")
                .and_then(|k| k.parse().ok())
                .filter(|k| *k >= 1)
                .map(Selection::SampleTopK)
                .ok_or_else(|| format!("bad selection {s:?} (expected argmax, sample or sample:<k>)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtectedTokens {
    pub urls: bool,
    pub mentions: bool,
    pub hashtags: bool,
    pub numerals: bool,
}

impl Default for ProtectedTokens {
    fn default() -> Self {
        ProtectedTokens { urls: true, mentions: true, hashtags: true, numerals: false }
    }
}

impl ProtectedTokens {
    fn protects_chunk(&self, chunk: &str) -> bool {
        let lower = chunk.to_ascii_lowercase();
        (self.urls && (lower.starts_with("http://") || lower.starts_with("https://") || lower.starts_with("www.")))
            || (self.mentions && chunk.starts_with('@'))
            || (self.hashtags && chunk.starts_with('#'))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    /// Probability that each eligible word is augmented.
    pub p: f64,
    pub mode: Mode,
    pub selection: Selection,
    pub seed: u64,
    pub protected: ProtectedTokens,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            p: 0.1,
            mode: Mode::Substitute,
            selection: Selection::default(),
            seed: 42,
            protected: ProtectedTokens::default(),
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<(), AugmentError> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(AugmentError::Config(format!("p = {} not in [0, 1]", self.p)));
        }
        if self.selection == Selection::SampleTopK(0) {
            return Err(AugmentError::Config("sample_top_k needs k >= 1".into()));
        }
        Ok(())
    }
}

/// Produces one new positive sample from an original per epoch.
pub trait Augmenter: Send + Sync {
    fn augment(&self, tweet: &Tweet, epoch: u32) -> Result<Tweet, AugmentError>;
}

/// Result of one contextual pass with its position accounting.
#[derive(Debug, Clone, PartialEq)]
pub struct Augmentation {
    pub tweet: Tweet,
    /// Word positions allowed to change.
    pub eligible: usize,
    /// Eligible positions drawn with probability p.
    pub selected: usize,
    /// Selected positions where a replacement was actually written.
    pub changed: usize,
}

fn chunk_offset(text: &str, chunk: &str) -> usize {
    chunk.as_ptr() as usize - text.as_ptr() as usize
}

fn eligible_word(word: &str, protected: &ProtectedTokens) -> bool {
    word.chars().any(char::is_alphanumeric) && !(protected.numerals && word.chars().all(|c| c.is_numeric()))
}

fn pick(candidates: &[Candidate], selection: Selection, rng: &mut ChaCha8Rng) -> Option<String> {
    match selection {
        Selection::Argmax => candidates.first().map(|c| c.token.clone()),
        Selection::SampleTopK(k) => {
            let pool = &candidates[..candidates.len().min(k)];
            let top = pool.first()?.logprob;
            let weights: Vec<f64> = pool.iter().map(|c| (c.logprob - top).exp()).collect();
            let mut r = rng.gen::<f64>() * weights.iter().sum::<f64>();
            for (c, w) in pool.iter().zip(&weights) {
                if r < *w {
                    return Some(c.token.clone());
                }
                r -= w;
            }
            pool.last().map(|c| c.token.clone())
        }
    }
}

/// Contextual lexical augmentation of one tweet.
///
/// Eligible positions are whole words from the pre-tokenizer that contain an
/// alphanumeric character and do not sit inside a protected chunk (URL,
/// mention, hashtag, optionally numerals). Each is selected independently
/// with probability `cfg.p`; a selected word is replaced (or, in insert mode,
/// followed) by a scorer candidate other than itself. Text outside the
/// changed spans is copied verbatim.
pub fn contextual_substitute(
    tweet: &Tweet,
    scorer: &dyn CandidateScorer,
    cfg: &AugmentConfig,
    epoch: u32,
) -> Result<Augmentation, AugmentError> {
    cfg.validate()?;
    let text = tweet.text.as_str();
    let protected_spans: Vec<(usize, usize)> = text
        .split_whitespace()
        .filter(|c| cfg.protected.protects_chunk(c))
        .map(|c| {
            let start = chunk_offset(text, c);
            (start, start + c.len())
        })
        .collect();

    let tokens: Vec<_> = pre_tokenize(text).into_iter().filter(|t| !t.punct).collect();
    let words: Vec<&str> = tokens.iter().map(|t| t.as_str(text)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(record_seed(cfg.seed, &tweet.tweet_id, epoch));
    let wanted = match cfg.selection {
        Selection::Argmax => 2,
        Selection::SampleTopK(k) => k + 1,
    };

    let mut edits: Vec<(usize, String)> = Vec::new();
    let (mut eligible, mut selected) = (0, 0);
    for (j, tok) in tokens.iter().enumerate() {
        let in_protected = protected_spans.iter().any(|&(s, e)| tok.start >= s && tok.end <= e);
        if in_protected || !eligible_word(words[j], &cfg.protected) {
            continue;
        }
        eligible += 1;
        if rng.gen::<f64>() >= cfg.p {
            continue;
        }
        selected += 1;
        let (left, right) = match cfg.mode {
            Mode::Substitute => (&words[j.saturating_sub(CONTEXT_WINDOW)..j], &words[j + 1..]),
            Mode::Insert => (&words[(j + 1).saturating_sub(CONTEXT_WINDOW)..=j], &words[j + 1..]),
        };
        let right = &right[..right.len().min(CONTEXT_WINDOW)];
        let candidates: Vec<Candidate> = scorer
            .score_candidates(left, right, wanted)?
            .into_iter()
            .filter(|c| c.token != words[j])
            .collect();
        if let Some(choice) = pick(&candidates, cfg.selection, &mut rng) {
            edits.push((j, choice));
        }
    }

    let mut out = String::with_capacity(text.len() + 16);
    let mut cursor = 0;
    for (j, replacement) in &edits {
        let tok = tokens[*j];
        match cfg.mode {
            Mode::Substitute => {
                out.push_str(&text[cursor..tok.start]);
                out.push_str(replacement);
            }
            Mode::Insert => {
                out.push_str(&text[cursor..tok.end]);
                out.push(' ');
                out.push_str(replacement);
            }
        }
        cursor = tok.end;
    }
    out.push_str(&text[cursor..]);

    Ok(Augmentation {
        tweet: Tweet {
            topic_id: tweet.topic_id.clone(),
            tweet_id: format!("{}#aug{}", tweet.tweet_id, epoch),
            text: out,
            label: tweet.label,
            origin: Origin::Augmented,
        },
        eligible,
        selected,
        changed: edits.len(),
    })
}

pub struct ContextualAugmenter<'a> {
    pub scorer: &'a dyn CandidateScorer,
    pub config: AugmentConfig,
}

impl Augmenter for ContextualAugmenter<'_> {
    fn augment(&self, tweet: &Tweet, epoch: u32) -> Result<Tweet, AugmentError> {
        contextual_substitute(tweet, self.scorer, &self.config, epoch).map(|a| a.tweet)
    }
}

/// One augmentation pass over the selected rows (all rows, or positives
/// only); returns just the new tweets, in input order.
pub fn augment_dataset(
    ds: &LabeledDataset,
    augmenter: &dyn Augmenter,
    epoch: u32,
    positives_only: bool,
) -> Result<LabeledDataset, AugmentError> {
    let rows: Vec<&Tweet> = ds.tweets.iter().filter(|t| !positives_only || t.label.is_positive()).collect();
    let tweets = rows.par_iter().map(|t| augmenter.augment(t, epoch)).collect::<Result<Vec<_>, _>>()?;
    Ok(LabeledDataset::new(format!("{}.aug{epoch}", ds.name), tweets))
}

/// When the balancing loop stops.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopRule {
    /// Stop once positives > negatives.
    #[default]
    Exceed,
    /// Stop once positives >= negatives.
    AtLeast,
}

impl StopRule {
    pub fn from_strict(strict: bool) -> Self {
        if strict {
            StopRule::Exceed
        } else {
            StopRule::AtLeast
        }
    }

    fn satisfied(self, positives: usize, negatives: usize) -> bool {
        match self {
            StopRule::Exceed => positives > negatives,
            StopRule::AtLeast => positives >= negatives,
        }
    }

    /// Epochs the loop runs for the given class counts.
    pub fn epochs_needed(self, positive_originals: usize, positives: usize, negatives: usize) -> usize {
        let mut epochs = 0;
        let mut pos = positives;
        while !self.satisfied(pos, negatives) {
            pos += positive_originals;
            epochs += 1;
        }
        epochs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub epochs_run: usize,
    pub augmented_generated: usize,
    pub final_positive: usize,
    pub final_negative: usize,
}

/// Augments every positive original once per epoch, appending the results,
/// until the stop rule holds. Input rows are kept unchanged and in order.
pub fn balance_classes(
    train: &LabeledDataset,
    augmenter: &dyn Augmenter,
    rule: StopRule,
) -> Result<(LabeledDataset, BalanceReport), AugmentError> {
    let originals: Vec<&Tweet> =
        train.tweets.iter().filter(|t| t.label.is_positive() && t.origin == Origin::Original).collect();
    if originals.is_empty() {
        return Err(AugmentError::NoPositives);
    }
    let negatives = train.negatives();
    if negatives == 0 {
        return Err(AugmentError::NoNegatives);
    }

    let mut ids: HashSet<String> = train.tweets.iter().map(|t| t.tweet_id.clone()).collect();
    let mut tweets = train.tweets.clone();
    let mut positives = train.positives();
    let mut epochs_run = 0;
    while !rule.satisfied(positives, negatives) {
        let epoch = epochs_run as u32 + 1;
        let batch: Vec<Tweet> = originals
            .par_iter()
            .map(|t| augmenter.augment(t, epoch))
            .collect::<Result<_, _>>()?;
        for mut t in batch {
            t.label = Label::CheckWorthy;
            if t.origin == Origin::Original {
                t.origin = Origin::Augmented;
            }
            if !ids.insert(t.tweet_id.clone()) {
                return Err(AugmentError::DuplicateId(t.tweet_id));
            }
            tweets.push(t);
        }
        positives += originals.len();
        epochs_run += 1;
    }
    let report = BalanceReport {
        epochs_run,
        augmented_generated: epochs_run * originals.len(),
        final_positive: positives,
        final_negative: negatives,
    };
    Ok((LabeledDataset::new(train.name.clone(), tweets), report))
}
