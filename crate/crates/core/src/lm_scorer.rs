//! Candidate substitutes for a masked word position.
//!
//! [`CandidateScorer`] is the seam between the augmenter and whatever model
//! ranks replacements. Two implementations ship: [`NGramScorer`], an
//! interpolated add-k trigram model trained on the corpus at hand, and
//! [`ExternalScorer`], which speaks line-delimited JSON to a child process
//! (typically a masked language model server).
//!
//! The n-gram score of a candidate `w` for the slot between `left` and
//! `right` is
//!
//! ```text
//! s(w) = P(w | l[-2], l[-1]) · P(r[0] | l[-1], w)
//! ```
//!
//! where each `P` linearly interpolates add-k smoothed unigram, bigram and
//! trigram estimates. Orders whose history is not available from the query
//! (short left context) are dropped and the remaining weights renormalized,
//! so an empty query is a plain unigram ranking. The right factor is omitted
//! when `right` is empty. Returned log-probabilities are `ln(s(w) / Σ s)`
//! over the candidate pool.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::LabeledDataset;
use crate::wordpiece::words;

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Error)]
pub enum ScorerError {
    #[error("top_k must be at least 1")]
    InvalidTopK,
    #[error("cannot train a scorer on an empty corpus")]
    EmptyCorpus,
    #[error("invalid scorer config: {0}")]
    InvalidConfig(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("external scorer did not answer within {0:?}")]
    Timeout(Duration),
    #[error("external scorer: {0}")]
    Process(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub token: String,
    pub logprob: f64,
}

/// Ranks replacement tokens for the slot between `left` and `right`.
///
/// Results are sorted by descending `logprob`, hold at most `top_k` entries,
/// and every `logprob` is finite.
pub trait CandidateScorer: Send + Sync {
    fn score_candidates(&self, left: &[&str], right: &[&str], top_k: usize) -> Result<Vec<Candidate>, ScorerError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NGramConfig {
    /// Add-k constant, applied at every order.
    pub k: f64,
    /// Unigram, bigram, trigram interpolation weights.
    pub lambdas: [f64; 3],
}

impl Default for NGramConfig {
    fn default() -> Self {
        NGramConfig { k: 0.01, lambdas: [0.1, 0.3, 0.6] }
    }
}

impl NGramConfig {
    /// Rescales the weights to sum to one.
    pub fn normalized(mut self) -> Result<Self, ScorerError> {
        if self.lambdas.iter().any(|l| !l.is_finite() || *l < 0.0) {
            return Err(ScorerError::InvalidConfig(format!("lambdas {:?} must be finite and non-negative", self.lambdas)));
        }
        let total: f64 = self.lambdas.iter().sum();
        if total <= 0.0 {
            return Err(ScorerError::InvalidConfig("lambdas sum to zero".into()));
        }
        for l in &mut self.lambdas {
            *l /= total;
        }
        Ok(self)
    }
}

const UNSEEN: u32 = u32::MAX;

/// Interpolated add-k trigram model. Immutable once trained.
#[derive(Debug, Clone)]
pub struct NGramScorer {
    config: NGramConfig,
    /// Candidate pool, sorted; ids `0..pool.len()`.
    pool: Vec<String>,
    ids: HashMap<String, u32>,
    eos: u32,
    bos: u32,
    unigram: Vec<u64>,
    unigram_total: u64,
    bigram: HashMap<(u32, u32), u64>,
    bigram_hist: HashMap<u32, u64>,
    trigram: HashMap<(u32, u32, u32), u64>,
    trigram_hist: HashMap<(u32, u32), u64>,
}

pub fn train_ngram(corpus: &LabeledDataset, config: NGramConfig) -> Result<NGramScorer, ScorerError> {
    NGramScorer::train(corpus.tweets.iter().map(|t| t.text.as_str()), config)
}

impl NGramScorer {
    pub fn train<'a, I>(texts: I, config: NGramConfig) -> Result<Self, ScorerError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let config = config.normalized()?;
        if !(config.k > 0.0 && config.k.is_finite()) {
            return Err(ScorerError::InvalidConfig(format!("k = {} must be positive", config.k)));
        }
        let sentences: Vec<Vec<&str>> = texts.into_iter().map(words).filter(|w| !w.is_empty()).collect();
        let mut pool: Vec<String> = sentences.iter().flatten().filter(|w| **w != BOS && **w != EOS).map(|w| w.to_string()).collect();
        pool.sort();
        pool.dedup();
        if pool.is_empty() {
            return Err(ScorerError::EmptyCorpus);
        }
        let ids: HashMap<String, u32> = pool.iter().enumerate().map(|(i, w)| (w.clone(), i as u32)).collect();
        let eos = pool.len() as u32;
        let bos = eos + 1;

        let mut model = NGramScorer {
            config,
            unigram: vec![0; pool.len() + 1],
            pool,
            ids,
            eos,
            bos,
            unigram_total: 0,
            bigram: HashMap::new(),
            bigram_hist: HashMap::new(),
            trigram: HashMap::new(),
            trigram_hist: HashMap::new(),
        };
        for sentence in &sentences {
            let mut seq = vec![bos, bos];
            seq.extend(sentence.iter().map(|w| model.id(w)));
            seq.push(eos);
            for win in seq.windows(3) {
                let (h2, h1, w) = (win[0], win[1], win[2]);
                model.unigram[w as usize] += 1;
                model.unigram_total += 1;
                *model.bigram.entry((h1, w)).or_default() += 1;
                *model.bigram_hist.entry(h1).or_default() += 1;
                *model.trigram.entry((h2, h1, w)).or_default() += 1;
                *model.trigram_hist.entry((h2, h1)).or_default() += 1;
            }
        }
        Ok(model)
    }

    fn id(&self, word: &str) -> u32 {
        match word {
            EOS => self.eos,
            BOS => self.bos,
            w => self.ids.get(w).copied().unwrap_or(UNSEEN),
        }
    }

    pub fn config(&self) -> NGramConfig {
        self.config
    }

    /// Candidate pool: training vocabulary without padding tokens, sorted.
    pub fn pool(&self) -> &[String] {
        &self.pool
    }

    /// Events a conditional distribution ranges over: the pool plus `</s>`.
    pub fn prediction_vocab(&self) -> impl Iterator<Item = &str> {
        self.pool.iter().map(String::as_str).chain([EOS])
    }

    pub fn unigram_count(&self, w: &str) -> u64 {
        match self.id(w) {
            UNSEEN => 0,
            id if id == self.bos => 0,
            id => self.unigram[id as usize],
        }
    }

    pub fn bigram_count(&self, h: &str, w: &str) -> u64 {
        self.bigram.get(&(self.id(h), self.id(w))).copied().unwrap_or(0)
    }

    pub fn trigram_count(&self, h2: &str, h1: &str, w: &str) -> u64 {
        self.trigram.get(&(self.id(h2), self.id(h1), self.id(w))).copied().unwrap_or(0)
    }

    /// Interpolated `P(word | history)`; `history` holds at most the two
    /// most recent words, oldest first. Longer histories are truncated.
    pub fn prob(&self, word: &str, history: &[&str]) -> f64 {
        let hist: Vec<u32> = history[history.len().saturating_sub(2)..].iter().map(|h| self.id(h)).collect();
        self.prob_ids(self.id(word), &hist)
    }

    fn prob_ids(&self, w: u32, hist: &[u32]) -> f64 {
        let k = self.config.k;
        let v = (self.pool.len() + 1) as f64;
        let [l1, l2, l3] = self.config.lambdas;
        let count = |c: u64, total: u64| (c as f64 + k) / (total as f64 + k * v);

        let uni_c = if w == UNSEEN || w == self.bos { 0 } else { self.unigram[w as usize] };
        let p1 = count(uni_c, self.unigram_total);
        match *hist {
            [] => p1,
            [h1] => {
                let p2 = count(
                    self.bigram.get(&(h1, w)).copied().unwrap_or(0),
                    self.bigram_hist.get(&h1).copied().unwrap_or(0),
                );
                (l1 * p1 + l2 * p2) / (l1 + l2)
            }
            [h2, h1, ..] => {
                let p2 = count(
                    self.bigram.get(&(h1, w)).copied().unwrap_or(0),
                    self.bigram_hist.get(&h1).copied().unwrap_or(0),
                );
                let p3 = count(
                    self.trigram.get(&(h2, h1, w)).copied().unwrap_or(0),
                    self.trigram_hist.get(&(h2, h1)).copied().unwrap_or(0),
                );
                l1 * p1 + l2 * p2 + l3 * p3
            }
        }
    }

    /// Normalized `(token, probability)` over the whole pool, pool order.
    pub fn posterior(&self, left: &[&str], right: &[&str]) -> Vec<(String, f64)> {
        let left_hist: Vec<u32> = left[left.len().saturating_sub(2)..].iter().map(|w| self.id(w)).collect();
        let right_first = right.first().map(|w| self.id(w));
        let last_left = left_hist.last().copied();

        let raw: Vec<f64> = (0..self.pool.len() as u32)
            .map(|w| {
                let mut s = self.prob_ids(w, &left_hist);
                if let Some(r) = right_first {
                    let hist: Vec<u32> = last_left.into_iter().chain([w]).collect();
                    s *= self.prob_ids(r, &hist);
                }
                s
            })
            .collect();
        let total: f64 = raw.iter().sum();
        self.pool.iter().cloned().zip(raw.into_iter().map(|s| s / total)).collect()
    }
}

impl CandidateScorer for NGramScorer {
    fn score_candidates(&self, left: &[&str], right: &[&str], top_k: usize) -> Result<Vec<Candidate>, ScorerError> {
        if top_k < 1 {
            return Err(ScorerError::InvalidTopK);
        }
        let mut scored = self.posterior(left, right);
        // Pool is sorted, so a stable sort breaks ties lexicographically.
        scored.sort_by(|a, b| b.1.total_cmp(&a.1));
        scored.truncate(top_k);
        Ok(scored.into_iter().map(|(token, p)| Candidate { token, logprob: p.ln() }).collect())
    }
}

/// How to launch an external scorer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessSpec {
    pub program: String,
    pub args: Vec<String>,
    pub timeout: Duration,
}

impl ProcessSpec {
    pub fn new(program: impl Into<String>, args: Vec<String>) -> Self {
        ProcessSpec { program: program.into(), args, timeout: DEFAULT_TIMEOUT }
    }

    /// Splits a command line on whitespace; no shell quoting.
    pub fn parse(command: &str) -> Result<Self, ScorerError> {
        let mut parts = command.split_whitespace().map(str::to_string);
        let program = parts.next().ok_or_else(|| ScorerError::InvalidConfig("empty scorer command".into()))?;
        Ok(ProcessSpec::new(program, parts.collect()))
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ScoreRequest<'a> {
    pub id: u64,
    #[serde(borrow)]
    pub left: Vec<&'a str>,
    #[serde(borrow)]
    pub right: Vec<&'a str>,
    pub top_k: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub id: u64,
    pub candidates: Vec<Candidate>,
}

struct Session {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
    next_id: u64,
    broken: Option<String>,
}

/// A scorer backed by a child process speaking line-delimited JSON on
/// stdin/stdout. Requests are served strictly one at a time.
pub struct ExternalScorer {
    spec: ProcessSpec,
    session: Mutex<Session>,
}

pub fn external_scorer(spec: ProcessSpec) -> Result<ExternalScorer, ScorerError> {
    ExternalScorer::spawn(spec)
}

impl ExternalScorer {
    pub fn spawn(spec: ProcessSpec) -> Result<Self, ScorerError> {
        let mut child = Command::new(&spec.program)
            .args(&spec.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| ScorerError::Process(format!("cannot launch {:?}: {e}", spec.program)))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(ExternalScorer {
            spec,
            session: Mutex::new(Session { child, stdin, lines, next_id: 0, broken: None }),
        })
    }

    pub fn spec(&self) -> &ProcessSpec {
        &self.spec
    }
}

impl Session {
    fn request(&mut self, left: &[&str], right: &[&str], top_k: usize, timeout: Duration) -> Result<Vec<Candidate>, ScorerError> {
        if let Some(reason) = &self.broken {
            return Err(ScorerError::Process(format!("session unusable after earlier failure: {reason}")));
        }
        let id = self.next_id;
        self.next_id += 1;
        let req = ScoreRequest { id, left: left.to_vec(), right: right.to_vec(), top_k };
        let mut line = serde_json::to_string(&req).map_err(|e| ScorerError::Protocol(e.to_string()))?;
        line.push('\n');
        self.stdin
            .write_all(line.as_bytes())
            .and_then(|_| self.stdin.flush())
            .map_err(|e| ScorerError::Process(format!("write failed: {e}")))?;

        let reply = match self.lines.recv_timeout(timeout) {
            Ok(Ok(reply)) => reply,
            Ok(Err(e)) => return Err(ScorerError::Process(format!("read failed: {e}"))),
            Err(RecvTimeoutError::Timeout) => return Err(ScorerError::Timeout(timeout)),
            Err(RecvTimeoutError::Disconnected) => return Err(ScorerError::Process("process closed its output".into())),
        };
        let resp: ScoreResponse =
            serde_json::from_str(&reply).map_err(|e| ScorerError::Protocol(format!("malformed response {reply:?}: {e}")))?;
        validate_response(&resp, id, top_k)?;
        Ok(resp.candidates)
    }
}

fn validate_response(resp: &ScoreResponse, id: u64, top_k: usize) -> Result<(), ScorerError> {
    if resp.id != id {
        return Err(ScorerError::Protocol(format!("response id {} does not match request id {id}", resp.id)));
    }
    if resp.candidates.len() > top_k {
        return Err(ScorerError::Protocol(format!("{} candidates exceed top_k {top_k}", resp.candidates.len())));
    }
    if let Some(c) = resp.candidates.iter().find(|c| !c.logprob.is_finite()) {
        return Err(ScorerError::Protocol(format!("non-finite logprob for {:?}", c.token)));
    }
    if resp.candidates.windows(2).any(|w| w[0].logprob < w[1].logprob) {
        return Err(ScorerError::Protocol("candidates not sorted by descending logprob".into()));
    }
    Ok(())
}

impl CandidateScorer for ExternalScorer {
    fn score_candidates(&self, left: &[&str], right: &[&str], top_k: usize) -> Result<Vec<Candidate>, ScorerError> {
        if top_k < 1 {
            return Err(ScorerError::InvalidTopK);
        }
        let mut session = self.session.lock().unwrap_or_else(|p| p.into_inner());
        let result = session.request(left, right, top_k, self.spec.timeout);
        // A late or garbled reply would desynchronize ids for every later
        // request, so the session is not reused after a failure.
        if let Err(e) = &result {
            session.broken = Some(e.to_string());
        }
        result
    }
}

impl Drop for ExternalScorer {
    fn drop(&mut self) {
        let session = self.session.get_mut().unwrap_or_else(|p| p.into_inner());
        let _ = session.child.kill();
        let _ = session.child.wait();
    }
}
