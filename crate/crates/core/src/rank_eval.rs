//! Logits to check-worthiness scores, ranked runs, and the CheckThat metric
//! suite (mAP, MRR, R-Precision, P@k) plus positive-class P/R/F1.
//!
//! Conventions:
//! - AP divides by the number of relevant items in the topic.
//! - A topic with no relevant items scores 0 on every ranking metric and
//!   still counts in the mean, unless `skip_empty_topics` is set.
//! - P@k always divides by k, even when the topic has fewer than k items.
//! - An item is predicted check-worthy when its score is > 0, i.e. when
//!   `p_pos > 0.5`.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::corpus::LabeledDataset;

pub const DEFAULT_K_LIST: [usize; 6] = [1, 3, 5, 10, 20, 30];

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("IdMismatch: run lacks gold ids {missing:?}; run has ids not in gold {unexpected:?}")]
    IdMismatch { missing: Vec<String>, unexpected: Vec<String> },
    #[error("run line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("non-finite logit for tweet {0:?}")]
    NonFinite(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Two-class output for one tweet; class 0 is not check-worthy.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitRow {
    pub topic_id: String,
    pub tweet_id: String,
    pub logit_neg: f64,
    pub logit_pos: f64,
}

/// Numerically stable two-way softmax, returns `(p_neg, p_pos)`.
pub fn softmax2(logit_neg: f64, logit_pos: f64) -> (f64, f64) {
    let m = logit_neg.max(logit_pos);
    let en = (logit_neg - m).exp();
    let ep = (logit_pos - m).exp();
    let z = en + ep;
    (en / z, ep / z)
}

/// `p_pos − p_neg`, in [-1, 1].
pub fn check_worthiness(logit_neg: f64, logit_pos: f64) -> f64 {
    let (n, p) = softmax2(logit_neg, logit_pos);
    p - n
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunEntry {
    pub topic_id: String,
    pub tweet_id: String,
    pub score: f64,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedRun {
    pub run_id: String,
    pub entries: Vec<RunEntry>,
}

/// Ranks tweets per topic by descending score; equal scores keep input
/// order. Topics appear in order of first occurrence.
pub fn score_and_rank(rows: &[LogitRow], run_id: &str) -> Result<RankedRun, EvalError> {
    if let Some(r) = rows.iter().find(|r| !r.logit_neg.is_finite() || !r.logit_pos.is_finite()) {
        return Err(EvalError::NonFinite(r.tweet_id.clone()));
    }
    let mut topics: Vec<&str> = Vec::new();
    let mut by_topic: HashMap<&str, Vec<(f64, &LogitRow)>> = HashMap::new();
    for r in rows {
        let bucket = by_topic.entry(r.topic_id.as_str()).or_insert_with(|| {
            topics.push(r.topic_id.as_str());
            Vec::new()
        });
        bucket.push((check_worthiness(r.logit_neg, r.logit_pos), r));
    }
    let mut entries = Vec::with_capacity(rows.len());
    for topic in topics {
        let mut bucket = by_topic.remove(topic).unwrap_or_default();
        bucket.sort_by(|a, b| b.0.total_cmp(&a.0));
        entries.extend(bucket.into_iter().enumerate().map(|(i, (score, r))| RunEntry {
            topic_id: r.topic_id.clone(),
            tweet_id: r.tweet_id.clone(),
            score,
            rank: i + 1,
        }));
    }
    Ok(RankedRun { run_id: run_id.to_string(), entries })
}

impl RankedRun {
    /// `topic_id\ttweet_id\tscore\trank\trun_id`, score to six decimals.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let _ = writeln!(out, "{}\t{}\t{:.6}\t{}\t{}", e.topic_id, e.tweet_id, e.score, e.rank, self.run_id);
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<(), EvalError> {
        fs::write(path, self.to_tsv()).map_err(|source| EvalError::Io { path: path.display().to_string(), source })
    }

    pub fn parse_tsv(content: &str) -> Result<Self, EvalError> {
        let mut run_id: Option<String> = None;
        let mut entries = Vec::new();
        for (i, line) in content.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let err = |reason: String| EvalError::Parse { line: i + 1, reason };
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 5 {
                return Err(err(format!("expected 5 columns, found {}", cols.len())));
            }
            let score: f64 = cols[2].parse().map_err(|_| err(format!("bad score {:?}", cols[2])))?;
            if !score.is_finite() {
                return Err(err(format!("bad score {:?}", cols[2])));
            }
            let rank: usize = cols[3].parse().map_err(|_| err(format!("bad rank {:?}", cols[3])))?;
            match &run_id {
                None => run_id = Some(cols[4].to_string()),
                Some(id) if id != cols[4] => return Err(err(format!("mixed run ids {id:?} and {:?}", cols[4]))),
                Some(_) => {}
            }
            entries.push(RunEntry { topic_id: cols[0].to_string(), tweet_id: cols[1].to_string(), score, rank });
        }
        Ok(RankedRun { run_id: run_id.unwrap_or_default(), entries })
    }

    pub fn read(path: &Path) -> Result<Self, EvalError> {
        let content =
            fs::read_to_string(path).map_err(|source| EvalError::Io { path: path.display().to_string(), source })?;
        Self::parse_tsv(&content)
    }
}

/// Mean over relevant positions of precision at that position; 0 when
/// nothing is relevant.
pub fn average_precision(relevance: &[bool]) -> f64 {
    let total = relevance.iter().filter(|r| **r).count();
    if total == 0 {
        return 0.0;
    }
    let mut hits = 0;
    let mut sum = 0.0;
    for (i, &rel) in relevance.iter().enumerate() {
        if rel {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    sum / total as f64
}

pub fn reciprocal_rank(relevance: &[bool]) -> f64 {
    relevance.iter().position(|r| *r).map_or(0.0, |i| 1.0 / (i + 1) as f64)
}

/// Precision at k with denominator k.
pub fn precision_at(relevance: &[bool], k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    relevance.iter().take(k).filter(|r| **r).count() as f64 / k as f64
}

pub fn r_precision(relevance: &[bool]) -> f64 {
    let r = relevance.iter().filter(|r| **r).count();
    if r == 0 {
        0.0
    } else {
        precision_at(relevance, r)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOptions {
    pub k_list: Vec<usize>,
    pub skip_empty_topics: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { k_list: DEFAULT_K_LIST.to_vec(), skip_empty_topics: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub map: f64,
    pub mrr: f64,
    pub r_precision: f64,
    /// `(k, P@k)` in the order of the requested k list.
    pub p_at_k: Vec<(usize, f64)>,
    pub cw_precision: f64,
    pub cw_recall: f64,
    pub cw_f1: f64,
}

impl MetricReport {
    pub fn p_at(&self, k: usize) -> Option<f64> {
        self.p_at_k.iter().find(|(kk, _)| *kk == k).map(|(_, v)| *v)
    }

    /// `(name, value)` pairs in serialization order.
    pub fn fields(&self) -> Vec<(String, f64)> {
        let mut out = vec![
            ("map".to_string(), self.map),
            ("mrr".to_string(), self.mrr),
            ("r_precision".to_string(), self.r_precision),
        ];
        out.extend(self.p_at_k.iter().map(|(k, v)| (format!("p_at_{k}"), *v)));
        out.extend([
            ("cw_precision".to_string(), self.cw_precision),
            ("cw_recall".to_string(), self.cw_recall),
            ("cw_f1".to_string(), self.cw_f1),
        ]);
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metric report serializes")
    }
}

impl Serialize for MetricReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let fields = self.fields();
        let mut map = serializer.serialize_map(Some(fields.len()))?;
        for (k, v) in &fields {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

/// Scores a run against gold labels. Every gold id must appear in the run
/// exactly once and the run may contain nothing else.
pub fn evaluate(run: &RankedRun, gold: &LabeledDataset, opts: &EvalOptions) -> Result<MetricReport, EvalError> {
    let gold_by_id: HashMap<&str, (&str, bool)> =
        gold.tweets.iter().map(|t| (t.tweet_id.as_str(), (t.topic_id.as_str(), t.label.is_positive()))).collect();

    let mut seen = HashSet::new();
    let mut unexpected = Vec::new();
    for e in &run.entries {
        if !gold_by_id.contains_key(e.tweet_id.as_str()) || !seen.insert(e.tweet_id.as_str()) {
            unexpected.push(e.tweet_id.clone());
        }
    }
    let missing: Vec<String> =
        gold.tweets.iter().filter(|t| !seen.contains(t.tweet_id.as_str())).map(|t| t.tweet_id.clone()).collect();
    if !missing.is_empty() || !unexpected.is_empty() {
        return Err(EvalError::IdMismatch { missing, unexpected });
    }

    // Run order: topics by first appearance, then rank within topic.
    let mut run_topics: HashMap<&str, usize> = HashMap::new();
    for e in &run.entries {
        let n = run_topics.len();
        run_topics.entry(e.topic_id.as_str()).or_insert(n);
    }
    let mut ordered: Vec<&RunEntry> = run.entries.iter().collect();
    ordered.sort_by_key(|e| (run_topics[e.topic_id.as_str()], e.rank));

    let mut topic_order: Vec<&str> = Vec::new();
    let mut relevance: HashMap<&str, Vec<bool>> = HashMap::new();
    for t in &gold.tweets {
        if !relevance.contains_key(t.topic_id.as_str()) {
            topic_order.push(t.topic_id.as_str());
            relevance.insert(t.topic_id.as_str(), Vec::new());
        }
    }
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for e in ordered {
        let (topic, rel) = gold_by_id[e.tweet_id.as_str()];
        relevance.get_mut(topic).expect("gold topic").push(rel);
        match (e.score > 0.0, rel) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }

    let lists: Vec<&Vec<bool>> = topic_order
        .iter()
        .map(|t| &relevance[t])
        .filter(|rels| !opts.skip_empty_topics || rels.iter().any(|r| *r))
        .collect();
    let mean = |f: &dyn Fn(&[bool]) -> f64| {
        if lists.is_empty() {
            0.0
        } else {
            lists.iter().map(|r| f(r)).sum::<f64>() / lists.len() as f64
        }
    };

    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let cw_precision = ratio(tp, tp + fp);
    let cw_recall = ratio(tp, tp + fn_);
    let cw_f1 = if cw_precision + cw_recall == 0.0 {
        0.0
    } else {
        2.0 * cw_precision * cw_recall / (cw_precision + cw_recall)
    };

    Ok(MetricReport {
        map: mean(&average_precision),
        mrr: mean(&reciprocal_rank),
        r_precision: mean(&r_precision),
        p_at_k: opts.k_list.iter().map(|&k| (k, mean(&|r: &[bool]| precision_at(r, k)))).collect(),
        cw_precision,
        cw_recall,
        cw_f1,
    })
}
