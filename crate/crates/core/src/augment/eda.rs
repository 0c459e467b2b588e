//! Random word-level operations: insertion, deletion, adjacent swap and
//! lexicon-driven synonym replacement. Words are whitespace-delimited and
//! the output is re-joined with single spaces.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{AugmentError, Augmenter};
use crate::corpus::{Origin, Tweet};
use crate::seeding::{mix, record_seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdaOp {
    RandomInsert,
    RandomDelete,
    RandomSwap,
    SynonymReplace,
}

impl FromStr for EdaOp {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random_insert" => Ok(EdaOp::RandomInsert),
            "random_delete" => Ok(EdaOp::RandomDelete),
            "random_swap" => Ok(EdaOp::RandomSwap),
            "synonym_replace" => Ok(EdaOp::SynonymReplace),
            other => Err(format!("unknown EDA op {other:?}")),
        }
    }
}

/// Lowercased headword → synonyms.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SynonymLexicon(HashMap<String, Vec<String>>);

impl SynonymLexicon {
    pub fn new(entries: HashMap<String, Vec<String>>) -> Self {
        SynonymLexicon(entries.into_iter().map(|(k, v)| (k.to_lowercase(), v)).collect())
    }

    /// Tab-separated lines: headword followed by its synonyms.
    pub fn parse(content: &str) -> Self {
        let entries = content
            .lines()
            .filter_map(|l| {
                let mut cols = l.split('\t').map(str::trim).filter(|c| !c.is_empty());
                let head = cols.next()?;
                let syns: Vec<String> = cols.map(str::to_string).collect();
                (!syns.is_empty()).then(|| (head.to_string(), syns))
            })
            .collect();
        SynonymLexicon::new(entries)
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        Ok(Self::parse(&fs::read_to_string(path)?))
    }

    pub fn synonyms(&self, word: &str) -> Option<&[String]> {
        self.0.get(&word.to_lowercase()).map(Vec::as_slice).filter(|s| !s.is_empty())
    }
}

#[derive(Debug, Clone, Default)]
pub struct EdaResources {
    pub synonyms: Option<SynonymLexicon>,
    /// Words for random insertion; the tweet's own words when empty.
    pub insert_pool: Vec<String>,
}

/// Applies one EDA operation. The tweet id gains an `#eda<epoch>` suffix.
pub fn eda_op(
    tweet: &Tweet,
    op: EdaOp,
    p: f64,
    seed: u64,
    epoch: u32,
    resources: &EdaResources,
) -> Result<Tweet, AugmentError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(AugmentError::Config(format!("p = {p} not in [0, 1]")));
    }
    let lexicon = match (op, &resources.synonyms) {
        (EdaOp::SynonymReplace, None) => return Err(AugmentError::MissingLexicon),
        (_, lex) => lex.as_ref(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(record_seed(seed, &tweet.tweet_id, epoch));
    let mut words: Vec<String> = tweet.text.split_whitespace().map(str::to_string).collect();

    match op {
        EdaOp::RandomDelete => {
            let kept: Vec<String> = words.iter().filter(|_| rng.gen::<f64>() >= p).cloned().collect();
            words = if kept.is_empty() && !words.is_empty() {
                let i = rng.gen_range(0..words.len());
                vec![words.swap_remove(i)]
            } else {
                kept
            };
        }
        EdaOp::RandomSwap => {
            let n = words.len();
            if n >= 2 {
                let swaps = (p * n as f64).ceil() as usize;
                for _ in 0..swaps {
                    let i = rng.gen_range(0..n - 1);
                    words.swap(i, i + 1);
                }
            }
        }
        EdaOp::RandomInsert => {
            let pool: &[String] = if resources.insert_pool.is_empty() { &words } else { &resources.insert_pool };
            let mut out = Vec::with_capacity(words.len() * 2);
            for w in &words {
                out.push(w.clone());
                if rng.gen::<f64>() < p {
                    if let Some(ins) = pool.choose(&mut rng) {
                        out.push(ins.clone());
                    }
                }
            }
            words = out;
        }
        EdaOp::SynonymReplace => {
            let lexicon = lexicon.expect("checked above");
            for w in &mut words {
                let roll = rng.gen::<f64>();
                if let Some(syns) = lexicon.synonyms(w) {
                    if roll < p {
                        *w = syns.choose(&mut rng).expect("non-empty").clone();
                    }
                }
            }
        }
    }

    Ok(Tweet {
        topic_id: tweet.topic_id.clone(),
        tweet_id: format!("{}#eda{}", tweet.tweet_id, epoch),
        text: words.join(" "),
        label: tweet.label,
        origin: Origin::Augmented,
    })
}

/// Picks one operation per record uniformly from the available ones
/// (synonym replacement only when a lexicon is loaded).
pub struct EdaAugmenter {
    pub p: f64,
    pub seed: u64,
    pub resources: EdaResources,
}

impl EdaAugmenter {
    fn ops(&self) -> Vec<EdaOp> {
        let mut ops = vec![EdaOp::RandomInsert, EdaOp::RandomDelete, EdaOp::RandomSwap];
        if self.resources.synonyms.is_some() {
            ops.push(EdaOp::SynonymReplace);
        }
        ops
    }
}

impl Augmenter for EdaAugmenter {
    fn augment(&self, tweet: &Tweet, epoch: u32) -> Result<Tweet, AugmentError> {
        let ops = self.ops();
        let mut rng = ChaCha8Rng::seed_from_u64(mix(&[record_seed(self.seed, &tweet.tweet_id, epoch), 0xed4]));
        let op = ops[rng.gen_range(0..ops.len())];
        eda_op(tweet, op, self.p, self.seed, epoch, &self.resources)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Label;

    fn tweet(text: &str) -> Tweet {
        Tweet::new("t", "1", text, Label::CheckWorthy)
    }

    fn run(text: &str, op: EdaOp, p: f64, seed: u64) -> String {
        eda_op(&tweet(text), op, p, seed, 1, &EdaResources::default()).unwrap().text
    }

    #[test]
    fn delete_with_p_zero_is_identity() {
        assert_eq!(run("a b c d", EdaOp::RandomDelete, 0.0, 1), "a b c d");
    }

    #[test]
    fn delete_keeps_one_survivor() {
        for seed in 0..20 {
            let out = run("a b c d", EdaOp::RandomDelete, 1.0, seed);
            assert_eq!(out.split(' ').count(), 1);
            assert!(["a", "b", "c", "d"].contains(&out.as_str()));
        }
    }

    #[test]
    fn single_swap_of_two_words() {
        assert_eq!(run("a b", EdaOp::RandomSwap, 0.5, 3), "b a");
        assert_eq!(run("a b", EdaOp::RandomSwap, 0.0, 3), "a b");
        assert_eq!(run("a", EdaOp::RandomSwap, 1.0, 3), "a");
    }

    #[test]
    fn swap_preserves_multiset() {
        let mut out: Vec<String> = run("a b c d e f", EdaOp::RandomSwap, 0.5, 9).split(' ').map(String::from).collect();
        out.sort();
        assert_eq!(out, ["a", "b", "c", "d", "e", "f"]);
    }

    #[test]
    fn insert_uses_pool() {
        let res = EdaResources { synonyms: None, insert_pool: vec!["Z".into()] };
        let out = eda_op(&tweet("a b c"), EdaOp::RandomInsert, 1.0, 1, 1, &res).unwrap();
        assert_eq!(out.text, "a Z b Z c Z");
        assert_eq!(run("a b c", EdaOp::RandomInsert, 0.0, 1), "a b c");
    }

    #[test]
    fn synonym_replace() {
        let err = eda_op(&tweet("a"), EdaOp::SynonymReplace, 0.5, 1, 1, &EdaResources::default()).unwrap_err();
        assert!(matches!(err, AugmentError::MissingLexicon));

        let lex = SynonymLexicon::parse("panic\tfear\nflu\tinfluenza\n");
        let res = EdaResources { synonyms: Some(lex), insert_pool: vec![] };
        let out = eda_op(&tweet("Panic over flu season"), EdaOp::SynonymReplace, 1.0, 1, 1, &res).unwrap();
        assert_eq!(out.text, "fear over influenza season");
        assert_eq!(out.tweet_id, "1#eda1");
        assert_eq!(out.origin, Origin::Augmented);
    }

    #[test]
    fn augmenter_is_deterministic() {
        let aug = EdaAugmenter { p: 0.3, seed: 5, resources: EdaResources::default() };
        let t = tweet("one two three four five six");
        assert_eq!(aug.augment(&t, 2).unwrap(), aug.augment(&t, 2).unwrap());
    }
}
