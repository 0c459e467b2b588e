//! Seeded synthetic check-worthiness corpora.
//!
//! Tweets are sequences of pseudo-words. Positives draw each word from a
//! dedicated lexical field with probability `field_rate_positive`; negatives
//! draw from the same field with the (smaller) `field_rate_negative`, so the
//! classes overlap and the minority class is hard to recall without
//! rebalancing.
//!
//! The default vocabularies are small on purpose. With a few hundred random
//! pseudo-words nearly every word bigram is unique, a hashed n-gram model
//! memorizes each training tweet, and class balance stops mattering; a
//! repetitive vocabulary keeps the class prior visible to the classifier.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Label, LabeledDataset, Tweet};

const ONSETS: [&str; 12] = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t"];
const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub name: String,
    pub topic_id: String,
    pub n_samples: usize,
    pub positive_rate: f64,
    pub seed: u64,
    pub min_words: usize,
    pub max_words: usize,
    pub neutral_vocab: usize,
    pub field_vocab: usize,
    pub field_rate_positive: f64,
    pub field_rate_negative: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            name: "synthetic".into(),
            topic_id: "synthetic".into(),
            n_samples: 2000,
            positive_rate: 0.13,
            seed: 7,
            min_words: 8,
            max_words: 20,
            neutral_vocab: 60,
            field_vocab: 20,
            field_rate_positive: 0.2,
            field_rate_negative: 0.05,
        }
    }
}

/// `n` distinct pronounceable words; `tag` keeps vocabularies disjoint.
fn pseudo_words(n: usize, tag: &str) -> Vec<String> {
    let syllables: Vec<String> = ONSETS.iter().flat_map(|o| VOWELS.iter().map(move |v| format!("{o}{v}"))).collect();
    let s = syllables.len();
    (0..n)
        .map(|i| format!("{}{}{}", syllables[i % s], syllables[(i / s) % s], tag))
        .collect()
}

/// Skewed draw: low indices are much more frequent.
fn zipfish<'a>(words: &'a [String], rng: &mut ChaCha8Rng) -> &'a str {
    let u: f64 = rng.gen();
    &words[((u * u) * words.len() as f64) as usize % words.len()]
}

pub fn generate(spec: &SyntheticSpec) -> LabeledDataset {
    let neutral = pseudo_words(spec.neutral_vocab, "");
    let field = pseudo_words(spec.field_vocab, "x");
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let n_pos = (spec.n_samples as f64 * spec.positive_rate).round() as usize;
    let mut labels: Vec<bool> = (0..spec.n_samples).map(|i| i < n_pos).collect();
    labels.shuffle(&mut rng);

    let tweets = labels
        .into_iter()
        .enumerate()
        .map(|(i, positive)| {
            let rate = if positive { spec.field_rate_positive } else { spec.field_rate_negative };
            let len = rng.gen_range(spec.min_words..=spec.max_words);
            let words: Vec<&str> = (0..len)
                .map(|_| if rng.gen::<f64>() < rate { zipfish(&field, &mut rng) } else { zipfish(&neutral, &mut rng) })
                .collect();
            Tweet::new(spec.topic_id.clone(), format!("s{i:05}"), words.join(" "), Label::from(positive))
        })
        .collect();
    LabeledDataset::new(spec.name.clone(), tweets)
}
