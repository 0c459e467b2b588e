//! Built-in check-worthiness classifier: signed feature hashing over word
//! 1–2-grams and character 3–5-grams, logistic regression trained with
//! mini-batch Adam on mean binary cross-entropy.
//!
//! The model emits two logits `(0, w·x + b)` so that externally produced
//! two-class scores (see [`load_external_scores`]) feed the same ranking
//! code.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::LabeledDataset;
use crate::rank_eval::LogitRow;
use crate::seeding::fnv1a;
use crate::wordpiece::pre_tokenize;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("training data needs both classes (positives: {positives}, negatives: {negatives})")]
    DegenerateData { positives: usize, negatives: usize },
    #[error("IdMismatch: no score for tweet_id {0:?}")]
    MissingId(String),
    #[error("IdMismatch: tweet_id {0:?} scored more than once")]
    DuplicateId(String),
    #[error("IdMismatch: scored tweet_id {0:?} is not in the dataset")]
    UnknownId(String),
    #[error("score file line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("model file: {0}")]
    Model(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn io_err(path: &Path, source: std::io::Error) -> ClassifierError {
    ClassifierError::Io { path: path.display().to_string(), source }
}

/// Sparse vector with strictly increasing indices.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SparseVector {
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
}

impl SparseVector {
    /// Sums duplicate indices; drops entries that cancel to zero.
    pub fn from_pairs(mut pairs: Vec<(u32, f64)>) -> Self {
        pairs.sort_by_key(|p| p.0);
        let mut v = SparseVector::default();
        for (i, x) in pairs {
            if v.indices.last() == Some(&i) {
                *v.values.last_mut().expect("paired") += x;
            } else {
                v.indices.push(i);
                v.values.push(x);
            }
        }
        let (indices, values) = v.indices.into_iter().zip(v.values).filter(|(_, x)| *x != 0.0).unzip();
        SparseVector { indices, values }
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.iter().map(|(i, x)| dense[i as usize] * x).sum()
    }

    pub fn get(&self, index: u32) -> f64 {
        self.indices.binary_search(&index).map_or(0.0, |p| self.values[p])
    }
}

/// Feature extraction parameters. The hash is 64-bit FNV-1a over the UTF-8
/// key `"<kind>\u{1}<gram>"` (kind `w` word, `c` char); the low `dim_bits`
/// bits pick the index and the top bit the sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub dim_bits: u32,
    pub word_ngrams: (usize, usize),
    pub char_ngrams: (usize, usize),
    pub lowercase: bool,
}

impl Default for FeatureSpec {
    fn default() -> Self {
        FeatureSpec { dim_bits: 18, word_ngrams: (1, 2), char_ngrams: (3, 5), lowercase: true }
    }
}

impl FeatureSpec {
    pub fn dim(&self) -> usize {
        1 << self.dim_bits
    }

    fn hashed(&self, kind: char, gram: &str) -> (u32, f64) {
        let mut key = String::with_capacity(gram.len() + 2);
        key.push(kind);
        key.push('\u{1}');
        key.push_str(gram);
        let h = fnv1a(key.as_bytes());
        let index = (h & (self.dim() as u64 - 1)) as u32;
        let sign = if h >> 63 == 1 { -1.0 } else { 1.0 };
        (index, sign)
    }

    /// Word n-grams over the pre-tokenizer's tokens (punctuation included);
    /// char n-grams inside each word padded as `<word>`.
    pub fn featurize(&self, text: &str) -> SparseVector {
        let text = if self.lowercase { text.to_lowercase() } else { text.to_string() };
        let tokens: Vec<&str> = pre_tokenize(&text).iter().map(|t| t.as_str(&text)).collect();
        let mut pairs = Vec::new();
        for n in self.word_ngrams.0.max(1)..=self.word_ngrams.1 {
            for gram in tokens.windows(n) {
                pairs.push(self.hashed('w', &gram.join(" ")));
            }
        }
        let (lo, hi) = self.char_ngrams;
        if hi > 0 {
            for tok in &tokens {
                let padded: Vec<char> = std::iter::once('<').chain(tok.chars()).chain(std::iter::once('>')).collect();
                for n in lo.max(1)..=hi {
                    for gram in padded.windows(n) {
                        pairs.push(self.hashed('c', &gram.iter().collect::<String>()));
                    }
                }
            }
        }
        SparseVector::from_pairs(pairs)
    }
}

/// Features of `text` under the default spec.
pub fn featurize(text: &str) -> SparseVector {
    FeatureSpec::default().featurize(text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// Transformer fine-tuning settings (lr 1.5e-5, 2 epochs), kept for
    /// parity with external models.
    PaperTransformer,
    BaselineLinear,
}

impl FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "paper_transformer" => Ok(Profile::PaperTransformer),
            "baseline_linear" => Ok(Profile::BaselineLinear),
            other => Err(format!("unknown profile {other:?} (expected paper_transformer or baseline_linear)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub adam_epsilon: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub profile: Profile,
}

impl TrainConfig {
    pub fn for_profile(profile: Profile, seed: u64) -> Self {
        let (learning_rate, epochs) = match profile {
            Profile::PaperTransformer => (1.5e-5, 2),
            Profile::BaselineLinear => (0.05, 10),
        };
        TrainConfig {
            learning_rate,
            adam_epsilon: 1e-8,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            epochs,
            batch_size: 32,
            seed,
            profile,
        }
    }

    pub fn validate(&self) -> Result<(), ClassifierError> {
        let open_unit = |b: f64| b > 0.0 && b < 1.0;
        if !(self.learning_rate > 0.0 && self.adam_epsilon > 0.0) {
            return Err(ClassifierError::Config("learning_rate and adam_epsilon must be positive".into()));
        }
        if !(open_unit(self.adam_beta1) && open_unit(self.adam_beta2)) {
            return Err(ClassifierError::Config("adam betas must lie in (0, 1)".into()));
        }
        if self.batch_size == 0 {
            return Err(ClassifierError::Config("batch_size must be at least 1".into()));
        }
        Ok(())
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::for_profile(Profile::BaselineLinear, 42)
    }
}

/// Adam with bias correction. Parameters whose first and second moments
/// are both still zero are skipped, which is exactly equivalent to a dense
/// update because their step would be zero.
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: i32,
    m: Vec<f64>,
    v: Vec<f64>,
    active: Vec<u32>,
    is_active: Vec<bool>,
}

impl Adam {
    pub fn new(n_params: usize, lr: f64, beta1: f64, beta2: f64, eps: f64) -> Self {
        Adam {
            lr,
            beta1,
            beta2,
            eps,
            t: 0,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            active: Vec::new(),
            is_active: vec![false; n_params],
        }
    }

    /// One update; `grad` is dense and read only at active indices.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64], touched: &[u32]) {
        for &i in touched {
            if !self.is_active[i as usize] {
                self.is_active[i as usize] = true;
                self.active.push(i);
            }
        }
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for &i in &self.active {
            let i = i as usize;
            let g = grad[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^z) − y·z`, stable for large |z|.
fn bce_with_logit(z: f64, y: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p() - y * z
}

/// Mean binary cross-entropy of `sigmoid(w·x + b)` against labels in {0, 1}.
pub fn bce_loss(weights: &[f64], bias: f64, batch: &[(&SparseVector, f64)]) -> f64 {
    if batch.is_empty() {
        return 0.0;
    }
    batch.iter().map(|(x, y)| bce_with_logit(x.dot(weights) + bias, *y)).sum::<f64>() / batch.len() as f64
}

/// Analytic gradient of [`bce_loss`]: sparse weight part and bias part.
pub fn bce_gradient(weights: &[f64], bias: f64, batch: &[(&SparseVector, f64)]) -> (Vec<(u32, f64)>, f64) {
    let scale = 1.0 / batch.len().max(1) as f64;
    let mut pairs = Vec::new();
    let mut g_bias = 0.0;
    for (x, y) in batch {
        let dz = (sigmoid(x.dot(weights) + bias) - y) * scale;
        g_bias += dz;
        pairs.extend(x.iter().map(|(i, v)| (i, dz * v)));
    }
    let merged = SparseVector::from_pairs(pairs);
    (merged.iter().collect(), g_bias)
}

/// Mean loss before training and after each epoch.
pub type LossHistory = Vec<f64>;

/// Mini-batch Adam over precomputed feature vectors; the bias is parameter
/// `dim`. Examples are reshuffled every epoch from one seeded stream.
pub fn fit_vectors(
    examples: &[(SparseVector, f64)],
    dim: usize,
    cfg: &TrainConfig,
) -> Result<(Vec<f64>, f64, LossHistory), ClassifierError> {
    cfg.validate()?;
    let mut params = vec![0.0; dim + 1];
    let mut grad = vec![0.0; dim + 1];
    let mut adam = Adam::new(dim + 1, cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let all: Vec<(&SparseVector, f64)> = examples.iter().map(|(x, y)| (x, *y)).collect();

    let mut history = vec![bce_loss(&params[..dim], params[dim], &all)];
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<(&SparseVector, f64)> = chunk.iter().map(|&i| (&examples[i].0, examples[i].1)).collect();
            let (g_w, g_b) = bce_gradient(&params[..dim], params[dim], &batch);
            let mut touched: Vec<u32> = g_w.iter().map(|(i, _)| *i).collect();
            for &(i, g) in &g_w {
                grad[i as usize] = g;
            }
            grad[dim] = g_b;
            touched.push(dim as u32);
            adam.step(&mut params, &grad, &touched);
            for &i in &touched {
                grad[i as usize] = 0.0;
            }
        }
        history.push(bce_loss(&params[..dim], params[dim], &all));
    }
    let bias = params.pop().expect("bias slot");
    Ok((params, bias, history))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub spec: FeatureSpec,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub config: TrainConfig,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    feature_spec: FeatureSpec,
    hash: String,
    dimension: usize,
    bias: f64,
    /// Non-zero weights as `[index, value]`.
    weights: Vec<(u32, f64)>,
    config: TrainConfig,
}

const HASH_NAME: &str = "fnv1a64-signed";

impl LinearModel {
    pub fn zero(spec: FeatureSpec, config: TrainConfig) -> Self {
        LinearModel { weights: vec![0.0; spec.dim()], bias: 0.0, spec, config }
    }

    pub fn logit(&self, features: &SparseVector) -> f64 {
        features.dot(&self.weights) + self.bias
    }

    pub fn predict_logits(&self, text: &str) -> (f64, f64) {
        (0.0, self.logit(&self.spec.featurize(text)))
    }

    pub fn predict_dataset(&self, ds: &LabeledDataset) -> Vec<LogitRow> {
        ds.tweets
            .iter()
            .map(|t| {
                let (logit_neg, logit_pos) = self.predict_logits(&t.text);
                LogitRow { topic_id: t.topic_id.clone(), tweet_id: t.tweet_id.clone(), logit_neg, logit_pos }
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            feature_spec: self.spec,
            hash: HASH_NAME.to_string(),
            dimension: self.spec.dim(),
            bias: self.bias,
            weights: self.weights.iter().enumerate().filter(|(_, w)| **w != 0.0).map(|(i, w)| (i as u32, *w)).collect(),
            config: self.config,
        };
        serde_json::to_string(&file).expect("model serializes")
    }

    pub fn from_json(json: &str) -> Result<Self, ClassifierError> {
        let file: ModelFile = serde_json::from_str(json).map_err(|e| ClassifierError::Model(e.to_string()))?;
        if file.format_version != MODEL_FORMAT_VERSION || file.hash != HASH_NAME {
            return Err(ClassifierError::Model(format!(
                "unsupported model (version {}, hash {})",
                file.format_version, file.hash
            )));
        }
        if file.dimension != file.feature_spec.dim() {
            return Err(ClassifierError::Model("dimension disagrees with feature spec".into()));
        }
        let mut weights = vec![0.0; file.dimension];
        for (i, w) in file.weights {
            let slot = weights.get_mut(i as usize).ok_or_else(|| ClassifierError::Model(format!("index {i} out of range")))?;
            if !w.is_finite() {
                return Err(ClassifierError::Model(format!("non-finite weight at {i}")));
            }
            *slot = w;
        }
        Ok(LinearModel { spec: file.feature_spec, weights, bias: file.bias, config: file.config })
    }

    pub fn save(&self, path: &Path) -> Result<(), ClassifierError> {
        fs::write(path, self.to_json()).map_err(|e| io_err(path, e))
    }

    pub fn load(path: &Path) -> Result<Self, ClassifierError> {
        Self::from_json(&fs::read_to_string(path).map_err(|e| io_err(path, e))?)
    }
}

pub fn predict_logits(model: &LinearModel, text: &str) -> (f64, f64) {
    model.predict_logits(text)
}

pub fn train(train_set: &LabeledDataset, cfg: &TrainConfig) -> Result<LinearModel, ClassifierError> {
    train_with_history(train_set, cfg, FeatureSpec::default()).map(|(m, _)| m)
}

pub fn train_with_history(
    train_set: &LabeledDataset,
    cfg: &TrainConfig,
    spec: FeatureSpec,
) -> Result<(LinearModel, LossHistory), ClassifierError> {
    let positives = train_set.positives();
    let negatives = train_set.negatives();
    if positives == 0 || negatives == 0 {
        return Err(ClassifierError::DegenerateData { positives, negatives });
    }
    let examples: Vec<(SparseVector, f64)> =
        train_set.tweets.iter().map(|t| (spec.featurize(&t.text), t.label.as_f64())).collect();
    let (weights, bias, history) = fit_vectors(&examples, spec.dim(), cfg)?;
    Ok((LinearModel { spec, weights, bias, config: *cfg }, history))
}

/// Reads `tweet_id\tlogit_neg\tlogit_pos` rows (optional header) and
/// returns them in dataset order. Every dataset id must be scored exactly
/// once and no other id may appear.
pub fn load_external_scores(path: &Path, ds: &LabeledDataset) -> Result<Vec<LogitRow>, ClassifierError> {
    let content = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_external_scores(&content, ds)
}

pub fn parse_external_scores(content: &str, ds: &LabeledDataset) -> Result<Vec<LogitRow>, ClassifierError> {
    let known: HashSet<&str> = ds.tweets.iter().map(|t| t.tweet_id.as_str()).collect();
    let mut scores: HashMap<String, (f64, f64)> = HashMap::new();
    for (i, line) in content.lines().enumerate() {
        if line.trim().is_empty() || (i == 0 && line.starts_with("tweet_id\t")) {
            continue;
        }
        let err = |reason: String| ClassifierError::Parse { line: i + 1, reason };
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(err(format!("expected 3 columns, found {}", cols.len())));
        }
        let num = |s: &str| -> Result<f64, ClassifierError> {
            s.trim().parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| err(format!("non-numeric logit {s:?}")))
        };
        let (neg, pos) = (num(cols[1])?, num(cols[2])?);
        let id = cols[0].trim();
        if !known.contains(id) {
            return Err(ClassifierError::UnknownId(id.to_string()));
        }
        if scores.insert(id.to_string(), (neg, pos)).is_some() {
            return Err(ClassifierError::DuplicateId(id.to_string()));
        }
    }
    ds.tweets
        .iter()
        .map(|t| {
            let (logit_neg, logit_pos) =
                *scores.get(&t.tweet_id).ok_or_else(|| ClassifierError::MissingId(t.tweet_id.clone()))?;
            Ok(LogitRow { topic_id: t.topic_id.clone(), tweet_id: t.tweet_id.clone(), logit_neg, logit_pos })
        })
        .collect()
}
