//! Class balancing for check-worthiness datasets by contextual lexical
//! substitution, a hashed linear classifier, claim ranking, and
//! CheckThat-style ranked evaluation.
//!
//! Pipeline: [`corpus`] ingests and splits data, [`augment`] grows the
//! positive class until it outnumbers the negatives (using candidates from
//! [`lm_scorer`]), [`classifier`] trains on the result, and [`rank_eval`]
//! ranks and scores held-out tweets. [`experiment`] runs the whole sweep.

pub mod augment;
pub mod classifier;
pub mod corpus;
pub mod experiment;
pub mod lm_scorer;
pub mod rank_eval;
pub mod seeding;
pub mod synthetic;
pub mod wordpiece;

pub use augment::{
    balance_classes, contextual_substitute, AugmentConfig, AugmentError, Augmenter, BalanceReport, Mode, Selection,
    StopRule,
};
pub use classifier::{featurize, predict_logits, train, ClassifierError, LinearModel, Profile, TrainConfig};
pub use corpus::{
    parse_dataset, stats, stratified_split, write_dataset, CorpusError, DatasetStats, Format, Label, LabeledDataset,
    Origin, Tweet,
};
pub use experiment::{run_experiment, ExperimentConfig, ExperimentError, SweepReport};
pub use lm_scorer::{CandidateScorer, ExternalScorer, NGramConfig, NGramScorer, ProcessSpec, ScorerError};
pub use rank_eval::{evaluate, score_and_rank, softmax2, EvalError, EvalOptions, MetricReport, RankedRun};
pub use wordpiece::{load_vocab, SubwordVocab, UnkReport, VocabError};
