//! End-to-end sweep: split, augment at each p (plus the no-augmentation and
//! back-translation arms), train, rank the holdout, evaluate, and write
//! every artifact under one output directory.
//!
//! Layout of `output_dir`:
//!
//! ```text
//! manifest.json          config hash, per-cell paths, wall-clock times
//! report.json            every cell plus medians over seeds
//! report.md / report.tsv rendered comparison tables
//! <cell>_seed<s>/        split_train.tsv holdout.tsv train.tsv model.json
//!                        run.tsv metrics.json [balance.json]
//! ```
//!
//! Cells are independent and may run on a worker pool; results are gathered
//! in cell order, so the output does not depend on the worker count.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::augment::{
    balance_classes, AugmentConfig, AugmentError, Augmenter, BackTranslateAugmenter, BalanceReport,
    ContextualAugmenter, EdaAugmenter, EdaResources, HttpTranslator, IdentityTranslator, ReversingTranslator,
    Selection, StopRule, SynonymLexicon, Translator,
};
use crate::classifier::{train, ClassifierError, Profile, TrainConfig};
use crate::corpus::{parse_dataset, stratified_split, to_canonical_tsv, CorpusError, Format, LabeledDataset, Origin};
use crate::lm_scorer::{CandidateScorer, ExternalScorer, NGramConfig, NGramScorer, ProcessSpec, ScorerError};
use crate::rank_eval::{evaluate, score_and_rank, EvalError, EvalOptions, MetricReport, DEFAULT_K_LIST};

/// Environment variable whose value heads the default seed list.
pub const SEED_ENV: &str = "CLAIMRANK_SEED";
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_SEED_COUNT: u64 = 5;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("{context}: {source}")]
    Cell {
        context: String,
        #[source]
        source: Box<ExperimentError>,
    },
    #[error(transparent)]
    Augment(#[from] AugmentError),
    #[error(transparent)]
    Scorer(#[from] ScorerError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("leakage: {0}")]
    Leakage(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io { path: path.display().to_string(), source }
}

/// The seed from [`SEED_ENV`], else [`DEFAULT_SEED`].
pub fn base_seed() -> u64 {
    std::env::var(SEED_ENV).ok().and_then(|s| s.trim().parse().ok()).unwrap_or(DEFAULT_SEED)
}

pub fn default_seeds() -> Vec<u64> {
    let head = base_seed();
    (0..DEFAULT_SEED_COUNT).map(|i| head + i).collect()
}

fn default_train_fraction() -> f64 {
    0.8
}

fn default_p_values() -> Vec<Option<f64>> {
    vec![None, Some(0.1), Some(0.2), Some(0.3), Some(0.4), Some(0.5)]
}

fn default_arms() -> Vec<Arm> {
    vec![Arm::Contextual]
}

fn default_profile() -> Profile {
    Profile::BaselineLinear
}

fn default_true() -> bool {
    true
}

fn default_k_list() -> Vec<usize> {
    DEFAULT_K_LIST.to_vec()
}

fn default_source() -> String {
    "src".into()
}

fn default_pivot() -> String {
    "en".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arm {
    Contextual,
    Backtranslate,
    Eda,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TranslatorConfig {
    #[default]
    Identity,
    Reverse,
    /// Bearer token comes from `CLAIMRANK_TRANSLATE_TOKEN`.
    Http { endpoint: String },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainOn {
    /// The internal stratified train split.
    #[default]
    Split,
    /// The whole input dataset; requires `holdout_dataset`.
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: PathBuf,
    #[serde(default = "default_format")]
    pub format: Format,
    /// Separate evaluation set (e.g. an organizer dev set). When absent the
    /// internal holdout split is used.
    #[serde(default)]
    pub holdout_dataset: Option<PathBuf>,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    /// `null` is the no-augmentation arm.
    #[serde(default = "default_p_values")]
    pub p_values: Vec<Option<f64>>,
    #[serde(default = "default_arms")]
    pub arms: Vec<Arm>,
    #[serde(default = "default_profile")]
    pub profile: Profile,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Where artifacts go. Not part of the config hash.
    #[serde(default, skip_serializing)]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub train_on: TrainOn,
    #[serde(default)]
    pub selection: Selection,
    #[serde(default = "default_true")]
    pub strict_exceed: bool,
    /// External candidate scorer command; the built-in n-gram model
    /// (trained on each cell's train split) when absent.
    #[serde(default)]
    pub scorer_cmd: Option<String>,
    #[serde(default)]
    pub ngram: NGramConfig,
    #[serde(default)]
    pub translator: TranslatorConfig,
    #[serde(default = "default_source")]
    pub source_language: String,
    #[serde(default = "default_pivot")]
    pub pivot_language: String,
    #[serde(default)]
    pub synonyms: Option<PathBuf>,
    #[serde(default = "default_k_list")]
    pub k_list: Vec<usize>,
    #[serde(default)]
    pub skip_empty_topics: bool,
}

fn default_format() -> Format {
    Format::Canonical
}

impl ExperimentConfig {
    pub fn new(dataset: impl Into<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        ExperimentConfig {
            dataset: dataset.into(),
            format: Format::Canonical,
            holdout_dataset: None,
            train_fraction: default_train_fraction(),
            p_values: default_p_values(),
            arms: default_arms(),
            profile: default_profile(),
            seeds: default_seeds(),
            output_dir: output_dir.into(),
            train_on: TrainOn::Split,
            selection: Selection::default(),
            strict_exceed: true,
            scorer_cmd: None,
            ngram: NGramConfig::default(),
            translator: TranslatorConfig::default(),
            source_language: default_source(),
            pivot_language: default_pivot(),
            synonyms: None,
            k_list: default_k_list(),
            skip_empty_topics: false,
        }
    }

    pub fn from_json(json: &str) -> Result<Self, ExperimentError> {
        serde_json::from_str(json).map_err(|e| ExperimentError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        Self::from_json(&fs::read_to_string(path).map_err(io_err(path))?)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        if self.p_values.is_empty() {
            return bad("p_values must not be empty".into());
        }
        if self.seeds.is_empty() {
            return bad("seeds must not be empty".into());
        }
        if let Some(p) = self.p_values.iter().flatten().find(|p| !(0.0..=1.0).contains(*p)) {
            return bad(format!("p value {p} not in [0, 1]"));
        }
        if self.train_on == TrainOn::Full && self.holdout_dataset.is_none() {
            return bad("train_on = full needs holdout_dataset".into());
        }
        if self.output_dir.as_os_str().is_empty() {
            return bad("output_dir is required".into());
        }
        let mut seen = HashSet::new();
        if let Some(s) = self.seeds.iter().find(|s| !seen.insert(**s)) {
            return bad(format!("seed {s} listed twice"));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form (without `output_dir`).
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Cells in report order: the null arm, then each augmenting arm by p,
    /// then back-translation; seeds innermost.
    pub fn cells(&self) -> Vec<CellSpec> {
        let mut columns: Vec<(Option<Arm>, Option<f64>)> = Vec::new();
        if self.p_values.contains(&None) {
            columns.push((None, None));
        }
        for arm in [Arm::Contextual, Arm::Eda] {
            if self.arms.contains(&arm) {
                columns.extend(self.p_values.iter().flatten().map(|p| (Some(arm), Some(*p))));
            }
        }
        if self.arms.contains(&Arm::Backtranslate) {
            columns.push((Some(Arm::Backtranslate), None));
        }
        columns
            .into_iter()
            .flat_map(|(arm, p)| self.seeds.iter().map(move |&seed| CellSpec { arm, p, seed }))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellSpec {
    /// `None` is the no-augmentation arm.
    pub arm: Option<Arm>,
    pub p: Option<f64>,
    pub seed: u64,
}

impl CellSpec {
    /// Column label shared by all seeds, e.g. `null`, `contextual_p0.1`.
    pub fn label(&self) -> String {
        match (self.arm, self.p) {
            (None, _) => "null".into(),
            (Some(Arm::Backtranslate), _) => "backtranslate".into(),
            (Some(Arm::Contextual), Some(p)) => format!("contextual_p{p}"),
            (Some(Arm::Eda), Some(p)) => format!("eda_p{p}"),
            (Some(arm), None) => format!("{arm:?}").to_lowercase(),
        }
    }

    /// Column header in the Table-3 style rendering.
    pub fn column_header(&self) -> String {
        match (self.arm, self.p) {
            (None, _) => "p=null".into(),
            (Some(Arm::Backtranslate), _) => "translation".into(),
            (Some(Arm::Contextual), Some(p)) => format!("p={p}"),
            (Some(Arm::Eda), Some(p)) => format!("eda p={p}"),
            (Some(_), None) => self.label(),
        }
    }

    pub fn dir_name(&self) -> String {
        format!("{}_seed{}", self.label(), self.seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellResult {
    pub label: String,
    pub arm: Option<Arm>,
    pub p: Option<f64>,
    pub seed: u64,
    pub dir: String,
    pub n_train_split: usize,
    pub n_train: usize,
    pub n_holdout: usize,
    pub balance: Option<BalanceReport>,
    pub metrics: MetricReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub label: String,
    pub column: String,
    pub arm: Option<Arm>,
    pub p: Option<f64>,
    pub n_seeds: usize,
    pub median_augmented: f64,
    /// Per-metric median over seeds.
    pub metrics: MetricReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplesVsScore {
    pub dataset: String,
    pub n_train_samples: usize,
    pub map: f64,
    /// Aggregate the map was taken from (best median map).
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub dataset: String,
    pub config_hash: String,
    pub cells: Vec<CellResult>,
    pub aggregates: Vec<Aggregate>,
    pub samples_vs_score: Vec<SamplesVsScore>,
}

/// Median; mean of the middle pair for even lengths. Input order is
/// irrelevant.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn median_report(reports: &[&MetricReport]) -> MetricReport {
    let pick = |f: &dyn Fn(&MetricReport) -> f64| median(&reports.iter().map(|r| f(r)).collect::<Vec<_>>());
    let ks: Vec<usize> = reports.first().map(|r| r.p_at_k.iter().map(|(k, _)| *k).collect()).unwrap_or_default();
    MetricReport {
        map: pick(&|r| r.map),
        mrr: pick(&|r| r.mrr),
        r_precision: pick(&|r| r.r_precision),
        p_at_k: ks.iter().map(|&k| (k, pick(&|r| r.p_at(k).unwrap_or(0.0)))).collect(),
        cw_precision: pick(&|r| r.cw_precision),
        cw_recall: pick(&|r| r.cw_recall),
        cw_f1: pick(&|r| r.cw_f1),
    }
}

/// Groups cells by label (first-appearance order) and takes medians.
pub fn aggregate(cells: &[CellResult]) -> Vec<Aggregate> {
    let mut labels: Vec<&str> = Vec::new();
    for c in cells {
        if !labels.contains(&c.label.as_str()) {
            labels.push(&c.label);
        }
    }
    labels
        .into_iter()
        .map(|label| {
            let group: Vec<&CellResult> = cells.iter().filter(|c| c.label == label).collect();
            let first = group[0];
            let spec = CellSpec { arm: first.arm, p: first.p, seed: first.seed };
            let augmented: Vec<f64> =
                group.iter().map(|c| c.balance.map_or(0.0, |b| b.augmented_generated as f64)).collect();
            Aggregate {
                label: label.to_string(),
                column: spec.column_header(),
                arm: first.arm,
                p: first.p,
                n_seeds: group.len(),
                median_augmented: median(&augmented),
                metrics: median_report(&group.iter().map(|c| &c.metrics).collect::<Vec<_>>()),
            }
        })
        .collect()
}

struct Inputs {
    dataset: LabeledDataset,
    holdout: Option<LabeledDataset>,
    synonyms: Option<SynonymLexicon>,
}

fn write(path: &Path, content: &str) -> Result<(), ExperimentError> {
    fs::write(path, content).map_err(io_err(path))
}

fn build_translator(cfg: &TranslatorConfig) -> Box<dyn Translator> {
    match cfg {
        TranslatorConfig::Identity => Box::new(IdentityTranslator),
        TranslatorConfig::Reverse => Box::new(ReversingTranslator),
        TranslatorConfig::Http { endpoint } => Box::new(HttpTranslator::from_env(endpoint.clone())),
    }
}

/// Augmented ids never reach the holdout, and no original train row is
/// also a holdout row.
pub fn check_leakage(train: &LabeledDataset, holdout: &LabeledDataset) -> Result<(), ExperimentError> {
    let holdout_ids = holdout.ids();
    if let Some(t) = train.tweets.iter().find(|t| holdout_ids.contains(t.tweet_id.as_str())) {
        return Err(ExperimentError::Leakage(format!("train tweet {:?} is in the holdout", t.tweet_id)));
    }
    if let Some(t) = holdout.tweets.iter().find(|t| t.origin != Origin::Original) {
        return Err(ExperimentError::Leakage(format!("synthetic tweet {:?} is in the holdout", t.tweet_id)));
    }
    Ok(())
}

fn run_cell(cfg: &ExperimentConfig, inputs: &Inputs, cell: &CellSpec) -> Result<(CellResult, u128), ExperimentError> {
    let started = Instant::now();
    let dir_name = cell.dir_name();
    let dir = cfg.output_dir.join(&dir_name);
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;

    let (split_train, internal_holdout) = stratified_split(&inputs.dataset, cfg.train_fraction, cell.seed)?;
    let split_train = match cfg.train_on {
        TrainOn::Split => split_train,
        TrainOn::Full => inputs.dataset.clone(),
    };
    let holdout = inputs.holdout.clone().unwrap_or(internal_holdout);

    let (train_set, balance) = match cell.arm {
        None => (split_train.clone(), None),
        Some(arm) => {
            let rule = StopRule::from_strict(cfg.strict_exceed);
            let (ds, report) = match arm {
                Arm::Contextual => {
                    let scorer: Box<dyn CandidateScorer> = match &cfg.scorer_cmd {
                        Some(cmd) => Box::new(ExternalScorer::spawn(ProcessSpec::parse(cmd)?)?),
                        None => Box::new(NGramScorer::train(split_train.tweets.iter().map(|t| t.text.as_str()), cfg.ngram)?),
                    };
                    let config = AugmentConfig {
                        p: cell.p.unwrap_or(0.0),
                        selection: cfg.selection,
                        seed: cell.seed,
                        ..AugmentConfig::default()
                    };
                    let augmenter = ContextualAugmenter { scorer: scorer.as_ref(), config };
                    balance_classes(&split_train, &augmenter as &dyn Augmenter, rule)?
                }
                Arm::Eda => {
                    let mut pool: Vec<String> =
                        split_train.tweets.iter().flat_map(|t| t.text.split_whitespace().map(str::to_string)).collect();
                    pool.sort();
                    pool.dedup();
                    let augmenter = EdaAugmenter {
                        p: cell.p.unwrap_or(0.0),
                        seed: cell.seed,
                        resources: EdaResources { synonyms: inputs.synonyms.clone(), insert_pool: pool },
                    };
                    balance_classes(&split_train, &augmenter, rule)?
                }
                Arm::Backtranslate => {
                    let translator = build_translator(&cfg.translator);
                    let augmenter = BackTranslateAugmenter {
                        translator: translator.as_ref(),
                        source: cfg.source_language.clone(),
                        pivot: cfg.pivot_language.clone(),
                    };
                    balance_classes(&split_train, &augmenter, rule)?
                }
            };
            (ds, Some(report))
        }
    };
    check_leakage(&train_set, &holdout)?;

    let split_tsv = to_canonical_tsv(&split_train);
    let train_tsv = to_canonical_tsv(&train_set);
    if cell.arm.is_none() && split_tsv != train_tsv {
        return Err(ExperimentError::Leakage("null-arm train set differs from the raw split".into()));
    }
    write(&dir.join("split_train.tsv"), &split_tsv)?;
    write(&dir.join("holdout.tsv"), &to_canonical_tsv(&holdout))?;
    write(&dir.join("train.tsv"), &train_tsv)?;

    let model = train(&train_set, &TrainConfig::for_profile(cfg.profile, cell.seed))?;
    model.save(&dir.join("model.json"))?;

    let run = score_and_rank(&model.predict_dataset(&holdout), &format!("{}_seed{}", cell.label(), cell.seed))?;
    run.write(&dir.join("run.tsv"))?;
    let opts = EvalOptions { k_list: cfg.k_list.clone(), skip_empty_topics: cfg.skip_empty_topics };
    let metrics = evaluate(&run, &holdout, &opts)?;
    write(&dir.join("metrics.json"), &metrics.to_json())?;
    if let Some(b) = &balance {
        write(&dir.join("balance.json"), &serde_json::to_string_pretty(b).expect("serializes"))?;
    }

    let result = CellResult {
        label: cell.label(),
        arm: cell.arm,
        p: cell.p,
        seed: cell.seed,
        dir: dir_name,
        n_train_split: split_train.len(),
        n_train: train_set.len(),
        n_holdout: holdout.len(),
        balance,
        metrics,
    };
    Ok((result, started.elapsed().as_millis()))
}

#[derive(Serialize)]
struct ManifestCell<'a> {
    label: &'a str,
    seed: u64,
    dir: &'a str,
    files: Vec<String>,
    wall_clock_ms: u128,
}

#[derive(Serialize)]
struct Manifest<'a> {
    config_hash: &'a str,
    config: &'a ExperimentConfig,
    seeds: &'a [u64],
    cells: Vec<ManifestCell<'a>>,
    reports: [&'static str; 3],
    wall_clock_ms: u128,
}

/// Runs every cell on `workers` threads (1 = serial) and writes reports
/// and the manifest.
pub fn run_experiment(cfg: &ExperimentConfig, workers: usize) -> Result<SweepReport, ExperimentError> {
    cfg.validate()?;
    let started = Instant::now();
    let dataset = parse_dataset(&cfg.dataset, cfg.format)?;
    let holdout = cfg.holdout_dataset.as_deref().map(|p| parse_dataset(p, cfg.format)).transpose()?;
    let synonyms = match &cfg.synonyms {
        Some(p) => Some(SynonymLexicon::load(p).map_err(io_err(p))?),
        None => None,
    };
    let inputs = Inputs { dataset, holdout, synonyms };
    fs::create_dir_all(&cfg.output_dir).map_err(io_err(&cfg.output_dir))?;

    let cells = cfg.cells();
    let run_one = |cell: &CellSpec| {
        run_cell(cfg, &inputs, cell).map_err(|e| ExperimentError::Cell {
            context: format!("cell {} (seed {})", cell.label(), cell.seed),
            source: Box::new(e),
        })
    };
    let outcomes: Vec<(CellResult, u128)> = if workers <= 1 {
        cells.iter().map(run_one).collect::<Result<_, _>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| ExperimentError::Config(format!("worker pool: {e}")))?;
        pool.install(|| cells.par_iter().map(run_one).collect::<Result<_, _>>())?
    };

    let config_hash = cfg.hash();
    let results: Vec<CellResult> = outcomes.iter().map(|(r, _)| r.clone()).collect();
    let aggregates = aggregate(&results);
    let best = aggregates
        .iter()
        .fold(None::<&Aggregate>, |best, a| match best {
            Some(b) if b.metrics.map >= a.metrics.map => Some(b),
            _ => Some(a),
        })
        .expect("at least one cell");
    let report = SweepReport {
        dataset: inputs.dataset.name.clone(),
        config_hash: config_hash.clone(),
        samples_vs_score: vec![SamplesVsScore {
            dataset: inputs.dataset.name.clone(),
            n_train_samples: inputs.dataset.len(),
            map: best.metrics.map,
            source: best.label.clone(),
        }],
        cells: results,
        aggregates,
    };

    let out = &cfg.output_dir;
    write(&out.join("report.json"), &serde_json::to_string_pretty(&report).expect("serializes"))?;
    write(&out.join("report.md"), &render_report(&report, ReportFormat::Markdown))?;
    write(&out.join("report.tsv"), &render_report(&report, ReportFormat::Tsv))?;

    let manifest = Manifest {
        config_hash: &config_hash,
        config: cfg,
        seeds: &cfg.seeds,
        cells: outcomes
            .iter()
            .map(|(r, ms)| {
                let mut files: Vec<String> =
                    ["split_train.tsv", "holdout.tsv", "train.tsv", "model.json", "run.tsv", "metrics.json"]
                        .iter()
                        .map(|f| format!("{}/{f}", r.dir))
                        .collect();
                if r.balance.is_some() {
                    files.push(format!("{}/balance.json", r.dir));
                }
                ManifestCell { label: &r.label, seed: r.seed, dir: &r.dir, files, wall_clock_ms: *ms }
            })
            .collect(),
        reports: ["report.json", "report.md", "report.tsv"],
        wall_clock_ms: started.elapsed().as_millis(),
    };
    write(&out.join("manifest.json"), &serde_json::to_string_pretty(&manifest).expect("serializes"))?;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Tsv,
    Markdown,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tsv" => Ok(ReportFormat::Tsv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(format!("unknown report format {other:?}")),
        }
    }
}

fn fmt_p(p: Option<f64>) -> String {
    p.map_or_else(|| "null".to_string(), |p| p.to_string())
}

/// TSV: one row per cell. Markdown: medians with metrics as rows and arm/p
/// as columns, followed by the sample-count table.
pub fn render_report(report: &SweepReport, format: ReportFormat) -> String {
    let mut out = String::new();
    match format {
        ReportFormat::Tsv => {
            let metric_names: Vec<String> =
                report.cells.first().map(|c| c.metrics.fields().into_iter().map(|(k, _)| k).collect()).unwrap_or_default();
            let _ = writeln!(
                out,
                "arm\tp\tseed\tn_train_split\tn_train\taugmented\tepochs\t{}",
                metric_names.join("\t")
            );
            for c in &report.cells {
                let values: Vec<String> = c.metrics.fields().iter().map(|(_, v)| format!("{v:.6}")).collect();
                let _ = writeln!(
                    out,
                    "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                    c.arm.map_or("none".to_string(), |a| format!("{a:?}").to_lowercase()),
                    fmt_p(c.p),
                    c.seed,
                    c.n_train_split,
                    c.n_train,
                    c.balance.map_or(0, |b| b.augmented_generated),
                    c.balance.map_or(0, |b| b.epochs_run),
                    values.join("\t")
                );
            }
        }
        ReportFormat::Markdown => {
            let _ = writeln!(out, "## {} (median over seeds)\n", report.dataset);
            let headers: Vec<&str> = report.aggregates.iter().map(|a| a.column.as_str()).collect();
            let _ = writeln!(out, "| | {} |", headers.join(" | "));
            let _ = writeln!(out, "|---|{}", "---|".repeat(headers.len()));
            for name in ["cw_precision", "cw_recall", "cw_f1", "map"] {
                let get = |m: &MetricReport| match name {
                    "cw_precision" => m.cw_precision,
                    "cw_recall" => m.cw_recall,
                    "cw_f1" => m.cw_f1,
                    _ => m.map,
                };
                let cells: Vec<String> = report.aggregates.iter().map(|a| format!("{:.3}", get(&a.metrics))).collect();
                let _ = writeln!(out, "| {name} | {} |", cells.join(" | "));
            }
            out.push('\n');
            out.push_str(&render_samples_vs_score(&report.samples_vs_score));
        }
    }
    out
}

/// mAP against training-set size, sorted by ascending mAP.
pub fn render_samples_vs_score(rows: &[SamplesVsScore]) -> String {
    let mut sorted: Vec<&SamplesVsScore> = rows.iter().collect();
    sorted.sort_by(|a, b| a.map.total_cmp(&b.map).then_with(|| a.dataset.cmp(&b.dataset)));
    let mut out = String::from("| | mAP | # Samples |\n|---|---|---|\n");
    for r in sorted {
        let _ = writeln!(out, "| {} | {:.3} | {} |", r.dataset, r.map, r.n_train_samples);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ExperimentConfig {
        let mut c = ExperimentConfig::new("d.tsv", "out");
        c.seeds = vec![1, 2];
        c
    }

    #[test]
    fn cell_layout_follows_table_columns() {
        let mut c = cfg();
        c.arms = vec![Arm::Contextual, Arm::Backtranslate];
        let headers: Vec<String> = c.cells().iter().filter(|s| s.seed == 1).map(|s| s.column_header()).collect();
        assert_eq!(headers, ["p=null", "p=0.1", "p=0.2", "p=0.3", "p=0.4", "p=0.5", "translation"]);
        assert_eq!(c.cells().len(), 14);
    }

    #[test]
    fn null_only_is_one_cell_per_seed() {
        let mut c = cfg();
        c.p_values = vec![None];
        c.seeds = vec![9];
        assert_eq!(c.cells(), vec![CellSpec { arm: None, p: None, seed: 9 }]);
    }

    #[test]
    fn config_json_defaults_and_hash() {
        let c = ExperimentConfig::from_json(r#"{"dataset": "x.tsv", "output_dir": "o", "seeds": [3], "p_values": [null, 0.1]}"#).unwrap();
        assert_eq!(c.p_values, vec![None, Some(0.1)]);
        assert_eq!(c.train_fraction, 0.8);
        assert!(c.strict_exceed);
        let mut moved = c.clone();
        moved.output_dir = "elsewhere".into();
        assert_eq!(c.hash(), moved.hash());
        let mut changed = c.clone();
        changed.seeds = vec![4];
        assert_ne!(c.hash(), changed.hash());
        assert!(ExperimentConfig::from_json(r#"{"dataset": "x", "output_dir": "o", "bogus": 1}"#).is_err());
    }

    #[test]
    fn validation() {
        let mut c = cfg();
        c.p_values.clear();
        assert!(c.validate().is_err());
        let mut c = cfg();
        c.seeds.clear();
        assert!(c.validate().is_err());
        let mut c = cfg();
        c.train_on = TrainOn::Full;
        assert!(c.validate().is_err());
    }

    #[test]
    fn median_is_order_free() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
        assert_eq!(median(&[2.0, 3.0, 1.0]), median(&[1.0, 2.0, 3.0]));
        assert_eq!(median(&[]), 0.0);
    }

    #[test]
    fn samples_table_sorted_by_map() {
        let rows = vec![
            SamplesVsScore { dataset: "arabic".into(), n_train_samples: 3095, map: 0.658, source: "x".into() },
            SamplesVsScore { dataset: "english".into(), n_train_samples: 698, map: 0.101, source: "x".into() },
        ];
        let md = render_samples_vs_score(&rows);
        let lines: Vec<&str> = md.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[2], "| english | 0.101 | 698 |");
        assert_eq!(lines[3], "| arabic | 0.658 | 3095 |");
    }
}
