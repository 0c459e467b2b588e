//! `claimrank`: the pipeline as subcommands.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or contract error. Data goes
//! to files or stdout, diagnostics to stderr.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{ArgAction, Args, Parser, Subcommand};

use claimrank_core::augment::{
    augment_dataset, balance_classes, AugmentConfig, ContextualAugmenter, Mode, Selection, StopRule,
};
use claimrank_core::classifier::{load_external_scores, train, LinearModel, Profile, TrainConfig};
use claimrank_core::corpus::{parse_dataset, stats, to_canonical_tsv, write_dataset, Format, LabeledDataset};
use claimrank_core::experiment::{render_report, run_experiment, ExperimentConfig, ReportFormat, SEED_ENV};
use claimrank_core::lm_scorer::{external_scorer, train_ngram, CandidateScorer, NGramConfig, ProcessSpec};
use claimrank_core::rank_eval::{evaluate, score_and_rank, EvalOptions, RankedRun, DEFAULT_K_LIST};
use claimrank_core::wordpiece::load_vocab;

const DEFAULT_SEED: u64 = 42;

#[derive(Parser)]
#[command(name = "claimrank", version, about = "Check-worthiness data balancing, ranking and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a dataset and write it in canonical TSV.
    Ingest(IngestArgs),
    /// Print dataset statistics as JSON.
    Stats(InputArgs),
    /// Report subword and UNK counts against a vocabulary.
    Tokens(TokensArgs),
    /// One contextual augmentation pass over a dataset.
    Augment(AugmentArgs),
    /// Augment positives epoch by epoch until they outnumber negatives.
    Balance(BalanceArgs),
    /// Train the hashed linear classifier.
    Train(TrainArgs),
    /// Score and rank a dataset into a run file.
    Rank(RankArgs),
    /// Evaluate a run file against gold labels.
    Eval(EvalArgs),
    /// Run a full experiment sweep from a config file.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct InputArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "canonical")]
    format: Format,
}

impl InputArgs {
    fn load(&self) -> Result<LabeledDataset> {
        Ok(parse_dataset(&self.input, self.format)?)
    }
}

#[derive(Args)]
struct IngestArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Destination file; stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct TokensArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    vocab: PathBuf,
    #[arg(long)]
    lowercase: bool,
}

#[derive(Args)]
struct ScorerArgs {
    /// Probability that each eligible word is augmented.
    #[arg(long, default_value_t = 0.1)]
    p: f64,
    #[arg(long, default_value = "substitute")]
    mode: Mode,
    /// argmax, sample or sample:<k>.
    #[arg(long, default_value = "sample")]
    selection: Selection,
    #[arg(long)]
    seed: Option<u64>,
    /// External candidate scorer command; the built-in n-gram model trained
    /// on the input when absent.
    #[arg(long)]
    scorer_cmd: Option<String>,
}

impl ScorerArgs {
    fn scorer(&self, ds: &LabeledDataset) -> Result<Box<dyn CandidateScorer>> {
        Ok(match &self.scorer_cmd {
            Some(cmd) => Box::new(external_scorer(ProcessSpec::parse(cmd)?)?),
            None => Box::new(train_ngram(ds, NGramConfig::default())?),
        })
    }

    fn config(&self) -> AugmentConfig {
        AugmentConfig {
            p: self.p,
            mode: self.mode,
            selection: self.selection,
            seed: resolve_seed(self.seed),
            ..AugmentConfig::default()
        }
    }
}

#[derive(Args)]
struct AugmentArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    scorer: ScorerArgs,
    #[arg(long, default_value_t = 1)]
    epoch: u32,
    /// Augment only check-worthy rows.
    #[arg(long)]
    positives_only: bool,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BalanceArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    scorer: ScorerArgs,
    /// Stop once positives > negatives (true) or >= negatives (false).
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    strict_exceed: bool,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value = "baseline_linear")]
    profile: Profile,
    #[arg(long)]
    seed: Option<u64>,
    /// Model file to write.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct RankArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Trained model file.
    #[arg(long, conflicts_with = "scores", required_unless_present = "scores")]
    model: Option<PathBuf>,
    /// External `tweet_id\tlogit_neg\tlogit_pos` file.
    #[arg(long)]
    scores: Option<PathBuf>,
    #[arg(long, default_value = "claimrank")]
    run_id: String,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    run: PathBuf,
    #[arg(long)]
    gold: PathBuf,
    #[arg(long, default_value = "canonical")]
    format: Format,
    #[arg(long, value_delimiter = ',')]
    k_list: Option<Vec<usize>>,
    #[arg(long)]
    skip_empty_topics: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Overrides the config's output_dir.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Head of the seed list; keeps the config's seed count.
    #[arg(long)]
    seed: Option<u64>,
}

/// Flag, then `CLAIMRANK_SEED`, then 42.
fn resolve_seed(flag: Option<u64>) -> u64 {
    flag.or_else(|| std::env::var(SEED_ENV).ok().and_then(|s| s.trim().parse().ok())).unwrap_or(DEFAULT_SEED)
}

fn emit(output: Option<&Path>, content: &str) -> Result<()> {
    match output {
        Some(path) => fs::write(path, content).with_context(|| format!("writing {}", path.display())),
        None => {
            std::io::stdout().write_all(content.as_bytes())?;
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest(a) => {
            let ds = a.input.load()?;
            match &a.output {
                Some(path) => write_dataset(&ds, path)?,
                None => emit(None, &to_canonical_tsv(&ds))?,
            }
            eprintln!("{} rows", ds.len());
        }
        Command::Stats(a) => {
            println!("{}", serde_json::to_string_pretty(&stats(&a.load()?))?);
        }
        Command::Tokens(a) => {
            let vocab = load_vocab(&a.vocab)?.with_lowercase(a.lowercase);
            println!("{}", vocab.unk_report(&a.input.load()?));
        }
        Command::Augment(a) => {
            let ds = a.input.load()?;
            let scorer = a.scorer.scorer(&ds)?;
            let config = a.scorer.config();
            eprintln!("seed={}", config.seed);
            let augmenter = ContextualAugmenter { scorer: scorer.as_ref(), config };
            let out = augment_dataset(&ds, &augmenter, a.epoch, a.positives_only)?;
            emit(a.output.as_deref(), &to_canonical_tsv(&out))?;
        }
        Command::Balance(a) => {
            let ds = a.input.load()?;
            let scorer = a.scorer.scorer(&ds)?;
            let config = a.scorer.config();
            eprintln!("seed={}", config.seed);
            let augmenter = ContextualAugmenter { scorer: scorer.as_ref(), config };
            let (out, report) = balance_classes(&ds, &augmenter, StopRule::from_strict(a.strict_exceed))?;
            emit(a.output.as_deref(), &to_canonical_tsv(&out))?;
            eprintln!("{}", serde_json::to_string(&report)?);
        }
        Command::Train(a) => {
            let seed = resolve_seed(a.seed);
            eprintln!("seed={seed}");
            let model = train(&a.input.load()?, &TrainConfig::for_profile(a.profile, seed))?;
            model.save(&a.output)?;
        }
        Command::Rank(a) => {
            let ds = a.input.load()?;
            let rows = match (&a.model, &a.scores) {
                (Some(model), _) => LinearModel::load(model)?.predict_dataset(&ds),
                (None, Some(scores)) => load_external_scores(scores, &ds)?,
                (None, None) => bail!("one of --model or --scores is required"),
            };
            let run = score_and_rank(&rows, &a.run_id)?;
            emit(a.output.as_deref(), &run.to_tsv())?;
        }
        Command::Eval(a) => {
            let run = RankedRun::read(&a.run)?;
            let gold = parse_dataset(&a.gold, a.format)?;
            let opts = EvalOptions {
                k_list: a.k_list.unwrap_or_else(|| DEFAULT_K_LIST.to_vec()),
                skip_empty_topics: a.skip_empty_topics,
            };
            println!("{}", evaluate(&run, &gold, &opts)?.to_json());
        }
        Command::Sweep(a) => {
            let mut cfg = ExperimentConfig::load(&a.config)?;
            if let Some(dir) = a.output_dir {
                cfg.output_dir = dir;
            }
            if let Some(head) = a.seed {
                let n = cfg.seeds.len().max(1) as u64;
                cfg.seeds = (head..head + n).collect();
            }
            eprintln!("seeds={:?}", cfg.seeds);
            let report = run_experiment(&cfg, a.workers)?;
            print!("{}", render_report(&report, ReportFormat::Markdown));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
