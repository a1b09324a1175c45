//! The `egp` command line: detect constructs, export attempts, evaluate
//! against annotations, score essays, tune thresholds and export level
//! distributions.
//!
//! Exit codes: 0 success, 2 input or schema error, 3 LLM endpoint error,
//! 4 undefined evaluation result.

pub mod commands;
pub mod config;
pub mod detections;
pub mod failure;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{Engine, Mode, RunConfig, ThresholdSpec};
use crate::failure::Failure;

#[derive(Debug, Parser)]
#[command(
    name = "egp",
    version,
    about = "Grammar construct attempts and proficiency scoring"
)]
pub struct Cli {
    #[command(flatten)]
    pub opts: Options,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Detect constructs in every sentence pair and write detections.csv.
    Detect,
    /// Apply thresholds and export attempts grouped by category.
    Classify,
    /// Compare detections with attempt annotations.
    Evaluate,
    /// Score essays and correlate with their CEFR bands.
    Score,
    /// Grid-search per-level thresholds by cross-validated SRC.
    Tune,
    /// Export cumulative level distributions and per-essay AUCs.
    Analyze,
    /// Inspect or clear the LLM response cache.
    Cache {
        #[command(subcommand)]
        action: CacheAction,
    },
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum CacheAction {
    Stats,
    Clear,
}

#[derive(Debug, Default, Args)]
pub struct Options {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// EGP catalog CSV.
    #[arg(long, global = true)]
    pub catalog: Option<PathBuf>,
    /// Sentence-pair JSONL.
    #[arg(long, global = true)]
    pub corpus: Option<PathBuf>,
    /// Attempt annotations JSONL.
    #[arg(long, global = true)]
    pub annotations: Option<PathBuf>,
    /// Essay metadata CSV (essay_id, cefr, prompt_id).
    #[arg(long, global = true)]
    pub meta: Option<PathBuf>,
    /// Detection table to read [default: <out>/detections.csv].
    #[arg(long, global = true)]
    pub detections: Option<PathBuf>,
    /// Rule file; repeatable. Overrides built-in rules with the same id.
    #[arg(long = "rules", global = true)]
    pub rules: Vec<PathBuf>,
    #[arg(long, value_enum, global = true)]
    pub engine: Option<Engine>,
    #[arg(long, value_enum, global = true)]
    pub mode: Option<Mode>,
    /// One threshold, six comma-separated thresholds (A1..C2), or a tuning.json.
    #[arg(long, global = true)]
    pub thresholds: Option<ThresholdSpec>,
    /// Candidate thresholds for tuning, comma-separated.
    #[arg(long, value_delimiter = ',', global = true)]
    pub candidates: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub folds: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Tune on one correlation over all held-out essays.
    #[arg(long, global = true)]
    pub pooled: bool,
    /// Divide successful-mode scores by the number of general attempts.
    #[arg(long, global = true)]
    pub general_denominator: bool,
    /// Output directory [default: .].
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Chat-completions endpoint base URL.
    #[arg(long, global = true)]
    pub base_url: Option<String>,
    #[arg(long, global = true)]
    pub model: Option<String>,
    #[arg(long, global = true)]
    pub max_in_flight: Option<usize>,
    /// Request timeout in seconds.
    #[arg(long, global = true)]
    pub timeout: Option<f64>,
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub top_logprobs: Option<u32>,
}

impl Options {
    /// The configuration file, if any, overlaid with the flags.
    pub fn resolve(&self) -> Result<RunConfig, Failure> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        fn set<T: Clone>(dst: &mut Option<T>, src: &Option<T>) {
            if src.is_some() {
                dst.clone_from(src);
            }
        }
        set(&mut cfg.catalog, &self.catalog);
        set(&mut cfg.corpus, &self.corpus);
        set(&mut cfg.annotations, &self.annotations);
        set(&mut cfg.meta, &self.meta);
        set(&mut cfg.detections, &self.detections);
        set(&mut cfg.out, &self.out);
        set(&mut cfg.engine, &self.engine);
        set(&mut cfg.mode, &self.mode);
        set(&mut cfg.thresholds, &self.thresholds);
        if !self.rules.is_empty() {
            cfg.rules.clone_from(&self.rules);
        }
        set(&mut cfg.tuning.candidates, &self.candidates);
        set(&mut cfg.tuning.folds, &self.folds);
        set(&mut cfg.tuning.seed, &self.seed);
        cfg.tuning.pooled |= self.pooled;
        cfg.tuning.general_denominator |= self.general_denominator;
        set(&mut cfg.llm.base_url, &self.base_url);
        set(&mut cfg.llm.model, &self.model);
        set(&mut cfg.llm.max_in_flight, &self.max_in_flight);
        set(&mut cfg.llm.timeout_secs, &self.timeout);
        set(&mut cfg.llm.cache_dir, &self.cache_dir);
        set(&mut cfg.llm.top_logprobs, &self.top_logprobs);
        Ok(cfg)
    }
}

pub fn execute(cli: &Cli) -> Result<(), Failure> {
    let cfg = cli.opts.resolve()?;
    if matches!(cfg.engine(), Engine::Llm | Engine::RulesThenLlm)
        && matches!(cli.command, Command::Detect)
    {
        cfg.llm_config()?;
    }
    match &cli.command {
        Command::Detect => commands::detect(&cfg),
        Command::Classify => commands::classify(&cfg),
        Command::Evaluate => commands::evaluate(&cfg),
        Command::Score => commands::score(&cfg),
        Command::Tune => commands::tune(&cfg),
        Command::Analyze => commands::analyze(&cfg),
        Command::Cache { action } => commands::cache(&cfg, matches!(action, CacheAction::Clear)),
    }
}

/// Parse `args`, run the command and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {f}");
            f.exit_code()
        }
    }
}
