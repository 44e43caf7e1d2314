use std::path::PathBuf;

use avatar::clock::BudgetClock;
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::config::Span;
use crate::logging::LogFormat;

/// Judge machine-learning pipelines by firing a learned surrogate instead of
/// running them, and measure what that buys an optimizer.
#[derive(Debug, Parser)]
#[command(name = "avatar", version)]
pub struct Cli {
    /// Seed for every random choice the command makes [default: 0]
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// TOML or JSON file of option defaults
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Log format on stderr [default: text]
    #[arg(long, global = true, value_enum)]
    pub log: Option<LogFormat>,
    /// Worker threads for benchmarks [default: available cores]
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the synthetic learning suite as ARFF files plus a manifest
    GenSynthetic(GenSyntheticArgs),
    /// Learn capability and effect records by running the pool on the suite
    LearnKb(LearnKbArgs),
    /// Judge one pipeline on one dataset
    Eval(EvalArgs),
    /// Random pipelines on one dataset, judged by both the surrogate and execution
    RandomBench(RandomBenchArgs),
    /// Surrogate against execution over several datasets
    BenchAgreement(BenchAgreementArgs),
    /// Time the unfiltered optimizer spends executing invalid pipelines
    BenchWasted(BenchWastedArgs),
    /// The optimizer with and without the surrogate filter, paired by seed
    BenchEffect(BenchEffectArgs),
    /// Search for a good pipeline within a time budget
    Optimize(OptimizeArgs),
    /// Re-check a saved report or run and print it as JSON or CSV
    Report(ReportArgs),
    /// Write the component pool as JSON, a starting point for `learn-kb --pool`
    DumpPool(DumpPoolArgs),
}

pub const COMMANDS: [&str; 10] = [
    "gen-synthetic",
    "learn-kb",
    "eval",
    "random-bench",
    "bench-agreement",
    "bench-wasted",
    "bench-effect",
    "optimize",
    "report",
    "dump-pool",
];

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::GenSynthetic(_) => "gen-synthetic",
            Command::LearnKb(_) => "learn-kb",
            Command::Eval(_) => "eval",
            Command::RandomBench(_) => "random-bench",
            Command::BenchAgreement(_) => "bench-agreement",
            Command::BenchWasted(_) => "bench-wasted",
            Command::BenchEffect(_) => "bench-effect",
            Command::Optimize(_) => "optimize",
            Command::Report(_) => "report",
            Command::DumpPool(_) => "dump-pool",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Toggle {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Clock {
    /// Elapsed real time
    Wall,
    /// CPU time of the thread running the optimizer
    ThreadCpu,
}

impl From<Clock> for BudgetClock {
    fn from(c: Clock) -> Self {
        match c {
            Clock::Wall => BudgetClock::Wall,
            Clock::ThreadCpu => BudgetClock::ThreadCpu,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
}

// Every option is optional here so that an unset flag falls through to the
// config file and then the default.

#[derive(Debug, Clone, Default, clap::Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct GenSyntheticArgs {
    /// Directory to write into
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Rows per case [default: 16]
    #[arg(long)]
    pub rows: Option<usize>,
}

#[derive(Debug, Clone, Default, clap::Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct LearnKbArgs {
    /// Pool JSON [default: the built-in pool]
    #[arg(long)]
    pub pool: Option<PathBuf>,
    /// Suite directory from `gen-synthetic` [default: generate in memory]
    #[arg(long)]
    pub suite: Option<PathBuf>,
    /// Rows per case when generating the suite [default: 16]
    #[arg(long)]
    pub rows: Option<usize>,
    /// Per-execution timeout [default: 2m]
    #[arg(long)]
    pub timeout: Option<Span>,
    /// Knowledge-base file to write
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write learner warnings here, one JSON object per line
    #[arg(long)]
    pub warnings: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, clap::Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SourceArgs {
    /// Knowledge base [default: learn one from the synthetic suite]
    #[arg(long)]
    pub kb: Option<PathBuf>,
    /// Pool JSON [default: the built-in pool]
    #[arg(long)]
    pub pool: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, clap::Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct EvalArgs {
    /// Pipeline JSON
    #[arg(long, conflicts_with = "steps")]
    pub pipeline: Option<PathBuf>,
    /// Comma-separated component ids, each at its default setting
    #[arg(long, value_delimiter = ',')]
    pub steps: Option<Vec<String>>,
    /// Dataset: an ARFF or CSV path, or `bundled:NAME`
    #[arg(long)]
    pub data: Option<String>,
    /// Also execute the pipeline and report that verdict
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub t_method: Option<bool>,
    /// Execution timeout when `--t-method` is set [default: 2m]
    #[arg(long)]
    pub timeout: Option<Span>,
    #[command(flatten)]
    #[serde(flatten)]
    pub source: SourceArgs,
}

#[derive(Debug, Clone, Default, clap::Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct CorpusArgs {
    /// Random pipelines to draw [default: 1000]
    #[arg(long)]
    pub n: Option<usize>,
    /// Longest pipeline drawn [default: 6]
    #[arg(long)]
    pub max_len: Option<usize>,
    /// Per-pipeline execution timeout [default: 5s]
    #[arg(long)]
    pub timeout: Option<Span>,
}

#[derive(Debug, Clone, Default, clap::Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct RandomBenchArgs {
    /// Dataset: an ARFF or CSV path, or `bundled:NAME`
    #[arg(long)]
    pub data: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub source: SourceArgs,
    /// Report JSON [default: stdout]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// One CSV row per pipeline
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, clap::Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct BenchAgreementArgs {
    /// Comma-separated datasets [default: every bundled dataset]
    #[arg(long, value_delimiter = ',')]
    pub data: Option<Vec<String>>,
    #[command(flatten)]
    #[serde(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub source: SourceArgs,
    /// Report JSON [default: stdout]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// One CSV row per dataset
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// One CSV row per (dataset, pipeline)
    #[arg(long)]
    pub records_csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, clap::Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct RunArgs {
    /// Optimization budget per run [default: 60s]
    #[arg(long)]
    pub budget: Option<Span>,
    /// Per-trial execution timeout [default: 5s]
    #[arg(long)]
    pub trial_timeout: Option<Span>,
    /// What the budget is measured on [default: wall]
    #[arg(long, value_enum)]
    pub clock: Option<Clock>,
}

#[derive(Debug, Clone, Default, clap::Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct BenchWastedArgs {
    /// Comma-separated datasets [default: every bundled dataset]
    #[arg(long, value_delimiter = ',')]
    pub data: Option<Vec<String>>,
    /// Comma-separated run seeds [default: five seeds from --seed]
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    #[command(flatten)]
    #[serde(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub source: SourceArgs,
    /// Report JSON [default: stdout]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// One CSV row per run
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, clap::Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct BenchEffectArgs {
    /// Comma-separated datasets [default: every bundled dataset]
    #[arg(long, value_delimiter = ',')]
    pub data: Option<Vec<String>>,
    /// Comma-separated run seeds [default: five seeds from --seed]
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Initialisations per run, 1 or 5 [default: 1]
    #[arg(long)]
    pub init: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub source: SourceArgs,
    /// Report JSON [default: stdout]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// One CSV row per run
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Best error against time for every run and initialisation
    #[arg(long)]
    pub traces_csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, clap::Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct OptimizeArgs {
    /// Dataset: an ARFF or CSV path, or `bundled:NAME`
    #[arg(long)]
    pub data: Option<String>,
    /// Initialisations sharing the budget, 1 or 5 [default: 1]
    #[arg(long)]
    pub init: Option<usize>,
    /// Reject surrogate-invalid pipelines without running them [default: on]
    #[arg(long, value_enum)]
    pub avatar: Option<Toggle>,
    /// Candidates scored by the model each round [default: 100]
    #[arg(long)]
    pub candidates: Option<usize>,
    /// Trees in the model's forest [default: 10]
    #[arg(long)]
    pub trees: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub source: SourceArgs,
    /// Run JSON with the full trial log [default: stdout]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Trial log as CSV
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, clap::Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ReportArgs {
    /// A report or run file written by another subcommand
    #[arg(long = "in")]
    #[serde(rename = "in")]
    pub input: Option<PathBuf>,
    /// Output format [default: json]
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Where to write [default: stdout]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, clap::Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct DumpPoolArgs {
    /// Where to write [default: stdout]
    #[arg(long)]
    pub out: Option<PathBuf>,
}
