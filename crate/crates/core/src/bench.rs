//! Desk-scale experiment families: surrogate vs execution agreement, time
//! wasted on invalid pipelines, and the optimizer with and without the
//! surrogate filter. Every report has a JSON form and a CSV twin, plus a
//! self-consistency check.

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::BudgetClock;
use crate::dataset::{extract_token, Dataset};
use crate::knowledge::KnowledgeBase;
use crate::limits::ExecutionLimits;
use crate::optimizer::{optimize, InitRun, OptimizeError, OptimizerSettings, RunResult, TracePoint, TrialVerdict};
use crate::pipeline::{random_pipeline_with, GeneratorError, Pipeline};
use crate::pool::ComponentSpec;
use crate::surrogate::{evaluate_token, SurrogateError};
use crate::tmethod::{execute_pipeline, TMethodOutcome};

const TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("at least one pipeline is required")]
    NoPipelines,
    #[error("at least one seed is required")]
    NoSeeds,
    #[error("at least one dataset is required")]
    NoDatasets,
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error(transparent)]
    Surrogate(#[from] SurrogateError),
    #[error(transparent)]
    Optimize(#[from] OptimizeError),
    #[error("could not start worker threads: {0}")]
    Workers(String),
}

fn pool_of(jobs: usize) -> Result<rayon::ThreadPool, BenchError> {
    rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build().map_err(|e| BenchError::Workers(e.to_string()))
}

/// Mean, sample standard deviation, min and max.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub stddev: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Option<Summary> {
        if xs.is_empty() {
            return None;
        }
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = if n > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
        let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(Summary { n, mean, stddev: var.sqrt(), min, max })
    }

    fn close_to(&self, other: &Summary) -> bool {
        let near = |a: f64, b: f64| (a - b).abs() <= TOLERANCE * a.abs().max(1.0);
        self.n == other.n
            && near(self.mean, other.mean)
            && near(self.stddev, other.stddev)
            && near(self.min, other.min)
            && near(self.max, other.max)
    }
}

fn csv_text(write: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    write(&mut w).expect("writing to memory");
    String::from_utf8(w.into_inner().expect("flushing to memory")).expect("csv is utf-8")
}

fn secs(d: Duration) -> String {
    format!("{:.6}", d.as_secs_f64())
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

// ---------------------------------------------------------------------------
// agreement

/// One pipeline judged by both methods on one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineCheck {
    pub pipeline: String,
    pub avatar_valid: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub avatar_failing: Option<String>,
    /// Includes extracting the dataset's token.
    #[serde(with = "crate::serde_duration")]
    pub avatar_time: Duration,
    pub t_method_valid: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_method_failing: Option<String>,
    #[serde(with = "crate::serde_duration")]
    pub t_method_time: Duration,
    pub timeout: bool,
}

impl PipelineCheck {
    pub fn agrees(&self) -> bool {
        self.avatar_valid == self.t_method_valid
    }
}

pub fn check_pipeline(p: &Pipeline, d: &Dataset, kb: &KnowledgeBase, limits: &ExecutionLimits) -> Result<PipelineCheck, SurrogateError> {
    let started = Instant::now();
    let verdict = evaluate_token(p, extract_token(d), kb)?;
    let avatar_time = started.elapsed();
    let outcome = execute_pipeline(p, d, limits);
    let t_method_failing = match &outcome {
        TMethodOutcome::Valid { .. } => None,
        TMethodOutcome::Invalid { failing_component, .. } => Some(failing_component.clone()),
    };
    Ok(PipelineCheck {
        pipeline: p.to_string(),
        avatar_valid: verdict.valid,
        avatar_failing: verdict.failing_component,
        avatar_time,
        t_method_valid: outcome.is_valid(),
        t_method_failing,
        t_method_time: outcome.elapsed(),
        timeout: outcome.is_timeout(),
    })
}

/// The same `n` random pipelines for every dataset.
pub fn random_corpus(pool: &[ComponentSpec], n: usize, max_len: usize, seed: u64) -> Result<Vec<Pipeline>, GeneratorError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| random_pipeline_with(pool, max_len, &mut rng)).collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MethodTally {
    pub invalid: usize,
    pub valid: usize,
    #[serde(with = "crate::serde_duration")]
    pub invalid_time: Duration,
    #[serde(with = "crate::serde_duration")]
    pub valid_time: Duration,
}

impl MethodTally {
    fn add(&mut self, valid: bool, time: Duration) {
        if valid {
            self.valid += 1;
            self.valid_time += time;
        } else {
            self.invalid += 1;
            self.invalid_time += time;
        }
    }

    pub fn total_time(&self) -> Duration {
        self.invalid_time + self.valid_time
    }

    pub fn mean_time(&self) -> Duration {
        let n = (self.invalid + self.valid).max(1) as u32;
        self.total_time() / n
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetAgreement {
    pub dataset: String,
    pub cells: usize,
    pub n_pipelines: usize,
    pub avatar: MethodTally,
    pub t_method: MethodTally,
    pub agree: usize,
    /// Percentage of pipelines on which the verdicts match.
    pub agreement_pct: f64,
    pub disagreements: Vec<PipelineCheck>,
    pub records: Vec<PipelineCheck>,
}

impl DatasetAgreement {
    fn from_records(d: &Dataset, records: Vec<PipelineCheck>) -> Self {
        let (mut avatar, mut t_method) = (MethodTally::default(), MethodTally::default());
        for r in &records {
            avatar.add(r.avatar_valid, r.avatar_time);
            t_method.add(r.t_method_valid, r.t_method_time);
        }
        let disagreements: Vec<PipelineCheck> = records.iter().filter(|r| !r.agrees()).cloned().collect();
        let n = records.len();
        let agree = n - disagreements.len();
        DatasetAgreement {
            dataset: d.name().to_string(),
            cells: d.n_rows() * d.attributes().len(),
            n_pipelines: n,
            avatar,
            t_method,
            agree,
            agreement_pct: 100.0 * agree as f64 / n as f64,
            disagreements,
            records,
        }
    }

    /// Disagreements not caused by the execution running out of time.
    pub fn unexplained(&self) -> usize {
        self.disagreements.iter().filter(|r| !r.timeout).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub schema_version: u32,
    pub kind: String,
    pub seed: u64,
    pub n_pipelines: usize,
    pub max_len: usize,
    #[serde(with = "crate::serde_duration")]
    pub timeout: Duration,
    pub datasets: Vec<DatasetAgreement>,
}

#[allow(clippy::too_many_arguments)]
pub fn bench_agreement(
    pool: &[ComponentSpec],
    kb: &KnowledgeBase,
    datasets: &[Dataset],
    n_pipelines: usize,
    max_len: usize,
    limits: &ExecutionLimits,
    seed: u64,
    jobs: usize,
) -> Result<AgreementReport, BenchError> {
    if n_pipelines == 0 {
        return Err(BenchError::NoPipelines);
    }
    if datasets.is_empty() {
        return Err(BenchError::NoDatasets);
    }
    let corpus = random_corpus(pool, n_pipelines, max_len, seed)?;
    let workers = pool_of(jobs)?;
    let per_dataset = workers.install(|| {
        datasets
            .par_iter()
            .map(|d| {
                let records =
                    corpus.iter().map(|p| check_pipeline(p, d, kb, limits)).collect::<Result<Vec<_>, _>>()?;
                Ok(DatasetAgreement::from_records(d, records))
            })
            .collect::<Result<Vec<_>, BenchError>>()
    })?;
    Ok(AgreementReport {
        schema_version: 1,
        kind: "agreement".into(),
        seed,
        n_pipelines,
        max_len,
        timeout: limits.timeout(),
        datasets: per_dataset,
    })
}

impl AgreementReport {
    pub fn check(&self) -> Vec<String> {
        let mut problems = Vec::new();
        for d in &self.datasets {
            let name = &d.dataset;
            if d.records.len() != d.n_pipelines {
                problems.push(format!("{name}: {} records for {} pipelines", d.records.len(), d.n_pipelines));
            }
            for (label, t) in [("avatar", &d.avatar), ("t-method", &d.t_method)] {
                if t.valid + t.invalid != d.n_pipelines {
                    problems.push(format!("{name}: {label} counts sum to {}, not {}", t.valid + t.invalid, d.n_pipelines));
                }
            }
            if d.agree + d.disagreements.len() != d.n_pipelines {
                problems.push(format!("{name}: agreements and disagreements do not sum to {}", d.n_pipelines));
            }
            let pct = 100.0 * d.agree as f64 / d.n_pipelines.max(1) as f64;
            if (pct - d.agreement_pct).abs() > TOLERANCE {
                problems.push(format!("{name}: agreement {} but counts give {pct}", d.agreement_pct));
            }
        }
        problems
    }

    /// The report with every measured duration zeroed, which is what
    /// re-running with the same seed reproduces exactly.
    pub fn without_timings(&self) -> Self {
        let mut r = self.clone();
        for d in &mut r.datasets {
            for t in [&mut d.avatar, &mut d.t_method] {
                t.invalid_time = Duration::ZERO;
                t.valid_time = Duration::ZERO;
            }
            for rec in d.records.iter_mut().chain(d.disagreements.iter_mut()) {
                rec.avatar_time = Duration::ZERO;
                rec.t_method_time = Duration::ZERO;
            }
        }
        r
    }

    /// One row per dataset.
    pub fn to_csv(&self) -> String {
        csv_text(|w| {
            w.write_record([
                "dataset",
                "n_pipelines",
                "avatar_invalid",
                "avatar_valid",
                "avatar_invalid_time_s",
                "avatar_valid_time_s",
                "t_method_invalid",
                "t_method_valid",
                "t_method_invalid_time_s",
                "t_method_valid_time_s",
                "agree",
                "agreement_pct",
                "timeout_disagreements",
            ])?;
            for d in &self.datasets {
                w.write_record([
                    d.dataset.clone(),
                    d.n_pipelines.to_string(),
                    d.avatar.invalid.to_string(),
                    d.avatar.valid.to_string(),
                    secs(d.avatar.invalid_time),
                    secs(d.avatar.valid_time),
                    d.t_method.invalid.to_string(),
                    d.t_method.valid.to_string(),
                    secs(d.t_method.invalid_time),
                    secs(d.t_method.valid_time),
                    d.agree.to_string(),
                    format!("{:.4}", d.agreement_pct),
                    (d.disagreements.len() - d.unexplained()).to_string(),
                ])?;
            }
            Ok(())
        })
    }
}

/// One row per (dataset, pipeline).
pub fn checks_to_csv(rows: &[(String, PipelineCheck)]) -> String {
    csv_text(|w| {
        w.write_record([
            "dataset",
            "pipeline",
            "avatar_valid",
            "avatar_failing",
            "avatar_time_s",
            "t_method_valid",
            "t_method_failing",
            "t_method_time_s",
            "timeout",
        ])?;
        for (dataset, r) in rows {
            w.write_record([
                dataset.clone(),
                r.pipeline.clone(),
                r.avatar_valid.to_string(),
                opt(r.avatar_failing.clone()),
                secs(r.avatar_time),
                r.t_method_valid.to_string(),
                opt(r.t_method_failing.clone()),
                secs(r.t_method_time),
                r.timeout.to_string(),
            ])?;
        }
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// optimizer runs

/// How the optimizer runs of a bench are executed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    #[serde(with = "crate::serde_duration")]
    pub budget: Duration,
    #[serde(with = "crate::serde_duration")]
    pub trial_timeout: Duration,
    pub clock: BudgetClock,
    pub jobs: usize,
}

impl RunSettings {
    pub fn new(budget: Duration) -> Self {
        RunSettings { budget, trial_timeout: Duration::from_secs(5), clock: BudgetClock::Wall, jobs: 1 }
    }

    fn optimizer(&self, seed: u64, use_avatar: bool, init_count: usize) -> OptimizerSettings {
        let mut s = OptimizerSettings::new(self.budget, seed);
        s.trial_timeout = self.trial_timeout;
        s.clock = self.clock;
        s.use_avatar = use_avatar;
        s.init_count = init_count;
        s
    }
}

#[derive(Clone, Copy)]
struct Arm {
    use_avatar: bool,
    init_count: usize,
}

fn run_cells(
    pool: &[ComponentSpec],
    kb: &KnowledgeBase,
    datasets: &[Dataset],
    settings: &RunSettings,
    seeds: &[u64],
    arms: &[Arm],
) -> Result<Vec<RunResult>, BenchError> {
    let cells: Vec<(&Dataset, u64, Arm)> = datasets
        .iter()
        .flat_map(|d| seeds.iter().flat_map(move |&s| arms.iter().map(move |&a| (d, s, a))))
        .collect();
    let workers = pool_of(settings.jobs)?;
    workers.install(|| {
        cells
            .par_iter()
            .map(|(d, seed, arm)| {
                let s = settings.optimizer(*seed, arm.use_avatar, arm.init_count);
                log::debug!("optimizing {} seed {seed} avatar {} init {}", d.name(), arm.use_avatar, arm.init_count);
                Ok(optimize(d, pool, kb, &s)?)
            })
            .collect()
    })
}

// ---------------------------------------------------------------------------
// wasted time

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WastedRun {
    pub dataset: String,
    pub seed: u64,
    pub invalid: usize,
    pub valid: usize,
    #[serde(with = "crate::serde_duration")]
    pub invalid_time: Duration,
    #[serde(with = "crate::serde_duration")]
    pub valid_time: Duration,
    pub wasted_pct: f64,
}

pub fn wasted_pct(invalid_time: Duration, valid_time: Duration) -> f64 {
    let total = (invalid_time + valid_time).as_secs_f64();
    if total == 0.0 {
        0.0
    } else {
        100.0 * invalid_time.as_secs_f64() / total
    }
}

impl WastedRun {
    pub fn from_run(run: &RunResult) -> Self {
        let invalid_time = run.time(TrialVerdict::ExecutedInvalid);
        let valid_time = run.time(TrialVerdict::ExecutedValid);
        WastedRun {
            dataset: run.dataset.clone(),
            seed: run.seed,
            invalid: run.count(TrialVerdict::ExecutedInvalid),
            valid: run.count(TrialVerdict::ExecutedValid),
            invalid_time,
            valid_time,
            wasted_pct: wasted_pct(invalid_time, valid_time),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WastedSummary {
    pub dataset: String,
    pub invalid: Summary,
    pub valid: Summary,
    pub invalid_time: Summary,
    pub valid_time: Summary,
    pub wasted_pct: Summary,
}

impl WastedSummary {
    fn of(dataset: &str, runs: &[&WastedRun]) -> Option<Self> {
        let col = |f: &dyn Fn(&WastedRun) -> f64| Summary::of(&runs.iter().map(|r| f(r)).collect::<Vec<_>>());
        Some(WastedSummary {
            dataset: dataset.to_string(),
            invalid: col(&|r| r.invalid as f64)?,
            valid: col(&|r| r.valid as f64)?,
            invalid_time: col(&|r| r.invalid_time.as_secs_f64())?,
            valid_time: col(&|r| r.valid_time.as_secs_f64())?,
            wasted_pct: col(&|r| r.wasted_pct)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WastedTimeReport {
    pub schema_version: u32,
    pub kind: String,
    pub settings: RunSettings,
    pub seeds: Vec<u64>,
    pub runs: Vec<WastedRun>,
    pub datasets: Vec<WastedSummary>,
}

fn dataset_names<'a>(names: impl Iterator<Item = &'a str>) -> Vec<&'a str> {
    let mut out: Vec<&str> = Vec::new();
    for n in names {
        if !out.contains(&n) {
            out.push(n);
        }
    }
    out
}

fn wasted_summaries(runs: &[WastedRun]) -> Vec<WastedSummary> {
    dataset_names(runs.iter().map(|r| r.dataset.as_str()))
        .into_iter()
        .filter_map(|name| WastedSummary::of(name, &runs.iter().filter(|r| r.dataset == name).collect::<Vec<_>>()))
        .collect()
}

/// Optimizer runs without the filter, measuring time spent executing
/// pipelines that turn out invalid.
pub fn bench_wasted_time(
    pool: &[ComponentSpec],
    kb: &KnowledgeBase,
    datasets: &[Dataset],
    settings: &RunSettings,
    seeds: &[u64],
) -> Result<WastedTimeReport, BenchError> {
    if seeds.is_empty() {
        return Err(BenchError::NoSeeds);
    }
    if datasets.is_empty() {
        return Err(BenchError::NoDatasets);
    }
    let arms = [Arm { use_avatar: false, init_count: 1 }];
    let runs: Vec<WastedRun> = run_cells(pool, kb, datasets, settings, seeds, &arms)?.iter().map(WastedRun::from_run).collect();
    Ok(WastedTimeReport {
        schema_version: 1,
        kind: "wasted-time".into(),
        settings: *settings,
        seeds: seeds.to_vec(),
        datasets: wasted_summaries(&runs),
        runs,
    })
}

impl WastedTimeReport {
    pub fn check(&self) -> Vec<String> {
        let mut problems = Vec::new();
        for r in &self.runs {
            let pct = wasted_pct(r.invalid_time, r.valid_time);
            if (pct - r.wasted_pct).abs() > TOLERANCE {
                problems.push(format!("{} seed {}: wasted {} but times give {pct}", r.dataset, r.seed, r.wasted_pct));
            }
        }
        let expected = wasted_summaries(&self.runs);
        if expected.len() != self.datasets.len() {
            problems.push("per-dataset summaries do not match the runs".into());
        }
        for (a, b) in expected.iter().zip(&self.datasets) {
            let same = a.dataset == b.dataset
                && a.invalid.close_to(&b.invalid)
                && a.valid.close_to(&b.valid)
                && a.invalid_time.close_to(&b.invalid_time)
                && a.valid_time.close_to(&b.valid_time)
                && a.wasted_pct.close_to(&b.wasted_pct);
            if !same {
                problems.push(format!("{}: summary does not match its runs", b.dataset));
            }
        }
        problems
    }

    /// One row per run.
    pub fn to_csv(&self) -> String {
        csv_text(|w| {
            w.write_record(["dataset", "seed", "invalid", "valid", "invalid_time_s", "valid_time_s", "wasted_pct"])?;
            for r in &self.runs {
                w.write_record([
                    r.dataset.clone(),
                    r.seed.to_string(),
                    r.invalid.to_string(),
                    r.valid.to_string(),
                    secs(r.invalid_time),
                    secs(r.valid_time),
                    format!("{:.6}", r.wasted_pct),
                ])?;
            }
            Ok(())
        })
    }
}

// ---------------------------------------------------------------------------
// optimizer with and without the filter

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub dataset: String,
    pub seed: u64,
    pub use_avatar: bool,
    pub init_count: usize,
    /// Trials with a result, rejected ones included.
    pub evaluated: usize,
    pub executed_valid: usize,
    pub executed_invalid: usize,
    pub rejected: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_error: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_pipeline: Option<String>,
    /// Best error so far over all initialisations.
    pub trace: Vec<TracePoint>,
    pub inits: Vec<InitRun>,
}

impl RunSummary {
    pub fn from_run(run: &RunResult) -> Self {
        RunSummary {
            dataset: run.dataset.clone(),
            seed: run.seed,
            use_avatar: run.use_avatar,
            init_count: run.init_count,
            evaluated: run.evaluated(),
            executed_valid: run.count(TrialVerdict::ExecutedValid),
            executed_invalid: run.count(TrialVerdict::ExecutedInvalid),
            rejected: run.count(TrialVerdict::SurrogateRejected),
            best_error: run.best.as_ref().map(|b| b.error_rate),
            best_pipeline: run.best.as_ref().map(|b| b.pipeline.clone()),
            trace: run.trace.clone(),
            inits: run.inits.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmStats {
    pub use_avatar: bool,
    pub init_count: usize,
    pub runs: usize,
    /// Over the runs that found a valid pipeline.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<Summary>,
    pub evaluated: Summary,
    pub executed_valid: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetEffect {
    pub dataset: String,
    pub arms: Vec<ArmStats>,
}

impl DatasetEffect {
    pub fn arm(&self, use_avatar: bool, init_count: usize) -> Option<&ArmStats> {
        self.arms.iter().find(|a| a.use_avatar == use_avatar && a.init_count == init_count)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Lower,
    Equal,
    Higher,
}

impl Direction {
    fn of(a: f64, b: f64) -> Direction {
        if (a - b).abs() <= TOLERANCE {
            Direction::Equal
        } else if a < b {
            Direction::Lower
        } else {
            Direction::Higher
        }
    }
}

/// Best error of one versus five initial configurations, with the filter on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitRow {
    pub dataset: String,
    pub smac1: Summary,
    pub smac5: Summary,
    pub dif_mean: f64,
    pub dif_min: f64,
    /// Standard deviation of the five-init error relative to the one-init error.
    pub stddev: Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitComparison {
    pub datasets: Vec<InitRow>,
    pub stddev_lower: usize,
    pub stddev_equal: usize,
    pub stddev_higher: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectReport {
    pub schema_version: u32,
    pub kind: String,
    pub settings: RunSettings,
    pub seeds: Vec<u64>,
    pub init_count: usize,
    pub runs: Vec<RunSummary>,
    pub datasets: Vec<DatasetEffect>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init_comparison: Option<InitComparison>,
}

fn effect_stats(runs: &[RunSummary]) -> Vec<DatasetEffect> {
    dataset_names(runs.iter().map(|r| r.dataset.as_str()))
        .into_iter()
        .map(|name| {
            let mine: Vec<&RunSummary> = runs.iter().filter(|r| r.dataset == name).collect();
            let mut arms: Vec<(bool, usize)> = Vec::new();
            for r in &mine {
                if !arms.contains(&(r.use_avatar, r.init_count)) {
                    arms.push((r.use_avatar, r.init_count));
                }
            }
            let arms = arms
                .into_iter()
                .map(|(use_avatar, init_count)| {
                    let of: Vec<&&RunSummary> =
                        mine.iter().filter(|r| r.use_avatar == use_avatar && r.init_count == init_count).collect();
                    let col = |f: &dyn Fn(&RunSummary) -> f64| {
                        Summary::of(&of.iter().map(|r| f(r)).collect::<Vec<_>>()).expect("each arm has a run")
                    };
                    ArmStats {
                        use_avatar,
                        init_count,
                        runs: of.len(),
                        error: Summary::of(&of.iter().filter_map(|r| r.best_error).collect::<Vec<_>>()),
                        evaluated: col(&|r| r.evaluated as f64),
                        executed_valid: col(&|r| r.executed_valid as f64),
                    }
                })
                .collect();
            DatasetEffect { dataset: name.to_string(), arms }
        })
        .collect()
}

fn init_comparison(stats: &[DatasetEffect]) -> Option<InitComparison> {
    let datasets: Vec<InitRow> = stats
        .iter()
        .filter_map(|d| {
            let smac1 = d.arm(true, 1)?.error?;
            let smac5 = d.arm(true, 5)?.error?;
            Some(InitRow {
                dataset: d.dataset.clone(),
                smac1,
                smac5,
                dif_mean: smac5.mean - smac1.mean,
                dif_min: smac5.min - smac1.min,
                stddev: Direction::of(smac5.stddev, smac1.stddev),
            })
        })
        .collect();
    if datasets.is_empty() {
        return None;
    }
    let count = |dir| datasets.iter().filter(|r| r.stddev == dir).count();
    Some(InitComparison {
        stddev_lower: count(Direction::Lower),
        stddev_equal: count(Direction::Equal),
        stddev_higher: count(Direction::Higher),
        datasets,
    })
}

/// Paired runs with identical seeds, filter off and on, at `init_count`
/// initialisations. With five, a one-init filtered arm is added so the two
/// initialisation schemes can be compared.
pub fn bench_avatar_effect(
    pool: &[ComponentSpec],
    kb: &KnowledgeBase,
    datasets: &[Dataset],
    settings: &RunSettings,
    seeds: &[u64],
    init_count: usize,
) -> Result<EffectReport, BenchError> {
    if seeds.is_empty() {
        return Err(BenchError::NoSeeds);
    }
    if datasets.is_empty() {
        return Err(BenchError::NoDatasets);
    }
    let mut arms = vec![Arm { use_avatar: false, init_count }, Arm { use_avatar: true, init_count }];
    if init_count != 1 {
        arms.push(Arm { use_avatar: true, init_count: 1 });
    }
    let runs: Vec<RunSummary> = run_cells(pool, kb, datasets, settings, seeds, &arms)?.iter().map(RunSummary::from_run).collect();
    let stats = effect_stats(&runs);
    Ok(EffectReport {
        schema_version: 1,
        kind: "avatar-effect".into(),
        settings: *settings,
        seeds: seeds.to_vec(),
        init_count,
        init_comparison: init_comparison(&stats),
        datasets: stats,
        runs,
    })
}

fn non_increasing(trace: &[TracePoint]) -> bool {
    trace.windows(2).all(|w| w[1].best_error <= w[0].best_error && w[1].timestamp >= w[0].timestamp)
}

impl EffectReport {
    pub fn check(&self) -> Vec<String> {
        let mut problems = Vec::new();
        for r in &self.runs {
            let at = format!("{} seed {} avatar {} init {}", r.dataset, r.seed, r.use_avatar, r.init_count);
            if r.executed_valid + r.executed_invalid + r.rejected != r.evaluated {
                problems.push(format!("{at}: verdict counts do not sum to {}", r.evaluated));
            }
            if !r.use_avatar && r.rejected > 0 {
                problems.push(format!("{at}: rejections without the filter"));
            }
            if r.inits.len() != r.init_count {
                problems.push(format!("{at}: {} init traces", r.inits.len()));
            }
            if !non_increasing(&r.trace) || !r.inits.iter().all(|i| non_increasing(&i.trace)) {
                problems.push(format!("{at}: a trace increases"));
            }
            if r.trace.last().map(|t| t.best_error) != r.best_error {
                problems.push(format!("{at}: trace does not end at the best error"));
            }
            for (k, i) in r.inits.iter().enumerate() {
                if let Some(b) = &i.best {
                    if r.best_error.is_none_or(|e| e > b.error_rate) {
                        problems.push(format!("{at}: init {k} beats the overall best"));
                    }
                }
            }
        }
        let expected = effect_stats(&self.runs);
        let same = expected.len() == self.datasets.len()
            && expected.iter().zip(&self.datasets).all(|(a, b)| {
                a.dataset == b.dataset
                    && a.arms.len() == b.arms.len()
                    && a.arms.iter().zip(&b.arms).all(|(x, y)| {
                        x.use_avatar == y.use_avatar
                            && x.init_count == y.init_count
                            && x.runs == y.runs
                            && x.evaluated.close_to(&y.evaluated)
                            && x.executed_valid.close_to(&y.executed_valid)
                            && match (&x.error, &y.error) {
                                (Some(p), Some(q)) => p.close_to(q),
                                (None, None) => true,
                                _ => false,
                            }
                    })
            });
        if !same {
            problems.push("per-dataset statistics do not match the runs".into());
        }
        problems
    }

    /// One row per run.
    pub fn to_csv(&self) -> String {
        csv_text(|w| {
            w.write_record([
                "dataset",
                "seed",
                "use_avatar",
                "init_count",
                "evaluated",
                "executed_valid",
                "executed_invalid",
                "rejected",
                "best_error",
                "best_pipeline",
            ])?;
            for r in &self.runs {
                w.write_record([
                    r.dataset.clone(),
                    r.seed.to_string(),
                    r.use_avatar.to_string(),
                    r.init_count.to_string(),
                    r.evaluated.to_string(),
                    r.executed_valid.to_string(),
                    r.executed_invalid.to_string(),
                    r.rejected.to_string(),
                    opt(r.best_error),
                    opt(r.best_pipeline.clone()),
                ])?;
            }
            Ok(())
        })
    }

    /// Convergence traces, one row per improvement. `init` is empty for the
    /// envelope over all initialisations.
    pub fn traces_csv(&self) -> String {
        csv_text(|w| {
            w.write_record(["dataset", "seed", "use_avatar", "init_count", "init", "time_s", "best_error"])?;
            for r in &self.runs {
                let traces = std::iter::once((String::new(), &r.trace))
                    .chain(r.inits.iter().enumerate().map(|(k, i)| (k.to_string(), &i.trace)));
                for (init, trace) in traces {
                    for t in trace {
                        w.write_record([
                            r.dataset.clone(),
                            r.seed.to_string(),
                            r.use_avatar.to_string(),
                            r.init_count.to_string(),
                            init.clone(),
                            secs(t.timestamp),
                            t.best_error.to_string(),
                        ])?;
                    }
                }
            }
            Ok(())
        })
    }
}

/// Consistency of a single run's log: verdicts against error rates, the
/// best against the trials, and monotone traces.
pub fn check_run(run: &RunResult) -> Vec<String> {
    let mut problems = Vec::new();
    for (i, t) in run.trials.iter().enumerate() {
        if t.error_rate.is_some() != (t.verdict == TrialVerdict::ExecutedValid) {
            problems.push(format!("trial {i}: error rate does not match verdict"));
        }
        if t.timestamp > run.budget {
            problems.push(format!("trial {i}: started after the budget"));
        }
        if t.init >= run.init_count {
            problems.push(format!("trial {i}: init {} out of range", t.init));
        }
    }
    if !run.use_avatar && run.count(TrialVerdict::SurrogateRejected) > 0 {
        problems.push("rejections without the filter".into());
    }
    let min = run.trials.iter().filter_map(|t| t.error_rate).fold(None, |m: Option<f64>, e| Some(m.map_or(e, |m| m.min(e))));
    if run.best.as_ref().map(|b| b.error_rate) != min {
        problems.push("best does not match the trials".into());
    }
    if run.inits.len() != run.init_count {
        problems.push(format!("{} init traces for init_count {}", run.inits.len(), run.init_count));
    }
    if !non_increasing(&run.trace) || !run.inits.iter().all(|i| non_increasing(&i.trace)) {
        problems.push("a trace increases".into());
    }
    problems
}

/// Trial log of a single optimizer run.
pub fn run_to_csv(run: &RunResult) -> String {
    csv_text(|w| {
        w.write_record(["init", "timestamp_s", "elapsed_s", "verdict", "error_rate", "pipeline", "failure"])?;
        for t in &run.trials {
            let verdict = match t.verdict {
                TrialVerdict::SurrogateRejected => "surrogate_rejected",
                TrialVerdict::ExecutedInvalid => "executed_invalid",
                TrialVerdict::ExecutedValid => "executed_valid",
            };
            w.write_record([
                t.init.to_string(),
                secs(t.timestamp),
                secs(t.elapsed),
                verdict.to_string(),
                opt(t.error_rate),
                t.pipeline.clone(),
                opt(t.failure.clone()),
            ])?;
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use std::sync::OnceLock;

    use super::*;
    use crate::bundled::{all_bundled, bundled};
    use crate::knowledge::learn_knowledge_base;
    use crate::pipeline::Pipeline;
    use crate::pool::pool_roster;
    use crate::synthetic::{generate_suite, DEFAULT_ROWS};

    fn kb() -> &'static KnowledgeBase {
        static KB: OnceLock<KnowledgeBase> = OnceLock::new();
        KB.get_or_init(|| {
            let suite = generate_suite(DEFAULT_ROWS, 0).unwrap();
            learn_knowledge_base(&pool_roster(), &suite, &ExecutionLimits::generous(0)).unwrap().kb
        })
    }

    #[test]
    fn summary_uses_the_sample_deviation() {
        let s = Summary::of(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]).unwrap();
        assert_eq!(s.mean, 5.0);
        assert!((s.stddev - (32.0f64 / 7.0).sqrt()).abs() < 1e-12);
        assert_eq!((s.min, s.max), (2.0, 9.0));
        assert_eq!(Summary::of(&[3.0]).unwrap().stddev, 0.0);
        assert!(Summary::of(&[]).is_none());
    }

    #[test]
    fn wasted_percentage_extremes() {
        let t = Duration::from_millis(40);
        assert_eq!(wasted_pct(Duration::ZERO, t), 0.0);
        assert_eq!(wasted_pct(t, Duration::ZERO), 100.0);
        assert_eq!(wasted_pct(Duration::ZERO, Duration::ZERO), 0.0);
        assert!((wasted_pct(t, 3 * t) - 25.0).abs() < 1e-12);
    }

    #[test]
    fn zero_pipelines_is_rejected() {
        let err = bench_agreement(&pool_roster(), kb(), &all_bundled(), 0, 6, &ExecutionLimits::generous(0), 0, 1);
        assert!(matches!(err, Err(BenchError::NoPipelines)));
    }

    #[test]
    fn a_single_compatible_predictor_agrees() {
        let pool = pool_roster();
        let d = bundled("numeric-clean").unwrap();
        let p = Pipeline::from_ids(&pool, &["decision-tree"]).unwrap();
        let r = DatasetAgreement::from_records(&d, vec![check_pipeline(&p, &d, kb(), &ExecutionLimits::generous(0)).unwrap()]);
        assert_eq!((r.agree, r.agreement_pct), (1, 100.0));
    }

    #[test]
    fn agreement_report_is_consistent_and_reproducible() {
        let pool = pool_roster();
        let datasets = all_bundled();
        let limits = ExecutionLimits::generous(4);
        let a = bench_agreement(&pool, kb(), &datasets, 40, 6, &limits, 4, 2).unwrap();
        assert!(a.check().is_empty(), "{:?}", a.check());
        assert_eq!(a.datasets.len(), 6);
        let b = bench_agreement(&pool, kb(), &datasets, 40, 6, &limits, 4, 1).unwrap();
        assert_eq!(a.without_timings(), b.without_timings());
        let text = serde_json::to_string(&a).unwrap();
        let back: AgreementReport = serde_json::from_str(&text).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), text);
        assert_eq!(a.to_csv().lines().count(), 7);

        let mut broken = a.clone();
        broken.datasets[0].agree -= 1;
        assert!(!broken.check().is_empty());
    }

    #[test]
    fn short_benches_are_consistent() {
        let pool = pool_roster();
        let datasets = vec![bundled("numeric-missing").unwrap(), bundled("pathological").unwrap()];
        let mut settings = RunSettings::new(Duration::from_millis(400));
        settings.clock = BudgetClock::ThreadCpu;
        let w = bench_wasted_time(&pool, kb(), &datasets, &settings, &[0, 1]).unwrap();
        assert!(w.check().is_empty(), "{:?}", w.check());
        assert_eq!((w.runs.len(), w.datasets.len()), (4, 2));
        assert_eq!(w.to_csv().lines().count(), 5);

        let e = bench_avatar_effect(&pool, kb(), &datasets, &settings, &[0, 1], 5).unwrap();
        assert!(e.check().is_empty(), "{:?}", e.check());
        assert_eq!(e.runs.len(), 12);
        assert!(e.runs.iter().filter(|r| r.init_count == 5).all(|r| r.inits.len() == 5));
        let cmp = e.init_comparison.as_ref().unwrap();
        assert_eq!(cmp.stddev_lower + cmp.stddev_equal + cmp.stddev_higher, cmp.datasets.len());
        assert!(e.traces_csv().lines().count() > 1);

        let mut broken = e.clone();
        broken.runs[0].evaluated += 1;
        assert!(!broken.check().is_empty());
        assert!(matches!(bench_wasted_time(&pool, kb(), &datasets, &settings, &[]), Err(BenchError::NoSeeds)));
    }

    #[test]
    fn run_check_catches_a_bad_best() {
        let pool = pool_roster();
        let mut settings = OptimizerSettings::new(Duration::from_millis(300), 3);
        settings.clock = BudgetClock::ThreadCpu;
        let run = optimize(&bundled("numeric-missing").unwrap(), &pool, kb(), &settings).unwrap();
        assert!(check_run(&run).is_empty(), "{:?}", check_run(&run));
        let mut broken = run.clone();
        broken.best = None;
        assert_eq!(check_run(&broken).len(), usize::from(run.best.is_some()));
        assert_eq!(run_to_csv(&run).lines().count(), run.trials.len() + 1);
    }
}
