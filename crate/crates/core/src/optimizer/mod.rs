//! Sequential model-based pipeline optimization with an optional surrogate
//! validity filter.
//!
//! After an initial uniform configuration, each round samples candidate
//! configurations, ranks them by a random-forest estimate of their error
//! (trained on the trials so far) and evaluates the best one not yet tried.
//! With the filter on, a candidate whose surrogate is invalid is logged as
//! rejected without being executed. Rejected and failed trials both reach
//! the model as crashes with error 1.

mod encoding;
mod forest;
mod score;

use std::collections::HashSet;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::characteristic::CharacteristicToken;
use crate::clock::{BudgetClock, Stopwatch};
use crate::dataset::{extract_token, Dataset};
use crate::knowledge::KnowledgeBase;
use crate::limits::ExecutionLimits;
use crate::pipeline::Pipeline;
use crate::pool::ComponentSpec;
use crate::surrogate::{is_valid, SurrogateError};

pub use encoding::{ConfigEncoding, ConfigSpace, DecodeError, SLOTS};
pub use forest::{Forest, ForestParams};
pub use score::{error_rate, score_on_split, score_pipeline, stratified_split, Split};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialVerdict {
    SurrogateRejected,
    ExecutedInvalid,
    ExecutedValid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    /// Which initialisation (sub-run) the trial belongs to.
    pub init: usize,
    pub config: ConfigEncoding,
    pub pipeline: String,
    pub verdict: TrialVerdict,
    pub error_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    /// Both durations are on the run's budget clock.
    #[serde(with = "crate::serde_duration")]
    pub elapsed: Duration,
    /// Since the start of the whole run.
    #[serde(with = "crate::serde_duration")]
    pub timestamp: Duration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Best {
    pub config: ConfigEncoding,
    pub pipeline: String,
    pub error_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    #[serde(with = "crate::serde_duration")]
    pub timestamp: Duration,
    pub best_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitRun {
    pub seed: u64,
    pub best: Option<Best>,
    pub trace: Vec<TracePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub schema_version: u32,
    pub dataset: String,
    pub seed: u64,
    #[serde(with = "crate::serde_duration")]
    pub budget: Duration,
    pub init_count: usize,
    pub use_avatar: bool,
    pub trials: Vec<TrialRecord>,
    pub best: Option<Best>,
    /// One entry per initialisation.
    pub inits: Vec<InitRun>,
    /// Best error so far over the whole run.
    pub trace: Vec<TracePoint>,
}

impl RunResult {
    /// Trials the optimizer received a result for, rejected ones included.
    pub fn evaluated(&self) -> usize {
        self.trials.len()
    }

    pub fn count(&self, verdict: TrialVerdict) -> usize {
        self.trials.iter().filter(|t| t.verdict == verdict).count()
    }

    /// Time spent per verdict.
    pub fn time(&self, verdict: TrialVerdict) -> Duration {
        self.trials.iter().filter(|t| t.verdict == verdict).map(|t| t.elapsed).sum()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizerSettings {
    #[serde(with = "crate::serde_duration")]
    pub budget: Duration,
    pub init_count: usize,
    pub use_avatar: bool,
    pub seed: u64,
    #[serde(with = "crate::serde_duration")]
    pub trial_timeout: Duration,
    pub candidates: usize,
    pub forest_trees: usize,
    #[serde(default)]
    pub clock: BudgetClock,
}

impl OptimizerSettings {
    pub fn new(budget: Duration, seed: u64) -> Self {
        OptimizerSettings {
            budget,
            init_count: 1,
            use_avatar: true,
            seed,
            trial_timeout: Duration::from_secs(5),
            candidates: 100,
            forest_trees: 10,
            clock: BudgetClock::Wall,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OptimizeError {
    #[error("the budget must be positive")]
    ZeroBudget,
    #[error("the per-trial timeout must be positive")]
    ZeroTrialTimeout,
    #[error("init_count must be 1 or 5, got {0}")]
    InitCount(usize),
    #[error("the pool has no predictor")]
    NoPredictor,
    #[error(transparent)]
    Surrogate(#[from] SurrogateError),
}

struct Context<'a> {
    space: ConfigSpace,
    split: Split,
    token: CharacteristicToken,
    kb: &'a KnowledgeBase,
    settings: &'a OptimizerSettings,
    run_start: Stopwatch,
}

struct SubRun {
    trials: Vec<TrialRecord>,
    best: Option<Best>,
    trace: Vec<TracePoint>,
}

pub fn optimize(
    d: &Dataset,
    pool: &[ComponentSpec],
    kb: &KnowledgeBase,
    settings: &OptimizerSettings,
) -> Result<RunResult, OptimizeError> {
    if settings.budget.is_zero() {
        return Err(OptimizeError::ZeroBudget);
    }
    if settings.trial_timeout.is_zero() {
        return Err(OptimizeError::ZeroTrialTimeout);
    }
    if settings.init_count != 1 && settings.init_count != 5 {
        return Err(OptimizeError::InitCount(settings.init_count));
    }
    let space = ConfigSpace::new(pool);
    if !space.has_predictor() {
        return Err(OptimizeError::NoPredictor);
    }
    let split = stratified_split(d, settings.seed);
    let token = extract_token(&split.train);
    let ctx = Context { space, split, token, kb, settings, run_start: Stopwatch::start(settings.clock) };

    let mut seeds = ChaCha8Rng::seed_from_u64(settings.seed);
    let slice = settings.budget / settings.init_count as u32;
    let mut trials = Vec::new();
    let mut inits = Vec::new();
    for k in 0..settings.init_count {
        let seed = if settings.init_count == 1 { settings.seed } else { seeds.gen() };
        let end = slice * (k as u32 + 1);
        let sub = sub_run(&ctx, k, seed, end)?;
        trials.extend(sub.trials);
        inits.push(InitRun { seed, best: sub.best, trace: sub.trace });
    }
    let mut best: Option<Best> = None;
    let mut trace = Vec::new();
    for t in &trials {
        if let Some(e) = t.error_rate {
            if best.as_ref().is_none_or(|b| e < b.error_rate) {
                best = Some(Best { config: t.config.clone(), pipeline: t.pipeline.clone(), error_rate: e });
                trace.push(TracePoint { timestamp: t.timestamp + t.elapsed, best_error: e });
            }
        }
    }
    Ok(RunResult {
        schema_version: 1,
        dataset: d.name().to_string(),
        seed: settings.seed,
        budget: settings.budget,
        init_count: settings.init_count,
        use_avatar: settings.use_avatar,
        trials,
        best,
        inits,
        trace,
    })
}

/// A sub-run that stops proposing once `end` (measured from the run start) has passed.
fn sub_run(ctx: &Context<'_>, init: usize, seed: u64, end: Duration) -> Result<SubRun, OptimizeError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let limits = ExecutionLimits::new(ctx.settings.trial_timeout, seed).expect("checked positive");
    let mut sub = SubRun { trials: Vec::new(), best: None, trace: Vec::new() };
    let mut xs: Vec<Vec<f64>> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    let mut tried: HashSet<ConfigEncoding> = HashSet::new();
    let params = ForestParams { trees: ctx.settings.forest_trees, ..ForestParams::default() };
    let out_of_time = || ctx.run_start.elapsed() >= end;

    while !out_of_time() {
        let config = if xs.is_empty() {
            ctx.space.sample(&mut rng)
        } else {
            let forest = Forest::fit(&xs, &ys, &params, rng.gen());
            let best = (0..ctx.settings.candidates)
                .map(|_| ctx.space.sample(&mut rng))
                .filter(|e| !tried.contains(e))
                .map(|e| (forest.predict(&ctx.space.features(&e)), e))
                .min_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
            match best {
                Some((_, e)) => e,
                None => continue,
            }
        };
        let timestamp = ctx.run_start.elapsed();
        if timestamp >= end {
            break;
        }
        let pipeline = ctx.space.decode(&config).expect("sampled encodings decode");
        let started = Stopwatch::start(ctx.settings.clock);
        let (verdict, error, failure) = if ctx.settings.use_avatar && !is_valid(&pipeline, ctx.token, ctx.kb)? {
            (TrialVerdict::SurrogateRejected, None, None)
        } else {
            match score_on_split(&pipeline, &ctx.split, &limits) {
                Ok(e) => (TrialVerdict::ExecutedValid, Some(e), None),
                Err(reason) => (TrialVerdict::ExecutedInvalid, None, Some(reason.to_string())),
            }
        };
        let elapsed = started.elapsed();
        // rejected and failed trials are reported to the model as crashes
        xs.push(ctx.space.features(&config));
        ys.push(error.unwrap_or(1.0));
        if let Some(e) = error {
            if sub.best.as_ref().is_none_or(|b| e < b.error_rate) {
                sub.best = Some(Best { config: config.clone(), pipeline: pipeline.to_string(), error_rate: e });
                sub.trace.push(TracePoint { timestamp: timestamp + elapsed, best_error: e });
            }
        }
        sub.trials.push(TrialRecord {
            init,
            config: config.clone(),
            pipeline: pipeline.to_string(),
            verdict,
            error_rate: error,
            failure,
            elapsed,
            timestamp,
        });
        tried.insert(config);
    }
    Ok(sub)
}

/// Executes up to `sample` surrogate-rejected configurations of a run and
/// returns the pipelines that nevertheless ran: gaps in the knowledge base.
pub fn audit_rejections(
    run: &RunResult,
    d: &Dataset,
    pool: &[ComponentSpec],
    limits: &ExecutionLimits,
    sample: usize,
) -> Vec<String> {
    let space = ConfigSpace::new(pool);
    let split = stratified_split(d, run.seed);
    let mut seen = HashSet::new();
    run.trials
        .iter()
        .filter(|t| t.verdict == TrialVerdict::SurrogateRejected && seen.insert(t.config.clone()))
        .take(sample)
        .filter_map(|t| {
            let p: Pipeline = space.decode(&t.config).ok()?;
            score_on_split(&p, &split, limits).ok().map(|_| p.to_string())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled::bundled;
    use crate::knowledge::learn_knowledge_base;
    use crate::pool::pool_roster;
    use crate::synthetic::{generate_suite, DEFAULT_ROWS};

    fn kb() -> KnowledgeBase {
        let suite = generate_suite(DEFAULT_ROWS, 0).unwrap();
        learn_knowledge_base(&pool_roster(), &suite, &ExecutionLimits::generous(0)).unwrap().kb
    }

    #[test]
    fn rejects_bad_settings() {
        let d = bundled("numeric-missing").unwrap();
        let pool = pool_roster();
        let kb = kb();
        let mut s = OptimizerSettings::new(Duration::ZERO, 0);
        assert_eq!(optimize(&d, &pool, &kb, &s).unwrap_err(), OptimizeError::ZeroBudget);
        s.budget = Duration::from_millis(10);
        s.init_count = 3;
        assert_eq!(optimize(&d, &pool, &kb, &s).unwrap_err(), OptimizeError::InitCount(3));
    }

    #[test]
    fn short_run_invariants() {
        let d = bundled("mixed-missing-class").unwrap();
        let pool = pool_roster();
        let kb = kb();
        for (use_avatar, init_count) in [(false, 1), (true, 1), (true, 5)] {
            let mut s = OptimizerSettings::new(Duration::from_millis(1500), 3);
            s.use_avatar = use_avatar;
            s.init_count = init_count;
            let run = optimize(&d, &pool, &kb, &s).unwrap();
            assert_eq!(run.inits.len(), init_count);
            assert!(run.trials.iter().all(|t| t.timestamp < s.budget));
            assert!(run.trials.iter().all(|t| t.error_rate.is_some() == (t.verdict == TrialVerdict::ExecutedValid)));
            let min = run.trials.iter().filter_map(|t| t.error_rate).fold(f64::INFINITY, f64::min);
            assert_eq!(run.best.as_ref().map(|b| b.error_rate), min.is_finite().then_some(min));
            assert!(run.trace.windows(2).all(|w| w[1].best_error <= w[0].best_error));
            if !use_avatar {
                assert_eq!(run.count(TrialVerdict::SurrogateRejected), 0);
            }
            for (k, init) in run.inits.iter().enumerate() {
                assert!(run.trials.iter().any(|t| t.init == k), "init {k} ran no trial");
                if let (Some(b), Some(i)) = (&run.best, &init.best) {
                    assert!(b.error_rate <= i.error_rate);
                }
            }
            assert!(audit_rejections(&run, &d, &pool, &ExecutionLimits::generous(3), 20).is_empty());
        }
    }
}
