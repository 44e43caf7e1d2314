use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use avatar::bench::{
    bench_agreement, bench_avatar_effect, bench_wasted_time, check_run, checks_to_csv, run_to_csv, AgreementReport,
    EffectReport, RunSettings, WastedTimeReport,
};
use avatar::bundled::{bundled, NAMES};
use avatar::dataset::{load_dataset, DataFormat, Dataset};
use avatar::knowledge::{kb_digest, learn_knowledge_base, load_kb, save_kb, KnowledgeBase};
use avatar::limits::ExecutionLimits;
use avatar::optimizer::{optimize, OptimizerSettings, RunResult, TrialVerdict};
use avatar::pipeline::{Pipeline, StepOrder};
use avatar::pool::{pool_roster, ComponentSpec, PoolFile};
use avatar::surrogate::evaluate_validity;
use avatar::synthetic::{generate_suite, read_suite, suite_digest, write_suite, DEFAULT_ROWS};
use avatar::tmethod::{execute_pipeline, TMethodOutcome};
use log::{info, warn};
use serde::Serialize;
use serde_json::{json, Value};

use crate::cli::*;
use crate::config::{layer, required, usage, ConfigFile, Span};

const LEARN_TIMEOUT: Duration = Duration::from_secs(120);

/// Resolved global options.
#[derive(Debug, Clone, Serialize)]
pub struct Globals {
    pub seed: u64,
    pub jobs: usize,
}

pub struct Run<'a> {
    pub globals: Globals,
    pub file: Option<&'a ConfigFile>,
}

/// What a command reports back: `false` means its consistency checks failed.
pub type Passed = bool;

impl Run<'_> {
    fn options<T: Serialize + serde::de::DeserializeOwned>(&self, command: &str, defaults: T, flags: &T) -> Result<T> {
        let section = self.file.and_then(|f| f.section(command));
        let options = layer(&defaults, section, flags, command)?;
        let echo = json!({
            "command": command,
            "config_file": self.file.map(|f| f.path.display().to_string()),
            "seed": self.globals.seed,
            "jobs": self.globals.jobs,
            "options": options,
        });
        eprintln!("{echo}");
        Ok(options)
    }

    pub fn dispatch(&self, command: &Command) -> Result<Passed> {
        let name = command.name();
        match command {
            Command::GenSynthetic(a) => self.gen_synthetic(self.options(name, GenSyntheticArgs::default_for(), a)?),
            Command::LearnKb(a) => self.learn_kb(self.options(name, LearnKbArgs::default_for(), a)?),
            Command::Eval(a) => self.eval(self.options(name, EvalArgs::default_for(), a)?),
            Command::RandomBench(a) => self.random_bench(self.options(name, RandomBenchArgs::default_for(), a)?),
            Command::BenchAgreement(a) => {
                self.bench_agreement(self.options(name, BenchAgreementArgs::default_for(), a)?)
            }
            Command::BenchWasted(a) => {
                let defaults = BenchWastedArgs::default_for(self.globals.seed);
                self.bench_wasted(self.options(name, defaults, a)?)
            }
            Command::BenchEffect(a) => {
                let defaults = BenchEffectArgs::default_for(self.globals.seed);
                self.bench_effect(self.options(name, defaults, a)?)
            }
            Command::Optimize(a) => self.optimize(self.options(name, OptimizeArgs::default_for(), a)?),
            Command::Report(a) => report(self.options(name, ReportArgs::default_for(), a)?),
            Command::DumpPool(a) => dump_pool(self.options(name, DumpPoolArgs::default(), a)?),
        }
    }

    fn gen_synthetic(&self, a: GenSyntheticArgs) -> Result<Passed> {
        let out = required(a.out, "out")?;
        let rows = a.rows.unwrap_or(DEFAULT_ROWS);
        let suite = generate_suite(rows, self.globals.seed).map_err(|e| usage(e.to_string()))?;
        let manifest = write_suite(&out, &suite, rows, self.globals.seed)?;
        info!("wrote {} cases to {}", manifest.cases.len(), out.display());
        println!("{}", json!({ "dir": out, "cases": manifest.cases.len(), "digest": manifest.digest }));
        Ok(true)
    }

    fn learn_kb(&self, a: LearnKbArgs) -> Result<Passed> {
        let out = required(a.out, "out")?;
        let pool = load_pool(a.pool.as_deref())?;
        let suite = match &a.suite {
            Some(dir) => read_suite(dir).with_context(|| format!("reading suite {}", dir.display()))?,
            None => generate_suite(a.rows.unwrap_or(DEFAULT_ROWS), self.globals.seed).map_err(|e| usage(e.to_string()))?,
        };
        let timeout = a.timeout.map_or(LEARN_TIMEOUT, |s| s.0);
        let limits = ExecutionLimits::new(timeout, self.globals.seed).map_err(|e| usage(e.to_string()))?;
        let report = learn_knowledge_base(&pool, &suite, &limits)?;
        save_kb(&report.kb, &out)?;
        if let Some(path) = &a.warnings {
            let lines: String =
                report.warnings.iter().map(|w| serde_json::to_string(w).expect("warnings serialise") + "\n").collect();
            std::fs::write(path, lines).with_context(|| format!("writing {}", path.display()))?;
        }
        info!(
            "learned {} components over {} cases in {} observations",
            pool.len(),
            suite.len(),
            report.observations.len()
        );
        let summary = json!({
            "kb": out,
            "components": pool.len(),
            "cases": suite.len(),
            "suite_digest": suite_digest(&suite),
            "kb_digest": kb_digest(&report.kb),
            "warnings": report.warnings.len(),
        });
        println!("{summary}");
        Ok(true)
    }

    fn eval(&self, a: EvalArgs) -> Result<Passed> {
        let data = load_data(&required(a.data, "data")?)?;
        let pool = load_pool(a.source.pool.as_deref())?;
        let pipeline = match (&a.pipeline, &a.steps) {
            (Some(path), None) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                Pipeline::from_json_with_order(&text, &pool, StepOrder::Free)?
            }
            (None, Some(steps)) => {
                let ids: Vec<&str> = steps.iter().map(|s| s.trim()).collect();
                Pipeline::from_ids_with_order(&pool, &ids, StepOrder::Free)?
            }
            _ => return Err(usage("give exactly one of --pipeline and --steps")),
        };
        if let Some((earlier, later)) = pipeline.first_out_of_order() {
            warn!("`{earlier}` before `{later}` breaks the usual preprocessing order");
        }
        let kb = self.kb(a.source.kb.as_deref(), &pool)?;
        let verdict = evaluate_validity(&pipeline, &data, &kb)?;
        let mut out = serde_json::to_value(&verdict)?;
        out["schema_version"] = 1.into();
        out["pipeline"] = pipeline.to_string().into();
        out["dataset"] = data.name().into();
        if a.t_method.unwrap_or(false) {
            let timeout = a.timeout.map_or(LEARN_TIMEOUT, |s| s.0);
            let limits = ExecutionLimits::new(timeout, self.globals.seed).map_err(|e| usage(e.to_string()))?;
            out["t_method"] = match execute_pipeline(&pipeline, &data, &limits) {
                TMethodOutcome::Valid { elapsed, .. } => json!({ "valid": true, "elapsed_s": elapsed.as_secs_f64() }),
                TMethodOutcome::Invalid { failing_component, position, reason, elapsed } => json!({
                    "valid": false,
                    "failing_component": failing_component,
                    "position": position,
                    "reason": reason.to_string(),
                    "elapsed_s": elapsed.as_secs_f64(),
                }),
            };
        }
        println!("{}", serde_json::to_string_pretty(&out)?);
        Ok(true)
    }

    fn agreement(
        &self,
        data: &[String],
        corpus: &CorpusArgs,
        source: &SourceArgs,
    ) -> Result<AgreementReport> {
        let datasets = data.iter().map(|d| load_data(d)).collect::<Result<Vec<_>>>()?;
        let pool = load_pool(source.pool.as_deref())?;
        let kb = self.kb(source.kb.as_deref(), &pool)?;
        let timeout = corpus.timeout.expect("defaulted").0;
        let limits = ExecutionLimits::new(timeout, self.globals.seed).map_err(|e| usage(e.to_string()))?;
        let n = corpus.n.expect("defaulted");
        let max_len = corpus.max_len.expect("defaulted");
        info!("judging {n} pipelines on {} datasets", datasets.len());
        Ok(bench_agreement(&pool, &kb, &datasets, n, max_len, &limits, self.globals.seed, self.globals.jobs)?)
    }

    fn random_bench(&self, a: RandomBenchArgs) -> Result<Passed> {
        let data = required(a.data, "data")?;
        let report = self.agreement(std::slice::from_ref(&data), &a.corpus, &a.source)?;
        if let Some(path) = &a.csv {
            write_text(Some(path), &records_csv(&report))?;
        }
        log_agreement(&report);
        finish(&report, report.check(), a.out.as_deref())
    }

    fn bench_agreement(&self, a: BenchAgreementArgs) -> Result<Passed> {
        let report = self.agreement(&a.data.expect("defaulted"), &a.corpus, &a.source)?;
        if let Some(path) = &a.csv {
            write_text(Some(path), &report.to_csv())?;
        }
        if let Some(path) = &a.records_csv {
            write_text(Some(path), &records_csv(&report))?;
        }
        log_agreement(&report);
        finish(&report, report.check(), a.out.as_deref())
    }

    fn run_settings(&self, r: &RunArgs) -> RunSettings {
        let mut s = RunSettings::new(r.budget.expect("defaulted").0);
        s.trial_timeout = r.trial_timeout.expect("defaulted").0;
        s.clock = r.clock.expect("defaulted").into();
        s.jobs = self.globals.jobs;
        s
    }

    fn bench_wasted(&self, a: BenchWastedArgs) -> Result<Passed> {
        let datasets = a.data.expect("defaulted").iter().map(|d| load_data(d)).collect::<Result<Vec<_>>>()?;
        let pool = load_pool(a.source.pool.as_deref())?;
        let kb = self.kb(a.source.kb.as_deref(), &pool)?;
        let seeds = a.seeds.expect("defaulted");
        let settings = self.run_settings(&a.run);
        info!("{} unfiltered runs of {:?}", datasets.len() * seeds.len(), settings.budget);
        let report: WastedTimeReport = bench_wasted_time(&pool, &kb, &datasets, &settings, &seeds)?;
        for d in &report.datasets {
            info!("{}: wasted {:.1}% on average", d.dataset, d.wasted_pct.mean);
        }
        if let Some(path) = &a.csv {
            write_text(Some(path), &report.to_csv())?;
        }
        finish(&report, report.check(), a.out.as_deref())
    }

    fn bench_effect(&self, a: BenchEffectArgs) -> Result<Passed> {
        let datasets = a.data.expect("defaulted").iter().map(|d| load_data(d)).collect::<Result<Vec<_>>>()?;
        let pool = load_pool(a.source.pool.as_deref())?;
        let kb = self.kb(a.source.kb.as_deref(), &pool)?;
        let seeds = a.seeds.expect("defaulted");
        let init = a.init.expect("defaulted");
        let settings = self.run_settings(&a.run);
        let report: EffectReport = bench_avatar_effect(&pool, &kb, &datasets, &settings, &seeds, init)?;
        if let Some(path) = &a.csv {
            write_text(Some(path), &report.to_csv())?;
        }
        if let Some(path) = &a.traces_csv {
            write_text(Some(path), &report.traces_csv())?;
        }
        finish(&report, report.check(), a.out.as_deref())
    }

    fn optimize(&self, a: OptimizeArgs) -> Result<Passed> {
        let data = load_data(&required(a.data, "data")?)?;
        let pool = load_pool(a.source.pool.as_deref())?;
        let kb = self.kb(a.source.kb.as_deref(), &pool)?;
        let mut s = OptimizerSettings::new(a.run.budget.expect("defaulted").0, self.globals.seed);
        s.trial_timeout = a.run.trial_timeout.expect("defaulted").0;
        s.clock = a.run.clock.expect("defaulted").into();
        s.init_count = a.init.expect("defaulted");
        s.use_avatar = a.avatar.expect("defaulted") == Toggle::On;
        s.candidates = a.candidates.expect("defaulted");
        s.forest_trees = a.trees.expect("defaulted");
        let run = optimize(&data, &pool, &kb, &s).map_err(|e| usage(e.to_string()))?;
        info!(
            "{} trials: {} executed valid, {} executed invalid, {} rejected unrun",
            run.evaluated(),
            run.count(TrialVerdict::ExecutedValid),
            run.count(TrialVerdict::ExecutedInvalid),
            run.count(TrialVerdict::SurrogateRejected)
        );
        match &run.best {
            Some(b) => info!("best error {:.4} by {}", b.error_rate, b.pipeline),
            None => warn!("no valid pipeline found within the budget"),
        }
        if let Some(path) = &a.csv {
            write_text(Some(path), &run_to_csv(&run))?;
        }
        finish(&run, check_run(&run), a.out.as_deref())
    }

    fn kb(&self, path: Option<&Path>, pool: &[ComponentSpec]) -> Result<KnowledgeBase> {
        if let Some(path) = path {
            let kb = load_kb(path).with_context(|| format!("loading {}", path.display()))?;
            if let Some(missing) = pool.iter().find(|c| kb.get(&c.id).is_none()) {
                bail!("{} has no record for `{}`", path.display(), missing.id);
            }
            return Ok(kb);
        }
        info!("no --kb given; learning one from the synthetic suite");
        let suite = generate_suite(DEFAULT_ROWS, self.globals.seed).map_err(|e| usage(e.to_string()))?;
        let limits = ExecutionLimits::new(LEARN_TIMEOUT, self.globals.seed).expect("positive");
        Ok(learn_knowledge_base(pool, &suite, &limits)?.kb)
    }
}

/// Defaults for every option that has one; the rest stay unset.
trait Defaults {
    fn default_for() -> Self;
}

fn all_bundled_names() -> Vec<String> {
    NAMES.iter().map(|n| format!("bundled:{n}")).collect()
}

fn corpus_defaults() -> CorpusArgs {
    CorpusArgs { n: Some(1000), max_len: Some(6), timeout: Some(Span(Duration::from_secs(5))) }
}

fn run_defaults() -> RunArgs {
    RunArgs {
        budget: Some(Span(Duration::from_secs(60))),
        trial_timeout: Some(Span(Duration::from_secs(5))),
        clock: Some(Clock::Wall),
    }
}

fn five_seeds(from: u64) -> Vec<u64> {
    (0..5).map(|i| from.wrapping_add(i)).collect()
}

impl Defaults for GenSyntheticArgs {
    fn default_for() -> Self {
        GenSyntheticArgs { rows: Some(DEFAULT_ROWS), ..Default::default() }
    }
}

impl Defaults for LearnKbArgs {
    fn default_for() -> Self {
        LearnKbArgs { rows: Some(DEFAULT_ROWS), timeout: Some(Span(LEARN_TIMEOUT)), ..Default::default() }
    }
}

impl Defaults for EvalArgs {
    fn default_for() -> Self {
        EvalArgs { t_method: Some(false), timeout: Some(Span(LEARN_TIMEOUT)), ..Default::default() }
    }
}

impl Defaults for RandomBenchArgs {
    fn default_for() -> Self {
        RandomBenchArgs { corpus: corpus_defaults(), ..Default::default() }
    }
}

impl Defaults for BenchAgreementArgs {
    fn default_for() -> Self {
        BenchAgreementArgs { data: Some(all_bundled_names()), corpus: corpus_defaults(), ..Default::default() }
    }
}

impl BenchWastedArgs {
    fn default_for(seed: u64) -> Self {
        BenchWastedArgs {
            data: Some(all_bundled_names()),
            seeds: Some(five_seeds(seed)),
            run: run_defaults(),
            ..Default::default()
        }
    }
}

impl BenchEffectArgs {
    fn default_for(seed: u64) -> Self {
        BenchEffectArgs {
            data: Some(all_bundled_names()),
            seeds: Some(five_seeds(seed)),
            init: Some(1),
            run: run_defaults(),
            ..Default::default()
        }
    }
}

impl Defaults for OptimizeArgs {
    fn default_for() -> Self {
        OptimizeArgs {
            init: Some(1),
            avatar: Some(Toggle::On),
            candidates: Some(100),
            trees: Some(10),
            run: run_defaults(),
            ..Default::default()
        }
    }
}

impl Defaults for ReportArgs {
    fn default_for() -> Self {
        ReportArgs { format: Some(Format::Json), ..Default::default() }
    }
}

/// `bundled:NAME` or a dataset file.
pub fn load_data(spec: &str) -> Result<Dataset> {
    if let Some(name) = spec.strip_prefix("bundled:") {
        return bundled(name)
            .ok_or_else(|| usage(format!("no bundled dataset `{name}`; choose from {}", NAMES.join(", "))));
    }
    let path = PathBuf::from(spec);
    let format = DataFormat::infer(&path);
    load_dataset(&path, &format).with_context(|| format!("loading {spec}"))
}

pub fn load_pool(path: Option<&Path>) -> Result<Vec<ComponentSpec>> {
    let Some(path) = path else { return Ok(pool_roster()) };
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: PoolFile = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if file.schema_version != 1 {
        bail!("{}: unsupported schema_version {}", path.display(), file.schema_version);
    }
    let mut seen = HashSet::new();
    for c in &file.components {
        if c.algorithm().is_none() {
            bail!("{}: no implementation for component `{}`", path.display(), c.id);
        }
        if c.hyperparams.is_empty() {
            bail!("{}: `{}` has an empty hyperparameter grid", path.display(), c.id);
        }
        if !seen.insert(c.id.as_str()) {
            bail!("{}: `{}` is listed twice", path.display(), c.id);
        }
    }
    if file.components.is_empty() {
        bail!("{}: the pool is empty", path.display());
    }
    Ok(file.components)
}

fn records_csv(report: &AgreementReport) -> String {
    let rows: Vec<_> =
        report.datasets.iter().flat_map(|d| d.records.iter().map(|r| (d.dataset.clone(), r.clone()))).collect();
    checks_to_csv(&rows)
}

fn log_agreement(report: &AgreementReport) {
    for d in &report.datasets {
        info!(
            "{}: {:.2}% agreement, {} disagreements ({} unexplained), surrogate {:?} vs execution {:?}",
            d.dataset,
            d.agreement_pct,
            d.disagreements.len(),
            d.unexplained(),
            d.avatar.total_time(),
            d.t_method.total_time()
        );
    }
}

fn write_text(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn finish<T: Serialize>(value: &T, problems: Vec<String>, out: Option<&Path>) -> Result<Passed> {
    write_text(out, &(serde_json::to_string_pretty(value)? + "\n"))?;
    for p in &problems {
        log::error!("consistency check failed: {p}");
    }
    Ok(problems.is_empty())
}

enum Saved {
    Agreement(AgreementReport),
    Wasted(WastedTimeReport),
    Effect(EffectReport),
    Run(RunResult),
}

impl Saved {
    fn parse(value: Value) -> Result<Saved> {
        let kind = value.get("kind").and_then(Value::as_str).map(str::to_owned);
        Ok(match kind.as_deref() {
            Some("agreement") => Saved::Agreement(serde_json::from_value(value)?),
            Some("wasted-time") => Saved::Wasted(serde_json::from_value(value)?),
            Some("avatar-effect") => Saved::Effect(serde_json::from_value(value)?),
            Some(other) => bail!("unknown report kind `{other}`"),
            None if value.get("trials").is_some() => Saved::Run(serde_json::from_value(value)?),
            None => bail!("not a report or run file"),
        })
    }

    fn check(&self) -> Vec<String> {
        match self {
            Saved::Agreement(r) => r.check(),
            Saved::Wasted(r) => r.check(),
            Saved::Effect(r) => r.check(),
            Saved::Run(r) => check_run(r),
        }
    }

    fn render(&self, format: Format) -> Result<String> {
        Ok(match (self, format) {
            (Saved::Agreement(r), Format::Json) => serde_json::to_string_pretty(r)? + "\n",
            (Saved::Wasted(r), Format::Json) => serde_json::to_string_pretty(r)? + "\n",
            (Saved::Effect(r), Format::Json) => serde_json::to_string_pretty(r)? + "\n",
            (Saved::Run(r), Format::Json) => serde_json::to_string_pretty(r)? + "\n",
            (Saved::Agreement(r), Format::Csv) => r.to_csv(),
            (Saved::Wasted(r), Format::Csv) => r.to_csv(),
            (Saved::Effect(r), Format::Csv) => r.to_csv(),
            (Saved::Run(r), Format::Csv) => run_to_csv(r),
        })
    }
}

fn report(a: ReportArgs) -> Result<Passed> {
    let input = required(a.input, "in")?;
    let text = std::fs::read_to_string(&input).with_context(|| format!("reading {}", input.display()))?;
    let value: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", input.display()))?;
    let saved = Saved::parse(value).with_context(|| format!("reading {}", input.display()))?;
    write_text(a.out.as_deref(), &saved.render(a.format.expect("defaulted"))?)?;
    let problems = saved.check();
    for p in &problems {
        log::error!("consistency check failed: {p}");
    }
    Ok(problems.is_empty())
}

fn dump_pool(a: DumpPoolArgs) -> Result<Passed> {
    write_text(a.out.as_deref(), &(serde_json::to_string_pretty(&PoolFile::current())? + "\n"))?;
    Ok(true)
}
