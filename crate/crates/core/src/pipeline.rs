//! Pipelines over the pool, their JSON form and the random generator.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pool::{find_component, ComponentKind, ComponentSpec, HyperSetting, HyperValue};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineStep {
    pub component: ComponentSpec,
    pub setting: HyperSetting,
}

impl PipelineStep {
    pub fn id(&self) -> &str {
        &self.component.id
    }
}

/// Preprocessors then one predictor. Pipelines built with [`Pipeline::new`]
/// keep the preprocessors in template order, each kind at most once.
#[derive(Debug, Clone, PartialEq)]
pub struct Pipeline {
    steps: Vec<PipelineStep>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PipelineError {
    #[error("a pipeline needs at least one component")]
    Empty,
    #[error("the last component `{0}` is not a predictor")]
    NoPredictorAtEnd(String),
    #[error("predictor `{0}` appears before the end of the pipeline")]
    PredictorNotLast(String),
    #[error("`{later}` may not follow `{earlier}`: preprocessing kinds follow a fixed order, each at most once")]
    OutOfOrder { earlier: String, later: String },
    #[error("unknown component `{0}`")]
    UnknownComponent(String),
    #[error("component `{id}` has no grid setting {setting}")]
    NotInGrid { id: String, setting: String },
    #[error("malformed pipeline file: {0}")]
    Json(String),
}

/// Whether preprocessors must follow the template.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOrder {
    Template,
    /// Any order, as long as the predictor comes last. Such pipelines can be
    /// judged but are never generated.
    Free,
}

impl Pipeline {
    pub fn new(steps: Vec<PipelineStep>) -> Result<Self, PipelineError> {
        Pipeline::with_order(steps, StepOrder::Template)
    }

    pub fn with_order(steps: Vec<PipelineStep>, order: StepOrder) -> Result<Self, PipelineError> {
        let last = steps.last().ok_or(PipelineError::Empty)?;
        if !last.component.kind.is_predictor() {
            return Err(PipelineError::NoPredictorAtEnd(last.component.id.clone()));
        }
        let pre = &steps[..steps.len() - 1];
        if let Some(p) = pre.iter().find(|s| s.component.kind.is_predictor()) {
            return Err(PipelineError::PredictorNotLast(p.component.id.clone()));
        }
        let p = Pipeline { steps };
        if order == StepOrder::Template {
            if let Some((earlier, later)) = p.first_out_of_order() {
                return Err(PipelineError::OutOfOrder { earlier: earlier.to_string(), later: later.to_string() });
            }
        }
        Ok(p)
    }

    /// The first adjacent pair of preprocessors not in template order.
    pub fn first_out_of_order(&self) -> Option<(&str, &str)> {
        let pre = &self.steps[..self.steps.len() - 1];
        pre.windows(2)
            .find(|w| w[0].component.kind.template_position() >= w[1].component.kind.template_position())
            .map(|w| (w[0].id(), w[1].id()))
    }

    pub fn follows_template(&self) -> bool {
        self.first_out_of_order().is_none()
    }

    /// Builds from ids with each component's default setting.
    pub fn from_ids(pool: &[ComponentSpec], ids: &[&str]) -> Result<Self, PipelineError> {
        Pipeline::from_ids_with_order(pool, ids, StepOrder::Template)
    }

    pub fn from_ids_with_order(pool: &[ComponentSpec], ids: &[&str], order: StepOrder) -> Result<Self, PipelineError> {
        let steps = ids
            .iter()
            .map(|id| {
                let spec = find_component(pool, id).ok_or_else(|| PipelineError::UnknownComponent(id.to_string()))?;
                Ok(PipelineStep { component: spec.clone(), setting: spec.default_setting() })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Pipeline::with_order(steps, order)
    }

    pub fn steps(&self) -> &[PipelineStep] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn ids(&self) -> Vec<&str> {
        self.steps.iter().map(PipelineStep::id).collect()
    }

    /// Prefix made of the first `k` preprocessors followed by the predictor.
    pub fn with_prefix(&self, k: usize) -> Pipeline {
        let n = self.steps.len() - 1;
        let mut steps: Vec<PipelineStep> = self.steps[..k.min(n)].to_vec();
        steps.push(self.steps[n].clone());
        Pipeline { steps }
    }

    pub fn to_file(&self) -> PipelineFile {
        PipelineFile {
            schema_version: 1,
            steps: self
                .steps
                .iter()
                .map(|s| StepRecord { component_id: s.component.id.clone(), hyperparams: s.setting.clone() })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("pipeline serialises") + "\n"
    }

    /// Accepts a [`PipelineFile`] or a bare list of steps. Settings must lie
    /// on the component's grid; an omitted setting means the default.
    pub fn from_json(text: &str, pool: &[ComponentSpec]) -> Result<Self, PipelineError> {
        Pipeline::from_json_with_order(text, pool, StepOrder::Template)
    }

    pub fn from_json_with_order(text: &str, pool: &[ComponentSpec], order: StepOrder) -> Result<Self, PipelineError> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| PipelineError::Json(e.to_string()))?;
        let records: Vec<StepRecordIn> = if value.is_array() {
            serde_json::from_value(value)
        } else {
            serde_json::from_value::<PipelineFileIn>(value).map(|f| f.steps)
        }
        .map_err(|e| PipelineError::Json(e.to_string()))?;
        let steps = records
            .into_iter()
            .map(|r| {
                let spec = find_component(pool, &r.component_id)
                    .ok_or_else(|| PipelineError::UnknownComponent(r.component_id.clone()))?;
                let setting = match r.hyperparams {
                    None => spec.default_setting(),
                    Some(s) => spec
                        .hyperparams
                        .iter()
                        .find(|g| same_setting(g, &s))
                        .cloned()
                        .ok_or_else(|| PipelineError::NotInGrid { id: spec.id.clone(), setting: s.to_string() })?,
                };
                Ok(PipelineStep { component: spec.clone(), setting })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Pipeline::with_order(steps, order)
    }
}

impl std::fmt::Display for Pipeline {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.ids().join(" -> "))
    }
}

fn same_value(a: &HyperValue, b: &HyperValue) -> bool {
    match (a, b) {
        (HyperValue::Text(x), HyperValue::Text(y)) => x == y,
        (HyperValue::Text(_), _) | (_, HyperValue::Text(_)) => false,
        _ => {
            let num = |v: &HyperValue| match v {
                HyperValue::Int(i) => *i as f64,
                HyperValue::Float(f) => *f,
                HyperValue::Text(_) => f64::NAN,
            };
            num(a) == num(b)
        }
    }
}

fn same_setting(a: &HyperSetting, b: &HyperSetting) -> bool {
    a.0.len() == b.0.len() && a.0.iter().all(|(k, v)| b.get(k).is_some_and(|w| same_value(v, w)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineFile {
    pub schema_version: u32,
    pub steps: Vec<StepRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub component_id: String,
    pub hyperparams: HyperSetting,
}

#[derive(Deserialize)]
struct PipelineFileIn {
    steps: Vec<StepRecordIn>,
}

#[derive(Deserialize)]
struct StepRecordIn {
    component_id: String,
    #[serde(default)]
    hyperparams: Option<HyperSetting>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GeneratorError {
    #[error("max_len must be at least 1")]
    ZeroLength,
    #[error("the pool has no predictor")]
    NoPredictor,
}

/// Draws the subset size uniformly in `0..max_len`, then that many distinct
/// preprocessing kinds, then a component and grid setting per kind, then a
/// predictor.
pub fn random_pipeline(pool: &[ComponentSpec], max_len: usize, seed: u64) -> Result<Pipeline, GeneratorError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_pipeline_with(pool, max_len, &mut rng)
}

pub fn random_pipeline_with(pool: &[ComponentSpec], max_len: usize, rng: &mut impl Rng) -> Result<Pipeline, GeneratorError> {
    if max_len == 0 {
        return Err(GeneratorError::ZeroLength);
    }
    let predictors: Vec<&ComponentSpec> = pool.iter().filter(|c| c.kind.is_predictor()).collect();
    if predictors.is_empty() {
        return Err(GeneratorError::NoPredictor);
    }
    let kinds: Vec<ComponentKind> =
        ComponentKind::PREPROCESSING.into_iter().filter(|k| pool.iter().any(|c| c.kind == *k)).collect();
    let size = rng.gen_range(0..max_len).min(kinds.len());
    let mut chosen: Vec<ComponentKind> = kinds.choose_multiple(rng, size).copied().collect();
    chosen.sort_by_key(|k| k.template_position());
    let mut steps = Vec::with_capacity(size + 1);
    let pick = |spec: &ComponentSpec, rng: &mut dyn rand::RngCore| {
        let setting = spec.hyperparams.choose(rng).cloned().unwrap_or_default();
        PipelineStep { component: spec.clone(), setting }
    };
    for kind in chosen {
        let candidates: Vec<&ComponentSpec> = pool.iter().filter(|c| c.kind == kind).collect();
        let spec = candidates.choose(rng).expect("kind has a component");
        steps.push(pick(spec, rng));
    }
    let predictor = predictors.choose(rng).expect("non-empty");
    steps.push(pick(predictor, rng));
    Ok(Pipeline::new(steps).expect("generated pipelines follow the template"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pool::pool_roster;

    #[test]
    fn invariants_are_enforced() {
        let pool = pool_roster();
        assert_eq!(Pipeline::from_ids(&pool, &[]), Err(PipelineError::Empty));
        assert!(matches!(Pipeline::from_ids(&pool, &["center"]), Err(PipelineError::NoPredictorAtEnd(_))));
        assert!(matches!(
            Pipeline::from_ids(&pool, &["zero-r", "knn"]),
            Err(PipelineError::PredictorNotLast(_))
        ));
        assert!(matches!(
            Pipeline::from_ids(&pool, &["pca", "replace-missing", "knn"]),
            Err(PipelineError::OutOfOrder { .. })
        ));
        assert!(matches!(
            Pipeline::from_ids(&pool, &["center", "standardize", "knn"]),
            Err(PipelineError::OutOfOrder { .. })
        ));
        assert!(Pipeline::from_ids(&pool, &["replace-missing", "independent-components", "decision-tree"]).is_ok());
    }

    #[test]
    fn json_round_trip_and_bare_list() {
        let pool = pool_roster();
        let p = random_pipeline(&pool, 6, 42).unwrap();
        assert_eq!(Pipeline::from_json(&p.to_json(), &pool).unwrap(), p);
        let bare = r#"[{"component_id": "iqr-clipper", "hyperparams": {"factor": 3}}, {"component_id": "zero-r"}]"#;
        let q = Pipeline::from_json(bare, &pool).unwrap();
        assert_eq!(q.steps()[0].setting.get("factor"), Some(&HyperValue::Float(3.0)));
        let off_grid = r#"[{"component_id": "knn", "hyperparams": {"k": 4}}]"#;
        assert!(matches!(Pipeline::from_json(off_grid, &pool), Err(PipelineError::NotInGrid { .. })));
    }

    #[test]
    fn generator_shapes() {
        let pool = pool_roster();
        assert_eq!(random_pipeline(&pool, 0, 1), Err(GeneratorError::ZeroLength));
        assert_eq!(random_pipeline(&pool[..2], 3, 1), Err(GeneratorError::NoPredictor));
        for seed in 0..50 {
            assert_eq!(random_pipeline(&pool, 1, seed).unwrap().len(), 1);
            assert_eq!(random_pipeline(&pool, 6, seed), random_pipeline(&pool, 6, seed));
        }
    }

    #[test]
    fn ten_thousand_draws_cover_every_length() {
        let pool = pool_roster();
        let mut seen = [false; 7];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10_000 {
            let p = random_pipeline_with(&pool, 6, &mut rng).unwrap();
            assert!(Pipeline::new(p.steps().to_vec()).is_ok());
            seen[p.len()] = true;
        }
        assert_eq!(seen, [false, true, true, true, true, true, true]);
    }
}
