//! The component pool: preprocessors and predictors with declared
//! hyperparameter grids and input contracts.

mod contract;
pub(crate) mod linalg;
mod predictors;
mod preprocess;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::characteristic::{Characteristic, CharacteristicSet};
use crate::dataset::Dataset;
use crate::limits::{Deadline, ExecutionLimits, TimedOut};

use contract::{ClassKinds, FeatureRules};
pub use predictors::{Prediction, PredictiveModel};
pub use preprocess::{FittedTransform, Projection};

/// Categories of component, listed in the order they appear in a pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComponentKind {
    MissingValueHandler,
    OutlierRemover,
    Transformer,
    DimensionalityReducer,
    Sampler,
    Predictor,
    MetaPredictor,
}

impl ComponentKind {
    pub const PREPROCESSING: [ComponentKind; 5] = [
        ComponentKind::MissingValueHandler,
        ComponentKind::OutlierRemover,
        ComponentKind::Transformer,
        ComponentKind::DimensionalityReducer,
        ComponentKind::Sampler,
    ];

    /// Slot in the pipeline template; both predictor kinds share the last slot.
    pub fn template_position(self) -> usize {
        match self {
            ComponentKind::MissingValueHandler => 0,
            ComponentKind::OutlierRemover => 1,
            ComponentKind::Transformer => 2,
            ComponentKind::DimensionalityReducer => 3,
            ComponentKind::Sampler => 4,
            ComponentKind::Predictor | ComponentKind::MetaPredictor => 5,
        }
    }

    pub fn is_predictor(self) -> bool {
        matches!(self, ComponentKind::Predictor | ComponentKind::MetaPredictor)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HyperValue {
    Int(i64),
    Float(f64),
    Text(String),
}

impl fmt::Display for HyperValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HyperValue::Int(v) => write!(f, "{v}"),
            HyperValue::Float(v) => write!(f, "{v}"),
            HyperValue::Text(v) => f.write_str(v),
        }
    }
}

/// One point of a hyperparameter grid.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HyperSetting(pub BTreeMap<String, HyperValue>);

impl HyperSetting {
    pub fn get(&self, key: &str) -> Option<&HyperValue> {
        self.0.get(key)
    }

    fn int(&self, key: &str, default: i64) -> i64 {
        match self.get(key) {
            Some(HyperValue::Int(v)) => *v,
            Some(HyperValue::Float(v)) => *v as i64,
            _ => default,
        }
    }

    fn float(&self, key: &str, default: f64) -> f64 {
        match self.get(key) {
            Some(HyperValue::Int(v)) => *v as f64,
            Some(HyperValue::Float(v)) => *v,
            _ => default,
        }
    }

    fn text<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        match self.get(key) {
            Some(HyperValue::Text(v)) => v,
            _ => default,
        }
    }
}

impl fmt::Display for HyperSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(k, v)| format!("{k}={v}")).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// A pool entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSpec {
    pub id: String,
    pub kind: ComponentKind,
    /// Finite grid; the first setting is the default.
    pub hyperparams: Vec<HyperSetting>,
}

impl ComponentSpec {
    pub fn algorithm(&self) -> Option<Algorithm> {
        Algorithm::from_id(&self.id)
    }

    pub fn display_name(&self) -> &str {
        match self.algorithm() {
            Some(a) => a.display_name(),
            None => &self.id,
        }
    }

    pub fn default_setting(&self) -> HyperSetting {
        self.hyperparams.first().cloned().unwrap_or_default()
    }
}

/// The implemented algorithms, one per roster entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    ReplaceMissing,
    EmImputer,
    IqrClipper,
    Center,
    Standardize,
    Discretize,
    NominalToBinary,
    IndependentComponents,
    Pca,
    ClassBalancer,
    Resample,
    ZeroR,
    DecisionTree,
    NaiveBayes,
    Logistic,
    LinearRegression,
    Knn,
    Bagging,
}

struct Contract {
    classes: ClassKinds,
    features: FeatureRules,
    complete_class: bool,
    several_class_values: bool,
}

impl Contract {
    const fn new(classes: ClassKinds, features: FeatureRules) -> Contract {
        Contract { classes, features, complete_class: false, several_class_values: false }
    }

    fn check(&self, d: &Dataset) -> Result<(), FailureReason> {
        contract::require_class_kind(d, self.classes)?;
        if self.complete_class {
            contract::require_complete_class(d)?;
        }
        if self.several_class_values {
            contract::require_several_class_values(d)?;
        }
        contract::require_features(d, self.features)
    }

    fn rejected(&self) -> CharacteristicSet {
        let mut extra = Vec::new();
        if self.complete_class {
            extra.push(Characteristic::MissingClassValues);
        }
        if self.several_class_values {
            extra.push(Characteristic::UnaryClass);
        }
        contract::rejected_set(self.classes, self.features, &extra)
    }
}

const NO_STRING_CLASS: ClassKinds = ClassKinds { string: false, ..ClassKinds::ANY };
const NO_SYMBOL_CLASS: ClassKinds = ClassKinds { string: false, date: false, ..ClassKinds::ANY };
const NO_DATES: FeatureRules = FeatureRules { date: false, ..FeatureRules::ANY };

impl Algorithm {
    pub const ALL: [Algorithm; 18] = [
        Algorithm::ReplaceMissing,
        Algorithm::EmImputer,
        Algorithm::IqrClipper,
        Algorithm::Center,
        Algorithm::Standardize,
        Algorithm::Discretize,
        Algorithm::NominalToBinary,
        Algorithm::IndependentComponents,
        Algorithm::Pca,
        Algorithm::ClassBalancer,
        Algorithm::Resample,
        Algorithm::ZeroR,
        Algorithm::DecisionTree,
        Algorithm::NaiveBayes,
        Algorithm::Logistic,
        Algorithm::LinearRegression,
        Algorithm::Knn,
        Algorithm::Bagging,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Algorithm::ReplaceMissing => "replace-missing",
            Algorithm::EmImputer => "em-imputer",
            Algorithm::IqrClipper => "iqr-clipper",
            Algorithm::Center => "center",
            Algorithm::Standardize => "standardize",
            Algorithm::Discretize => "discretize",
            Algorithm::NominalToBinary => "nominal-to-binary",
            Algorithm::IndependentComponents => "independent-components",
            Algorithm::Pca => "pca",
            Algorithm::ClassBalancer => "class-balancer",
            Algorithm::Resample => "resample",
            Algorithm::ZeroR => "zero-r",
            Algorithm::DecisionTree => "decision-tree",
            Algorithm::NaiveBayes => "naive-bayes",
            Algorithm::Logistic => "logistic",
            Algorithm::LinearRegression => "linear-regression",
            Algorithm::Knn => "knn",
            Algorithm::Bagging => "bagging",
        }
    }

    pub fn from_id(id: &str) -> Option<Algorithm> {
        Algorithm::ALL.into_iter().find(|a| a.id() == id)
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Algorithm::ReplaceMissing => "ReplaceMissingValues",
            Algorithm::EmImputer => "EMImputation",
            Algorithm::IqrClipper => "InterquartileRange",
            Algorithm::Center => "Center",
            Algorithm::Standardize => "Standardize",
            Algorithm::Discretize => "Discretize",
            Algorithm::NominalToBinary => "NominalToBinary",
            Algorithm::IndependentComponents => "IndependentComponents",
            Algorithm::Pca => "PrincipalComponents",
            Algorithm::ClassBalancer => "ClassBalancer",
            Algorithm::Resample => "Resample",
            Algorithm::ZeroR => "ZeroR",
            Algorithm::DecisionTree => "J48",
            Algorithm::NaiveBayes => "NaiveBayes",
            Algorithm::Logistic => "Logistic",
            Algorithm::LinearRegression => "LinearRegression",
            Algorithm::Knn => "IBk",
            Algorithm::Bagging => "Bagging",
        }
    }

    pub fn kind(self) -> ComponentKind {
        use Algorithm::*;
        match self {
            ReplaceMissing | EmImputer => ComponentKind::MissingValueHandler,
            IqrClipper => ComponentKind::OutlierRemover,
            Center | Standardize | Discretize | NominalToBinary | IndependentComponents => ComponentKind::Transformer,
            Pca => ComponentKind::DimensionalityReducer,
            ClassBalancer | Resample => ComponentKind::Sampler,
            ZeroR | DecisionTree | NaiveBayes | Logistic | LinearRegression | Knn => ComponentKind::Predictor,
            Bagging => ComponentKind::MetaPredictor,
        }
    }

    fn contract(self) -> Contract {
        use Algorithm::*;
        let numeric_only = FeatureRules::NUMERIC_COMPLETE;
        match self {
            ReplaceMissing => Contract::new(ClassKinds::ANY, FeatureRules { empty_nominal: false, ..NO_DATES }),
            EmImputer => Contract::new(ClassKinds::NUMERIC, FeatureRules { nominal: false, ..NO_DATES }),
            IqrClipper | Center | Standardize | Discretize | Resample => {
                Contract::new(ClassKinds::ANY, FeatureRules::ANY)
            }
            NominalToBinary => Contract::new(ClassKinds::ANY, FeatureRules { empty_nominal: false, ..FeatureRules::ANY }),
            IndependentComponents | Pca => {
                Contract::new(ClassKinds::ANY, FeatureRules { empty_nominal: true, ..numeric_only })
            }
            ClassBalancer => Contract { complete_class: true, ..Contract::new(ClassKinds::NOMINAL, FeatureRules::ANY) },
            ZeroR => Contract::new(NO_STRING_CLASS, FeatureRules::ANY),
            DecisionTree | NaiveBayes | Bagging => Contract::new(ClassKinds::NOMINAL, NO_DATES),
            Logistic => Contract {
                several_class_values: true,
                ..Contract::new(ClassKinds::NOMINAL, FeatureRules { empty_nominal: true, ..numeric_only })
            },
            LinearRegression => Contract {
                complete_class: true,
                ..Contract::new(ClassKinds::NUMERIC, FeatureRules { empty_nominal: true, ..numeric_only })
            },
            Knn => Contract::new(NO_SYMBOL_CLASS, NO_DATES),
        }
    }

    /// Characteristics whose presence in the input makes this component fail.
    pub fn declared_rejections(self) -> CharacteristicSet {
        self.contract().rejected()
    }

    /// Checks the input contract without running the component.
    pub fn check_input(self, d: &Dataset) -> Result<(), FailureReason> {
        self.contract().check(d)
    }

    fn grid(self) -> Vec<HyperSetting> {
        fn one(pairs: &[(&str, HyperValue)]) -> HyperSetting {
            HyperSetting(pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect())
        }
        use Algorithm::*;
        use HyperValue::{Float, Int, Text};
        match self {
            ReplaceMissing => vec![
                one(&[("numeric_fill", Text("mean".into()))]),
                one(&[("numeric_fill", Text("median".into()))]),
            ],
            EmImputer => vec![one(&[("max_iterations", Int(5))]), one(&[("max_iterations", Int(20))])],
            IqrClipper => vec![one(&[("factor", Float(1.5))]), one(&[("factor", Float(3.0))])],
            Discretize => [3, 5, 10].iter().map(|&b| one(&[("bins", Int(b))])).collect(),
            Pca => vec![one(&[("variance_covered", Float(0.95))]), one(&[("variance_covered", Float(0.99))])],
            Resample => vec![one(&[("extra_percent", Int(50))]), one(&[("extra_percent", Int(100))])],
            DecisionTree => {
                let mut g = Vec::new();
                for depth in [4, 8] {
                    for leaf in [2, 5] {
                        g.push(one(&[("max_depth", Int(depth)), ("min_leaf", Int(leaf))]));
                    }
                }
                g
            }
            Logistic => vec![one(&[("l2", Float(0.01))]), one(&[("l2", Float(0.1))])],
            LinearRegression => vec![one(&[("ridge", Float(1e-8))]), one(&[("ridge", Float(1e-3))])],
            Knn => [1, 3, 5].iter().map(|&k| one(&[("k", Int(k))])).collect(),
            Bagging => {
                let mut g = Vec::new();
                for base in ["decision-tree", "naive-bayes"] {
                    for n in [10, 25] {
                        g.push(one(&[("base", Text(base.into())), ("n_estimators", Int(n))]));
                    }
                }
                g
            }
            Center | Standardize | NominalToBinary | IndependentComponents | ClassBalancer | ZeroR | NaiveBayes => {
                vec![HyperSetting::default()]
            }
        }
    }

    pub fn spec(self) -> ComponentSpec {
        ComponentSpec { id: self.id().to_string(), kind: self.kind(), hyperparams: self.grid() }
    }
}

/// Every implemented component with its grid.
pub fn pool_roster() -> Vec<ComponentSpec> {
    Algorithm::ALL.into_iter().map(Algorithm::spec).collect()
}

/// The roster as written to `pool.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolFile {
    pub schema_version: u32,
    pub components: Vec<ComponentSpec>,
}

impl PoolFile {
    pub fn current() -> Self {
        PoolFile { schema_version: 1, components: pool_roster() }
    }
}

/// Why a component execution failed.
#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FailureReason {
    #[error("incompatible input ({characteristic}): {detail}")]
    Incompatibility { characteristic: Characteristic, detail: String },
    #[error("execution timed out")]
    Timeout,
    #[error("internal error: {0}")]
    Internal(String),
}

impl From<TimedOut> for FailureReason {
    fn from(_: TimedOut) -> Self {
        FailureReason::Timeout
    }
}

/// Result of running one component on one dataset.
#[derive(Debug, Clone, PartialEq)]
pub enum ExecutionOutcome {
    TransformedDataset(Dataset),
    TrainedModel(PredictiveModel),
    Failure(FailureReason),
}

impl ExecutionOutcome {
    pub fn is_success(&self) -> bool {
        !matches!(self, ExecutionOutcome::Failure(_))
    }
}

/// A successfully fitted component.
#[derive(Debug, Clone, PartialEq)]
pub enum Fitted {
    Transform { transform: FittedTransform, output: Dataset },
    Model(PredictiveModel),
}

/// Runs `spec` with its default setting.
pub fn execute_component(spec: &ComponentSpec, d: &Dataset, limits: &ExecutionLimits) -> ExecutionOutcome {
    execute_with_setting(spec, &spec.default_setting(), d, limits)
}

pub fn execute_with_setting(
    spec: &ComponentSpec,
    setting: &HyperSetting,
    d: &Dataset,
    limits: &ExecutionLimits,
) -> ExecutionOutcome {
    let deadline = limits.start();
    let outcome = fit_component(spec, setting, d, &deadline, limits.seed).and_then(|f| {
        deadline.check()?;
        Ok(f)
    });
    match outcome {
        Ok(Fitted::Transform { output, .. }) => ExecutionOutcome::TransformedDataset(output),
        Ok(Fitted::Model(m)) => ExecutionOutcome::TrainedModel(m),
        Err(e) => ExecutionOutcome::Failure(e),
    }
}

/// Fits a component, checking its input contract first.
pub fn fit_component(
    spec: &ComponentSpec,
    setting: &HyperSetting,
    d: &Dataset,
    deadline: &Deadline,
    seed: u64,
) -> Result<Fitted, FailureReason> {
    let algorithm = spec
        .algorithm()
        .ok_or_else(|| FailureReason::Internal(format!("unknown component `{}`", spec.id)))?;
    algorithm.check_input(d)?;
    deadline.check()?;
    use Algorithm::*;
    let transform = |r: Result<(FittedTransform, Dataset), FailureReason>| {
        r.map(|(transform, output)| Fitted::Transform { transform, output })
    };
    let model = |r: Result<predictors::Model, FailureReason>| r.map(|m| Fitted::Model(PredictiveModel::new(&spec.id, m)));
    let usize_of = |key: &str, default: i64| setting.int(key, default).max(0) as usize;
    match algorithm {
        ReplaceMissing => transform(preprocess::fit_replace_missing(d, setting.text("numeric_fill", "mean") == "median")),
        EmImputer => transform(preprocess::fit_em_imputer(d, usize_of("max_iterations", 5), deadline)),
        IqrClipper => transform(preprocess::fit_iqr_clipper(d, setting.float("factor", 1.5))),
        Center => transform(preprocess::fit_affine(d, false)),
        Standardize => transform(preprocess::fit_affine(d, true)),
        Discretize => transform(preprocess::fit_discretize(d, usize_of("bins", 3))),
        NominalToBinary => transform(preprocess::fit_nominal_to_binary(d)),
        IndependentComponents => transform(preprocess::fit_projection(d, true, 1.0, seed, deadline)),
        Pca => transform(preprocess::fit_projection(d, false, setting.float("variance_covered", 0.95), seed, deadline)),
        ClassBalancer => transform(preprocess::fit_class_balancer(d, seed)),
        Resample => transform(preprocess::fit_resample(d, setting.float("extra_percent", 50.0), seed)),
        ZeroR => model(Ok(predictors::fit_zero_r(d))),
        DecisionTree => {
            model(predictors::fit_tree(d, usize_of("max_depth", 4), usize_of("min_leaf", 2), deadline))
        }
        NaiveBayes => model(predictors::fit_naive_bayes(d, deadline)),
        Logistic => model(predictors::fit_logistic(d, setting.float("l2", 0.01), 200, deadline)),
        LinearRegression => model(predictors::fit_linear(d, setting.float("ridge", 1e-8), deadline)),
        Knn => model(predictors::fit_knn(d, usize_of("k", 1), deadline)),
        Bagging => {
            let base = Algorithm::from_id(setting.text("base", "decision-tree"))
                .filter(|b| matches!(b, DecisionTree | NaiveBayes))
                .ok_or_else(|| FailureReason::Internal("bagging base must be decision-tree or naive-bayes".into()))?;
            base.check_input(d)?;
            let n = usize_of("n_estimators", 10);
            model(predictors::fit_bagging(d, n, seed, deadline, |sample, dl| match base {
                NaiveBayes => predictors::fit_naive_bayes(sample, dl),
                _ => predictors::fit_tree(sample, 4, 2, dl),
            }))
        }
    }
}

/// Looks a component up by id.
pub fn find_component<'a>(pool: &'a [ComponentSpec], id: &str) -> Option<&'a ComponentSpec> {
    pool.iter().find(|c| c.id == id)
}
