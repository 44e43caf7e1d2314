//! Capability/effect records per component, their JSON form and the learner
//! that derives them from the synthetic suite.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::characteristic::{CapabilityVector, Characteristic, CharacteristicToken, EffectVector};
use crate::dataset::extract_token;
use crate::limits::ExecutionLimits;
use crate::pool::{execute_component, ComponentSpec, ExecutionOutcome, FailureReason};
use crate::synthetic::{suite_digest, SyntheticCase};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentKnowledge {
    pub component_id: String,
    pub component_name: String,
    pub capabilities: CapabilityVector,
    pub effects: EffectVector,
}

impl ComponentKnowledge {
    /// All-zero capabilities and effects.
    pub fn blank(component_id: impl Into<String>, component_name: impl Into<String>) -> Self {
        ComponentKnowledge {
            component_id: component_id.into(),
            component_name: component_name.into(),
            capabilities: CapabilityVector::none(),
            effects: EffectVector::neutral(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Provenance {
    pub seed: u64,
    pub suite_digest: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct KnowledgeBase {
    records: BTreeMap<String, ComponentKnowledge>,
    pub provenance: Option<Provenance>,
}

impl KnowledgeBase {
    pub fn new() -> Self {
        KnowledgeBase::default()
    }

    pub fn get(&self, component_id: &str) -> Option<&ComponentKnowledge> {
        self.records.get(component_id)
    }

    /// Inserts or replaces; returns the replaced record.
    pub fn insert(&mut self, record: ComponentKnowledge) -> Option<ComponentKnowledge> {
        self.records.insert(record.component_id.clone(), record)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records in component-id order.
    pub fn records(&self) -> impl Iterator<Item = &ComponentKnowledge> {
        self.records.values()
    }

    pub fn to_json(&self) -> String {
        let file = KbFile {
            schema_version: 1,
            provenance: self.provenance.clone(),
            components: self.records.values().map(Record::from).collect(),
        };
        serde_json::to_string_pretty(&file).expect("knowledge base serialises") + "\n"
    }

    /// Accepts the full file form or a bare list of records.
    pub fn from_json(text: &str) -> Result<Self, KbError> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(KbError::Json)?;
        let (provenance, records) = if value.is_array() {
            (None, serde_json::from_value::<Vec<Record>>(value).map_err(KbError::Json)?)
        } else {
            let file: KbFileIn = serde_json::from_value(value).map_err(KbError::Json)?;
            (file.provenance, file.components)
        };
        let mut kb = KnowledgeBase { records: BTreeMap::new(), provenance };
        for record in records {
            let knowledge = record.into_knowledge()?;
            let id = knowledge.component_id.clone();
            if kb.insert(knowledge).is_some() {
                return Err(KbError::DuplicateComponent(id));
            }
        }
        Ok(kb)
    }
}

#[derive(Debug, Error)]
pub enum KbError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed knowledge base: {0}")]
    Json(serde_json::Error),
    #[error("component `{component}`, {field}: unknown characteristic `{name}`")]
    UnknownCharacteristic { component: String, field: &'static str, name: String },
    #[error("component `{component}`, {field}: {characteristic} has value {value} outside {allowed}")]
    ValueOutOfRange { component: String, field: &'static str, characteristic: String, value: i64, allowed: &'static str },
    #[error("component `{component}`, {field}: {characteristic} listed twice")]
    DuplicateEntry { component: String, field: &'static str, characteristic: String },
    #[error("component `{0}` appears twice")]
    DuplicateComponent(String),
}

pub fn save_kb(kb: &KnowledgeBase, path: &Path) -> Result<(), KbError> {
    std::fs::write(path, kb.to_json()).map_err(|source| KbError::Io { path: path.to_path_buf(), source })
}

pub fn load_kb(path: &Path) -> Result<KnowledgeBase, KbError> {
    let text = std::fs::read_to_string(path).map_err(|source| KbError::Io { path: path.to_path_buf(), source })?;
    KnowledgeBase::from_json(&text)
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct KbFile {
    schema_version: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    provenance: Option<Provenance>,
    components: Vec<Record>,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct KbFileIn {
    #[serde(default)]
    provenance: Option<Provenance>,
    components: Vec<Record>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct Record {
    component_id: String,
    component_name: String,
    #[serde(default)]
    list_of_capabilities: Vec<Entry>,
    #[serde(default)]
    list_of_effects: Vec<Entry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Entry {
    #[serde(rename = "mLComponentCapability")]
    characteristic: String,
    value: i64,
}

impl From<&ComponentKnowledge> for Record {
    fn from(k: &ComponentKnowledge) -> Self {
        let entries = |value: &dyn Fn(Characteristic) -> i64| {
            Characteristic::ALL.iter().map(|&c| Entry { characteristic: c.name().to_string(), value: value(c) }).collect()
        };
        Record {
            component_id: k.component_id.clone(),
            component_name: k.component_name.clone(),
            list_of_capabilities: entries(&|c| i64::from(k.capabilities.value(c))),
            list_of_effects: entries(&|c| i64::from(k.effects.get(c))),
        }
    }
}

impl Record {
    /// Absent characteristics default to 0.
    fn into_knowledge(self) -> Result<ComponentKnowledge, KbError> {
        let mut k = ComponentKnowledge::blank(self.component_id, self.component_name);
        let id = k.component_id.clone();
        let parse = |entries: &[Entry], field: &'static str, range: (i64, i64), allowed: &'static str| {
            let mut seen = Vec::new();
            let mut out = Vec::new();
            for e in entries {
                let c = Characteristic::from_name(&e.characteristic).ok_or_else(|| KbError::UnknownCharacteristic {
                    component: id.clone(),
                    field,
                    name: e.characteristic.clone(),
                })?;
                if seen.contains(&c) {
                    return Err(KbError::DuplicateEntry { component: id.clone(), field, characteristic: e.characteristic.clone() });
                }
                seen.push(c);
                if e.value < range.0 || e.value > range.1 {
                    return Err(KbError::ValueOutOfRange {
                        component: id.clone(),
                        field,
                        characteristic: e.characteristic.clone(),
                        value: e.value,
                        allowed,
                    });
                }
                out.push((c, e.value));
            }
            Ok(out)
        };
        for (c, v) in parse(&self.list_of_capabilities, "listOfCapabilities", (0, 1), "{0, 1}")? {
            k.capabilities.set(c, v == 1);
        }
        for (c, v) in parse(&self.list_of_effects, "listOfEffects", (-1, 1), "{-1, 0, 1}")? {
            k.effects.set(c, v as i8).expect("range checked");
        }
        Ok(k)
    }
}

/// Union by component id; records of `extension` win. Returns the ids that collided.
pub fn merge_kb(base: &KnowledgeBase, extension: &KnowledgeBase) -> (KnowledgeBase, Vec<String>) {
    let mut merged = base.clone();
    let mut collisions = Vec::new();
    for record in extension.records() {
        if merged.insert(record.clone()).is_some() {
            collisions.push(record.component_id.clone());
        }
    }
    merged.provenance = if base.is_empty() {
        extension.provenance.clone()
    } else if extension.is_empty() || base.provenance == extension.provenance {
        base.provenance.clone()
    } else {
        None
    };
    (merged, collisions)
}

/// One (component, case) execution made while learning.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Observation {
    pub component_id: String,
    pub case: String,
    pub input: CharacteristicToken,
    /// Output token for preprocessors that succeeded.
    pub output: Option<CharacteristicToken>,
    pub failure: Option<FailureReason>,
}

impl Observation {
    pub fn succeeded(&self) -> bool {
        self.failure.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "warning", rename_all = "snake_case")]
pub enum KbWarning {
    /// The component failed on every case and keeps all-zero capabilities.
    NeverSucceeded { component_id: String },
    /// A later case disagreed with the effect kept from an earlier one.
    EffectConflict { component_id: String, characteristic: Characteristic, kept: i8, observed: i8, case: String },
}

#[derive(Debug, Clone)]
pub struct LearnReport {
    pub kb: KnowledgeBase,
    pub observations: Vec<Observation>,
    pub warnings: Vec<KbWarning>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LearnError {
    #[error("the component pool is empty")]
    EmptyPool,
    #[error("the synthetic suite is empty")]
    EmptySuite,
}

/// Runs every component on every case (suite order) and derives its record.
pub fn learn_knowledge_base(
    pool: &[ComponentSpec],
    suite: &[SyntheticCase],
    limits: &ExecutionLimits,
) -> Result<LearnReport, LearnError> {
    if pool.is_empty() {
        return Err(LearnError::EmptyPool);
    }
    if suite.is_empty() {
        return Err(LearnError::EmptySuite);
    }
    let mut kb = KnowledgeBase::new();
    let mut observations = Vec::new();
    let mut warnings = Vec::new();
    for spec in pool {
        let mut record = ComponentKnowledge::blank(&spec.id, spec.display_name());
        let mut any_success = false;
        for case in suite {
            let input = extract_token(&case.dataset);
            let (output, failure) = match execute_component(spec, &case.dataset, limits) {
                ExecutionOutcome::TransformedDataset(out) => (Some(extract_token(&out)), None),
                ExecutionOutcome::TrainedModel(_) => (None, None),
                ExecutionOutcome::Failure(reason) => (None, Some(reason)),
            };
            if failure.is_none() {
                any_success = true;
                for c in input.active().iter() {
                    record.capabilities.set(c, true);
                }
                if spec.kind.is_predictor() {
                    record.effects.set(Characteristic::PredictiveModel, 1).expect("in range");
                }
                if let Some(out) = output {
                    for c in Characteristic::ALL {
                        let observed = out.value(c) as i8 - input.value(c) as i8;
                        let kept = record.effects.get(c);
                        if kept == 0 {
                            record.effects.set(c, observed).expect("token difference is in range");
                        } else if observed != 0 && observed != kept {
                            let w = KbWarning::EffectConflict {
                                component_id: spec.id.clone(),
                                characteristic: c,
                                kept,
                                observed,
                                case: case.name(),
                            };
                            log::warn!("{}", serde_json::to_string(&w).expect("warning serialises"));
                            warnings.push(w);
                        }
                    }
                }
            }
            observations.push(Observation { component_id: spec.id.clone(), case: case.name(), input, output, failure });
        }
        if !any_success {
            let w = KbWarning::NeverSucceeded { component_id: spec.id.clone() };
            log::warn!("{}", serde_json::to_string(&w).expect("warning serialises"));
            warnings.push(w);
        }
        kb.insert(record);
    }
    kb.provenance = Some(Provenance { seed: limits.seed, suite_digest: suite_digest(suite) });
    Ok(LearnReport { kb, observations, warnings })
}

/// Hex SHA-256 of a knowledge base's JSON form.
pub fn kb_digest(kb: &KnowledgeBase) -> String {
    hex::encode(Sha256::digest(kb.to_json().as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use Characteristic as C;

    const LISTING: &str = r#"[{
        "componentId" : "weka.filters.unsupervised.attribute.EMImputation",
        "componentName" : "EMImputation",
        "listOfCapabilities" : [
            { "mLComponentCapability" : "NOMINAL_CLASS", "value" : 0 },
            { "mLComponentCapability" : "NUMERIC_CLASS", "value" : 1 },
            { "mLComponentCapability" : "MISSING_VALUES", "value" : 1 },
            { "mLComponentCapability" : "NOMINAL_ATTRIBUTES", "value" : 0 },
            { "mLComponentCapability" : "NUMERIC_ATTRIBUTES", "value" : 1 }
        ],
        "listOfEffects" : [
            { "mLComponentCapability" : "NOMINAL_CLASS", "value" : 0 },
            { "mLComponentCapability" : "NUMERIC_CLASS", "value" : 0 },
            { "mLComponentCapability" : "MISSING_VALUES", "value" : -1 },
            { "mLComponentCapability" : "NOMINAL_ATTRIBUTES", "value" : 0 },
            { "mLComponentCapability" : "NUMERIC_ATTRIBUTES", "value" : 0 }
        ]
    }]"#;

    #[test]
    fn loads_a_truncated_listing_fragment() {
        let kb = KnowledgeBase::from_json(LISTING).unwrap();
        let r = kb.get("weka.filters.unsupervised.attribute.EMImputation").unwrap();
        assert_eq!(r.component_name, "EMImputation");
        assert!(r.capabilities.get(C::MissingValues));
        assert!(!r.capabilities.get(C::DateClass));
        assert_eq!(r.effects.get(C::MissingValues), -1);
        assert_eq!(r.effects.get(C::UnaryClass), 0);
    }

    #[test]
    fn round_trip_and_json_field_names() {
        let kb = KnowledgeBase::from_json(LISTING).unwrap();
        let text = kb.to_json();
        for field in ["componentId", "componentName", "listOfCapabilities", "listOfEffects", "mLComponentCapability", "value"] {
            assert!(text.contains(&format!("\"{field}\"")), "{field}");
        }
        assert_eq!(KnowledgeBase::from_json(&text).unwrap(), kb);
    }

    #[test]
    fn rejects_out_of_range_and_unknown_entries() {
        let bad = LISTING.replacen(r#""NUMERIC_CLASS", "value" : 1"#, r#""NUMERIC_CLASS", "value" : 2"#, 1);
        let err = KnowledgeBase::from_json(&bad).unwrap_err();
        assert!(matches!(err, KbError::ValueOutOfRange { field: "listOfCapabilities", value: 2, .. }), "{err}");
        assert!(err.to_string().contains("NUMERIC_CLASS"));

        let bad = LISTING.replacen("NOMINAL_CLASS", "PURPLE_CLASS", 1);
        assert!(matches!(KnowledgeBase::from_json(&bad), Err(KbError::UnknownCharacteristic { .. })));

        let bad = LISTING.replacen(r#""MISSING_VALUES", "value" : -1"#, r#""MISSING_VALUES", "value" : -2"#, 1);
        assert!(matches!(KnowledgeBase::from_json(&bad), Err(KbError::ValueOutOfRange { field: "listOfEffects", .. })));
    }

    fn record(id: &str, cap: C) -> ComponentKnowledge {
        let mut r = ComponentKnowledge::blank(id, id);
        r.capabilities.set(cap, true);
        r
    }

    #[test]
    fn structural_errors_name_the_field() {
        let err = KnowledgeBase::from_json(r#"[{"componentName": "x"}]"#).unwrap_err();
        assert!(err.to_string().contains("componentId"), "{err}");
    }

    #[test]
    fn learned_imputer_record_matches_the_listing() {
        let pool = crate::pool::pool_roster();
        let suite = crate::synthetic::generate_suite(crate::synthetic::DEFAULT_ROWS, 0).unwrap();
        let report = learn_knowledge_base(&pool, &suite, &ExecutionLimits::generous(0)).unwrap();
        let r = report.kb.get("em-imputer").unwrap();
        for (c, v) in [
            (C::NumericClass, 1),
            (C::MissingValues, 1),
            (C::NumericAttributes, 1),
            (C::NominalClass, 0),
            (C::NominalAttributes, 0),
        ] {
            assert_eq!(r.capabilities.value(c), v, "{c}");
        }
        for c in Characteristic::ALL {
            assert_eq!(r.effects.get(c), if c == C::MissingValues { -1 } else { 0 }, "{c}");
        }
        assert_eq!(report.kb.get("zero-r").unwrap().effects.get(C::PredictiveModel), 1);
    }

    #[test]
    fn merge_rules() {
        let mut a = KnowledgeBase::new();
        a.insert(record("x", C::NumericClass));
        a.insert(record("y", C::NumericClass));
        let mut b = KnowledgeBase::new();
        b.insert(record("z", C::NominalClass));
        let (m, collisions) = merge_kb(&a, &b);
        assert_eq!(m.len(), 3);
        assert!(collisions.is_empty());

        let mut c = KnowledgeBase::new();
        c.insert(record("y", C::DateClass));
        let (m, collisions) = merge_kb(&a, &c);
        assert_eq!(collisions, vec!["y".to_string()]);
        assert!(m.get("y").unwrap().capabilities.get(C::DateClass));

        let (m, _) = merge_kb(&KnowledgeBase::new(), &a);
        assert_eq!(m, a);
    }
}
