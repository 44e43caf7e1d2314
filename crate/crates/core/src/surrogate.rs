//! Petri-net surrogates of pipelines and their evaluation by firing.
//!
//! A surrogate is a chain `start -> t1 -> inter_1 -> ... -> tn -> end`.
//! Each transition carries a component's capability and effect vectors and
//! the only token moving through the net is a characteristic token.

use serde::Serialize;
use thiserror::Error;

use crate::characteristic::{CapabilityVector, Characteristic, CharacteristicToken, EffectVector};
use crate::dataset::{extract_token, Dataset};
use crate::knowledge::{ComponentKnowledge, KnowledgeBase};
use crate::pipeline::Pipeline;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub component_id: String,
    pub capabilities: CapabilityVector,
    pub effects: EffectVector,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SurrogatePipeline {
    pub places: Vec<String>,
    pub transitions: Vec<Transition>,
    pub start_token: CharacteristicToken,
}

impl SurrogatePipeline {
    /// `(input place, transition, output place)` for each transition.
    pub fn arcs(&self) -> impl Iterator<Item = (&str, &Transition, &str)> {
        self.transitions.iter().enumerate().map(|(i, t)| (self.places[i].as_str(), t, self.places[i + 1].as_str()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SurrogateError {
    #[error("component `{0}` is not in the knowledge base")]
    UnknownComponent(String),
}

/// Result of firing one transition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Firing {
    /// Every active characteristic the component cannot consume.
    Invalid(Vec<Characteristic>),
    Out(CharacteristicToken),
}

pub fn fire(token: CharacteristicToken, capabilities: CapabilityVector, effects: EffectVector) -> Firing {
    let unsupported = token.active().difference(capabilities.supported());
    if unsupported.is_empty() {
        Firing::Out(effects.apply(token))
    } else {
        Firing::Invalid(unsupported.iter().collect())
    }
}

pub fn fire_transition(token: CharacteristicToken, knowledge: &ComponentKnowledge) -> Firing {
    fire(token, knowledge.capabilities, knowledge.effects)
}

fn place_names(n_transitions: usize) -> Vec<String> {
    let mut places = vec!["start".to_string()];
    places.extend((1..n_transitions).map(|i| format!("inter_{i}")));
    places.push("end".to_string());
    places
}

pub fn map_to_surrogate(p: &Pipeline, d: &Dataset, kb: &KnowledgeBase) -> Result<SurrogatePipeline, SurrogateError> {
    map_from_token(p, extract_token(d), kb)
}

pub fn map_from_token(
    p: &Pipeline,
    start_token: CharacteristicToken,
    kb: &KnowledgeBase,
) -> Result<SurrogatePipeline, SurrogateError> {
    let transitions = p
        .ids()
        .into_iter()
        .map(|id| {
            let k = kb.get(id).ok_or_else(|| SurrogateError::UnknownComponent(id.to_string()))?;
            Ok(Transition { component_id: id.to_string(), capabilities: k.capabilities, effects: k.effects })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SurrogatePipeline { places: place_names(transitions.len()), transitions, start_token })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidityVerdict {
    pub valid: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failing_component: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub failing_characteristics: Vec<Characteristic>,
    /// The start token followed by each token produced before any failure.
    pub tokens: Vec<CharacteristicToken>,
}

impl ValidityVerdict {
    /// Position of the failing transition.
    pub fn failing_position(&self) -> Option<usize> {
        (!self.valid).then(|| self.tokens.len() - 1)
    }
}

/// Fires left to right and stops at the first invalid transition.
pub fn fire_surrogate(s: &SurrogatePipeline) -> ValidityVerdict {
    let mut tokens = vec![s.start_token];
    for t in &s.transitions {
        match fire(*tokens.last().expect("start token"), t.capabilities, t.effects) {
            Firing::Out(next) => tokens.push(next),
            Firing::Invalid(failing) => {
                return ValidityVerdict {
                    valid: false,
                    failing_component: Some(t.component_id.clone()),
                    failing_characteristics: failing,
                    tokens,
                }
            }
        }
    }
    ValidityVerdict { valid: true, failing_component: None, failing_characteristics: Vec::new(), tokens }
}

pub fn evaluate_validity(p: &Pipeline, d: &Dataset, kb: &KnowledgeBase) -> Result<ValidityVerdict, SurrogateError> {
    Ok(fire_surrogate(&map_to_surrogate(p, d, kb)?))
}

/// Same verdict as [`evaluate_validity`] for a dataset whose token is known.
pub fn evaluate_token(
    p: &Pipeline,
    token: CharacteristicToken,
    kb: &KnowledgeBase,
) -> Result<ValidityVerdict, SurrogateError> {
    Ok(fire_surrogate(&map_from_token(p, token, kb)?))
}

/// Validity only, without building the surrogate or recording tokens.
pub fn is_valid(p: &Pipeline, token: CharacteristicToken, kb: &KnowledgeBase) -> Result<bool, SurrogateError> {
    let mut t = token;
    for id in p.ids() {
        let k = kb.get(id).ok_or_else(|| SurrogateError::UnknownComponent(id.to_string()))?;
        match fire_transition(t, k) {
            Firing::Out(next) => t = next,
            Firing::Invalid(_) => return Ok(false),
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pool::pool_roster;
    use Characteristic as C;

    fn knowledge(caps: &[C], effects: &[(C, i8)]) -> ComponentKnowledge {
        let mut k = ComponentKnowledge::blank("k", "k");
        for &c in caps {
            k.capabilities.set(c, true);
        }
        for &(c, v) in effects {
            k.effects.set(c, v).unwrap();
        }
        k
    }

    #[test]
    fn one_plus_minus_one_is_zero() {
        let token = CharacteristicToken::from_active([C::MissingValues, C::NumericAttributes]);
        let k = knowledge(&[C::MissingValues, C::NumericAttributes], &[(C::MissingValues, -1)]);
        let Firing::Out(out) = fire_transition(token, &k) else { panic!() };
        assert_eq!(out.value(C::MissingValues), 0);
        assert_eq!(out.value(C::NumericAttributes), 1);
    }

    #[test]
    fn missing_capability_is_invalid() {
        let token = CharacteristicToken::from_active([C::MissingClassValues, C::NominalClass]);
        let k = knowledge(&[C::NominalClass], &[]);
        assert_eq!(fire_transition(token, &k), Firing::Invalid(vec![C::MissingClassValues]));
    }

    #[test]
    fn clamp_floor_and_ceiling() {
        let token = CharacteristicToken::from_active([C::NumericAttributes]);
        let k = knowledge(&[C::NumericAttributes], &[(C::MissingClassValues, -1), (C::NumericAttributes, 1)]);
        let Firing::Out(out) = fire_transition(token, &k) else { panic!() };
        assert_eq!(out.value(C::MissingClassValues), 0);
        assert_eq!(out.value(C::NumericAttributes), 1);
    }

    #[test]
    fn reports_every_unsupported_characteristic() {
        let token = CharacteristicToken::from_active([C::MissingValues, C::DateAttributes, C::NumericClass]);
        let k = knowledge(&[C::NumericClass], &[]);
        assert_eq!(fire_transition(token, &k), Firing::Invalid(vec![C::DateAttributes, C::MissingValues]));
    }

    #[test]
    fn chain_shape_and_unknown_component() {
        let pool = pool_roster();
        let p = Pipeline::from_ids(&pool, &["replace-missing", "center", "zero-r"]).unwrap();
        let mut kb = KnowledgeBase::new();
        for id in ["replace-missing", "center", "zero-r"] {
            kb.insert(ComponentKnowledge::blank(id, id));
        }
        let s = map_from_token(&p, CharacteristicToken::empty(), &kb).unwrap();
        assert_eq!(s.places, ["start", "inter_1", "inter_2", "end"]);
        assert_eq!(s.transitions.len(), 3);
        assert_eq!(s.arcs().count(), 3);

        let q = Pipeline::from_ids(&pool, &["knn"]).unwrap();
        assert_eq!(
            map_from_token(&q, CharacteristicToken::empty(), &kb),
            Err(SurrogateError::UnknownComponent("knn".into()))
        );
    }
}
