//! Browser bindings: dataset to token, pipeline verdicts, and single
//! transition firing, all against a knowledge base compiled into the module.
//!
//! Every export takes and returns JSON text so the page needs no glue beyond
//! `JSON.parse`.

use std::sync::OnceLock;

use avatar::bundled::{bundled, NAMES};
use avatar::characteristic::{CapabilityVector, Characteristic, CharacteristicSet, CharacteristicToken, EffectVector};
use avatar::dataset::{extract_token, parse_arff, Dataset};
use avatar::knowledge::{ComponentKnowledge, KnowledgeBase};
use avatar::pipeline::{Pipeline, StepOrder};
use avatar::pool::{pool_roster, ComponentSpec};
use avatar::surrogate::{evaluate_token, fire, Firing};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Written by `avatar learn-kb --seed 0 --out crates/demo/kb.json`.
pub const KB_JSON: &str = include_str!("../kb.json");

fn kb() -> &'static KnowledgeBase {
    static KB: OnceLock<KnowledgeBase> = OnceLock::new();
    KB.get_or_init(|| KnowledgeBase::from_json(KB_JSON).expect("embedded knowledge base parses"))
}

fn pool() -> &'static [ComponentSpec] {
    static POOL: OnceLock<Vec<ComponentSpec>> = OnceLock::new();
    POOL.get_or_init(pool_roster)
}

fn names(set: CharacteristicSet) -> Vec<&'static str> {
    set.iter().map(Characteristic::name).collect()
}

fn parse_names(list: &[String]) -> Result<CharacteristicSet, String> {
    list.iter().try_fold(CharacteristicSet::EMPTY, |acc, n| {
        Characteristic::from_name(n).map(|c| acc.with(c)).ok_or_else(|| format!("unknown characteristic `{n}`"))
    })
}

/// `bundled:NAME` or ARFF text.
fn dataset(source: &str) -> Result<Dataset, String> {
    match source.trim().strip_prefix("bundled:") {
        Some(name) => bundled(name).ok_or_else(|| format!("no bundled dataset `{name}`")),
        None => parse_arff(source, None).map_err(|e| e.to_string()),
    }
}

pub fn catalog_json() -> String {
    let components: Vec<Value> = pool()
        .iter()
        .map(|c| {
            let k = kb().get(&c.id).expect("every pool component is in the embedded kb");
            json!({
                "id": c.id,
                "name": c.display_name(),
                "kind": c.kind,
                "capabilities": names(k.capabilities.supported()),
                "adds": names(k.effects.adds()),
                "removes": names(k.effects.removes()),
            })
        })
        .collect();
    let characteristics: Vec<&str> = Characteristic::ALL.iter().map(|c| c.name()).collect();
    json!({ "characteristics": characteristics, "datasets": NAMES, "components": components }).to_string()
}

pub fn token_json(source: &str) -> Result<String, String> {
    let d = dataset(source)?;
    let token = extract_token(&d);
    Ok(json!({
        "name": d.name(),
        "rows": d.n_rows(),
        "attributes": d.n_attributes(),
        "class": d.class_attribute().name,
        "active": names(token.active()),
    })
    .to_string())
}

pub fn evaluate_json(steps: &[String], source: &str) -> Result<String, String> {
    let d = dataset(source)?;
    let ids: Vec<&str> = steps.iter().map(|s| s.as_str()).collect();
    let p = Pipeline::from_ids_with_order(pool(), &ids, StepOrder::Free).map_err(|e| e.to_string())?;
    let v = evaluate_token(&p, extract_token(&d), kb()).map_err(|e| e.to_string())?;
    let tokens: Vec<Vec<&str>> = v.tokens.iter().map(|t| names(t.active())).collect();
    Ok(json!({
        "pipeline": p.to_string(),
        "follows_template": p.follows_template(),
        "valid": v.valid,
        "failing_component": v.failing_component,
        "failing_characteristics": v.failing_characteristics.iter().map(|c| c.name()).collect::<Vec<_>>(),
        "tokens": tokens,
    })
    .to_string())
}

/// `component` picks a learned record; otherwise `capabilities`, `adds` and
/// `removes` describe the transition directly.
pub fn fire_json(request: &str) -> Result<String, String> {
    let r: Value = serde_json::from_str(request).map_err(|e| e.to_string())?;
    let list = |key: &str| -> Result<CharacteristicSet, String> {
        let items: Vec<String> = match r.get(key) {
            None | Some(Value::Null) => Vec::new(),
            Some(v) => serde_json::from_value(v.clone()).map_err(|e| format!("`{key}`: {e}"))?,
        };
        parse_names(&items)
    };
    let token = CharacteristicToken::from_set(list("token")?);
    let (capabilities, effects) = match r.get("component").and_then(Value::as_str) {
        Some(id) => {
            let k: &ComponentKnowledge = kb().get(id).ok_or_else(|| format!("unknown component `{id}`"))?;
            (k.capabilities, k.effects)
        }
        None => {
            let mut effects = EffectVector::neutral();
            for c in list("adds")?.iter() {
                effects.set(c, 1).expect("in range");
            }
            for c in list("removes")?.iter() {
                effects.set(c, -1).expect("in range");
            }
            (CapabilityVector::from_set(list("capabilities")?), effects)
        }
    };
    Ok(match fire(token, capabilities, effects) {
        Firing::Invalid(failing) => json!({ "valid": false, "failing": failing.iter().map(|c| c.name()).collect::<Vec<_>>() }),
        Firing::Out(out) => json!({ "valid": true, "out": names(out.active()) }),
    }
    .to_string())
}

#[wasm_bindgen]
pub fn catalog() -> String {
    catalog_json()
}

#[wasm_bindgen]
pub fn dataset_token(source: &str) -> Result<String, JsError> {
    token_json(source).map_err(|e| JsError::new(&e))
}

/// `steps` is a comma-separated list of component ids.
#[wasm_bindgen]
pub fn evaluate_pipeline(steps: &str, source: &str) -> Result<String, JsError> {
    let steps: Vec<String> = steps.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
    evaluate_json(&steps, source).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn fire_transition(request: &str) -> Result<String, JsError> {
    fire_json(request).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parsed(s: String) -> Value {
        serde_json::from_str(&s).unwrap()
    }

    #[test]
    fn embedded_kb_is_the_freshly_learned_one() {
        use avatar::knowledge::learn_knowledge_base;
        use avatar::limits::ExecutionLimits;
        use avatar::synthetic::{generate_suite, DEFAULT_ROWS};
        let suite = generate_suite(DEFAULT_ROWS, 0).unwrap();
        let fresh = learn_knowledge_base(&pool_roster(), &suite, &ExecutionLimits::generous(0)).unwrap().kb;
        assert_eq!(fresh.to_json().trim_end(), KB_JSON.trim_end(), "regenerate crates/demo/kb.json");
    }

    #[test]
    fn catalog_lists_the_pool() {
        let c = parsed(catalog_json());
        assert_eq!(c["components"].as_array().unwrap().len(), pool().len());
        assert_eq!(c["characteristics"].as_array().unwrap().len(), 16);
    }

    #[test]
    fn tokens_from_bundled_and_arff_text() {
        let t = parsed(token_json("bundled:numeric-missing").unwrap());
        assert!(t["active"].as_array().unwrap().contains(&json!("MISSING_VALUES")));
        let arff = "@relation r\n@attribute a numeric\n@attribute c {x,y}\n@data\n1,x\n?,y\n";
        let t = parsed(token_json(arff).unwrap());
        assert_eq!(t["rows"], 2);
        assert!(t["active"].as_array().unwrap().contains(&json!("MISSING_VALUES")));
        assert!(token_json("@relation broken").is_err());
    }

    #[test]
    fn both_orders_of_the_example() {
        let ids = |s: &str| s.split(',').map(String::from).collect::<Vec<_>>();
        let good = parsed(evaluate_json(&ids("replace-missing,independent-components,decision-tree"), "bundled:numeric-missing").unwrap());
        assert_eq!((good["valid"].clone(), good["follows_template"].clone()), (json!(true), json!(true)));
        let bad = parsed(evaluate_json(&ids("independent-components,replace-missing,decision-tree"), "bundled:numeric-missing").unwrap());
        assert_eq!(bad["valid"], false);
        assert_eq!(bad["failing_characteristics"], json!(["MISSING_VALUES"]));
        assert_eq!(bad["follows_template"], false);
        assert!(evaluate_json(&ids("no-such-thing"), "bundled:numeric-missing").is_err());
    }

    #[test]
    fn firing_with_a_record_or_by_hand() {
        let out = parsed(fire_json(r#"{"token": ["MISSING_VALUES", "NUMERIC_ATTRIBUTES"], "component": "replace-missing"}"#).unwrap());
        assert_eq!(out["valid"], true);
        assert!(!out["out"].as_array().unwrap().contains(&json!("MISSING_VALUES")));
        let out = parsed(fire_json(r#"{"token": ["MISSING_CLASS_VALUES"], "capabilities": []}"#).unwrap());
        assert_eq!(out, json!({ "valid": false, "failing": ["MISSING_CLASS_VALUES"] }));
        let out = parsed(fire_json(r#"{"token": [], "removes": ["MISSING_CLASS_VALUES"]}"#).unwrap());
        assert_eq!(out, json!({ "valid": true, "out": [] }));
        assert!(fire_json(r#"{"token": ["NOPE"]}"#).is_err());
    }
}
