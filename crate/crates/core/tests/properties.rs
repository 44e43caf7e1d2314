use std::sync::OnceLock;

use avatar::bundled::{all_bundled, bundled};
use avatar::characteristic::{CapabilityVector, Characteristic, CharacteristicSet, CharacteristicToken, EffectVector};
use avatar::dataset::{extract_token, Dataset};
use avatar::knowledge::{learn_knowledge_base, ComponentKnowledge, KnowledgeBase};
use avatar::limits::ExecutionLimits;
use avatar::pipeline::{random_pipeline, Pipeline};
use avatar::pool::{execute_with_setting, pool_roster, ExecutionOutcome};
use avatar::surrogate::{evaluate_token, fire_transition, Firing};
use avatar::synthetic::{generate_suite, suite_digest};
use proptest::prelude::*;

fn kb() -> &'static KnowledgeBase {
    static KB: OnceLock<KnowledgeBase> = OnceLock::new();
    KB.get_or_init(|| {
        let suite = generate_suite(16, 0).unwrap();
        learn_knowledge_base(&pool_roster(), &suite, &ExecutionLimits::generous(0)).unwrap().kb
    })
}

fn datasets() -> &'static [Dataset] {
    static D: OnceLock<Vec<Dataset>> = OnceLock::new();
    D.get_or_init(all_bundled)
}

fn knowledge(caps: u16, effects: &[i8]) -> ComponentKnowledge {
    let mut k = ComponentKnowledge::blank("x", "X");
    k.capabilities = CapabilityVector::from_set(CharacteristicSet::from_bits(caps));
    let mut e = EffectVector::neutral();
    for (c, v) in Characteristic::ALL.iter().zip(effects) {
        e.set(*c, *v).unwrap();
    }
    k.effects = e;
    k
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(10_000) })]

    #[test]
    fn fired_tokens_stay_binary(bits in any::<u16>(), caps in any::<u16>(), effects in prop::collection::vec(-1i8..=1, 16)) {
        let token = CharacteristicToken::from_set(CharacteristicSet::from_bits(bits));
        let k = knowledge(caps, &effects);
        let unsupported: Vec<Characteristic> =
            Characteristic::ALL.into_iter().filter(|c| bits >> c.index() & 1 == 1 && caps >> c.index() & 1 == 0).collect();
        match fire_transition(token, &k) {
            Firing::Invalid(failing) => {
                prop_assert!(!unsupported.is_empty());
                prop_assert_eq!(failing, unsupported);
            }
            Firing::Out(out) => {
                prop_assert!(unsupported.is_empty());
                for (c, e) in Characteristic::ALL.iter().zip(&effects) {
                    let before = i8::from(bits >> c.index() & 1 == 1);
                    let expected = (before + e).clamp(0, 1) as u8;
                    prop_assert_eq!(out.value(*c), expected);
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(400) })]

    #[test]
    fn extending_a_failing_prefix_keeps_it_failing(seed in any::<u64>(), tail_seed in any::<u64>(), which in 0usize..6) {
        let pool = pool_roster();
        let d = &datasets()[which];
        let token = extract_token(d);
        let p = random_pipeline(&pool, 6, seed).unwrap();
        let verdict = evaluate_token(&p, token, kb()).unwrap();
        if let Some(k) = verdict.failing_position() {
            let head = &p.steps()[..=k];
            let last_position = head[k].component.kind.template_position();
            let tail = random_pipeline(&pool, 6, tail_seed).unwrap();
            let mut steps = head.to_vec();
            steps.extend(tail.steps().iter().filter(|s| s.component.kind.template_position() > last_position).cloned());
            if let Ok(q) = Pipeline::new(steps) {
                let v = evaluate_token(&q, token, kb()).unwrap();
                prop_assert_eq!(v.failing_position(), Some(k));
                prop_assert_eq!(v.failing_component, verdict.failing_component);
            }
        }
    }

    #[test]
    fn a_missing_cell_only_turns_on_missing_values(row in any::<prop::sample::Index>(), col in any::<prop::sample::Index>(), which in prop::sample::select(vec!["numeric-clean", "nominal-attrs", "regression"])) {
        let d = bundled(which).unwrap();
        let before = extract_token(&d);
        prop_assert!(!before.get(Characteristic::MissingValues));
        let features: Vec<usize> = d.feature_indices().collect();
        let j = features[col.index(features.len())];
        let (name, attributes, mut rows, class_index) = d.clone().into_parts();
        let i = row.index(rows.len());
        rows[i][j] = None;
        let holed = Dataset::new(name, attributes, rows, class_index).unwrap();
        let after = extract_token(&holed);
        prop_assert!(after.get(Characteristic::MissingValues));
        for c in Characteristic::CLASS_SIDE {
            prop_assert_eq!(after.get(c), before.get(c), "{}", c);
        }
        prop_assert_eq!(extract_token(&holed), after);
    }

    #[test]
    fn preprocessor_outputs_are_valid_and_repeatable(component in 0usize..18, setting in any::<prop::sample::Index>(), which in 0usize..6, seed in 0u64..1000) {
        let spec = &pool_roster()[component];
        prop_assume!(!spec.kind.is_predictor());
        let setting = &spec.hyperparams[setting.index(spec.hyperparams.len())];
        let d = &datasets()[which];
        let limits = ExecutionLimits::generous(seed);
        let first = execute_with_setting(spec, setting, d, &limits);
        if let ExecutionOutcome::TransformedDataset(out) = &first {
            let (name, attributes, rows, class_index) = out.clone().into_parts();
            let rebuilt = Dataset::new(name, attributes, rows, class_index);
            prop_assert!(rebuilt.is_ok(), "{:?}", rebuilt.err());
            extract_token(out);
        }
        prop_assert_eq!(execute_with_setting(spec, setting, d, &limits), first);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(12) })]

    #[test]
    fn suites_and_pipelines_follow_the_seed(seed in any::<u64>(), rows in 8usize..24) {
        let a = generate_suite(rows, seed).unwrap();
        let b = generate_suite(rows, seed).unwrap();
        prop_assert_eq!(suite_digest(&a), suite_digest(&b));
        let pool = pool_roster();
        prop_assert_eq!(random_pipeline(&pool, 6, seed).unwrap(), random_pipeline(&pool, 6, seed).unwrap());
    }
}
