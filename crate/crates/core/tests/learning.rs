//! Knowledge-base learning against the pool's own contracts.

use avatar::characteristic::{Characteristic, CharacteristicSet};
use avatar::knowledge::{kb_digest, learn_knowledge_base, LearnReport};
use avatar::limits::ExecutionLimits;
use avatar::pool::{execute_with_setting, pool_roster, ComponentSpec, ExecutionOutcome, FailureReason};
use avatar::synthetic::{generate_suite, SyntheticCase, DEFAULT_ROWS};

fn learn(pool: &[ComponentSpec], suite: &[SyntheticCase]) -> LearnReport {
    learn_knowledge_base(pool, suite, &ExecutionLimits::generous(0)).unwrap()
}

#[test]
fn components_fail_exactly_where_their_contract_says() {
    let suite = generate_suite(DEFAULT_ROWS, 0).unwrap();
    let limits = ExecutionLimits::generous(0);
    let mut wrong = Vec::new();
    for spec in pool_roster() {
        let rejected = spec.algorithm().unwrap().declared_rejections();
        for setting in &spec.hyperparams {
            for case in &suite {
                let violates = !case.token().active().intersection(rejected).is_empty();
                let outcome = execute_with_setting(&spec, setting, &case.dataset, &limits);
                let incompatible =
                    matches!(outcome, ExecutionOutcome::Failure(FailureReason::Incompatibility { .. }));
                if let ExecutionOutcome::Failure(FailureReason::Internal(e)) = &outcome {
                    wrong.push(format!("{} {setting} on {}: internal error {e}", spec.id, case.name()));
                }
                if violates != incompatible {
                    wrong.push(format!("{} {setting} on {}: violates={violates} failed={incompatible}", spec.id, case.name()));
                }
            }
        }
    }
    assert!(wrong.is_empty(), "{wrong:#?}");
}

#[test]
fn relearning_is_byte_identical() {
    let pool = pool_roster();
    let a = learn(&pool, &generate_suite(DEFAULT_ROWS, 7).unwrap());
    let b = learn(&pool, &generate_suite(DEFAULT_ROWS, 7).unwrap());
    assert_eq!(a.kb.to_json(), b.kb.to_json());
    assert_eq!(kb_digest(&a.kb), kb_digest(&b.kb));
}

#[test]
fn capabilities_are_exactly_what_succeeded() {
    let pool = pool_roster();
    let report = learn(&pool, &generate_suite(DEFAULT_ROWS, 0).unwrap());
    for spec in &pool {
        let record = report.kb.get(&spec.id).unwrap();
        let exercised: CharacteristicSet = report
            .observations
            .iter()
            .filter(|o| o.component_id == spec.id && o.succeeded())
            .fold(CharacteristicSet::EMPTY, |acc, o| acc.union(o.input.active()));
        assert_eq!(record.capabilities.supported(), exercised, "{}", spec.id);
        for c in Characteristic::ALL {
            assert!((-1..=1).contains(&record.effects.get(c)));
        }
    }
}

#[test]
fn every_grid_setting_learns_the_same_record() {
    let pool = pool_roster();
    let suite = generate_suite(DEFAULT_ROWS, 0).unwrap();
    let base = learn(&pool, &suite).kb;
    for spec in &pool {
        for i in 1..spec.hyperparams.len() {
            let mut rotated = spec.clone();
            rotated.hyperparams.rotate_left(i);
            let kb = learn(std::slice::from_ref(&rotated), &suite).kb;
            assert_eq!(kb.get(&spec.id), base.get(&spec.id), "{} at {}", spec.id, rotated.hyperparams[0]);
        }
    }
}
