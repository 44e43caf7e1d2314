//! Imputing before the independent-components step works; the other order
//! feeds missing values to a component that cannot take them.

use avatar::bundled::{bundled, NUMERIC_MISSING};
use avatar::characteristic::Characteristic;
use avatar::knowledge::learn_knowledge_base;
use avatar::limits::ExecutionLimits;
use avatar::pipeline::{Pipeline, PipelineError, StepOrder};
use avatar::pool::{pool_roster, FailureReason};
use avatar::surrogate::evaluate_validity;
use avatar::synthetic::{generate_suite, DEFAULT_ROWS};
use avatar::tmethod::{execute_pipeline, TMethodOutcome};

#[test]
fn order_decides_validity() {
    let pool = pool_roster();
    let suite = generate_suite(DEFAULT_ROWS, 0).unwrap();
    let kb = learn_knowledge_base(&pool, &suite, &ExecutionLimits::generous(0)).unwrap().kb;
    let d = bundled(NUMERIC_MISSING).unwrap();
    let limits = ExecutionLimits::generous(0);

    let good = Pipeline::from_ids(&pool, &["replace-missing", "independent-components", "decision-tree"]).unwrap();
    let v = evaluate_validity(&good, &d, &kb).unwrap();
    assert!(v.valid);
    assert_eq!(v.tokens.len(), 4);
    assert!(v.tokens[0].get(Characteristic::MissingValues));
    assert!(!v.tokens[1].get(Characteristic::MissingValues));
    assert!(v.tokens[3].get(Characteristic::PredictiveModel));
    assert!(execute_pipeline(&good, &d, &limits).is_valid());

    let swapped = ["independent-components", "replace-missing", "decision-tree"];
    assert!(matches!(Pipeline::from_ids(&pool, &swapped), Err(PipelineError::OutOfOrder { .. })));
    let bad = Pipeline::from_ids_with_order(&pool, &swapped, StepOrder::Free).unwrap();
    assert!(!bad.follows_template());
    let v = evaluate_validity(&bad, &d, &kb).unwrap();
    assert!(!v.valid);
    assert_eq!(v.failing_component.as_deref(), Some("independent-components"));
    assert_eq!(v.failing_characteristics, vec![Characteristic::MissingValues]);
    match execute_pipeline(&bad, &d, &limits) {
        TMethodOutcome::Invalid { failing_component, position, reason, .. } => {
            assert_eq!((failing_component.as_str(), position), ("independent-components", 0));
            assert!(matches!(reason, FailureReason::Incompatibility { characteristic: Characteristic::MissingValues, .. }));
        }
        other => panic!("expected a failure, got {other:?}"),
    }
}
