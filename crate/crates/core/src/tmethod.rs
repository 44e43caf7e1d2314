//! Validity by execution: the pipeline is run for real on the dataset.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::limits::ExecutionLimits;
use crate::pipeline::Pipeline;
use crate::pool::{fit_component, FailureReason, Fitted, FittedTransform, Prediction, PredictiveModel};

/// A pipeline whose every stage has been fitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedPipeline {
    pub transforms: Vec<(String, FittedTransform)>,
    pub model: PredictiveModel,
}

impl FittedPipeline {
    /// Replays the fitted preprocessing on `d` and predicts each row.
    pub fn predict(&self, d: &Dataset) -> Result<Vec<Prediction>, FailureReason> {
        let current = self.transformed(d)?;
        Ok(current.rows().iter().map(|r| self.model.predict(r)).collect())
    }

    /// `d` after the fitted preprocessing.
    pub fn transformed(&self, d: &Dataset) -> Result<Dataset, FailureReason> {
        let mut current = d.clone();
        for (_, t) in &self.transforms {
            current = t.apply(&current)?;
        }
        Ok(current)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TMethodOutcome {
    Valid { fitted: Box<FittedPipeline>, elapsed: Duration },
    Invalid { failing_component: String, position: usize, reason: FailureReason, elapsed: Duration },
}

impl TMethodOutcome {
    pub fn is_valid(&self) -> bool {
        matches!(self, TMethodOutcome::Valid { .. })
    }

    pub fn elapsed(&self) -> Duration {
        match self {
            TMethodOutcome::Valid { elapsed, .. } | TMethodOutcome::Invalid { elapsed, .. } => *elapsed,
        }
    }

    pub fn is_timeout(&self) -> bool {
        matches!(self, TMethodOutcome::Invalid { reason: FailureReason::Timeout, .. })
    }
}

/// Threads the dataset through each stage under one deadline for the chain.
pub fn execute_pipeline(p: &Pipeline, d: &Dataset, limits: &ExecutionLimits) -> TMethodOutcome {
    let deadline = limits.start();
    let mut current = d.clone();
    let mut transforms = Vec::with_capacity(p.len() - 1);
    for (position, step) in p.steps().iter().enumerate() {
        let seed = limits.seed.wrapping_add(position as u64);
        let result = fit_component(&step.component, &step.setting, &current, &deadline, seed)
            .and_then(|f| deadline.check().map(|_| f).map_err(FailureReason::from));
        match result {
            Ok(Fitted::Transform { transform, output }) => {
                transforms.push((step.component.id.clone(), transform));
                current = output;
            }
            Ok(Fitted::Model(model)) => {
                let fitted = Box::new(FittedPipeline { transforms, model });
                return TMethodOutcome::Valid { fitted, elapsed: deadline.elapsed() };
            }
            Err(reason) => {
                return TMethodOutcome::Invalid {
                    failing_component: step.component.id.clone(),
                    position,
                    reason,
                    elapsed: deadline.elapsed(),
                }
            }
        }
    }
    unreachable!("a pipeline ends in a predictor")
}
