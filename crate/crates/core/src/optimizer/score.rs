//! Held-out error of a pipeline.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::{Dataset, Value};
use crate::limits::ExecutionLimits;
use crate::pipeline::Pipeline;
use crate::pool::{FailureReason, Prediction};
use crate::tmethod::{execute_pipeline, FittedPipeline, TMethodOutcome};

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Dataset,
    pub test: Dataset,
    /// Range of a numeric class over the whole dataset.
    class_range: f64,
}

/// 70/30 split, stratified by class value (missing class is its own
/// stratum; a numeric class is stratified by rank in tenths).
pub fn stratified_split(d: &Dataset, seed: u64) -> Split {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ci = d.class_index();
    let numeric = d.class_attribute().kind.is_numeric();
    let mut strata: std::collections::BTreeMap<String, Vec<usize>> = Default::default();
    let ranks: Vec<usize> = if numeric {
        let mut order: Vec<usize> = (0..d.n_rows()).filter(|&i| d.rows()[i][ci].is_some()).collect();
        order.sort_by(|&a, &b| {
            let v = |i: usize| d.rows()[i][ci].as_ref().and_then(Value::as_f64).unwrap_or(0.0);
            v(a).total_cmp(&v(b)).then(a.cmp(&b))
        });
        let mut ranks = vec![0; d.n_rows()];
        let n = order.len().max(1);
        for (r, &i) in order.iter().enumerate() {
            ranks[i] = r * 10 / n;
        }
        ranks
    } else {
        Vec::new()
    };
    for (i, row) in d.rows().iter().enumerate() {
        let key = match &row[ci] {
            None => "?".to_string(),
            Some(_) if numeric => format!("rank{}", ranks[i]),
            Some(v) => format!("{v:?}"),
        };
        strata.entry(key).or_default().push(i);
    }
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for rows in strata.values_mut() {
        rows.shuffle(&mut rng);
        let k = ((rows.len() as f64) * 0.7).round() as usize;
        train.extend_from_slice(&rows[..k]);
        test.extend_from_slice(&rows[k..]);
    }
    if test.is_empty() && train.len() > 1 {
        test.push(train.pop().expect("non-empty"));
    }
    train.sort_unstable();
    test.sort_unstable();
    let present: Vec<f64> = d.class_column().flatten().filter_map(Value::as_f64).collect();
    let lo = present.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = present.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Split {
        train: d.select_rows(&train),
        test: d.select_rows(&test),
        class_range: if present.is_empty() { 0.0 } else { hi - lo },
    }
}

/// Misclassification rate, or `min(1, MAE / class range)` for a numeric class.
/// Test rows without a class value are skipped.
pub fn error_rate(fitted: &FittedPipeline, split: &Split) -> Result<f64, FailureReason> {
    let predictions = fitted.predict(&split.test)?;
    let ci = split.test.class_index();
    let numeric = split.test.class_attribute().kind.is_numeric();
    let mut n = 0usize;
    let mut total = 0.0;
    for (row, p) in split.test.rows().iter().zip(&predictions) {
        let Some(actual) = &row[ci] else { continue };
        n += 1;
        total += match (numeric, p, actual) {
            (true, Prediction::Number(y), Value::Numeric(a)) => (y - a).abs(),
            (true, _, _) => f64::INFINITY,
            (false, p, a) => f64::from(u8::from(!p.matches(a))),
        };
    }
    if n == 0 {
        return Ok(0.0);
    }
    let mean = total / n as f64;
    Ok(if !numeric {
        mean
    } else if split.class_range > 0.0 {
        (mean / split.class_range).min(1.0)
    } else if mean <= 1e-9 {
        0.0
    } else {
        1.0
    })
}

/// Trains on the split's train part, measures on its test part.
pub fn score_on_split(p: &Pipeline, split: &Split, limits: &ExecutionLimits) -> Result<f64, FailureReason> {
    match execute_pipeline(p, &split.train, limits) {
        TMethodOutcome::Valid { fitted, .. } => error_rate(&fitted, split),
        TMethodOutcome::Invalid { reason, .. } => Err(reason),
    }
}

pub fn score_pipeline(p: &Pipeline, d: &Dataset, split_seed: u64, limits: &ExecutionLimits) -> Result<f64, FailureReason> {
    score_on_split(p, &stratified_split(d, split_seed), limits)
}
