//! Preprocessors. Each is fitted on one dataset and yields both the
//! transformed dataset and a transform that can be replayed on held-out rows
//! with the same schema. The class column is never modified.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::linalg::{covariance, mean, power_eigen, quantile, ridge_fit, std_dev};
use super::FailureReason;
use crate::dataset::{distinct_present_values, Attribute, AttributeKind, Dataset, DistinctCount, Row, Value};
use crate::limits::Deadline;

/// A fitted preprocessing step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FittedTransform {
    /// Row-count changes only happen at fit time; held-out rows pass through.
    Identity,
    /// Replacement value per column for missing cells.
    Fill { fills: Vec<Option<Value>> },
    /// Lower and upper fence per column.
    Clip { fences: Vec<Option<(f64, f64)>> },
    /// `(x - shift) / scale` per column.
    Affine { params: Vec<Option<(f64, f64)>> },
    /// Equal-width bins `(min, width, bins)` per column.
    Bin { attributes: Vec<Attribute>, bins: Vec<Option<(f64, f64, usize)>> },
    /// One 0/1 indicator per listed category, per column.
    Indicators { attributes: Vec<Attribute>, categories: Vec<Option<Vec<u32>>> },
    /// Numeric features replaced by linear projections.
    Project(Projection),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    attributes: Vec<Attribute>,
    class_index: usize,
    passthrough: Vec<usize>,
    inputs: Vec<usize>,
    means: Vec<f64>,
    components: Vec<Vec<f64>>,
    source_class: usize,
}

fn rebuild(d: &Dataset, attributes: Vec<Attribute>, rows: Vec<Row>, class_index: usize) -> Result<Dataset, FailureReason> {
    Dataset::new(d.name(), attributes, rows, class_index).map_err(|e| FailureReason::Internal(e.to_string()))
}

impl FittedTransform {
    /// Replays the transform on a dataset with the schema it was fitted on.
    pub fn apply(&self, d: &Dataset) -> Result<Dataset, FailureReason> {
        match self {
            FittedTransform::Identity => Ok(d.clone()),
            FittedTransform::Fill { fills } => {
                let rows = d
                    .rows()
                    .iter()
                    .map(|row| {
                        row.iter()
                            .zip(fills)
                            .map(|(cell, fill)| if cell.is_none() { fill.clone() } else { cell.clone() })
                            .collect()
                    })
                    .collect();
                rebuild(d, d.attributes().to_vec(), rows, d.class_index())
            }
            FittedTransform::Clip { fences } => {
                let rows = d
                    .rows()
                    .iter()
                    .map(|row| {
                        row.iter()
                            .zip(fences)
                            .map(|(cell, fence)| match (cell, fence) {
                                (Some(Value::Numeric(x)), Some((lo, hi))) => Some(Value::Numeric(x.clamp(*lo, *hi))),
                                _ => cell.clone(),
                            })
                            .collect()
                    })
                    .collect();
                rebuild(d, d.attributes().to_vec(), rows, d.class_index())
            }
            FittedTransform::Affine { params } => {
                let rows = d
                    .rows()
                    .iter()
                    .map(|row| {
                        row.iter()
                            .zip(params)
                            .map(|(cell, p)| match (cell, p) {
                                (Some(Value::Numeric(x)), Some((shift, scale))) => {
                                    Some(Value::Numeric((x - shift) / scale))
                                }
                                _ => cell.clone(),
                            })
                            .collect()
                    })
                    .collect();
                rebuild(d, d.attributes().to_vec(), rows, d.class_index())
            }
            FittedTransform::Bin { attributes, bins } => {
                let rows = d
                    .rows()
                    .iter()
                    .map(|row| {
                        row.iter()
                            .zip(bins)
                            .map(|(cell, b)| match (cell, b) {
                                (Some(Value::Numeric(x)), Some((min, width, k))) => {
                                    Some(Value::Nominal(bin_of(*x, *min, *width, *k)))
                                }
                                (None, Some(_)) => None,
                                _ => cell.clone(),
                            })
                            .collect()
                    })
                    .collect();
                rebuild(d, attributes.clone(), rows, d.class_index())
            }
            FittedTransform::Indicators { attributes, categories } => {
                let mut class_index = 0;
                let mut width = 0;
                for (j, cats) in categories.iter().enumerate() {
                    if j == d.class_index() {
                        class_index = width;
                    }
                    width += cats.as_ref().map_or(1, Vec::len);
                }
                let rows = d
                    .rows()
                    .iter()
                    .map(|row| {
                        let mut out = Vec::with_capacity(width);
                        for (cell, cats) in row.iter().zip(categories) {
                            match cats {
                                None => out.push(cell.clone()),
                                Some(cats) => {
                                    for c in cats {
                                        out.push(cell.as_ref().map(|v| {
                                            Value::Numeric(if v.as_category() == Some(*c) { 1.0 } else { 0.0 })
                                        }));
                                    }
                                }
                            }
                        }
                        out
                    })
                    .collect();
                rebuild(d, attributes.clone(), rows, class_index)
            }
            FittedTransform::Project(p) => {
                let rows = d.rows().iter().map(|row| p.project(row)).collect();
                rebuild(d, p.attributes.clone(), rows, p.class_index)
            }
        }
    }
}

impl Projection {
    fn project(&self, row: &Row) -> Row {
        let mut out: Row = self.passthrough.iter().map(|&j| row[j].clone()).collect();
        let centred: Vec<f64> = self
            .inputs
            .iter()
            .zip(&self.means)
            .map(|(&j, m)| match &row[j] {
                Some(Value::Numeric(x)) => x - m,
                _ => 0.0,
            })
            .collect();
        for comp in &self.components {
            out.push(Some(Value::Numeric(comp.iter().zip(&centred).map(|(a, b)| a * b).sum())));
        }
        out.push(row[self.source_class].clone());
        out
    }
}

fn bin_of(x: f64, min: f64, width: f64, bins: usize) -> u32 {
    if width <= 0.0 || !x.is_finite() {
        return 0;
    }
    (((x - min) / width).floor().max(0.0) as usize).min(bins - 1) as u32
}

fn numeric_features(d: &Dataset) -> Vec<usize> {
    d.feature_indices().filter(|&j| d.attributes()[j].kind.is_numeric()).collect()
}

fn present_numbers(d: &Dataset, j: usize) -> Vec<f64> {
    d.column(j).flatten().filter_map(Value::as_f64).collect()
}

/// A transform paired with its output on the fitting data.
pub(crate) type Fitted = (FittedTransform, Dataset);

fn finish(transform: FittedTransform, d: &Dataset) -> Result<Fitted, FailureReason> {
    let out = transform.apply(d)?;
    Ok((transform, out))
}

pub(crate) fn fit_replace_missing(d: &Dataset, median: bool) -> Result<Fitted, FailureReason> {
    let mut fills = vec![None; d.n_attributes()];
    for j in d.feature_indices() {
        fills[j] = match &d.attributes()[j].kind {
            AttributeKind::Numeric => {
                let mut xs = present_numbers(d, j);
                let fill = if xs.is_empty() {
                    0.0
                } else if median {
                    xs.sort_by(f64::total_cmp);
                    quantile(&xs, 0.5)
                } else {
                    mean(&xs)
                };
                Some(Value::Numeric(fill))
            }
            AttributeKind::Nominal(cats) => {
                let mut counts = vec![0usize; cats.len()];
                for v in d.column(j).flatten() {
                    if let Value::Nominal(c) = v {
                        counts[*c as usize] += 1;
                    }
                }
                let mut best = None;
                for (c, &n) in counts.iter().enumerate() {
                    if n > 0 && best.is_none_or(|(_, m)| n > m) {
                        best = Some((c, n));
                    }
                }
                best.map(|(c, _)| Value::Nominal(c as u32))
            }
            AttributeKind::StringKind => {
                let mut values: Vec<&Value> = d.column(j).flatten().collect();
                values.sort_by(|a, b| format!("{a:?}").cmp(&format!("{b:?}")));
                let mut best: Option<(&Value, usize)> = None;
                let mut i = 0;
                while i < values.len() {
                    let run = values[i..].iter().take_while(|v| **v == values[i]).count();
                    if best.is_none_or(|(_, n)| run > n) {
                        best = Some((values[i], run));
                    }
                    i += run;
                }
                best.map(|(v, _)| v.clone())
            }
            AttributeKind::DateKind => None,
        };
    }
    finish(FittedTransform::Fill { fills }, d)
}

/// Regression-based iterative imputation over the numeric features, with the
/// class as an extra predictor.
pub(crate) fn fit_em_imputer(d: &Dataset, max_iterations: usize, deadline: &Deadline) -> Result<Fitted, FailureReason> {
    let cols = numeric_features(d);
    let n = d.n_rows();
    let class: Vec<f64> = {
        let ys: Vec<Option<f64>> = d.class_column().map(|c| c.and_then(Value::as_f64)).collect();
        let present: Vec<f64> = ys.iter().flatten().copied().collect();
        let m = mean(&present);
        ys.into_iter().map(|y| y.unwrap_or(m)).collect()
    };
    let observed: Vec<Vec<Option<f64>>> =
        cols.iter().map(|&j| d.column(j).map(|c| c.and_then(Value::as_f64)).collect()).collect();
    let means: Vec<f64> = observed.iter().map(|col| mean(&col.iter().flatten().copied().collect::<Vec<_>>())).collect();
    let mut filled: Vec<Vec<f64>> =
        observed.iter().zip(&means).map(|(col, m)| col.iter().map(|x| x.unwrap_or(*m)).collect()).collect();
    let active: Vec<usize> = (0..cols.len())
        .filter(|&k| {
            let column = d.column(cols[k]);
            observed[k].iter().any(Option::is_none) && distinct_present_values(column) == DistinctCount::Many
        })
        .collect();
    for _ in 0..max_iterations {
        let mut change: f64 = 0.0;
        for &k in &active {
            deadline.check()?;
            let design = |i: usize| -> Vec<f64> {
                let mut r: Vec<f64> = (0..cols.len()).filter(|&o| o != k).map(|o| filled[o][i]).collect();
                r.push(class[i]);
                r
            };
            let train: Vec<usize> = (0..n).filter(|&i| observed[k][i].is_some()).collect();
            let xs: Vec<Vec<f64>> = train.iter().map(|&i| design(i)).collect();
            let ys: Vec<f64> = train.iter().map(|&i| filled[k][i]).collect();
            let (b, w) = ridge_fit(&xs, &ys, 1e-6);
            let updates: Vec<(usize, f64)> = (0..n)
                .filter(|&i| observed[k][i].is_none())
                .map(|i| (i, b + w.iter().zip(design(i)).map(|(a, x)| a * x).sum::<f64>()))
                .collect();
            for (i, v) in updates {
                if v.is_finite() {
                    change = change.max((v - filled[k][i]).abs());
                    filled[k][i] = v;
                }
            }
        }
        if change < 1e-9 {
            break;
        }
    }
    let width = d.n_attributes();
    let rows = (0..n)
        .map(|i| {
            let mut row = d.rows()[i].clone();
            for (k, &j) in cols.iter().enumerate() {
                if row[j].is_none() {
                    row[j] = Some(Value::Numeric(filled[k][i]));
                }
            }
            row
        })
        .collect();
    let out = rebuild(d, d.attributes().to_vec(), rows, d.class_index())?;
    let mut fills = vec![None; width];
    for (k, &j) in cols.iter().enumerate() {
        fills[j] = Some(Value::Numeric(means[k]));
    }
    Ok((FittedTransform::Fill { fills }, out))
}

pub(crate) fn fit_iqr_clipper(d: &Dataset, factor: f64) -> Result<Fitted, FailureReason> {
    let mut fences = vec![None; d.n_attributes()];
    for j in numeric_features(d) {
        let mut xs = present_numbers(d, j);
        xs.sort_by(f64::total_cmp);
        let (q1, q3) = (quantile(&xs, 0.25), quantile(&xs, 0.75));
        let iqr = q3 - q1;
        if !(iqr > 0.0) {
            continue;
        }
        let (lo, hi) = (q1 - factor * iqr, q3 + factor * iqr);
        let clipped = xs.iter().map(|x| x.clamp(lo, hi));
        let first = lo.max(xs[0]).min(hi);
        if clipped.clone().all(|x| x == first) {
            continue;
        }
        fences[j] = Some((lo, hi));
    }
    finish(FittedTransform::Clip { fences }, d)
}

pub(crate) fn fit_affine(d: &Dataset, scale: bool) -> Result<Fitted, FailureReason> {
    let mut params = vec![None; d.n_attributes()];
    for j in numeric_features(d) {
        let xs = present_numbers(d, j);
        let m = mean(&xs);
        let s = std_dev(&xs, m);
        params[j] = Some((m, if scale && s > 0.0 { s } else { 1.0 }));
    }
    finish(FittedTransform::Affine { params }, d)
}

pub(crate) fn fit_discretize(d: &Dataset, bins: usize) -> Result<Fitted, FailureReason> {
    let bins = bins.max(1);
    let mut attributes = d.attributes().to_vec();
    let mut plan = vec![None; d.n_attributes()];
    for j in numeric_features(d) {
        let xs = present_numbers(d, j);
        let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (min, width) = if xs.is_empty() { (0.0, 0.0) } else { (min, (max - min) / bins as f64) };
        plan[j] = Some((min, width, bins));
        attributes[j] = Attribute::nominal(attributes[j].name.clone(), (1..=bins).map(|b| format!("bin{b}")));
    }
    finish(FittedTransform::Bin { attributes, bins: plan }, d)
}

pub(crate) fn fit_nominal_to_binary(d: &Dataset) -> Result<Fitted, FailureReason> {
    let mut attributes = Vec::new();
    let mut categories = vec![None; d.n_attributes()];
    for (j, attr) in d.attributes().iter().enumerate() {
        match &attr.kind {
            AttributeKind::Nominal(cats) if j != d.class_index() => {
                let mut seen = vec![false; cats.len()];
                for v in d.column(j).flatten() {
                    if let Value::Nominal(c) = v {
                        seen[*c as usize] = true;
                    }
                }
                let observed: Vec<u32> = (0..cats.len() as u32).filter(|&c| seen[c as usize]).collect();
                for &c in &observed {
                    attributes.push(Attribute::numeric(format!("{}={}", attr.name, cats[c as usize])));
                }
                categories[j] = Some(observed);
            }
            _ => attributes.push(attr.clone()),
        }
    }
    finish(FittedTransform::Indicators { attributes, categories }, d)
}

/// Projection of the numeric features onto principal axes. With `whiten`,
/// every axis with a non-zero eigenvalue is kept and scaled to unit variance;
/// otherwise the leading axes covering `coverage` of the variance are kept.
pub(crate) fn fit_projection(
    d: &Dataset,
    whiten: bool,
    coverage: f64,
    seed: u64,
    deadline: &Deadline,
) -> Result<Fitted, FailureReason> {
    let inputs = numeric_features(d);
    let rows: Vec<Vec<f64>> = d
        .rows()
        .iter()
        .map(|r| inputs.iter().map(|&j| r[j].as_ref().and_then(Value::as_f64).unwrap_or(0.0)).collect())
        .collect();
    let means: Vec<f64> = (0..inputs.len()).map(|k| mean(&rows.iter().map(|r| r[k]).collect::<Vec<_>>())).collect();
    let cov = covariance(&rows, &means);
    let pairs = power_eigen(&cov, 1e-9, seed, deadline)?;
    let total: f64 = pairs.iter().map(|p| p.0).sum();
    let mut components = Vec::new();
    let mut covered = 0.0;
    for (lambda, v) in pairs {
        if whiten {
            let s = lambda.sqrt();
            components.push(v.iter().map(|x| x / s).collect());
        } else {
            if covered >= coverage * total {
                break;
            }
            covered += lambda;
            components.push(v);
        }
    }
    let passthrough: Vec<usize> = d.feature_indices().filter(|j| !inputs.contains(j)).collect();
    let prefix = if whiten { "ic" } else { "pc" };
    let mut attributes: Vec<Attribute> = passthrough.iter().map(|&j| d.attributes()[j].clone()).collect();
    for k in 0..components.len() {
        attributes.push(Attribute::numeric(format!("{prefix}{}", k + 1)));
    }
    let class_index = attributes.len();
    attributes.push(d.class_attribute().clone());
    let projection =
        Projection { attributes, class_index, passthrough, inputs, means, components, source_class: d.class_index() };
    finish(FittedTransform::Project(projection), d)
}

pub(crate) fn fit_class_balancer(d: &Dataset, seed: u64) -> Result<Fitted, FailureReason> {
    let k = d.class_attribute().kind.categories().map_or(0, <[String]>::len);
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, cell) in d.class_column().enumerate() {
        if let Some(Value::Nominal(c)) = cell {
            groups[*c as usize].push(i);
        }
    }
    let target = groups.iter().map(Vec::len).max().unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..d.n_rows()).collect();
    for g in groups.iter().filter(|g| !g.is_empty()) {
        for _ in g.len()..target {
            indices.push(g[rng.gen_range(0..g.len())]);
        }
    }
    Ok((FittedTransform::Identity, d.select_rows(&indices)))
}

pub(crate) fn fit_resample(d: &Dataset, extra_percent: f64, seed: u64) -> Result<Fitted, FailureReason> {
    let n = d.n_rows();
    let extra = (n as f64 * extra_percent / 100.0).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..n).collect();
    if n > 0 {
        indices.extend((0..extra).map(|_| rng.gen_range(0..n)));
    }
    Ok((FittedTransform::Identity, d.select_rows(&indices)))
}
