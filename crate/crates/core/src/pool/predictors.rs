//! Predictors and the bagging meta-predictor.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::linalg::{mean, ridge_fit, std_dev};
use super::FailureReason;
use crate::dataset::{AttributeKind, Dataset, Row, Value};
use crate::limits::Deadline;

/// One prediction for one row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Prediction {
    Category(u32),
    Number(f64),
    Symbol(String),
}

impl Prediction {
    /// `true` when the prediction equals the observed class value.
    pub fn matches(&self, actual: &Value) -> bool {
        match (self, actual) {
            (Prediction::Category(p), Value::Nominal(a)) => p == a,
            (Prediction::Number(p), Value::Numeric(a)) => p == a,
            (Prediction::Symbol(p), Value::Text(a) | Value::Date(a)) => p == a,
            _ => false,
        }
    }
}

/// A trained model, as produced by a predictor or meta-predictor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictiveModel {
    pub component_id: String,
    pub(crate) model: Model,
}

impl PredictiveModel {
    pub(crate) fn new(component_id: &str, model: Model) -> Self {
        PredictiveModel { component_id: component_id.to_string(), model }
    }

    pub fn predict(&self, row: &Row) -> Prediction {
        self.model.predict(row)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) enum Model {
    Constant(Prediction),
    Tree(Tree),
    NaiveBayes(NaiveBayes),
    Softmax(Softmax),
    Linear(Linear),
    Neighbours(Neighbours),
    Vote { n_classes: usize, members: Vec<Model> },
}

impl Model {
    fn predict(&self, row: &Row) -> Prediction {
        match self {
            Model::Constant(p) => p.clone(),
            Model::Tree(t) => Prediction::Category(t.predict(row)),
            Model::NaiveBayes(nb) => Prediction::Category(nb.predict(row)),
            Model::Softmax(s) => Prediction::Category(s.predict(row)),
            Model::Linear(l) => Prediction::Number(l.predict(row)),
            Model::Neighbours(k) => k.predict(row),
            Model::Vote { n_classes, members } => {
                let mut votes = vec![0usize; (*n_classes).max(1)];
                for m in members {
                    if let Prediction::Category(c) = m.predict(row) {
                        votes[c as usize] += 1;
                    }
                }
                Prediction::Category(argmax_usize(&votes) as u32)
            }
        }
    }
}

fn argmax_usize(xs: &[usize]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

fn argmax_f64(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

fn n_class_categories(d: &Dataset) -> usize {
    d.class_attribute().kind.categories().map_or(0, <[String]>::len)
}

/// Rows whose class is present.
fn labelled_rows(d: &Dataset) -> Vec<usize> {
    (0..d.n_rows()).filter(|&i| d.rows()[i][d.class_index()].is_some()).collect()
}

fn class_counts(d: &Dataset, rows: &[usize]) -> Vec<usize> {
    let mut counts = vec![0usize; n_class_categories(d).max(1)];
    for &i in rows {
        if let Some(Value::Nominal(c)) = &d.rows()[i][d.class_index()] {
            counts[*c as usize] += 1;
        }
    }
    counts
}

pub(crate) fn fit_zero_r(d: &Dataset) -> Model {
    let ci = d.class_index();
    let prediction = match &d.class_attribute().kind {
        AttributeKind::Numeric => {
            let ys: Vec<f64> = d.class_column().flatten().filter_map(Value::as_f64).collect();
            Prediction::Number(mean(&ys))
        }
        AttributeKind::Nominal(_) => {
            let rows: Vec<usize> = (0..d.n_rows()).collect();
            Prediction::Category(argmax_usize(&class_counts(d, &rows)) as u32)
        }
        AttributeKind::StringKind | AttributeKind::DateKind => {
            let mut values: Vec<&str> = d
                .rows()
                .iter()
                .filter_map(|r| match &r[ci] {
                    Some(Value::Text(s) | Value::Date(s)) => Some(s.as_str()),
                    _ => None,
                })
                .collect();
            values.sort_unstable();
            let mut best: Option<(&str, usize)> = None;
            let mut i = 0;
            while i < values.len() {
                let j = values[i..].iter().take_while(|v| **v == values[i]).count();
                if best.is_none_or(|(_, n)| j > n) {
                    best = Some((values[i], j));
                }
                i += j;
            }
            Prediction::Symbol(best.map_or_else(String::new, |(s, _)| s.to_string()))
        }
    };
    Model::Constant(prediction)
}

// ── decision tree ──────────────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum SplitTest {
    AtMost(f64),
    Equals(u32),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Node {
    Leaf(u32),
    Split { column: usize, test: SplitTest, missing_left: bool, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict(&self, row: &Row) -> u32 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf(c) => return *c,
                Node::Split { column, test, missing_left, left, right } => {
                    let go_left = match (&row[*column], test) {
                        (None, _) => *missing_left,
                        (Some(Value::Numeric(x)), SplitTest::AtMost(t)) => x <= t,
                        (Some(Value::Nominal(v)), SplitTest::Equals(c)) => v == c,
                        _ => *missing_left,
                    };
                    at = if go_left { *left } else { *right };
                }
            }
        }
    }
}

fn gini(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / t).powi(2)).sum::<f64>()
}

struct TreeBuilder<'a> {
    d: &'a Dataset,
    max_depth: usize,
    min_leaf: usize,
    n_classes: usize,
    features: Vec<usize>,
    nodes: Vec<Node>,
    deadline: &'a Deadline,
}

struct Candidate {
    score: f64,
    column: usize,
    test: SplitTest,
}

impl TreeBuilder<'_> {
    fn class_of(&self, i: usize) -> usize {
        match &self.d.rows()[i][self.d.class_index()] {
            Some(Value::Nominal(c)) => *c as usize,
            _ => 0,
        }
    }

    fn counts(&self, rows: &[usize]) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &i in rows {
            counts[self.class_of(i)] += 1;
        }
        counts
    }

    fn best_split(&self, rows: &[usize]) -> Option<Candidate> {
        let mut best: Option<Candidate> = None;
        for &j in &self.features {
            let present: Vec<usize> = rows.iter().copied().filter(|&i| self.d.rows()[i][j].is_some()).collect();
            if present.len() < 2 * self.min_leaf {
                continue;
            }
            let parent = self.counts(&present);
            let parent_gini = gini(&parent, present.len());
            match &self.d.attributes()[j].kind {
                AttributeKind::Numeric => {
                    let mut pairs: Vec<(f64, usize)> = present
                        .iter()
                        .map(|&i| (self.d.rows()[i][j].as_ref().and_then(Value::as_f64).unwrap_or(0.0), self.class_of(i)))
                        .collect();
                    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
                    let mut left = vec![0usize; self.n_classes];
                    let n = pairs.len();
                    for k in 0..n - 1 {
                        left[pairs[k].1] += 1;
                        if pairs[k].0 == pairs[k + 1].0 || k + 1 < self.min_leaf || n - k - 1 < self.min_leaf {
                            continue;
                        }
                        let right: Vec<usize> = parent.iter().zip(&left).map(|(p, l)| p - l).collect();
                        let nl = k + 1;
                        let score = parent_gini
                            - (nl as f64 * gini(&left, nl) + (n - nl) as f64 * gini(&right, n - nl)) / n as f64;
                        if best.as_ref().is_none_or(|b| score > b.score + 1e-12) {
                            let t = 0.5 * (pairs[k].0 + pairs[k + 1].0);
                            best = Some(Candidate { score, column: j, test: SplitTest::AtMost(t) });
                        }
                    }
                }
                AttributeKind::Nominal(cats) => {
                    for c in 0..cats.len() as u32 {
                        let mut left = vec![0usize; self.n_classes];
                        let mut nl = 0;
                        for &i in &present {
                            if self.d.rows()[i][j] == Some(Value::Nominal(c)) {
                                left[self.class_of(i)] += 1;
                                nl += 1;
                            }
                        }
                        let n = present.len();
                        if nl < self.min_leaf || n - nl < self.min_leaf {
                            continue;
                        }
                        let right: Vec<usize> = parent.iter().zip(&left).map(|(p, l)| p - l).collect();
                        let score = parent_gini
                            - (nl as f64 * gini(&left, nl) + (n - nl) as f64 * gini(&right, n - nl)) / n as f64;
                        if best.as_ref().is_none_or(|b| score > b.score + 1e-12) {
                            best = Some(Candidate { score, column: j, test: SplitTest::Equals(c) });
                        }
                    }
                }
                _ => {}
            }
        }
        best.filter(|b| b.score > 1e-12)
    }

    fn build(&mut self, rows: Vec<usize>, depth: usize) -> Result<usize, FailureReason> {
        self.deadline.check()?;
        let counts = self.counts(&rows);
        let majority = argmax_usize(&counts) as u32;
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf(majority));
        if pure || depth >= self.max_depth || rows.len() < 2 * self.min_leaf {
            return Ok(id);
        }
        let Some(split) = self.best_split(&rows) else { return Ok(id) };
        let (mut left, mut right, mut missing) = (Vec::new(), Vec::new(), Vec::new());
        for &i in &rows {
            match (&self.d.rows()[i][split.column], &split.test) {
                (None, _) => missing.push(i),
                (Some(Value::Numeric(x)), SplitTest::AtMost(t)) if x <= t => left.push(i),
                (Some(Value::Nominal(v)), SplitTest::Equals(c)) if v == c => left.push(i),
                _ => right.push(i),
            }
        }
        let missing_left = left.len() >= right.len();
        if missing_left {
            left.extend(missing);
        } else {
            right.extend(missing);
        }
        let l = self.build(left, depth + 1)?;
        let r = self.build(right, depth + 1)?;
        self.nodes[id] = Node::Split { column: split.column, test: split.test, missing_left, left: l, right: r };
        Ok(id)
    }
}

pub(crate) fn fit_tree(d: &Dataset, max_depth: usize, min_leaf: usize, deadline: &Deadline) -> Result<Model, FailureReason> {
    let mut builder = TreeBuilder {
        d,
        max_depth,
        min_leaf: min_leaf.max(1),
        n_classes: n_class_categories(d).max(1),
        features: d.feature_indices().collect(),
        nodes: Vec::new(),
        deadline,
    };
    builder.build(labelled_rows(d), 0)?;
    Ok(Model::Tree(Tree { nodes: builder.nodes }))
}

// ── naive Bayes ────────────────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum FeatureModel {
    /// Per-class (mean, variance).
    Gaussian { column: usize, params: Vec<(f64, f64)> },
    /// Per-class log-probabilities of each category.
    Categorical { column: usize, log_probs: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct NaiveBayes {
    log_priors: Vec<f64>,
    features: Vec<FeatureModel>,
}

impl NaiveBayes {
    fn predict(&self, row: &Row) -> u32 {
        let mut scores = self.log_priors.clone();
        for f in &self.features {
            match f {
                FeatureModel::Gaussian { column, params } => {
                    if let Some(Value::Numeric(x)) = &row[*column] {
                        for (s, (m, v)) in scores.iter_mut().zip(params) {
                            *s += -0.5 * ((x - m).powi(2) / v + v.ln());
                        }
                    }
                }
                FeatureModel::Categorical { column, log_probs } => {
                    if let Some(Value::Nominal(c)) = &row[*column] {
                        for (s, lp) in scores.iter_mut().zip(log_probs) {
                            *s += lp.get(*c as usize).copied().unwrap_or(0.0);
                        }
                    }
                }
            }
        }
        argmax_f64(&scores) as u32
    }
}

pub(crate) fn fit_naive_bayes(d: &Dataset, deadline: &Deadline) -> Result<Model, FailureReason> {
    let k = n_class_categories(d).max(1);
    let rows = labelled_rows(d);
    let counts = class_counts(d, &rows);
    let total = rows.len() as f64;
    let log_priors = counts.iter().map(|&c| ((c as f64 + 1.0) / (total + k as f64)).ln()).collect();
    let class_of = |i: usize| d.rows()[i][d.class_index()].as_ref().and_then(Value::as_category).unwrap_or(0) as usize;
    let mut features = Vec::new();
    for j in d.feature_indices() {
        deadline.check()?;
        match &d.attributes()[j].kind {
            AttributeKind::Numeric => {
                let all: Vec<f64> = rows.iter().filter_map(|&i| d.rows()[i][j].as_ref()?.as_f64()).collect();
                let overall = std_dev(&all, mean(&all)).powi(2);
                let floor = 1e-9 + 1e-3 * overall;
                let params = (0..k)
                    .map(|c| {
                        let xs: Vec<f64> = rows
                            .iter()
                            .filter(|&&i| class_of(i) == c)
                            .filter_map(|&i| d.rows()[i][j].as_ref()?.as_f64())
                            .collect();
                        let m = if xs.is_empty() { mean(&all) } else { mean(&xs) };
                        (m, std_dev(&xs, m).powi(2) + floor)
                    })
                    .collect();
                features.push(FeatureModel::Gaussian { column: j, params });
            }
            AttributeKind::Nominal(cats) => {
                let n_cats = cats.len().max(1);
                let mut table = vec![vec![0usize; n_cats]; k];
                for &i in &rows {
                    if let Some(Value::Nominal(v)) = &d.rows()[i][j] {
                        table[class_of(i)][*v as usize] += 1;
                    }
                }
                let log_probs = table
                    .iter()
                    .map(|row| {
                        let n: usize = row.iter().sum();
                        row.iter().map(|&c| ((c as f64 + 1.0) / (n as f64 + n_cats as f64)).ln()).collect()
                    })
                    .collect();
                features.push(FeatureModel::Categorical { column: j, log_probs });
            }
            _ => {}
        }
    }
    Ok(Model::NaiveBayes(NaiveBayes { log_priors, features }))
}

// ── numeric feature scaling shared by the linear models ────────────────

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Scaler {
    columns: Vec<usize>,
    means: Vec<f64>,
    scales: Vec<f64>,
}

impl Scaler {
    fn fit(d: &Dataset, rows: &[usize]) -> Scaler {
        let columns: Vec<usize> = d.feature_indices().filter(|&j| d.attributes()[j].kind.is_numeric()).collect();
        let mut means = Vec::new();
        let mut scales = Vec::new();
        for &j in &columns {
            let xs: Vec<f64> = rows.iter().filter_map(|&i| d.rows()[i][j].as_ref()?.as_f64()).collect();
            let m = mean(&xs);
            let s = std_dev(&xs, m);
            means.push(m);
            scales.push(if s > 0.0 { s } else { 1.0 });
        }
        Scaler { columns, means, scales }
    }

    /// Missing cells map to the column mean (zero after scaling).
    fn transform(&self, row: &Row) -> Vec<f64> {
        self.columns
            .iter()
            .zip(self.means.iter().zip(&self.scales))
            .map(|(&j, (m, s))| match &row[j] {
                Some(Value::Numeric(x)) => (x - m) / s,
                _ => 0.0,
            })
            .collect()
    }
}

// ── multinomial logistic regression ───────────────────────────────────

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct Softmax {
    scaler: Scaler,
    /// One (bias, weights) pair per class.
    weights: Vec<(f64, Vec<f64>)>,
}

impl Softmax {
    fn predict(&self, row: &Row) -> u32 {
        let x = self.scaler.transform(row);
        let scores: Vec<f64> =
            self.weights.iter().map(|(b, w)| b + w.iter().zip(&x).map(|(a, c)| a * c).sum::<f64>()).collect();
        argmax_f64(&scores) as u32
    }
}

pub(crate) fn fit_logistic(d: &Dataset, l2: f64, epochs: usize, deadline: &Deadline) -> Result<Model, FailureReason> {
    let k = n_class_categories(d).max(1);
    let rows = labelled_rows(d);
    let scaler = Scaler::fit(d, &rows);
    let xs: Vec<Vec<f64>> = rows.iter().map(|&i| scaler.transform(&d.rows()[i])).collect();
    let ys: Vec<usize> = rows
        .iter()
        .map(|&i| d.rows()[i][d.class_index()].as_ref().and_then(Value::as_category).unwrap_or(0) as usize)
        .collect();
    let dim = scaler.columns.len();
    let mut weights = vec![(0.0, vec![0.0; dim]); k];
    let n = xs.len().max(1) as f64;
    let rate = 0.5;
    for epoch in 0..epochs {
        if epoch % 8 == 0 {
            deadline.check()?;
        }
        let mut grads = vec![(0.0, vec![0.0; dim]); k];
        for (x, &y) in xs.iter().zip(&ys) {
            let scores: Vec<f64> =
                weights.iter().map(|(b, w)| b + w.iter().zip(x).map(|(a, c)| a * c).sum::<f64>()).collect();
            let top = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = scores.iter().map(|s| (s - top).exp()).collect();
            let z: f64 = exps.iter().sum();
            for c in 0..k {
                let err = exps[c] / z - if c == y { 1.0 } else { 0.0 };
                grads[c].0 += err;
                grads[c].1.iter_mut().zip(x).for_each(|(g, xi)| *g += err * xi);
            }
        }
        for ((b, w), (gb, gw)) in weights.iter_mut().zip(&grads) {
            *b -= rate * gb / n;
            w.iter_mut().zip(gw).for_each(|(wi, gi)| *wi -= rate * (gi / n + l2 * *wi));
        }
    }
    Ok(Model::Softmax(Softmax { scaler, weights }))
}

// ── ridge linear regression ───────────────────────────────────────────

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct Linear {
    scaler: Scaler,
    intercept: f64,
    weights: Vec<f64>,
}

impl Linear {
    fn predict(&self, row: &Row) -> f64 {
        let x = self.scaler.transform(row);
        self.intercept + self.weights.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>()
    }
}

pub(crate) fn fit_linear(d: &Dataset, ridge: f64, deadline: &Deadline) -> Result<Model, FailureReason> {
    let rows = labelled_rows(d);
    let scaler = Scaler::fit(d, &rows);
    let xs: Vec<Vec<f64>> = rows.iter().map(|&i| scaler.transform(&d.rows()[i])).collect();
    let ys: Vec<f64> =
        rows.iter().map(|&i| d.rows()[i][d.class_index()].as_ref().and_then(Value::as_f64).unwrap_or(0.0)).collect();
    deadline.check()?;
    let (intercept, weights) = if xs.is_empty() { (0.0, vec![0.0; scaler.columns.len()]) } else { ridge_fit(&xs, &ys, ridge) };
    Ok(Model::Linear(Linear { scaler, intercept, weights }))
}

// ── k nearest neighbours ──────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Column {
    Numeric { column: usize, min: f64, range: f64 },
    Nominal { column: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct Neighbours {
    k: usize,
    columns: Vec<Column>,
    training: Vec<Row>,
    targets: Vec<Prediction>,
    n_classes: usize,
}

impl Neighbours {
    fn distance(&self, a: &Row, b: &Row) -> f64 {
        self.columns
            .iter()
            .map(|c| match c {
                Column::Numeric { column, min, range } => match (&a[*column], &b[*column]) {
                    (Some(Value::Numeric(x)), Some(Value::Numeric(y))) => ((x - min) / range - (y - min) / range).powi(2),
                    _ => 1.0,
                },
                Column::Nominal { column } => match (&a[*column], &b[*column]) {
                    (Some(x), Some(y)) if x == y => 0.0,
                    _ => 1.0,
                },
            })
            .sum()
    }

    fn predict(&self, row: &Row) -> Prediction {
        if self.training.is_empty() {
            return if self.n_classes > 0 { Prediction::Category(0) } else { Prediction::Number(0.0) };
        }
        let mut dist: Vec<(f64, usize)> =
            self.training.iter().enumerate().map(|(i, t)| (self.distance(row, t), i)).collect();
        dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let nearest = &dist[..self.k.min(dist.len())];
        if self.n_classes > 0 {
            let mut votes = vec![0usize; self.n_classes];
            for &(_, i) in nearest {
                if let Prediction::Category(c) = self.targets[i] {
                    votes[c as usize] += 1;
                }
            }
            Prediction::Category(argmax_usize(&votes) as u32)
        } else {
            let ys: Vec<f64> =
                nearest.iter().filter_map(|&(_, i)| if let Prediction::Number(y) = self.targets[i] { Some(y) } else { None }).collect();
            Prediction::Number(mean(&ys))
        }
    }
}

pub(crate) fn fit_knn(d: &Dataset, k: usize, deadline: &Deadline) -> Result<Model, FailureReason> {
    let rows = labelled_rows(d);
    let mut columns = Vec::new();
    for j in d.feature_indices() {
        match &d.attributes()[j].kind {
            AttributeKind::Numeric => {
                let xs: Vec<f64> = rows.iter().filter_map(|&i| d.rows()[i][j].as_ref()?.as_f64()).collect();
                let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
                let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let (min, range) = if xs.is_empty() || max <= min { (0.0, 1.0) } else { (min, max - min) };
                columns.push(Column::Numeric { column: j, min, range });
            }
            AttributeKind::Nominal(_) => columns.push(Column::Nominal { column: j }),
            _ => {}
        }
    }
    deadline.check()?;
    let n_classes = n_class_categories(d);
    let targets = rows
        .iter()
        .map(|&i| match &d.rows()[i][d.class_index()] {
            Some(Value::Nominal(c)) => Prediction::Category(*c),
            Some(Value::Numeric(y)) => Prediction::Number(*y),
            _ => Prediction::Number(0.0),
        })
        .collect();
    let training = rows.iter().map(|&i| d.rows()[i].clone()).collect();
    Ok(Model::Neighbours(Neighbours { k: k.max(1), columns, training, targets, n_classes }))
}

// ── bagging ───────────────────────────────────────────────────────────

pub(crate) fn fit_bagging(
    d: &Dataset,
    n_estimators: usize,
    seed: u64,
    deadline: &Deadline,
    fit_base: impl Fn(&Dataset, &Deadline) -> Result<Model, FailureReason>,
) -> Result<Model, FailureReason> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = d.n_rows();
    let mut members = Vec::with_capacity(n_estimators);
    for _ in 0..n_estimators {
        deadline.check()?;
        let sample: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n.max(1))).take(n).collect();
        members.push(fit_base(&d.select_rows(&sample), deadline)?);
    }
    Ok(Model::Vote { n_classes: n_class_categories(d), members })
}
