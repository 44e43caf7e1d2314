//! A small random forest regressor for the optimizer's quality model.
//! Features are 0/1 indicators, so every split is at 0.5.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Node {
    Leaf(f64),
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf(v) => return v,
                Node::Split { feature, threshold, left, right } => {
                    at = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }
}

pub struct Forest {
    trees: Vec<Tree>,
}

pub struct ForestParams {
    pub trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams { trees: 10, max_depth: 12, min_leaf: 1 }
    }
}

struct Builder<'a> {
    xs: &'a [Vec<f64>],
    ys: &'a [f64],
    params: &'a ForestParams,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
}

fn mean_of(ys: &[f64], rows: &[usize]) -> f64 {
    rows.iter().map(|&i| ys[i]).sum::<f64>() / rows.len().max(1) as f64
}

impl Builder<'_> {
    fn build(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        let mean = mean_of(self.ys, &rows);
        self.nodes.push(Node::Leaf(mean));
        if depth >= self.params.max_depth || rows.len() < 2 * self.params.min_leaf.max(1) {
            return id;
        }
        if rows.iter().all(|&i| self.ys[i] == self.ys[rows[0]]) {
            return id;
        }
        let width = self.xs[0].len();
        let mut features: Vec<usize> = (0..width).collect();
        features.shuffle(&mut self.rng);
        let mtry = (width / 3).max(1);
        let mut usable = 0;
        let total: f64 = rows.iter().map(|&i| self.ys[i]).sum();
        let n = rows.len() as f64;
        let mut best: Option<(f64, usize, f64)> = None;
        for &f in &features {
            if usable == mtry {
                break;
            }
            let (mut nl, mut left_sum) = (0usize, 0.0);
            for &i in &rows {
                if self.xs[i][f] <= 0.5 {
                    nl += 1;
                    left_sum += self.ys[i];
                }
            }
            // features constant at this node do not count towards those tried
            if nl == 0 || nl == rows.len() {
                continue;
            }
            usable += 1;
            if nl < self.params.min_leaf || rows.len() - nl < self.params.min_leaf {
                continue;
            }
            let nl_f = nl as f64;
            let right_sum = total - left_sum;
            // reduction in squared error, up to a constant
            let gain = left_sum * left_sum / nl_f + right_sum * right_sum / (n - nl_f) - total * total / n;
            if best.is_none_or(|b| gain > b.0 + 1e-12) {
                best = Some((gain, f, 0.5));
            }
        }
        let Some((gain, feature, threshold)) = best else { return id };
        if gain <= 1e-12 {
            return id;
        }
        let (l, r): (Vec<usize>, Vec<usize>) = rows.into_iter().partition(|&i| self.xs[i][feature] <= threshold);
        let left = self.build(l, depth + 1);
        let right = self.build(r, depth + 1);
        self.nodes[id] = Node::Split { feature, threshold, left, right };
        id
    }
}

impl Forest {
    /// Bootstrap-aggregated regression trees; each split tries a third of the
    /// features that vary at that node.
    pub fn fit(xs: &[Vec<f64>], ys: &[f64], params: &ForestParams, seed: u64) -> Forest {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = xs.len();
        let mut trees = Vec::with_capacity(params.trees);
        if n == 0 {
            return Forest { trees };
        }
        for _ in 0..params.trees {
            let rows: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            let mut b = Builder { xs, ys, params, rng: ChaCha8Rng::seed_from_u64(rng.gen()), nodes: Vec::new() };
            b.build(rows, 0);
            trees.push(Tree { nodes: b.nodes });
        }
        Forest { trees }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        if self.trees.is_empty() {
            return 0.0;
        }
        self.trees.iter().map(|t| t.predict(x)).sum::<f64>() / self.trees.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn learns_an_indicator() {
        let xs: Vec<Vec<f64>> = (0..40).map(|i| vec![f64::from(i % 2), f64::from(i % 3 == 0), 0.0]).collect();
        let ys: Vec<f64> = xs.iter().map(|x| if x[0] > 0.5 { 0.9 } else { 0.1 }).collect();
        let params = ForestParams { trees: 15, ..ForestParams::default() };
        let f = Forest::fit(&xs, &ys, &params, 3);
        assert!(f.predict(&[1.0, 0.0, 0.0]) > 0.6);
        assert!(f.predict(&[0.0, 1.0, 0.0]) < 0.4);
    }

    #[test]
    fn empty_forest_predicts_zero() {
        assert_eq!(Forest::fit(&[], &[], &ForestParams::default(), 0).predict(&[1.0]), 0.0);
    }
}
