//! Small generated datasets that together span the characteristic space.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{Attribute, AttributeKind, Cell, Dataset, Value};

pub const NAMES: [&str; 6] =
    ["numeric-clean", "numeric-missing", "nominal-attrs", "mixed-missing-class", "regression", "pathological"];

/// The numeric+missing dataset used in the worked validity example.
pub const NUMERIC_MISSING: &str = "numeric-missing";
/// The dataset with at least 10,000 cells.
pub const LARGE: &str = "numeric-clean";

pub fn bundled(name: &str) -> Option<Dataset> {
    let seed = 0x5eed_0000 + NAMES.iter().position(|n| *n == name)? as u64;
    let mut g = Gen { rng: ChaCha8Rng::seed_from_u64(seed) };
    let d = match name {
        "numeric-clean" => g.classification(name, 1000, 12, &[], 0.0, 3, 0.0),
        "numeric-missing" => g.classification(name, 240, 8, &[], 0.08, 3, 0.0),
        "nominal-attrs" => g.classification(name, 300, 4, &[2, 3, 4], 0.0, 2, 0.0),
        "mixed-missing-class" => g.classification(name, 300, 4, &[3, 2], 0.05, 3, 0.05),
        "regression" => g.regression(name, 300, 5),
        "pathological" => g.pathological(name, 200),
        _ => return None,
    };
    Some(d)
}

pub fn all_bundled() -> Vec<Dataset> {
    NAMES.iter().map(|n| bundled(n).expect("listed")).collect()
}

struct Gen {
    rng: ChaCha8Rng,
}

const LETTERS: [&str; 6] = ["a", "b", "c", "d", "e", "f"];

impl Gen {
    fn gauss(&mut self) -> f64 {
        let u: f64 = self.rng.gen_range(f64::EPSILON..1.0);
        let v: f64 = self.rng.gen();
        (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
    }

    fn maybe_missing(&mut self, v: Value, rate: f64) -> Cell {
        if rate > 0.0 && self.rng.gen_bool(rate) {
            None
        } else {
            Some(v)
        }
    }

    /// Numeric and nominal features with a class driven by a noisy linear score.
    #[allow(clippy::too_many_arguments)]
    fn classification(
        &mut self,
        name: &str,
        n: usize,
        numeric: usize,
        nominal: &[usize],
        missing: f64,
        classes: usize,
        class_missing: f64,
    ) -> Dataset {
        let weights: Vec<f64> = (0..numeric + nominal.len()).map(|_| self.gauss()).collect();
        let mut attributes: Vec<Attribute> = (0..numeric).map(|k| Attribute::numeric(format!("x{}", k + 1))).collect();
        for (k, &cats) in nominal.iter().enumerate() {
            attributes.push(Attribute::nominal(format!("n{}", k + 1), LETTERS[..cats].iter().copied()));
        }
        attributes.push(Attribute::nominal("class", LETTERS[..classes].iter().map(|l| format!("c{l}"))));
        let mut scored: Vec<(f64, Vec<Cell>)> = Vec::with_capacity(n);
        for _ in 0..n {
            let mut row = Vec::with_capacity(attributes.len());
            let mut score = 0.0;
            for w in weights.iter().take(numeric) {
                let x = self.gauss();
                score += w * x;
                row.push(self.maybe_missing(Value::Numeric(x), missing));
            }
            for (k, &cats) in nominal.iter().enumerate() {
                let c = self.rng.gen_range(0..cats as u32);
                score += weights[numeric + k] * (c as f64 - (cats as f64 - 1.0) / 2.0);
                row.push(self.maybe_missing(Value::Nominal(c), missing));
            }
            score += 0.5 * self.gauss();
            scored.push((score, row));
        }
        let mut order: Vec<f64> = scored.iter().map(|s| s.0).collect();
        order.sort_by(f64::total_cmp);
        let cuts: Vec<f64> = (1..classes).map(|k| order[k * n / classes]).collect();
        let rows = scored
            .into_iter()
            .map(|(score, mut row)| {
                let c = cuts.iter().filter(|&&t| score >= t).count() as u32;
                row.push(self.maybe_missing(Value::Nominal(c), class_missing));
                row
            })
            .collect();
        let class_index = attributes.len() - 1;
        Dataset::new(name, attributes, rows, class_index).expect("generated dataset is well formed")
    }

    fn regression(&mut self, name: &str, n: usize, numeric: usize) -> Dataset {
        let weights: Vec<f64> = (0..numeric).map(|_| self.gauss()).collect();
        let offsets = [0.0, 1.5, -1.0];
        let mut attributes: Vec<Attribute> = (0..numeric).map(|k| Attribute::numeric(format!("x{}", k + 1))).collect();
        attributes.push(Attribute::nominal("group", ["a", "b", "c"]));
        attributes.push(Attribute::numeric("target"));
        let rows = (0..n)
            .map(|_| {
                let mut row = Vec::with_capacity(numeric + 2);
                let mut y = 0.0;
                for w in &weights {
                    let x = self.gauss();
                    y += w * x;
                    row.push(Some(Value::Numeric(x)));
                }
                let g = self.rng.gen_range(0..3u32);
                y += offsets[g as usize] + 0.3 * self.gauss();
                row.push(Some(Value::Nominal(g)));
                row.push(Some(Value::Numeric(y)));
                row
            })
            .collect();
        let class_index = attributes.len() - 1;
        Dataset::new(name, attributes, rows, class_index).expect("generated dataset is well formed")
    }

    /// A constant numeric column and a nominal column with no values at all.
    fn pathological(&mut self, name: &str, n: usize) -> Dataset {
        let base = self.classification(name, n, 4, &[], 0.0, 3, 0.0);
        let (name, mut attributes, rows, _) = base.into_parts();
        let class = attributes.pop().expect("class");
        attributes.push(Attribute::numeric("constant"));
        attributes.push(Attribute::new("empty", AttributeKind::Nominal(vec!["a".into(), "b".into(), "c".into()])));
        attributes.push(class);
        let rows = rows
            .into_iter()
            .map(|mut row| {
                let y = row.pop().expect("class cell");
                row.push(Some(Value::Numeric(1.0)));
                row.push(None);
                row.push(y);
                row
            })
            .collect();
        let class_index = attributes.len() - 1;
        Dataset::new(name, attributes, rows, class_index).expect("generated dataset is well formed")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characteristic::Characteristic as C;
    use crate::dataset::extract_token;

    #[test]
    fn tokens_span_the_intended_branches() {
        let t = |n| extract_token(&bundled(n).unwrap());
        assert!(!t("numeric-clean").get(C::MissingValues));
        assert!(t("numeric-missing").get(C::MissingValues) && !t("numeric-missing").get(C::NominalAttributes));
        assert!(t("nominal-attrs").get(C::BinaryAttributes) && t("nominal-attrs").get(C::BinaryClass));
        assert!(t("mixed-missing-class").get(C::MissingClassValues));
        assert!(t("regression").get(C::NumericClass) && t("regression").get(C::NominalAttributes));
        let p = t("pathological");
        assert!(p.get(C::UnaryAttributes) && p.get(C::EmptyNominalAttributes));
        assert!(bundled(LARGE).unwrap().n_cells() >= 10_000);
        assert!(bundled("nope").is_none());
    }

    #[test]
    fn generation_is_deterministic_and_every_dataset_has_a_usable_numeric_column() {
        for d in all_bundled() {
            assert_eq!(Some(&d), bundled(d.name()).as_ref());
            for j in d.feature_indices().filter(|&j| d.attributes()[j].kind.is_numeric()) {
                assert!(d.column(j).any(|c| c.is_some()), "{} column {j}", d.name());
            }
        }
    }
}
