use super::{AttributeKind, Dataset, Value};
use crate::characteristic::{Characteristic as Ch, CharacteristicToken};

/// Number of distinct present values in a column, saturating at `Many`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum DistinctCount {
    Zero,
    One,
    Two,
    Many,
}

pub fn distinct_present_values<'a>(column: impl Iterator<Item = Option<&'a Value>>) -> DistinctCount {
    let mut seen: Vec<&Value> = Vec::with_capacity(2);
    for value in column.flatten() {
        if seen.contains(&value) {
            continue;
        }
        if seen.len() == 2 {
            return DistinctCount::Many;
        }
        seen.push(value);
    }
    match seen.len() {
        0 => DistinctCount::Zero,
        1 => DistinctCount::One,
        _ => DistinctCount::Two,
    }
}

/// Computes the sixteen characteristics of a dataset. `PREDICTIVE_MODEL` is
/// never set: a dataset is not a model.
pub fn extract_token(d: &Dataset) -> CharacteristicToken {
    let mut token = CharacteristicToken::empty();

    let class = d.class_attribute();
    let class_distinct = distinct_present_values(d.class_column());
    match &class.kind {
        AttributeKind::Numeric => token.set(Ch::NumericClass, true),
        AttributeKind::Nominal(_) => {
            token.set(Ch::NominalClass, true);
            token.set(Ch::SymbolicClass, true);
            token.set(Ch::BinaryClass, class_distinct == DistinctCount::Two);
            token.set(Ch::UnaryClass, class_distinct == DistinctCount::One);
        }
        AttributeKind::StringKind => {
            token.set(Ch::StringClass, true);
            token.set(Ch::SymbolicClass, true);
        }
        AttributeKind::DateKind => token.set(Ch::DateClass, true),
    }
    if d.class_column().any(|c| c.is_none()) {
        token.set(Ch::MissingClassValues, true);
    }

    for j in d.feature_indices() {
        let attr = &d.attributes()[j];
        let distinct = distinct_present_values(d.column(j));
        match &attr.kind {
            AttributeKind::Numeric => token.set(Ch::NumericAttributes, true),
            AttributeKind::Nominal(cats) => {
                token.set(Ch::NominalAttributes, true);
                if cats.len() == 2 {
                    token.set(Ch::BinaryAttributes, true);
                }
                if distinct == DistinctCount::Zero {
                    token.set(Ch::EmptyNominalAttributes, true);
                }
            }
            AttributeKind::DateKind => token.set(Ch::DateAttributes, true),
            AttributeKind::StringKind => {}
        }
        if distinct == DistinctCount::One {
            token.set(Ch::UnaryAttributes, true);
        }
        if d.column(j).any(|c| c.is_none()) {
            token.set(Ch::MissingValues, true);
        }
    }
    token
}
