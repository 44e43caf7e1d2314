//! Input checks the components run against the data they are handed.
//!
//! Each failing check names the characteristic it is tied to, which makes
//! the T-method's diagnostics comparable to the surrogate's.

use crate::characteristic::{Characteristic, CharacteristicSet};
use crate::dataset::{distinct_present_values, AttributeKind, Dataset, DistinctCount};

use super::FailureReason;

fn incompatible(characteristic: Characteristic, detail: String) -> FailureReason {
    FailureReason::Incompatibility { characteristic, detail }
}

/// Which class kinds a component accepts.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ClassKinds {
    pub numeric: bool,
    pub nominal: bool,
    pub string: bool,
    pub date: bool,
}

impl ClassKinds {
    pub const ANY: ClassKinds = ClassKinds { numeric: true, nominal: true, string: true, date: true };
    pub const NOMINAL: ClassKinds = ClassKinds { numeric: false, nominal: true, string: false, date: false };
    pub const NUMERIC: ClassKinds = ClassKinds { numeric: true, nominal: false, string: false, date: false };
}

pub(crate) fn require_class_kind(d: &Dataset, kinds: ClassKinds) -> Result<(), FailureReason> {
    let class = d.class_attribute();
    let (allowed, characteristic, word) = match class.kind {
        AttributeKind::Numeric => (kinds.numeric, Characteristic::NumericClass, "numeric"),
        AttributeKind::Nominal(_) => (kinds.nominal, Characteristic::NominalClass, "nominal"),
        AttributeKind::StringKind => (kinds.string, Characteristic::StringClass, "string"),
        AttributeKind::DateKind => (kinds.date, Characteristic::DateClass, "date"),
    };
    if allowed {
        Ok(())
    } else {
        Err(incompatible(characteristic, format!("class `{}` is {word}", class.name)))
    }
}

pub(crate) fn require_complete_class(d: &Dataset) -> Result<(), FailureReason> {
    if d.class_column().any(|c| c.is_none()) {
        return Err(incompatible(
            Characteristic::MissingClassValues,
            format!("class `{}` has missing values", d.class_attribute().name),
        ));
    }
    Ok(())
}

/// Rejects a nominal class observed with a single value.
pub(crate) fn require_several_class_values(d: &Dataset) -> Result<(), FailureReason> {
    if d.class_attribute().kind.is_nominal() && distinct_present_values(d.class_column()) == DistinctCount::One {
        return Err(incompatible(
            Characteristic::UnaryClass,
            format!("class `{}` takes a single value", d.class_attribute().name),
        ));
    }
    Ok(())
}

/// What a component tolerates among the non-class attributes.
#[derive(Debug, Clone, Copy)]
pub(crate) struct FeatureRules {
    pub nominal: bool,
    pub date: bool,
    pub missing: bool,
    pub empty_nominal: bool,
}

impl FeatureRules {
    pub const ANY: FeatureRules = FeatureRules { nominal: true, date: true, missing: true, empty_nominal: true };
    pub const NUMERIC_COMPLETE: FeatureRules =
        FeatureRules { nominal: false, date: false, missing: false, empty_nominal: false };
}

pub(crate) fn require_features(d: &Dataset, rules: FeatureRules) -> Result<(), FailureReason> {
    for j in d.feature_indices() {
        let attr = &d.attributes()[j];
        match &attr.kind {
            AttributeKind::Nominal(_) if !rules.nominal => {
                return Err(incompatible(
                    Characteristic::NominalAttributes,
                    format!("attribute `{}` is nominal", attr.name),
                ))
            }
            AttributeKind::Nominal(_)
                if !rules.empty_nominal && distinct_present_values(d.column(j)) == DistinctCount::Zero =>
            {
                return Err(incompatible(
                    Characteristic::EmptyNominalAttributes,
                    format!("nominal attribute `{}` has no values", attr.name),
                ))
            }
            AttributeKind::DateKind if !rules.date => {
                return Err(incompatible(Characteristic::DateAttributes, format!("attribute `{}` is a date", attr.name)))
            }
            _ => {}
        }
        if !rules.missing && d.column(j).any(|c| c.is_none()) {
            return Err(incompatible(
                Characteristic::MissingValues,
                format!("attribute `{}` has missing values", attr.name),
            ));
        }
    }
    Ok(())
}

/// The documented input contract of a component: the characteristics whose
/// presence makes it fail. Characteristics that always co-occur with a listed
/// one (e.g. BINARY_ATTRIBUTES with NOMINAL_ATTRIBUTES) are implied.
pub(crate) fn rejected_set(classes: ClassKinds, features: FeatureRules, extra: &[Characteristic]) -> CharacteristicSet {
    use Characteristic as C;
    let mut set: CharacteristicSet = extra.iter().copied().collect();
    for (ok, c) in [
        (classes.numeric, C::NumericClass),
        (classes.nominal, C::NominalClass),
        (classes.string, C::StringClass),
        (classes.date, C::DateClass),
        (features.nominal, C::NominalAttributes),
        (features.date, C::DateAttributes),
        (features.missing, C::MissingValues),
        (features.empty_nominal, C::EmptyNominalAttributes),
    ] {
        if !ok {
            set.insert(c);
        }
    }
    set
}
