//! The sixteen dataset-characteristics and the bit vectors built over them.
//!
//! A [`CharacteristicToken`] is the Petri-net marking that flows between
//! transitions. [`CapabilityVector`] and [`EffectVector`] carry the logic of
//! one transition. All three are stored as 16-bit masks indexed by
//! [`Characteristic::index`].

use std::fmt;

use serde::de::{self, MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// One boolean property of a dataset (or of a pipeline stage output).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Characteristic {
    BinaryClass,
    NumericClass,
    DateClass,
    MissingClassValues,
    NominalClass,
    SymbolicClass,
    StringClass,
    UnaryClass,
    BinaryAttributes,
    DateAttributes,
    EmptyNominalAttributes,
    MissingValues,
    NominalAttributes,
    NumericAttributes,
    UnaryAttributes,
    PredictiveModel,
}

impl Characteristic {
    pub const COUNT: usize = 16;

    /// Table order; `ALL[c.index()] == c`.
    pub const ALL: [Characteristic; Self::COUNT] = [
        Characteristic::BinaryClass,
        Characteristic::NumericClass,
        Characteristic::DateClass,
        Characteristic::MissingClassValues,
        Characteristic::NominalClass,
        Characteristic::SymbolicClass,
        Characteristic::StringClass,
        Characteristic::UnaryClass,
        Characteristic::BinaryAttributes,
        Characteristic::DateAttributes,
        Characteristic::EmptyNominalAttributes,
        Characteristic::MissingValues,
        Characteristic::NominalAttributes,
        Characteristic::NumericAttributes,
        Characteristic::UnaryAttributes,
        Characteristic::PredictiveModel,
    ];

    /// Characteristics that describe the class attribute.
    pub const CLASS_SIDE: [Characteristic; 8] = [
        Characteristic::BinaryClass,
        Characteristic::NumericClass,
        Characteristic::DateClass,
        Characteristic::MissingClassValues,
        Characteristic::NominalClass,
        Characteristic::SymbolicClass,
        Characteristic::StringClass,
        Characteristic::UnaryClass,
    ];

    /// Characteristics that describe the non-class attributes.
    pub const ATTRIBUTE_SIDE: [Characteristic; 7] = [
        Characteristic::BinaryAttributes,
        Characteristic::DateAttributes,
        Characteristic::EmptyNominalAttributes,
        Characteristic::MissingValues,
        Characteristic::NominalAttributes,
        Characteristic::NumericAttributes,
        Characteristic::UnaryAttributes,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Characteristic::BinaryClass => "BINARY_CLASS",
            Characteristic::NumericClass => "NUMERIC_CLASS",
            Characteristic::DateClass => "DATE_CLASS",
            Characteristic::MissingClassValues => "MISSING_CLASS_VALUES",
            Characteristic::NominalClass => "NOMINAL_CLASS",
            Characteristic::SymbolicClass => "SYMBOLIC_CLASS",
            Characteristic::StringClass => "STRING_CLASS",
            Characteristic::UnaryClass => "UNARY_CLASS",
            Characteristic::BinaryAttributes => "BINARY_ATTRIBUTES",
            Characteristic::DateAttributes => "DATE_ATTRIBUTES",
            Characteristic::EmptyNominalAttributes => "EMPTY_NOMINAL_ATTRIBUTES",
            Characteristic::MissingValues => "MISSING_VALUES",
            Characteristic::NominalAttributes => "NOMINAL_ATTRIBUTES",
            Characteristic::NumericAttributes => "NUMERIC_ATTRIBUTES",
            Characteristic::UnaryAttributes => "UNARY_ATTRIBUTES",
            Characteristic::PredictiveModel => "PREDICTIVE_MODEL",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|c| c.name() == name)
    }

    pub fn is_class_side(self) -> bool {
        self.index() < 8
    }

    fn bit(self) -> u16 {
        1 << self.index()
    }
}

impl fmt::Display for Characteristic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A set of characteristics packed into a 16-bit mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct CharacteristicSet(u16);

impl CharacteristicSet {
    pub const EMPTY: CharacteristicSet = CharacteristicSet(0);
    pub const FULL: CharacteristicSet = CharacteristicSet(u16::MAX);

    pub fn from_bits(bits: u16) -> Self {
        CharacteristicSet(bits)
    }

    pub fn bits(self) -> u16 {
        self.0
    }

    pub fn contains(self, c: Characteristic) -> bool {
        self.0 & c.bit() != 0
    }

    pub fn insert(&mut self, c: Characteristic) {
        self.0 |= c.bit();
    }

    pub fn remove(&mut self, c: Characteristic) {
        self.0 &= !c.bit();
    }

    pub fn with(mut self, c: Characteristic) -> Self {
        self.insert(c);
        self
    }

    pub fn union(self, other: Self) -> Self {
        CharacteristicSet(self.0 | other.0)
    }

    pub fn intersection(self, other: Self) -> Self {
        CharacteristicSet(self.0 & other.0)
    }

    pub fn difference(self, other: Self) -> Self {
        CharacteristicSet(self.0 & !other.0)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Members in table order.
    pub fn iter(self) -> impl Iterator<Item = Characteristic> {
        Characteristic::ALL.into_iter().filter(move |c| self.contains(*c))
    }
}

impl FromIterator<Characteristic> for CharacteristicSet {
    fn from_iter<I: IntoIterator<Item = Characteristic>>(iter: I) -> Self {
        let mut set = CharacteristicSet::EMPTY;
        for c in iter {
            set.insert(c);
        }
        set
    }
}

/// The Petri-net token: a {0,1} value for each of the sixteen characteristics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct CharacteristicToken(CharacteristicSet);

impl CharacteristicToken {
    pub fn empty() -> Self {
        CharacteristicToken(CharacteristicSet::EMPTY)
    }

    pub fn from_set(set: CharacteristicSet) -> Self {
        CharacteristicToken(set)
    }

    pub fn from_active<I: IntoIterator<Item = Characteristic>>(active: I) -> Self {
        CharacteristicToken(active.into_iter().collect())
    }

    pub fn get(&self, c: Characteristic) -> bool {
        self.0.contains(c)
    }

    pub fn value(&self, c: Characteristic) -> u8 {
        u8::from(self.get(c))
    }

    pub fn set(&mut self, c: Characteristic, on: bool) {
        if on {
            self.0.insert(c);
        } else {
            self.0.remove(c);
        }
    }

    pub fn active(&self) -> CharacteristicSet {
        self.0
    }
}

/// Per-characteristic {0,1}: can the component consume inputs exhibiting it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct CapabilityVector(CharacteristicSet);

impl CapabilityVector {
    pub fn none() -> Self {
        CapabilityVector(CharacteristicSet::EMPTY)
    }

    pub fn from_set(set: CharacteristicSet) -> Self {
        CapabilityVector(set)
    }

    pub fn get(&self, c: Characteristic) -> bool {
        self.0.contains(c)
    }

    pub fn value(&self, c: Characteristic) -> u8 {
        u8::from(self.get(c))
    }

    pub fn set(&mut self, c: Characteristic, on: bool) {
        if on {
            self.0.insert(c);
        } else {
            self.0.remove(c);
        }
    }

    pub fn supported(&self) -> CharacteristicSet {
        self.0
    }
}

/// Per-characteristic {-1,0,1}: how a component changes a characteristic.
///
/// Stored as two disjoint masks so firing reduces to `(in | add) & !remove`,
/// which is exactly `clamp(in + effect, 0, 1)` per index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct EffectVector {
    add: CharacteristicSet,
    remove: CharacteristicSet,
}

impl EffectVector {
    pub fn neutral() -> Self {
        EffectVector::default()
    }

    pub fn get(&self, c: Characteristic) -> i8 {
        if self.add.contains(c) {
            1
        } else if self.remove.contains(c) {
            -1
        } else {
            0
        }
    }

    /// Values outside {-1,0,1} are rejected.
    pub fn set(&mut self, c: Characteristic, value: i8) -> Result<(), i8> {
        self.add.remove(c);
        self.remove.remove(c);
        match value {
            1 => self.add.insert(c),
            -1 => self.remove.insert(c),
            0 => {}
            other => return Err(other),
        }
        Ok(())
    }

    pub fn adds(&self) -> CharacteristicSet {
        self.add
    }

    pub fn removes(&self) -> CharacteristicSet {
        self.remove
    }

    pub fn apply(&self, token: CharacteristicToken) -> CharacteristicToken {
        CharacteristicToken::from_set(token.active().union(self.add).difference(self.remove))
    }
}

fn serialize_bits<S: Serializer>(
    serializer: S,
    value_of: impl Fn(Characteristic) -> i8,
) -> Result<S::Ok, S::Error> {
    let mut map = serializer.serialize_map(Some(Characteristic::COUNT))?;
    for c in Characteristic::ALL {
        map.serialize_entry(c.name(), &value_of(c))?;
    }
    map.end()
}

impl Serialize for CharacteristicToken {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serialize_bits(serializer, |c| self.value(c) as i8)
    }
}

struct TokenVisitor;

impl<'de> Visitor<'de> for TokenVisitor {
    type Value = CharacteristicToken;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("a map with exactly the sixteen characteristic names mapped to 0 or 1")
    }

    fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<Self::Value, A::Error> {
        let mut token = CharacteristicToken::empty();
        let mut seen = CharacteristicSet::EMPTY;
        while let Some((key, value)) = access.next_entry::<String, i64>()? {
            let c = Characteristic::from_name(&key)
                .ok_or_else(|| de::Error::custom(format!("unknown characteristic `{key}`")))?;
            if seen.contains(c) {
                return Err(de::Error::custom(format!("duplicate characteristic `{key}`")));
            }
            seen.insert(c);
            match value {
                0 | 1 => token.set(c, value == 1),
                other => {
                    return Err(de::Error::custom(format!(
                        "characteristic `{key}` has value {other}, expected 0 or 1"
                    )))
                }
            }
        }
        if seen != CharacteristicSet::FULL {
            let missing: Vec<_> = CharacteristicSet::FULL.difference(seen).iter().map(|c| c.name()).collect();
            return Err(de::Error::custom(format!("missing characteristics: {}", missing.join(", "))));
        }
        Ok(token)
    }
}

impl<'de> Deserialize<'de> for CharacteristicToken {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        deserializer.deserialize_map(TokenVisitor)
    }
}

impl fmt::Display for CharacteristicToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<_> = self.active().iter().map(|c| c.name()).collect();
        write!(f, "{{{}}}", names.join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip_in_table_order() {
        for (i, c) in Characteristic::ALL.iter().enumerate() {
            assert_eq!(c.index(), i);
            assert_eq!(Characteristic::from_name(c.name()), Some(*c));
        }
        assert_eq!(Characteristic::from_name("NOPE"), None);
    }

    #[test]
    fn class_and_attribute_sides_partition_all_but_predictive_model() {
        let class: CharacteristicSet = Characteristic::CLASS_SIDE.into_iter().collect();
        let attr: CharacteristicSet = Characteristic::ATTRIBUTE_SIDE.into_iter().collect();
        assert!(class.intersection(attr).is_empty());
        assert_eq!(
            class.union(attr).with(Characteristic::PredictiveModel),
            CharacteristicSet::FULL
        );
        assert!(class.iter().all(Characteristic::is_class_side));
    }

    #[test]
    fn token_json_has_all_sixteen_keys() {
        let token = CharacteristicToken::from_active([Characteristic::MissingValues]);
        let json = serde_json::to_value(token).unwrap();
        let obj = json.as_object().unwrap();
        assert_eq!(obj.len(), 16);
        assert_eq!(obj["MISSING_VALUES"], 1);
        assert_eq!(obj["NOMINAL_CLASS"], 0);
        let back: CharacteristicToken = serde_json::from_value(json).unwrap();
        assert_eq!(back, token);
    }

    #[test]
    fn token_json_rejects_extra_missing_and_out_of_range() {
        let mut obj = serde_json::to_value(CharacteristicToken::empty()).unwrap();
        obj["EXTRA"] = 0.into();
        assert!(serde_json::from_value::<CharacteristicToken>(obj).is_err());

        let mut obj = serde_json::to_value(CharacteristicToken::empty()).unwrap();
        obj.as_object_mut().unwrap().remove("UNARY_CLASS");
        let err = serde_json::from_value::<CharacteristicToken>(obj).unwrap_err();
        assert!(err.to_string().contains("UNARY_CLASS"));

        let mut obj = serde_json::to_value(CharacteristicToken::empty()).unwrap();
        obj["UNARY_CLASS"] = 2.into();
        assert!(serde_json::from_value::<CharacteristicToken>(obj).is_err());
    }

    #[test]
    fn effect_rejects_values_outside_range() {
        let mut e = EffectVector::neutral();
        assert_eq!(e.set(Characteristic::MissingValues, 2), Err(2));
        e.set(Characteristic::MissingValues, -1).unwrap();
        assert_eq!(e.get(Characteristic::MissingValues), -1);
        e.set(Characteristic::MissingValues, 1).unwrap();
        assert_eq!(e.get(Characteristic::MissingValues), 1);
        assert!(e.removes().is_empty());
    }
}
