//! External condition vectors and their schema.
//!
//! Each training series carries an m-slot condition record mixing numeric
//! and categorical values (operating state, weather, waveform family, ...).
//! The schema fixes slot names, kinds, and category vocabularies; every
//! condition-consuming module validates against it.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// How a categorical slot's vocabulary is ordered.
#[derive(Debug, Clone, PartialEq)]
pub enum SlotKind {
    Numeric,
    /// Categories in vocabulary order. `ordinal` marks vocabularies whose
    /// order is a natural rank (low/medium/high), which permits numeric-style
    /// interpolation over the rank; nominal vocabularies do not.
    Categorical {
        vocabulary: Vec<String>,
        ordinal: bool,
    },
}

/// One condition slot.
#[derive(Debug, Clone, PartialEq)]
pub struct Slot {
    pub name: String,
    pub kind: SlotKind,
}

impl Slot {
    pub fn numeric(name: &str) -> Self {
        Slot {
            name: String::from(name),
            kind: SlotKind::Numeric,
        }
    }

    pub fn categorical(name: &str, vocabulary: &[&str]) -> Self {
        Slot {
            name: String::from(name),
            kind: SlotKind::Categorical {
                vocabulary: vocabulary.iter().map(|s| String::from(*s)).collect(),
                ordinal: false,
            },
        }
    }

    pub fn ordinal(name: &str, vocabulary: &[&str]) -> Self {
        Slot {
            name: String::from(name),
            kind: SlotKind::Categorical {
                vocabulary: vocabulary.iter().map(|s| String::from(*s)).collect(),
                ordinal: true,
            },
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self.kind, SlotKind::Numeric)
    }
}

/// Schema for an m-slot condition record.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionSchema {
    slots: Vec<Slot>,
}

impl ConditionSchema {
    pub fn new(slots: Vec<Slot>) -> Result<Self> {
        if slots.is_empty() {
            return Err(Error::Empty("condition schema"));
        }
        for (i, slot) in slots.iter().enumerate() {
            if slots[..i].iter().any(|s| s.name == slot.name) {
                return Err(Error::SchemaMismatch(alloc::format!(
                    "duplicate slot name {:?}",
                    slot.name
                )));
            }
            if let SlotKind::Categorical { vocabulary, .. } = &slot.kind {
                if vocabulary.is_empty() {
                    return Err(Error::SchemaMismatch(alloc::format!(
                        "slot {:?} has an empty vocabulary",
                        slot.name
                    )));
                }
                for (j, tok) in vocabulary.iter().enumerate() {
                    if vocabulary[..j].contains(tok) {
                        return Err(Error::SchemaMismatch(alloc::format!(
                            "slot {:?} repeats category {tok:?}",
                            slot.name
                        )));
                    }
                }
            }
        }
        Ok(ConditionSchema { slots })
    }

    /// Slot count (`m`).
    #[inline]
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    #[inline]
    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    #[inline]
    pub fn slot(&self, i: usize) -> &Slot {
        &self.slots[i]
    }

    pub fn slot_index(&self, name: &str) -> Option<usize> {
        self.slots.iter().position(|s| s.name == name)
    }

    pub fn numeric_slot_indices(&self) -> Vec<usize> {
        (0..self.slots.len())
            .filter(|&i| self.slots[i].is_numeric())
            .collect()
    }

    pub fn categorical_slot_indices(&self) -> Vec<usize> {
        (0..self.slots.len())
            .filter(|&i| !self.slots[i].is_numeric())
            .collect()
    }

    /// Position of `value` in the slot's vocabulary.
    pub fn category_index(&self, slot: usize, value: &str) -> Result<usize> {
        match &self.slots[slot].kind {
            SlotKind::Numeric => Err(Error::SchemaMismatch(alloc::format!(
                "slot {:?} is numeric, not categorical",
                self.slots[slot].name
            ))),
            SlotKind::Categorical { vocabulary, .. } => vocabulary
                .iter()
                .position(|v| v == value)
                .ok_or_else(|| Error::UnknownCategory {
                    slot: self.slots[slot].name.clone(),
                    value: String::from(value),
                }),
        }
    }

    /// Check a condition vector against this schema.
    pub fn validate(&self, c: &ConditionVector) -> Result<()> {
        if c.len() != self.len() {
            return Err(Error::SchemaMismatch(alloc::format!(
                "expected {} slots, got {}",
                self.len(),
                c.len()
            )));
        }
        for (i, value) in c.values().iter().enumerate() {
            match (&self.slots[i].kind, value) {
                (SlotKind::Numeric, ConditionValue::Numeric(v)) => {
                    if !v.is_finite() {
                        return Err(Error::NonFinite {
                            what: "numeric condition value",
                        });
                    }
                }
                (SlotKind::Categorical { .. }, ConditionValue::Category(tok)) => {
                    self.category_index(i, tok)?;
                }
                _ => {
                    return Err(Error::SchemaMismatch(alloc::format!(
                        "slot {:?} kind does not match its value",
                        self.slots[i].name
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn validate_all(&self, conditions: &[ConditionVector]) -> Result<()> {
        conditions.iter().try_for_each(|c| self.validate(c))
    }
}

/// A single slot value.
#[derive(Debug, Clone, PartialEq)]
pub enum ConditionValue {
    Numeric(f64),
    Category(String),
}

impl ConditionValue {
    pub fn as_numeric(&self) -> Option<f64> {
        match self {
            ConditionValue::Numeric(v) => Some(*v),
            ConditionValue::Category(_) => None,
        }
    }

    pub fn as_category(&self) -> Option<&str> {
        match self {
            ConditionValue::Numeric(_) => None,
            ConditionValue::Category(tok) => Some(tok),
        }
    }
}

/// An m-slot condition record (the per-series label vector).
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionVector {
    values: Vec<ConditionValue>,
}

impl ConditionVector {
    pub fn new(values: Vec<ConditionValue>) -> Self {
        ConditionVector { values }
    }

    /// All-numeric vector, mostly for tests and synthetic data.
    pub fn numeric(values: &[f64]) -> Self {
        ConditionVector {
            values: values.iter().map(|&v| ConditionValue::Numeric(v)).collect(),
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn values(&self) -> &[ConditionValue] {
        &self.values
    }

    #[inline]
    pub fn value(&self, slot: usize) -> &ConditionValue {
        &self.values[slot]
    }

    pub fn set(&mut self, slot: usize, value: ConditionValue) {
        self.values[slot] = value;
    }

    /// Slots on which `self` and `other` differ.
    pub fn differing_slots(&self, other: &ConditionVector) -> Vec<usize> {
        self.values
            .iter()
            .zip(other.values.iter())
            .enumerate()
            .filter_map(|(i, (a, b))| (a != b).then_some(i))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn mixed_schema() -> ConditionSchema {
        ConditionSchema::new(vec![
            Slot::numeric("temperature"),
            Slot::categorical("weather", &["sunny", "rainy"]),
        ])
        .unwrap()
    }

    #[test]
    fn validates_matching_vector() {
        let schema = mixed_schema();
        let c = ConditionVector::new(vec![
            ConditionValue::Numeric(21.5),
            ConditionValue::Category(String::from("rainy")),
        ]);
        schema.validate(&c).unwrap();
    }

    #[test]
    fn rejects_unknown_category() {
        let schema = mixed_schema();
        let c = ConditionVector::new(vec![
            ConditionValue::Numeric(21.5),
            ConditionValue::Category(String::from("foggy")),
        ]);
        assert!(matches!(
            schema.validate(&c),
            Err(Error::UnknownCategory { .. })
        ));
    }

    #[test]
    fn rejects_kind_mismatch_and_length() {
        let schema = mixed_schema();
        let swapped = ConditionVector::new(vec![
            ConditionValue::Category(String::from("sunny")),
            ConditionValue::Category(String::from("sunny")),
        ]);
        assert!(schema.validate(&swapped).is_err());
        let short = ConditionVector::numeric(&[1.0]);
        assert!(schema.validate(&short).is_err());
    }

    #[test]
    fn duplicate_slot_names_rejected() {
        let err = ConditionSchema::new(vec![Slot::numeric("a"), Slot::numeric("a")]).unwrap_err();
        assert!(matches!(err, Error::SchemaMismatch(_)));
    }

    #[test]
    fn differing_slots_found() {
        let a = ConditionVector::numeric(&[1.0, 2.0, 3.0]);
        let mut b = a.clone();
        b.set(2, ConditionValue::Numeric(9.0));
        assert_eq!(a.differing_slots(&b), vec![2]);
    }
}
