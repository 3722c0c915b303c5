use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ValidationError;
use crate::model::{Dataset, Direction, Relation};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelKind {
    #[default]
    Disrpt,
    Orig,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabelFilter {
    pub value: String,
    #[serde(default)]
    pub negated: bool,
    #[serde(default)]
    pub which: LabelKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Negatable<T> {
    pub value: T,
    #[serde(default)]
    pub negated: bool,
}

impl<T> Negatable<T> {
    pub fn is(value: T) -> Self {
        Negatable { value, negated: false }
    }

    pub fn not(value: T) -> Self {
        Negatable { value, negated: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Presence {
    Present,
    Absent,
}

/// Which relation-level filter a [`Filters`] field is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterKind {
    Label,
    Direction,
    SignalType,
    SignalSubtype,
    AnySignal,
}

impl FilterKind {
    pub const ALL: [FilterKind; 5] = [
        FilterKind::Label,
        FilterKind::Direction,
        FilterKind::SignalType,
        FilterKind::SignalSubtype,
        FilterKind::AnySignal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FilterKind::Label => "label",
            FilterKind::Direction => "direction",
            FilterKind::SignalType => "signal_type",
            FilterKind::SignalSubtype => "signal_subtype",
            FilterKind::AnySignal => "any_signal",
        }
    }

    pub fn parse(s: &str) -> Option<FilterKind> {
        FilterKind::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Relation-level restrictions set through the query form. A negated
/// signal filter excludes every relation carrying any signal of that
/// type (or subtype).
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Filters {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<LabelFilter>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Negatable<Direction>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signal_type: Option<Negatable<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signal_subtype: Option<Negatable<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub any_signal: Option<Presence>,
}

impl Filters {
    pub fn is_empty(&self) -> bool {
        *self == Filters::default()
    }

    pub fn is_set(&self, kind: FilterKind) -> bool {
        match kind {
            FilterKind::Label => self.label.is_some(),
            FilterKind::Direction => self.direction.is_some(),
            FilterKind::SignalType => self.signal_type.is_some(),
            FilterKind::SignalSubtype => self.signal_subtype.is_some(),
            FilterKind::AnySignal => self.any_signal.is_some(),
        }
    }

    /// Only the given filter, if set.
    pub fn only(&self, kind: FilterKind) -> Filters {
        let mut f = Filters::default();
        match kind {
            FilterKind::Label => f.label = self.label.clone(),
            FilterKind::Direction => f.direction = self.direction.clone(),
            FilterKind::SignalType => f.signal_type = self.signal_type.clone(),
            FilterKind::SignalSubtype => f.signal_subtype = self.signal_subtype.clone(),
            FilterKind::AnySignal => f.any_signal = self.any_signal,
        }
        f
    }

    /// These filters with `kind` cleared.
    pub fn without(&self, kind: FilterKind) -> Filters {
        let mut f = self.clone();
        match kind {
            FilterKind::Label => f.label = None,
            FilterKind::Direction => f.direction = None,
            FilterKind::SignalType => f.signal_type = None,
            FilterKind::SignalSubtype => f.signal_subtype = None,
            FilterKind::AnySignal => f.any_signal = None,
        }
        f
    }

    /// These filters with the `kind` filter inverted.
    pub fn negated(&self, kind: FilterKind) -> Filters {
        let mut f = self.clone();
        match kind {
            FilterKind::Label => {
                if let Some(l) = f.label.as_mut() {
                    l.negated = !l.negated;
                }
            }
            FilterKind::Direction => {
                if let Some(d) = f.direction.as_mut() {
                    d.negated = !d.negated;
                }
            }
            FilterKind::SignalType => {
                if let Some(s) = f.signal_type.as_mut() {
                    s.negated = !s.negated;
                }
            }
            FilterKind::SignalSubtype => {
                if let Some(s) = f.signal_subtype.as_mut() {
                    s.negated = !s.negated;
                }
            }
            FilterKind::AnySignal => {
                f.any_signal = f.any_signal.map(|p| match p {
                    Presence::Present => Presence::Absent,
                    Presence::Absent => Presence::Present,
                })
            }
        }
        f
    }

    pub fn accepts(&self, rel: &Relation) -> bool {
        if let Some(l) = &self.label {
            let label = match l.which {
                LabelKind::Disrpt => &rel.disrpt_label,
                LabelKind::Orig => &rel.orig_label,
            };
            if (*label == l.value) == l.negated {
                return false;
            }
        }
        if let Some(d) = &self.direction {
            if (rel.direction == d.value) == d.negated {
                return false;
            }
        }
        if let Some(t) = &self.signal_type {
            if rel.has_signal_type(&t.value) == t.negated {
                return false;
            }
        }
        if let Some(s) = &self.signal_subtype {
            if rel.has_signal_subtype(&s.value) == s.negated {
                return false;
            }
        }
        if let Some(p) = self.any_signal {
            if rel.signals.is_empty() == (p == Presence::Present) {
                return false;
            }
        }
        true
    }

    /// Rejects values absent from the dataset inventories.
    pub fn validate(&self, ds: &Dataset) -> Result<(), ValidationError> {
        self.validate_against(&[ds])
    }

    /// Accepts a value if any of the datasets knows it.
    pub fn validate_against(&self, datasets: &[&Dataset]) -> Result<(), ValidationError> {
        let check = |filter: &str, value: &str, pick: &dyn Fn(&Dataset) -> &BTreeSet<String>| {
            if datasets.iter().any(|ds| pick(ds).contains(value)) {
                return Ok(());
            }
            let allowed: BTreeSet<&String> = datasets.iter().flat_map(|ds| pick(ds)).collect();
            Err(ValidationError {
                filter: filter.to_string(),
                value: value.to_string(),
                allowed: allowed.into_iter().cloned().collect(),
            })
        };
        if let Some(l) = &self.label {
            match l.which {
                LabelKind::Disrpt => check("label", &l.value, &|ds| &ds.label_inventory.disrpt)?,
                LabelKind::Orig => check("orig_label", &l.value, &|ds| &ds.label_inventory.orig)?,
            }
        }
        if let Some(t) = &self.signal_type {
            check("signal_type", &t.value, &|ds| &ds.signal_inventory.types)?;
        }
        if let Some(s) = &self.signal_subtype {
            check("signal_subtype", &s.value, &|ds| &ds.signal_inventory.subtypes)?;
        }
        Ok(())
    }
}
