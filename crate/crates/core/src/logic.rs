//! Strong Kleene three-valued logic.

use std::fmt;
use std::ops::{BitAnd, BitOr, Not};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Truth value of a belief predicate: known true, known false, or not known.
#[derive(Clone, Copy, Debug, Eq, PartialEq, Ord, PartialOrd, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TruthValue {
    False,
    True,
    /// Either true or false, but the agent does not know which.
    Unknown,
}

impl TruthValue {
    pub const ALL: [TruthValue; 3] = [TruthValue::False, TruthValue::True, TruthValue::Unknown];

    pub fn is_known(self) -> bool {
        self != TruthValue::Unknown
    }

    pub fn is_true(self) -> bool {
        self == TruthValue::True
    }

    /// Returns `Some(b)` for a known value.
    pub fn to_bool(self) -> Option<bool> {
        match self {
            TruthValue::True => Some(true),
            TruthValue::False => Some(false),
            TruthValue::Unknown => None,
        }
    }

    /// Information order: `Unknown` is below both known values, which are
    /// incomparable with each other.
    pub fn refines(self, other: TruthValue) -> bool {
        other == TruthValue::Unknown || self == other
    }

    pub fn and(self, other: TruthValue) -> TruthValue {
        self & other
    }

    pub fn or(self, other: TruthValue) -> TruthValue {
        self | other
    }

    /// Conjunction over an iterator; the empty conjunction is `True`.
    pub fn all<I: IntoIterator<Item = TruthValue>>(values: I) -> TruthValue {
        let mut acc = TruthValue::True;
        for v in values {
            acc = acc & v;
            if acc == TruthValue::False {
                break;
            }
        }
        acc
    }
}

impl From<bool> for TruthValue {
    fn from(b: bool) -> Self {
        if b {
            TruthValue::True
        } else {
            TruthValue::False
        }
    }
}

impl Not for TruthValue {
    type Output = TruthValue;

    fn not(self) -> TruthValue {
        match self {
            TruthValue::True => TruthValue::False,
            TruthValue::False => TruthValue::True,
            TruthValue::Unknown => TruthValue::Unknown,
        }
    }
}

impl BitAnd for TruthValue {
    type Output = TruthValue;

    fn bitand(self, other: TruthValue) -> TruthValue {
        match (self, other) {
            (TruthValue::False, _) | (_, TruthValue::False) => TruthValue::False,
            (TruthValue::True, TruthValue::True) => TruthValue::True,
            _ => TruthValue::Unknown,
        }
    }
}

impl BitOr for TruthValue {
    type Output = TruthValue;

    fn bitor(self, other: TruthValue) -> TruthValue {
        !(!self & !other)
    }
}

impl fmt::Display for TruthValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TruthValue::True => "true",
            TruthValue::False => "false",
            TruthValue::Unknown => "unknown",
        })
    }
}

impl FromStr for TruthValue {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "true" => Ok(TruthValue::True),
            "false" => Ok(TruthValue::False),
            "unknown" => Ok(TruthValue::Unknown),
            other => Err(format!("not a truth value: {other:?}")),
        }
    }
}
