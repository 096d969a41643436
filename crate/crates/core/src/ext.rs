//! Extended reals `ℝ ∪ {+∞}`.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A value of `ℝ ∪ {+∞}`.
///
/// `+∞` is a distinguished variant; it never arises from floating point overflow.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    PosInfinity,
}

impl ExtReal {
    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(v),
            ExtReal::PosInfinity => None,
        }
    }

    /// `f64` view, with `+∞` mapped to `f64::INFINITY`.
    pub fn to_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }

    pub fn scale(self, t: f64) -> ExtReal {
        debug_assert!(t >= 0.0);
        match self {
            ExtReal::Finite(v) => ExtReal::Finite(t * v),
            ExtReal::PosInfinity if t == 0.0 => ExtReal::Finite(0.0),
            ExtReal::PosInfinity => ExtReal::PosInfinity,
        }
    }
}

impl std::ops::Add for ExtReal {
    type Output = ExtReal;

    fn add(self, rhs: ExtReal) -> ExtReal {
        match (self, rhs) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::Finite(a + b),
            _ => ExtReal::PosInfinity,
        }
    }
}

impl From<f64> for ExtReal {
    fn from(v: f64) -> Self {
        ExtReal::Finite(v)
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(v) => write!(f, "{v}"),
            ExtReal::PosInfinity => f.write_str("+inf"),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Repr {
    Number(f64),
    Text(String),
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(v) => Repr::Number(*v).serialize(s),
            ExtReal::PosInfinity => Repr::Text("+inf".into()).serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Number(v) => Ok(ExtReal::Finite(v)),
            Repr::Text(t) if t == "+inf" || t == "inf" => Ok(ExtReal::PosInfinity),
            Repr::Text(t) => Err(serde::de::Error::custom(format!("not an extended real: {t}"))),
        }
    }
}
