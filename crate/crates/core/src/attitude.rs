//! Attitude value types shared by ingestion, fusion and estimation.

use std::fmt;
use std::ops::Neg;

use serde::{Deserialize, Serialize};

/// Three-valued attitude: the label of a single comment, or a user's
/// comment-attitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "i64")]
pub enum Sign {
    Negative,
    Neutral,
    Positive,
}

impl Sign {
    pub fn value(self) -> i64 {
        match self {
            Sign::Negative => -1,
            Sign::Neutral => 0,
            Sign::Positive => 1,
        }
    }

    pub fn from_value(v: i64) -> Option<Self> {
        match v {
            -1 => Some(Sign::Negative),
            0 => Some(Sign::Neutral),
            1 => Some(Sign::Positive),
            _ => None,
        }
    }

    /// `None` for `Neutral`.
    pub fn polarity(self) -> Option<Polarity> {
        match self {
            Sign::Negative => Some(Polarity::Negative),
            Sign::Neutral => None,
            Sign::Positive => Some(Polarity::Positive),
        }
    }

    /// Sign of an integer sum.
    pub fn of_sum(sum: i64) -> Self {
        match sum.signum() {
            -1 => Sign::Negative,
            0 => Sign::Neutral,
            _ => Sign::Positive,
        }
    }
}

impl TryFrom<i64> for Sign {
    type Error = String;

    fn try_from(v: i64) -> Result<Self, Self::Error> {
        Sign::from_value(v).ok_or_else(|| format!("attitude label must be -1, 0 or 1, got {v}"))
    }
}

impl From<Sign> for i64 {
    fn from(s: Sign) -> i64 {
        s.value()
    }
}

impl Neg for Sign {
    type Output = Sign;

    fn neg(self) -> Sign {
        match self {
            Sign::Negative => Sign::Positive,
            Sign::Neutral => Sign::Neutral,
            Sign::Positive => Sign::Negative,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

/// Two-valued attitude: a like-attitude, or the response of a retained user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "i64")]
pub enum Polarity {
    Negative,
    Positive,
}

impl Polarity {
    pub fn value(self) -> i64 {
        match self {
            Polarity::Negative => -1,
            Polarity::Positive => 1,
        }
    }

    pub fn from_value(v: i64) -> Option<Self> {
        match v {
            -1 => Some(Polarity::Negative),
            1 => Some(Polarity::Positive),
            _ => None,
        }
    }

    pub fn sign(self) -> Sign {
        match self {
            Polarity::Negative => Sign::Negative,
            Polarity::Positive => Sign::Positive,
        }
    }

    pub fn is_positive(self) -> bool {
        self == Polarity::Positive
    }
}

impl TryFrom<i64> for Polarity {
    type Error = String;

    fn try_from(v: i64) -> Result<Self, Self::Error> {
        Polarity::from_value(v).ok_or_else(|| format!("attitude must be -1 or 1, got {v}"))
    }
}

impl From<Polarity> for i64 {
    fn from(p: Polarity) -> i64 {
        p.value()
    }
}

impl Neg for Polarity {
    type Output = Polarity;

    fn neg(self) -> Polarity {
        match self {
            Polarity::Negative => Polarity::Positive,
            Polarity::Positive => Polarity::Negative,
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

/// Overall attitude after fusing the comment and like signals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Overall {
    Negative,
    Neutral,
    Positive,
    /// The two signals point in opposite directions.
    Undefined,
}

impl Overall {
    pub fn polarity(self) -> Option<Polarity> {
        match self {
            Overall::Negative => Some(Polarity::Negative),
            Overall::Positive => Some(Polarity::Positive),
            Overall::Neutral | Overall::Undefined => None,
        }
    }
}

impl From<Sign> for Overall {
    fn from(s: Sign) -> Self {
        match s {
            Sign::Negative => Overall::Negative,
            Sign::Neutral => Overall::Neutral,
            Sign::Positive => Overall::Positive,
        }
    }
}

impl From<Polarity> for Overall {
    fn from(p: Polarity) -> Self {
        Overall::from(p.sign())
    }
}

impl Neg for Overall {
    type Output = Overall;

    fn neg(self) -> Overall {
        match self {
            Overall::Negative => Overall::Positive,
            Overall::Positive => Overall::Negative,
            other => other,
        }
    }
}

impl fmt::Display for Overall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Overall::Negative => f.write_str("-1"),
            Overall::Neutral => f.write_str("0"),
            Overall::Positive => f.write_str("1"),
            Overall::Undefined => f.write_str("undefined"),
        }
    }
}
