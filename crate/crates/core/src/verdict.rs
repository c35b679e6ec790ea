//! Verification outcomes.

use std::fmt;

use crate::semantics::Counterexample;
use crate::witness::Witness;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// The property holds; optionally with a correctness witness.
    True(Option<Witness>),
    False(Counterexample),
    Unknown(String),
    Timeout,
}

impl Verdict {
    pub fn is_true(&self) -> bool {
        matches!(self, Verdict::True(_))
    }

    pub fn is_false(&self) -> bool {
        matches!(self, Verdict::False(_))
    }

    pub fn is_conclusive(&self) -> bool {
        self.is_true() || self.is_false()
    }

    pub fn kind(&self) -> VerdictKind {
        match self {
            Verdict::True(_) => VerdictKind::True,
            Verdict::False(_) => VerdictKind::False,
            Verdict::Unknown(_) => VerdictKind::Unknown,
            Verdict::Timeout => VerdictKind::Timeout,
        }
    }
}

/// A verdict without its evidence.
#[derive(
    Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum VerdictKind {
    True,
    False,
    Unknown,
    Timeout,
}

impl fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VerdictKind::True => "true",
            VerdictKind::False => "false",
            VerdictKind::Unknown => "unknown",
            VerdictKind::Timeout => "timeout",
        })
    }
}

impl std::str::FromStr for VerdictKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "true" => Ok(VerdictKind::True),
            "false" => Ok(VerdictKind::False),
            "unknown" => Ok(VerdictKind::Unknown),
            "timeout" => Ok(VerdictKind::Timeout),
            _ => Err(format!("unknown verdict `{s}`")),
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Unknown(why) if !why.is_empty() => write!(f, "unknown ({why})"),
            v => v.kind().fmt(f),
        }
    }
}
