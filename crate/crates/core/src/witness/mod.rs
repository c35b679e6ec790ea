//! Correctness witnesses: automata over source-code guards whose states carry invariants.

mod graphml;
mod matching;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::frontend::{Branch, Cfa, LocId};
use crate::logic::{is_trivial, parse_bexp, BExp};

pub use graphml::{read_graphml, write_graphml};
pub use matching::{match_to_cfa, MatchOutcome};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GuardType {
    Then,
    Else,
    EnterFunction(String),
    EnterLoopHead,
    /// Taken only when no sibling guard matches.
    Otherwise,
}

impl fmt::Display for GuardType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GuardType::Then => f.write_str("then"),
            GuardType::Else => f.write_str("else"),
            GuardType::EnterFunction(name) => write!(f, "enterFunc({name})"),
            GuardType::EnterLoopHead => f.write_str("enterLoopHead"),
            GuardType::Otherwise => f.write_str("o/w"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SourceCodeGuard {
    pub startline: Option<usize>,
    pub endline: Option<usize>,
    pub guard_type: GuardType,
}

impl SourceCodeGuard {
    pub fn at(line: usize, guard_type: GuardType) -> Self {
        SourceCodeGuard {
            startline: Some(line),
            endline: Some(line),
            guard_type,
        }
    }

    pub fn covers(&self, line: usize) -> bool {
        match (self.startline, self.endline) {
            (None, None) => true,
            (Some(s), None) => line == s,
            (None, Some(e)) => line == e,
            (Some(s), Some(e)) => s <= line && line <= e,
        }
    }
}

/// A state invariant as written, plus its parsed form.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Invariant {
    pub text: String,
    pub expr: BExp,
}

impl Invariant {
    pub fn new(expr: BExp) -> Self {
        Invariant {
            text: expr.to_string(),
            expr,
        }
    }

    pub fn parse(text: &str) -> Result<Self, crate::logic::SyntaxError> {
        Ok(Invariant {
            text: text.to_string(),
            expr: parse_bexp(text)?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct WitnessState {
    pub id: String,
    pub invariant: Option<Invariant>,
    pub scope: Option<String>,
    /// Data of keys this implementation does not interpret, by key id.
    pub extra: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pub source: String,
    pub target: String,
    pub guard: SourceCodeGuard,
    pub extra: BTreeMap<String, String>,
}

/// Declaration of a data key not in the built-in set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeyDecl {
    pub domain: String,
    pub name: String,
    pub ty: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Metadata {
    pub producer: String,
    pub program_hash: String,
    pub creation_time: String,
    pub extra: BTreeMap<String, String>,
    pub extra_keys: BTreeMap<String, KeyDecl>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub states: Vec<WitnessState>,
    pub initial: String,
    pub transitions: Vec<Transition>,
    pub metadata: Metadata,
}

/// An invariant attached to a loop head of a particular CFA.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LocatedInvariant {
    pub loop_head: LocId,
    pub invariant: BExp,
    pub source: String,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum WitnessError {
    #[error("malformed XML: {0}")]
    Xml(String),
    #[error("witness has no initial state")]
    MissingInitial,
    #[error("transition {from} -> {to} refers to an unknown state")]
    DanglingEndpoint { from: String, to: String },
    #[error("state {state}: cannot parse invariant: {message}")]
    BadInvariant { state: String, message: String },
    #[error("state {state}: unsupported scope `{scope}`")]
    BadScope { state: String, scope: String },
    #[error("bad value `{value}` for key `{key}`")]
    BadData { key: String, value: String },
    #[error("duplicate state id `{0}`")]
    DuplicateState(String),
}

impl Witness {
    pub fn state(&self, id: &str) -> Option<&WitnessState> {
        self.states.iter().find(|s| s.id == id)
    }

    /// Non-trivial invariants in state order.
    pub fn invariants(&self) -> impl Iterator<Item = (&str, &Invariant)> {
        self.states
            .iter()
            .filter_map(|s| s.invariant.as_ref().map(|i| (s.id.as_str(), i)))
            .filter(|(_, i)| !is_trivial(&i.expr))
    }

    /// Builds a witness whose automaton mirrors the CFA, with invariants at loop heads.
    pub fn from_cfa(cfa: &Cfa, invariants: &BTreeMap<LocId, BExp>, producer: &str) -> Witness {
        let reach = cfa.reachable();
        let states = reach
            .iter()
            .map(|&l| {
                let inv = invariants.get(&l).filter(|_| cfa.is_loop_head(l));
                WitnessState {
                    id: format!("q{l}"),
                    invariant: inv.map(|e| Invariant::new(e.clone())),
                    scope: inv.map(|_| "main".to_string()),
                    extra: BTreeMap::new(),
                }
            })
            .collect();
        let transitions = cfa
            .edges
            .iter()
            .filter(|e| reach.contains(&e.source))
            .map(|e| {
                let ty = if cfa.is_loop_head(e.target) {
                    GuardType::EnterLoopHead
                } else {
                    match e.branch {
                        Branch::Then => GuardType::Then,
                        Branch::Else => GuardType::Else,
                        Branch::None => GuardType::Otherwise,
                    }
                };
                Transition {
                    source: format!("q{}", e.source),
                    target: format!("q{}", e.target),
                    guard: SourceCodeGuard::at(e.line, ty),
                    extra: BTreeMap::new(),
                }
            })
            .collect();
        Witness {
            states,
            initial: format!("q{}", cfa.initial),
            transitions,
            metadata: Metadata {
                producer: producer.to_string(),
                program_hash: cfa.source_hash.clone(),
                creation_time: now_iso8601(),
                ..Metadata::default()
            },
        }
    }
}

/// True iff every state invariant is absent, `true` or `false`.
pub fn is_trivial_witness(w: &Witness) -> bool {
    w.invariants().next().is_none()
}

/// Current UTC time as `YYYY-MM-DDTHH:MM:SSZ`.
pub fn now_iso8601() -> String {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs() as i64)
        .unwrap_or(0);
    let (days, rem) = (secs.div_euclid(86_400), secs.rem_euclid(86_400));
    // civil-from-days (Howard Hinnant)
    let z = days + 719_468;
    let era = z.div_euclid(146_097);
    let doe = z - era * 146_097;
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = doy - (153 * mp + 2) / 5 + 1;
    let m = if mp < 10 { mp + 3 } else { mp - 9 };
    let y = yoe + era * 400 + i64::from(m <= 2);
    format!(
        "{y:04}-{m:02}-{d:02}T{:02}:{:02}:{:02}Z",
        rem / 3600,
        rem % 3600 / 60,
        rem % 60
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with_invariants(invs: &[&str]) -> Witness {
        Witness {
            states: invs
                .iter()
                .enumerate()
                .map(|(i, t)| WitnessState {
                    id: format!("q{i}"),
                    invariant: Some(Invariant::parse(t).unwrap()),
                    scope: Some("main".into()),
                    extra: BTreeMap::new(),
                })
                .collect(),
            initial: "q0".into(),
            transitions: vec![],
            metadata: Metadata::default(),
        }
    }

    #[test]
    fn triviality() {
        assert!(is_trivial_witness(&with_invariants(&["true", "false"])));
        assert!(!is_trivial_witness(&with_invariants(&["true", "x >= 0"])));
        assert!(!is_trivial_witness(&with_invariants(&["n == x+y"])));
        assert!(is_trivial_witness(&with_invariants(&[])));
    }

    #[test]
    fn timestamp_shape() {
        let t = now_iso8601();
        assert_eq!(t.len(), 20);
        assert!(t.starts_with("20"));
        assert!(t.ends_with('Z'));
    }
}
