//! Mini-C front end: source text to control-flow automaton.
//!
//! The accepted language is a single `int main()` procedure over bounded integer
//! variables (`int`, `unsigned`, `signed`), with assignments, `if`/`else`, `while`,
//! `break`/`continue`, `assume`, `assert`, `nondet()` inputs, parameterless calls and
//! `Error:` labels. Locations are numbered in statement order.

mod cfa;
mod loops;
mod lower;
mod property;

use std::fmt;

use thiserror::Error;

use crate::logic::{AExp, BExp, SyntaxError};

pub use cfa::{Branch, Cfa, Edge, EdgeId, LocId, Location};
pub use lower::{parse, parse_with_width};
pub use property::{extract_property, strip_not, PropertySite};

pub const DEFAULT_WIDTH: u32 = 8;

/// A program under verification.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub text: String,
    pub path: String,
}

impl Program {
    pub fn new(path: impl Into<String>, text: impl Into<String>) -> Self {
        Program {
            text: text.into(),
            path: path.into(),
        }
    }

    pub fn load(path: &std::path::Path) -> std::io::Result<Self> {
        Ok(Program {
            text: std::fs::read_to_string(path)?,
            path: path.display().to_string(),
        })
    }

    /// SHA-256 of the source text, hex encoded.
    pub fn hash(&self) -> String {
        source_hash(&self.text)
    }
}

pub fn source_hash(text: &str) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Operation {
    Assume(BExp),
    Assign(String, AExp),
    Havoc(String),
    Call(String),
    Return,
    ErrorLabel,
}

impl fmt::Display for Operation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operation::Assume(b) => write!(f, "assume({b})"),
            Operation::Assign(v, e) => write!(f, "{v} = {e}"),
            Operation::Havoc(v) => write!(f, "{v} = nondet()"),
            Operation::Call(name) => write!(f, "{name}()"),
            Operation::Return => f.write_str("return"),
            Operation::ErrorLabel => f.write_str("ERROR"),
        }
    }
}

/// A safety property: `condition` must hold whenever `location` is reached.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SafetyProperty {
    pub location: LocId,
    pub condition: BExp,
}

/// How a safety property is written in the source.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PropertyEncoding {
    /// `if (!(φ)) { Error: return 1; }`
    ErrorLabel,
    /// `if (!(φ)) { verifier_error(); }`
    VerifierErrorCall,
    /// `assert(φ);`
    AssertStmt,
}

impl PropertyEncoding {
    pub const ALL: [PropertyEncoding; 3] = [
        PropertyEncoding::ErrorLabel,
        PropertyEncoding::VerifierErrorCall,
        PropertyEncoding::AssertStmt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PropertyEncoding::ErrorLabel => "error_label",
            PropertyEncoding::VerifierErrorCall => "verifier_error_call",
            PropertyEncoding::AssertStmt => "assert_stmt",
        }
    }
}

impl std::str::FromStr for PropertyEncoding {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PropertyEncoding::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| format!("unknown property encoding `{s}`"))
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum FrontendError {
    #[error("syntax error at {0}")]
    Syntax(#[from] SyntaxError),
    #[error("{line}:{col}: use of undeclared variable `{name}`")]
    Undeclared { name: String, line: usize, col: usize },
    #[error("{line}:{col}: `{name}` is already declared")]
    Redeclared { name: String, line: usize, col: usize },
    #[error("{line}:{col}: procedure definition `{name}` is not supported (only `int main()`)")]
    UnsupportedProcedure { name: String, line: usize, col: usize },
    #[error("program has no `main` procedure")]
    NoMain,
    #[error("{line}:{col}: {what} outside of a loop")]
    OutsideLoop {
        what: &'static str,
        line: usize,
        col: usize,
    },
    #[error("irreducible control flow through location {0}")]
    Irreducible(LocId),
    #[error("bit width {0} is outside 1..=32")]
    BadWidth(u32),
    #[error("program contains no error label")]
    NoProperty,
}
