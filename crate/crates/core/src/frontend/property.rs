use crate::logic::BExp;

use super::{Branch, Cfa, FrontendError, LocId, Operation, PropertyEncoding, SafetyProperty};

/// Where and how a property is written in the source text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PropertySite {
    /// Byte range of the whole encoding statement.
    pub start: usize,
    pub end: usize,
    pub line: usize,
    pub end_line: usize,
    pub style: PropertyEncoding,
    pub condition: BExp,
    pub location: LocId,
}

/// `!(φ)` becomes `φ`; anything else is negated.
pub fn strip_not(c: &BExp) -> BExp {
    match c {
        BExp::Not(inner) => (**inner).clone(),
        other => BExp::not(other.clone()),
    }
}

/// All safety properties encoded by error labels, ordered by location.
///
/// An error label reached only through the then-branch of `if (c)` at `ℓ` yields
/// `(ℓ, strip_not(c))`; any other error label at `m` yields `(m, false)`.
pub fn extract_property(cfa: &Cfa) -> Result<Vec<SafetyProperty>, FrontendError> {
    let mut props: Vec<SafetyProperty> = Vec::new();
    for e in cfa.edges.iter().filter(|e| e.op == Operation::ErrorLabel) {
        let m = e.source;
        let incoming: Vec<_> = cfa.in_edges(m).collect();
        let prop = match incoming.as_slice() {
            [g] if g.branch == Branch::Then && m != cfa.initial => match &g.op {
                Operation::Assume(c) => SafetyProperty {
                    location: g.source,
                    condition: strip_not(c),
                },
                _ => unguarded(m),
            },
            _ => unguarded(m),
        };
        if !props.contains(&prop) {
            props.push(prop);
        }
    }
    if props.is_empty() {
        return Err(FrontendError::NoProperty);
    }
    props.sort_by_key(|p| p.location);
    Ok(props)
}

fn unguarded(m: LocId) -> SafetyProperty {
    SafetyProperty {
        location: m,
        condition: BExp::False,
    }
}
