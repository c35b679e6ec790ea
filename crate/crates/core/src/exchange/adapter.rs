//! Translates invariants over a helper's own names and locations into a witness for the
//! original program.

use std::collections::{BTreeMap, BTreeSet};

use indexmap::IndexMap;

use crate::frontend::{Cfa, LocId};
use crate::logic::{AExp, BExp};
use crate::witness::{LocatedInvariant, Witness};

use super::ExchangeError;

/// Helper variables to program expressions, and helper location keys to source lines.
///
/// An entry may refer to other helper variables (intermediate values); those are
/// resolved transitively.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NamespaceMap {
    pub vars: IndexMap<String, AExp>,
    pub locations: IndexMap<String, usize>,
}

impl NamespaceMap {
    pub fn identity(cfa: &Cfa) -> Self {
        NamespaceMap {
            vars: cfa
                .symbols
                .names()
                .map(|v| (v.to_string(), AExp::var(v)))
                .collect(),
            locations: IndexMap::new(),
        }
    }

    /// Checks acyclicity, injectivity of plain renamings, and that lines exist.
    pub fn validate(&self, cfa: &Cfa) -> Result<(), ExchangeError> {
        let mut seen: BTreeMap<&str, &str> = BTreeMap::new();
        for (k, v) in &self.vars {
            if let AExp::Var(p) = v {
                if !self.vars.contains_key(p.as_str()) {
                    if let Some(prev) = seen.insert(p, k) {
                        return Err(ExchangeError::NotInjective(prev.into(), k.clone(), p.clone()));
                    }
                }
            }
            self.resolve(k)?;
        }
        let last = cfa.locations.iter().map(|l| l.line).max().unwrap_or(0);
        for (key, &line) in &self.locations {
            if line == 0 || line > last {
                return Err(ExchangeError::BadLine {
                    key: key.clone(),
                    line,
                });
            }
        }
        Ok(())
    }

    /// Fully resolved image of helper variable `name`.
    pub fn resolve(&self, name: &str) -> Result<Option<AExp>, ExchangeError> {
        let mut visiting = BTreeSet::new();
        self.resolve_in(name, &mut visiting)
    }

    fn resolve_in(
        &self,
        name: &str,
        visiting: &mut BTreeSet<String>,
    ) -> Result<Option<AExp>, ExchangeError> {
        let Some(image) = self.vars.get(name) else {
            return Ok(None);
        };
        if !visiting.insert(name.to_string()) {
            return Err(ExchangeError::Cycle(name.to_string()));
        }
        let mut err = None;
        let out = image.rename_with(&mut |v| {
            if v == name || err.is_some() {
                return None;
            }
            match self.resolve_in(v, visiting) {
                Ok(r) => r,
                Err(e) => {
                    err = Some(e);
                    None
                }
            }
        });
        visiting.remove(name);
        match err {
            Some(e) => Err(e),
            None => Ok(Some(out)),
        }
    }
}

#[derive(Clone, Debug)]
pub struct AdaptOutcome {
    pub witness: Witness,
    pub invariants: Vec<LocatedInvariant>,
    pub diagnostics: Vec<String>,
}

/// Loop head enclosing the statements of `line`, if exactly one does.
fn snap(cfa: &Cfa, line: usize) -> Result<LocId, String> {
    let on_line: Vec<LocId> = cfa
        .loop_heads
        .iter()
        .copied()
        .filter(|&h| cfa.line(h) == line)
        .collect();
    if let [h] = on_line.as_slice() {
        return Ok(*h);
    }
    let heads: BTreeSet<LocId> = (0..cfa.locations.len())
        .filter(|&l| cfa.line(l) == line)
        .filter_map(|l| cfa.innermost_loop(l))
        .collect();
    match heads.len() {
        0 => Err(format!("line {line} is not inside a loop")),
        1 => Ok(*heads.iter().next().expect("one head")),
        _ => Err(format!("line {line} lies in {} different loops", heads.len())),
    }
}

/// Renames, snaps and packages raw `(location key, invariant)` pairs.
pub fn adapt(
    raw: &[(String, BExp)],
    nsmap: &NamespaceMap,
    cfa: &Cfa,
    producer: &str,
) -> AdaptOutcome {
    let mut diagnostics = Vec::new();
    let mut invariants: Vec<LocatedInvariant> = Vec::new();
    for (key, inv) in raw {
        let mut unmapped = BTreeSet::new();
        let mut failure = None;
        let renamed = inv.rename_with(&mut |v| match nsmap.resolve(v) {
            Ok(Some(e)) => Some(e),
            Ok(None) => {
                unmapped.insert(v.to_string());
                None
            }
            Err(e) => {
                failure = Some(e.to_string());
                None
            }
        });
        if let Some(f) = failure {
            diagnostics.push(format!("dropped `{inv}`: {f}"));
            continue;
        }
        if !unmapped.is_empty() {
            let names: Vec<String> = unmapped.into_iter().collect();
            diagnostics.push(format!("dropped `{inv}`: unmapped {}", names.join(", ")));
            continue;
        }
        let undeclared = cfa.symbols.undeclared(&renamed);
        if !undeclared.is_empty() {
            diagnostics.push(format!(
                "dropped `{inv}`: maps to unknown {}",
                undeclared.join(", ")
            ));
            continue;
        }
        let Some(&line) = nsmap.locations.get(key) else {
            diagnostics.push(format!("dropped `{inv}`: unknown location key `{key}`"));
            continue;
        };
        match snap(cfa, line) {
            Ok(h) => {
                if !invariants
                    .iter()
                    .any(|l| l.loop_head == h && l.invariant == renamed)
                {
                    invariants.push(LocatedInvariant {
                        loop_head: h,
                        invariant: renamed,
                        source: producer.to_string(),
                    });
                }
            }
            Err(why) => diagnostics.push(format!("dropped `{inv}`: {why}")),
        }
    }
    let mut by_head: BTreeMap<LocId, Vec<BExp>> = BTreeMap::new();
    for li in &invariants {
        by_head
            .entry(li.loop_head)
            .or_default()
            .push(li.invariant.clone());
    }
    let map = by_head
        .into_iter()
        .map(|(h, v)| (h, BExp::conj(v)))
        .collect();
    AdaptOutcome {
        witness: Witness::from_cfa(cfa, &map, producer),
        invariants,
        diagnostics,
    }
}
