//! Line-oriented raw invariant output.
//!
//! ```text
//! _bb4	v1 - v2 - v3 == 0
//! MAP
//! var	v1	n
//! loc	_bb4	4
//! ```
//!
//! Blank lines and lines starting with `#` are ignored.

use std::fmt::Write;

use crate::frontend::Cfa;
use crate::logic::{parse_aexp, parse_bexp, AExp, BExp};
use crate::witness::LocatedInvariant;

use super::{ExchangeError, NamespaceMap};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RawOutput {
    pub entries: Vec<(String, BExp)>,
    pub map: NamespaceMap,
}

fn field<'a>(
    parts: &mut impl Iterator<Item = &'a str>,
    line: usize,
    what: &str,
) -> Result<&'a str, ExchangeError> {
    parts
        .next()
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .ok_or_else(|| ExchangeError::Raw {
            line,
            message: format!("missing {what}"),
        })
}

pub fn parse_raw(text: &str) -> Result<RawOutput, ExchangeError> {
    let mut out = RawOutput::default();
    let mut in_map = false;
    for (i, l) in text.lines().enumerate() {
        let n = i + 1;
        let l = l.trim_end_matches('\r');
        if l.trim().is_empty() || l.trim_start().starts_with('#') {
            continue;
        }
        if l.trim() == "MAP" {
            in_map = true;
            continue;
        }
        let mut parts = l.split('\t');
        if !in_map {
            let key = field(&mut parts, n, "location key")?;
            let expr = field(&mut parts, n, "invariant")?;
            let b = parse_bexp(expr).map_err(|source| ExchangeError::Expr {
                text: expr.into(),
                source,
            })?;
            out.entries.push((key.to_string(), b));
            continue;
        }
        match field(&mut parts, n, "entry kind")? {
            "var" => {
                let name = field(&mut parts, n, "helper variable")?;
                let expr = field(&mut parts, n, "program expression")?;
                let a = parse_aexp(expr).map_err(|source| ExchangeError::Expr {
                    text: expr.into(),
                    source,
                })?;
                out.map.vars.insert(name.to_string(), a);
            }
            "loc" => {
                let key = field(&mut parts, n, "location key")?;
                let line = field(&mut parts, n, "line")?;
                let line = line.parse::<usize>().map_err(|_| ExchangeError::Raw {
                    line: n,
                    message: format!("bad line number `{line}`"),
                })?;
                out.map.locations.insert(key.to_string(), line);
            }
            other => {
                return Err(ExchangeError::Raw {
                    line: n,
                    message: format!("unknown map entry `{other}`"),
                })
            }
        }
    }
    Ok(out)
}

/// Writes invariants in a private namespace: variables become `v1, v2, ...` in symbol
/// order and loop heads become `_bb<line>`.
pub fn render_raw(cfa: &Cfa, invariants: &[LocatedInvariant]) -> String {
    let names: Vec<(String, String)> = cfa
        .symbols
        .names()
        .enumerate()
        .map(|(i, v)| (v.to_string(), format!("v{}", i + 1)))
        .collect();
    let rename = |b: &BExp| {
        b.rename_with(&mut |v| {
            names
                .iter()
                .find(|(p, _)| p == v)
                .map(|(_, h)| AExp::var(h.clone()))
        })
    };
    let mut s = String::new();
    for li in invariants {
        let _ = writeln!(s, "_bb{}\t{}", cfa.line(li.loop_head), rename(&li.invariant));
    }
    s.push_str("MAP\n");
    for (p, h) in &names {
        let _ = writeln!(s, "var\t{h}\t{p}");
    }
    for &h in &cfa.loop_heads {
        let _ = writeln!(s, "loc\t_bb{0}\t{0}", cfa.line(h));
    }
    s
}
