//! Simulation of a witness automaton against a CFA.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

use crate::frontend::{Branch, Cfa, Edge, LocId, Operation};
use crate::logic::{is_trivial, BExp};

use super::{GuardType, LocatedInvariant, Transition, Witness};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MatchOutcome {
    pub invariants: Vec<LocatedInvariant>,
    pub diagnostics: Vec<String>,
}

fn typed_match(t: &Transition, e: &Edge, cfa: &Cfa) -> bool {
    if !t.guard.covers(e.line) {
        return false;
    }
    match &t.guard.guard_type {
        GuardType::EnterLoopHead => cfa.is_loop_head(e.target),
        GuardType::Then => e.branch == Branch::Then,
        GuardType::Else => e.branch == Branch::Else,
        GuardType::EnterFunction(f) => matches!(&e.op, Operation::Call(n) if n == f),
        GuardType::Otherwise => false,
    }
}

/// Runs the witness and the CFA in lockstep and collects invariants of witness states
/// paired with loop heads.
///
/// A CFA edge follows the witness transitions whose typed guard matches it; if none
/// does, an `o/w` transition covering the edge's line; otherwise the witness stays in
/// its state. Several invariants meeting at one loop head are conjoined.
pub fn match_to_cfa(w: &Witness, cfa: &Cfa, force: bool) -> MatchOutcome {
    let mut out = MatchOutcome::default();
    if w.metadata.program_hash != cfa.source_hash {
        if w.metadata.program_hash.is_empty() {
            out.diagnostics
                .push("witness carries no program hash; matching by line numbers".into());
        } else if force {
            out.diagnostics
                .push("program hash mismatch; matching by line numbers (forced)".into());
        } else {
            out.diagnostics
                .push("program hash mismatch; witness ignored".into());
            return out;
        }
    }
    let index: HashMap<&str, usize> = w
        .states
        .iter()
        .enumerate()
        .map(|(i, s)| (s.id.as_str(), i))
        .collect();
    let mut outgoing: Vec<Vec<&Transition>> = vec![Vec::new(); w.states.len()];
    for t in &w.transitions {
        if let (Some(&s), Some(_)) = (index.get(t.source.as_str()), index.get(t.target.as_str())) {
            outgoing[s].push(t);
        }
    }
    let Some(&q0) = index.get(w.initial.as_str()) else {
        out.diagnostics.push("initial state missing".into());
        return out;
    };
    // entering `main` happens before the first CFA edge
    let mut starts = vec![q0];
    let mut i = 0;
    while i < starts.len() {
        for t in &outgoing[starts[i]] {
            if t.guard.guard_type == GuardType::EnterFunction("main".into()) {
                let q = index[t.target.as_str()];
                if !starts.contains(&q) {
                    starts.push(q);
                }
            }
        }
        i += 1;
    }
    let mut seen: HashSet<(usize, LocId)> = HashSet::new();
    let mut queue: VecDeque<(usize, LocId)> = VecDeque::new();
    for q in starts {
        if seen.insert((q, cfa.initial)) {
            queue.push_back((q, cfa.initial));
        }
    }
    let mut fired = false;
    while let Some((q, l)) = queue.pop_front() {
        for e in cfa.out_edges(l) {
            let typed: Vec<usize> = outgoing[q]
                .iter()
                .filter(|t| typed_match(t, e, cfa))
                .map(|t| index[t.target.as_str()])
                .collect();
            let next: Vec<usize> = if !typed.is_empty() {
                typed
            } else {
                let ow: Vec<usize> = outgoing[q]
                    .iter()
                    .filter(|t| t.guard.guard_type == GuardType::Otherwise && t.guard.covers(e.line))
                    .map(|t| index[t.target.as_str()])
                    .collect();
                if ow.is_empty() {
                    vec![q]
                } else {
                    ow
                }
            };
            for q2 in next {
                if q2 != q {
                    fired = true;
                }
                if seen.insert((q2, e.target)) {
                    queue.push_back((q2, e.target));
                }
            }
        }
    }
    if !fired && !w.transitions.is_empty() {
        out.diagnostics
            .push("no witness transition matched any CFA edge".into());
    }
    let mut per_head: BTreeMap<LocId, Vec<BExp>> = BTreeMap::new();
    let mut pairs: Vec<(usize, LocId)> = seen.into_iter().collect();
    pairs.sort();
    for (q, l) in pairs {
        if !cfa.is_loop_head(l) {
            continue;
        }
        if let Some(inv) = &w.states[q].invariant {
            if is_trivial(&inv.expr) {
                continue;
            }
            let list = per_head.entry(l).or_default();
            if !list.contains(&inv.expr) {
                list.push(inv.expr.clone());
            }
        }
    }
    for (&l, list) in &per_head {
        if list.len() > 1 {
            out.diagnostics.push(format!(
                "{} invariants meet at loop head {l}; conjoined",
                list.len()
            ));
        }
    }
    let source = if w.metadata.producer.is_empty() {
        "witness".to_string()
    } else {
        w.metadata.producer.clone()
    };
    out.invariants = per_head
        .into_iter()
        .map(|(loop_head, list)| LocatedInvariant {
            loop_head,
            invariant: BExp::conj(list),
            source: source.clone(),
        })
        .collect();
    if out.invariants.is_empty() && !crate::witness::is_trivial_witness(w) {
        out.diagnostics
            .push("no invariant state could be associated with a loop head".into());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse, Program};
    use crate::logic::parse_bexp;
    use crate::testing::{countdown_witness, COUNTDOWN};
    use crate::witness::{read_graphml, write_graphml, SourceCodeGuard};

    fn fig() -> Cfa {
        parse(&Program::new("fig.mc", COUNTDOWN)).unwrap()
    }

    #[test]
    fn countdown_witness_matches_loop_head() {
        let cfa = fig();
        let w = countdown_witness(&cfa.source_hash);
        let m = match_to_cfa(&w, &cfa, false);
        assert_eq!(m.invariants.len(), 1);
        assert_eq!(cfa.line(m.invariants[0].loop_head), 4);
        assert_eq!(m.invariants[0].invariant, parse_bexp("n == x+y").unwrap());
    }

    #[test]
    fn shifted_lines_match_nothing() {
        let cfa = fig();
        let mut w = countdown_witness(&cfa.source_hash);
        for t in &mut w.transitions {
            t.guard = SourceCodeGuard {
                startline: t.guard.startline.map(|l| l + 100),
                endline: t.guard.endline.map(|l| l + 100),
                guard_type: t.guard.guard_type.clone(),
            };
        }
        let m = match_to_cfa(&w, &cfa, false);
        assert!(m.invariants.is_empty());
        assert!(!m.diagnostics.is_empty());
    }

    #[test]
    fn hash_mismatch_needs_force() {
        let cfa = fig();
        let w = countdown_witness("0000");
        assert!(match_to_cfa(&w, &cfa, false).invariants.is_empty());
        assert_eq!(match_to_cfa(&w, &cfa, true).invariants.len(), 1);
    }

    #[test]
    fn skeleton_witness_round_trips_through_matching() {
        let cfa = fig();
        let head = *cfa.loop_heads.iter().next().unwrap();
        let inv = parse_bexp("n - x - y == 0").unwrap();
        let w = Witness::from_cfa(&cfa, &BTreeMap::from([(head, inv.clone())]), "test");
        let w = read_graphml(&write_graphml(&w).unwrap()).unwrap();
        let m = match_to_cfa(&w, &cfa, false);
        assert_eq!(m.invariants.len(), 1);
        assert_eq!(m.invariants[0].loop_head, head);
        assert_eq!(m.invariants[0].invariant, inv);
    }

    #[test]
    fn trivial_witness_yields_nothing() {
        let cfa = fig();
        let head = *cfa.loop_heads.iter().next().unwrap();
        let w = Witness::from_cfa(&cfa, &BTreeMap::from([(head, BExp::True)]), "t");
        assert!(match_to_cfa(&w, &cfa, false).invariants.is_empty());
    }
}
