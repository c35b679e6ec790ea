//! Dominator-based loop detection.

use std::collections::{BTreeMap, BTreeSet};

use super::{Cfa, FrontendError, LocId};

/// Reverse postorder of the locations reachable from `entry`.
fn reverse_postorder(cfa: &Cfa) -> Vec<LocId> {
    let n = cfa.locations.len();
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    // iterative DFS with explicit successor cursors
    let mut stack: Vec<(LocId, usize)> = vec![(cfa.initial, 0)];
    seen[cfa.initial] = true;
    while let Some((loc, idx)) = stack.pop() {
        let succs = cfa.out_edge_ids(loc);
        if idx < succs.len() {
            stack.push((loc, idx + 1));
            let t = cfa.edges[succs[idx]].target;
            if !seen[t] {
                seen[t] = true;
                stack.push((t, 0));
            }
        } else {
            order.push(loc);
        }
    }
    order.reverse();
    order
}

/// Immediate dominators (Cooper, Harvey, Kennedy). Unreachable locations map to `None`.
pub(crate) fn dominators(cfa: &Cfa) -> Vec<Option<LocId>> {
    let rpo = reverse_postorder(cfa);
    let mut rank = vec![usize::MAX; cfa.locations.len()];
    for (i, &l) in rpo.iter().enumerate() {
        rank[l] = i;
    }
    let mut idom: Vec<Option<LocId>> = vec![None; cfa.locations.len()];
    idom[cfa.initial] = Some(cfa.initial);
    let mut changed = true;
    while changed {
        changed = false;
        for &b in rpo.iter().skip(1) {
            let mut new_idom: Option<LocId> = None;
            for e in cfa.in_edges(b) {
                let p = e.source;
                if idom[p].is_none() {
                    continue;
                }
                new_idom = Some(match new_idom {
                    None => p,
                    Some(cur) => intersect(&idom, &rank, p, cur),
                });
            }
            if new_idom.is_some() && idom[b] != new_idom {
                idom[b] = new_idom;
                changed = true;
            }
        }
    }
    idom
}

fn intersect(idom: &[Option<LocId>], rank: &[usize], mut a: LocId, mut b: LocId) -> LocId {
    while a != b {
        while rank[a] > rank[b] {
            a = idom[a].unwrap();
        }
        while rank[b] > rank[a] {
            b = idom[b].unwrap();
        }
    }
    a
}

fn dominates(idom: &[Option<LocId>], a: LocId, mut b: LocId) -> bool {
    loop {
        if a == b {
            return true;
        }
        match idom[b] {
            Some(p) if p != b => b = p,
            _ => return false,
        }
    }
}

/// Marks loop heads and natural loop bodies; rejects irreducible flow.
pub(crate) fn compute_loops(cfa: &mut Cfa) -> Result<(), FrontendError> {
    let idom = dominators(cfa);
    let mut bodies: BTreeMap<LocId, BTreeSet<LocId>> = BTreeMap::new();
    let mut back_edges = BTreeSet::new();
    for (i, e) in cfa.edges.iter().enumerate() {
        if idom[e.source].is_none() {
            continue;
        }
        if dominates(&idom, e.target, e.source) {
            back_edges.insert(i);
            let body = bodies.entry(e.target).or_insert_with(|| BTreeSet::from([e.target]));
            let mut stack = vec![e.source];
            while let Some(l) = stack.pop() {
                if body.insert(l) {
                    stack.extend(
                        cfa.in_edges(l)
                            .map(|x| x.source)
                            .filter(|&s| idom[s].is_some()),
                    );
                }
            }
        }
    }
    // without back edges the reachable graph must be acyclic
    let n = cfa.locations.len();
    let mut indeg = vec![0usize; n];
    let reach = cfa.reachable();
    for (i, e) in cfa.edges.iter().enumerate() {
        if !back_edges.contains(&i) && reach.contains(&e.source) {
            indeg[e.target] += 1;
        }
    }
    let mut ready: Vec<LocId> = reach.iter().copied().filter(|&l| indeg[l] == 0).collect();
    let mut done = 0;
    while let Some(l) = ready.pop() {
        done += 1;
        for &ei in cfa.out_edge_ids(l) {
            if back_edges.contains(&ei) {
                continue;
            }
            let t = cfa.edges[ei].target;
            indeg[t] -= 1;
            if indeg[t] == 0 {
                ready.push(t);
            }
        }
    }
    if done != reach.len() {
        let stuck = reach.iter().copied().find(|&l| indeg[l] > 0).unwrap();
        return Err(FrontendError::Irreducible(stuck));
    }
    cfa.loop_heads = bodies.keys().copied().collect();
    cfa.loop_bodies = bodies;
    Ok(())
}
