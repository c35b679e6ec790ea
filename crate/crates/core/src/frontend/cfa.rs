use std::collections::{BTreeMap, BTreeSet};

use crate::logic::SymbolTable;

use super::{Operation, PropertySite};

pub type LocId = usize;
pub type EdgeId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Location {
    pub id: LocId,
    pub line: usize,
    pub col: usize,
}

/// Which branch of a conditional an `assume` edge represents.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Branch {
    None,
    Then,
    Else,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Edge {
    pub source: LocId,
    pub op: Operation,
    pub target: LocId,
    /// Line of the statement the edge was lowered from.
    pub line: usize,
    pub branch: Branch,
}

/// Control-flow automaton `(L, l0, G)` with loop heads and source positions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cfa {
    pub locations: Vec<Location>,
    pub initial: LocId,
    pub exit: LocId,
    pub edges: Vec<Edge>,
    pub loop_heads: BTreeSet<LocId>,
    /// Natural loop of each head (head included).
    pub loop_bodies: BTreeMap<LocId, BTreeSet<LocId>>,
    pub error_locations: BTreeSet<LocId>,
    pub symbols: SymbolTable,
    pub sites: Vec<PropertySite>,
    pub source_hash: String,
    pub(crate) out: Vec<Vec<EdgeId>>,
    pub(crate) inc: Vec<Vec<EdgeId>>,
}

impl Cfa {
    pub fn width(&self) -> u32 {
        self.symbols.width()
    }

    pub fn line(&self, loc: LocId) -> usize {
        self.locations[loc].line
    }

    pub fn out_edges(&self, loc: LocId) -> impl Iterator<Item = &Edge> + '_ {
        self.out[loc].iter().map(move |&e| &self.edges[e])
    }

    pub fn out_edge_ids(&self, loc: LocId) -> &[EdgeId] {
        &self.out[loc]
    }

    pub fn in_edges(&self, loc: LocId) -> impl Iterator<Item = &Edge> + '_ {
        self.inc[loc].iter().map(move |&e| &self.edges[e])
    }

    pub fn in_edge_ids(&self, loc: LocId) -> &[EdgeId] {
        &self.inc[loc]
    }

    pub fn is_loop_head(&self, loc: LocId) -> bool {
        self.loop_heads.contains(&loc)
    }

    /// Variable names in declaration order.
    pub fn variables(&self) -> Vec<String> {
        self.symbols.names().map(str::to_string).collect()
    }

    /// Innermost loop whose body contains `loc`.
    pub fn innermost_loop(&self, loc: LocId) -> Option<LocId> {
        self.loop_bodies
            .iter()
            .filter(|(_, body)| body.contains(&loc))
            .min_by_key(|(_, body)| body.len())
            .map(|(h, _)| *h)
    }

    /// Loop head in scope at a source line: a head on that line, or the innermost loop
    /// enclosing any location on that line.
    pub fn loop_head_for_line(&self, line: usize) -> Option<LocId> {
        if let Some(h) = self.loop_heads.iter().find(|&&h| self.line(h) == line) {
            return Some(*h);
        }
        let mut best: Option<(usize, LocId)> = None;
        for loc in self.locations.iter().filter(|l| l.line == line) {
            if let Some(h) = self.innermost_loop(loc.id) {
                let size = self.loop_bodies[&h].len();
                if best.is_none_or(|(s, _)| size < s) {
                    best = Some((size, h));
                }
            }
        }
        best.map(|(_, h)| h)
    }

    /// Locations reachable from the initial location.
    pub fn reachable(&self) -> BTreeSet<LocId> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![self.initial];
        while let Some(l) = stack.pop() {
            if seen.insert(l) {
                stack.extend(self.out_edges(l).map(|e| e.target));
            }
        }
        seen
    }

    pub(crate) fn index_edges(&mut self) {
        let n = self.locations.len();
        self.out = vec![Vec::new(); n];
        self.inc = vec![Vec::new(); n];
        for (i, e) in self.edges.iter().enumerate() {
            self.out[e.source].push(i);
            self.inc[e.target].push(i);
        }
    }

    /// Graphviz rendering, for debugging.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph cfa {\n");
        for l in &self.locations {
            let shape = if self.is_loop_head(l.id) {
                "doublecircle"
            } else if self.error_locations.contains(&l.id) {
                "box"
            } else {
                "circle"
            };
            s.push_str(&format!(
                "  l{} [label=\"{} (line {})\" shape={}];\n",
                l.id, l.id, l.line, shape
            ));
        }
        for e in &self.edges {
            s.push_str(&format!(
                "  l{} -> l{} [label=\"{}\"];\n",
                e.source,
                e.target,
                e.op.to_string().replace('"', "\\\"")
            ));
        }
        s.push_str("}\n");
        s
    }
}
