//! Predicate abstraction over the block encoding, with counterexample-guided refinement.
//!
//! Abstract states live at cut points only. Each node holds the set of precision
//! predicates known to hold (a Cartesian abstraction); the root is the exact initial state.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::atomic::Ordering;
use std::time::Duration;

use crate::blocks::{Blocks, SegEnd, Unrolling};
use crate::frontend::{Cfa, LocId, Operation, SafetyProperty};
use crate::logic::{
    fails_total, holds_total, is_trivial, simplify, split_conjunctions, AExp, BExp, Checker,
    Satisfiability, Validity,
};
use crate::semantics::{replay, Counterexample};
use crate::task::Task;
use crate::verdict::Verdict;
use crate::witness::{match_to_cfa, Witness};

use super::{Control, Engine};

/// Predicates per loop head.
pub type Precision = BTreeMap<LocId, BTreeSet<BExp>>;

#[derive(Clone, Debug)]
pub struct PredAbsOptions {
    pub max_refinements: usize,
    pub max_nodes: usize,
    /// Harvested atoms larger than this are dropped.
    pub max_atom_size: usize,
    pub request_on_stall: bool,
    pub poll: Duration,
}

impl Default for PredAbsOptions {
    fn default() -> Self {
        PredAbsOptions {
            max_refinements: 24,
            max_nodes: 20_000,
            max_atom_size: 24,
            request_on_stall: false,
            poll: Duration::from_millis(10),
        }
    }
}

/// Abstract region of a node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Region {
    /// All variables zero: the initial state.
    Initial,
    Preds(BTreeSet<BExp>),
}

impl Region {
    pub fn formula(&self, cfa: &Cfa) -> BExp {
        match self {
            Region::Initial => BExp::conj(
                cfa.symbols
                    .names()
                    .map(|v| BExp::eq(AExp::var(v), AExp::Const(0)))
                    .collect::<Vec<_>>(),
            ),
            Region::Preds(ps) => BExp::conj(ps.iter().cloned()),
        }
    }

    fn symbolic(&self, u: &Unrolling, xs: &[AExp]) -> BExp {
        match self {
            Region::Initial => BExp::conj(
                xs.iter()
                    .map(|x| BExp::eq(x.clone(), AExp::Const(0)))
                    .collect::<Vec<_>>(),
            ),
            Region::Preds(ps) => BExp::conj(
                ps.iter()
                    .map(|p| holds_total(&u.rename_to(p, xs)))
                    .collect::<Vec<_>>(),
            ),
        }
    }

    /// `self` is contained in `other`.
    fn within(&self, other: &Region) -> bool {
        match (self, other) {
            (Region::Preds(s), Region::Preds(o)) => o.is_subset(s),
            (Region::Initial, Region::Initial) => true,
            _ => false,
        }
    }
}

/// Cartesian post-image of `region` along segment `seg`; `None` when the segment cannot
/// be taken. Entailments the checker cannot decide leave the predicate out.
pub fn abstract_post(
    cfa: &Cfa,
    blocks: &Blocks,
    region: &Region,
    seg: usize,
    prec: &BTreeSet<BExp>,
    checker: &Checker,
) -> Option<BTreeSet<BExp>> {
    let mut u = Unrolling::new(cfa, blocks);
    let xs = u.state(0);
    let img = u.image(seg, &xs, 0);
    let pre = BExp::and(region.symbolic(&u, &xs), img.constraint.clone());
    if checker.sat(&pre, &u.symbols) == Satisfiability::Unsat {
        return None;
    }
    let mut out = BTreeSet::new();
    for p in prec {
        let goal = holds_total(&u.rename_to(p, &img.out));
        if checker.valid(&BExp::implies(pre.clone(), goal), &u.symbols) == Validity::Valid {
            out.insert(p.clone());
        }
    }
    Some(out)
}

#[derive(Clone, Debug)]
pub enum Refinement {
    Feasible(Counterexample),
    NewPredicates(Precision),
    /// Neither a concrete run nor new predicates.
    Stuck(String),
}

fn wp(cfa: &Cfa, edges: &[usize], post: BExp) -> BExp {
    edges.iter().rev().fold(post, |phi, &e| match &cfa.edges[e].op {
        Operation::Assume(b) => BExp::implies(b.clone(), phi),
        Operation::Assign(v, a) => phi.substitute(v, a),
        _ => phi,
    })
}

/// Checks the segment sequence `path` (ending in a property check) concretely; when it is
/// infeasible, harvests atoms of weakest preconditions along it.
pub fn cegar_refine(
    cfa: &Cfa,
    blocks: &Blocks,
    path: &[usize],
    prec: &Precision,
    max_atom_size: usize,
    checker: &Checker,
) -> Refinement {
    let mut u = Unrolling::new(cfa, blocks);
    let f = u.fixed_path(path);
    match checker.sat(&f, &u.symbols) {
        Satisfiability::Sat(m) => {
            return match u.counterexample(&m) {
                Some(cex) if replay(cfa, &cex) => Refinement::Feasible(cex),
                _ => Refinement::Stuck("model does not replay".into()),
            };
        }
        Satisfiability::Unknown => return Refinement::Stuck("path check inconclusive".into()),
        Satisfiability::Unsat => {}
    }
    let Some(&last) = path.last() else {
        return Refinement::Stuck("empty path".into());
    };
    let SegEnd::Check(p) = blocks.segments[last].to else {
        return Refinement::Stuck("path does not end in a check".into());
    };
    let mut found = Precision::new();
    let add = |cut: usize, f: &BExp, found: &mut Precision| {
        let head = blocks.cuts[cut];
        if !cfa.is_loop_head(head) {
            return;
        }
        for a in f.atoms() {
            let a = simplify(&a);
            if is_trivial(&a) || a.size() > max_atom_size {
                continue;
            }
            if prec.get(&head).is_some_and(|s| s.contains(&a)) {
                continue;
            }
            found.entry(head).or_default().insert(a);
        }
    };
    let mut phi = blocks.props[p].condition.clone();
    for &seg in path.iter().rev() {
        let s = &blocks.segments[seg];
        phi = wp(cfa, &s.edges, phi);
        add(s.from, &phi, &mut found);
        for (k, &e) in s.edges.iter().enumerate() {
            if let Operation::Assume(b) = &cfa.edges[e].op {
                add(s.from, &wp(cfa, &s.edges[..k], b.clone()), &mut found);
            }
        }
    }
    if found.is_empty() {
        Refinement::Stuck("no new predicates".into())
    } else {
        Refinement::NewPredicates(found)
    }
}

/// Adds the conjuncts of every matched invariant to the precision at its loop head.
/// Returns the loop heads whose precision grew, and matching diagnostics.
pub fn inject_predicates(
    prec: &mut Precision,
    cfa: &Cfa,
    ws: &[Witness],
) -> (BTreeSet<LocId>, Vec<String>) {
    let mut changed = BTreeSet::new();
    let mut diags = Vec::new();
    for w in ws {
        let m = match_to_cfa(w, cfa, false);
        diags.extend(m.diagnostics);
        for li in m.invariants {
            for c in split_conjunctions(&li.invariant) {
                if is_trivial(&c) {
                    continue;
                }
                if prec.entry(li.loop_head).or_default().insert(c) {
                    changed.insert(li.loop_head);
                }
            }
        }
    }
    (changed, diags)
}

#[derive(Clone, Debug)]
struct Node {
    cut: usize,
    region: Region,
    parent: Option<(usize, usize)>,
    children: Vec<usize>,
    covered_by: Option<usize>,
    expanded: bool,
    alive: bool,
}

#[derive(Clone, Debug, Default)]
pub struct PredAbsStats {
    pub refinements: usize,
    pub nodes: usize,
    pub precision: Precision,
}

pub struct PredAbs {
    cfa: Cfa,
    props: Vec<SafetyProperty>,
    opts: PredAbsOptions,
    nodes: Vec<Node>,
    work: VecDeque<usize>,
    pub stats: PredAbsStats,
}

enum Step {
    Continue,
    Done(Verdict),
    Stuck(String),
}

impl PredAbs {
    pub fn new(task: &Task, opts: PredAbsOptions) -> Self {
        PredAbs {
            cfa: task.cfa.clone(),
            props: task.properties.clone(),
            opts,
            nodes: Vec::new(),
            work: VecDeque::new(),
            stats: PredAbsStats::default(),
        }
    }

    fn path_to(&self, mut n: usize) -> Vec<usize> {
        let mut segs = Vec::new();
        while let Some((p, s)) = self.nodes[n].parent {
            segs.push(s);
            n = p;
        }
        segs.reverse();
        segs
    }

    fn push(&mut self, cut: usize, region: Region, parent: Option<(usize, usize)>) {
        let id = self.nodes.len();
        self.nodes.push(Node {
            cut,
            region,
            parent,
            children: Vec::new(),
            covered_by: None,
            expanded: false,
            alive: true,
        });
        if let Some((p, _)) = parent {
            self.nodes[p].children.push(id);
        }
        self.work.push_back(id);
    }

    fn kill(&mut self, n: usize, removed: &mut Vec<usize>) {
        let mut stack = vec![n];
        while let Some(m) = stack.pop() {
            if !self.nodes[m].alive {
                continue;
            }
            self.nodes[m].alive = false;
            removed.push(m);
            stack.extend(std::mem::take(&mut self.nodes[m].children));
        }
    }

    /// Discards every node at the changed heads together with its subtree, and re-expands
    /// their parents.
    fn prune(&mut self, blocks: &Blocks, heads: &BTreeSet<LocId>) {
        let cuts: BTreeSet<usize> = heads.iter().filter_map(|&h| blocks.cut_of(h)).collect();
        let targets: Vec<usize> = (0..self.nodes.len())
            .filter(|&n| {
                let nd = &self.nodes[n];
                nd.alive && cuts.contains(&nd.cut) && nd.region != Region::Initial
            })
            .collect();
        let mut removed = Vec::new();
        let mut requeue = BTreeSet::new();
        for n in targets {
            if !self.nodes[n].alive {
                continue;
            }
            if let Some((p, _)) = self.nodes[n].parent {
                requeue.insert(p);
            }
            self.kill(n, &mut removed);
        }
        for p in requeue {
            if !self.nodes[p].alive {
                continue;
            }
            for c in std::mem::take(&mut self.nodes[p].children) {
                self.kill(c, &mut removed);
            }
            self.nodes[p].expanded = false;
            self.work.push_back(p);
        }
        let gone: BTreeSet<usize> = removed.into_iter().collect();
        for n in 0..self.nodes.len() {
            let nd = &mut self.nodes[n];
            if nd.alive && nd.covered_by.is_some_and(|c| gone.contains(&c)) {
                nd.covered_by = None;
                if !nd.expanded {
                    self.work.push_back(n);
                }
            }
        }
        self.work.retain(|&n| self.nodes[n].alive);
    }

    fn covered(&self, n: usize) -> Option<usize> {
        let nd = &self.nodes[n];
        (0..n).find(|&m| {
            let o = &self.nodes[m];
            o.alive && o.covered_by.is_none() && o.cut == nd.cut && nd.region.within(&o.region)
        })
    }

    fn precision_at(&self, blocks: &Blocks, cut: usize) -> BTreeSet<BExp> {
        self.stats
            .precision
            .get(&blocks.cuts[cut])
            .cloned()
            .unwrap_or_default()
    }

    fn expand(&mut self, blocks: &Blocks, n: usize, checker: &Checker) -> Step {
        if let Some(c) = self.covered(n) {
            self.nodes[n].covered_by = Some(c);
            return Step::Continue;
        }
        self.nodes[n].expanded = true;
        let cut = self.nodes[n].cut;
        let region = self.nodes[n].region.clone();
        let segs: Vec<(usize, SegEnd)> = blocks.from_cut(cut).map(|(i, s)| (i, s.to)).collect();
        for (seg, to) in segs {
            if checker.interrupted() {
                return Step::Continue;
            }
            match to {
                SegEnd::Check(p) => {
                    let mut u = Unrolling::new(&self.cfa, blocks);
                    let xs = u.state(0);
                    let img = u.image(seg, &xs, 0);
                    let cond = u.rename_to(&blocks.props[p].condition, &img.out);
                    let f = BExp::conj([region.symbolic(&u, &xs), img.constraint, fails_total(&cond)]);
                    if checker.sat(&f, &u.symbols) == Satisfiability::Unsat {
                        continue;
                    }
                    let mut path = self.path_to(n);
                    path.push(seg);
                    match cegar_refine(
                        &self.cfa,
                        blocks,
                        &path,
                        &self.stats.precision,
                        self.opts.max_atom_size,
                        checker,
                    ) {
                        Refinement::Feasible(cex) => return Step::Done(Verdict::False(cex)),
                        Refinement::Stuck(why) => return Step::Stuck(why),
                        Refinement::NewPredicates(found) => {
                            self.stats.refinements += 1;
                            let mut heads = BTreeSet::new();
                            for (h, ps) in found {
                                self.stats.precision.entry(h).or_default().extend(ps);
                                heads.insert(h);
                            }
                            self.nodes[n].expanded = false;
                            self.work.push_front(n);
                            self.prune(blocks, &heads);
                            return Step::Continue;
                        }
                    }
                }
                SegEnd::Cut(to) => {
                    let prec = self.precision_at(blocks, to);
                    if let Some(ps) = abstract_post(&self.cfa, blocks, &region, seg, &prec, checker)
                    {
                        self.push(to, Region::Preds(ps), Some((n, seg)));
                    }
                }
            }
        }
        Step::Continue
    }

    fn absorb(&mut self, blocks: &Blocks, ctl: &Control) -> bool {
        let ws = ctl.take_inbox();
        if ws.is_empty() {
            return false;
        }
        let (changed, diags) = inject_predicates(&mut self.stats.precision, &self.cfa, &ws);
        for d in diags {
            ctl.note(format!("injection: {d}"));
        }
        for h in &changed {
            ctl.note(format!(
                "precision at line {} now has {} predicates",
                self.cfa.line(*h),
                self.stats.precision[h].len()
            ));
        }
        if changed.is_empty() {
            return false;
        }
        self.prune(blocks, &changed);
        true
    }

    fn proof(&self, blocks: &Blocks) -> Verdict {
        let mut by_head: BTreeMap<LocId, Vec<BExp>> = BTreeMap::new();
        for nd in self.nodes.iter().filter(|n| n.alive && n.covered_by.is_none()) {
            let loc = blocks.cuts[nd.cut];
            if self.cfa.is_loop_head(loc) {
                by_head.entry(loc).or_default().push(nd.region.formula(&self.cfa));
            }
        }
        let map = by_head
            .into_iter()
            .map(|(l, v)| (l, simplify(&BExp::disj(v))))
            .collect();
        Verdict::True(Some(Witness::from_cfa(&self.cfa, &map, "coop-predabs")))
    }

    /// Reachable abstract regions at each loop head, for inspection.
    pub fn regions(&self, blocks: &Blocks) -> BTreeMap<LocId, Vec<BExp>> {
        let mut out: BTreeMap<LocId, Vec<BExp>> = BTreeMap::new();
        for nd in self.nodes.iter().filter(|n| n.alive) {
            out.entry(blocks.cuts[nd.cut])
                .or_default()
                .push(nd.region.formula(&self.cfa));
        }
        out
    }

    fn wait_for_help(&mut self, blocks: &Blocks, ctl: &Control, why: String) -> Option<Verdict> {
        if self.opts.request_on_stall {
            ctl.help_wanted.store(true, Ordering::SeqCst);
        }
        loop {
            if ctl.stopped() || ctl.expired() {
                return Some(ctl.interrupted_verdict());
            }
            if !ctl.inbox_empty() {
                if self.absorb(blocks, ctl) {
                    return None;
                }
                continue;
            }
            if !ctl.help_open() {
                return Some(Verdict::Unknown(why));
            }
            std::thread::sleep(self.opts.poll);
        }
    }
}

impl Engine for PredAbs {
    fn name(&self) -> &'static str {
        "predAbs"
    }

    fn run(&mut self, ctl: &Control) -> Verdict {
        self.nodes.clear();
        self.work.clear();
        self.stats = PredAbsStats::default();
        let blocks = match Blocks::new(&self.cfa, &self.props) {
            Ok(b) => b,
            Err(e) => return Verdict::Unknown(e.to_string()),
        };
        let checker = ctl.checker();
        self.absorb(&blocks, ctl);
        self.push(0, Region::Initial, None);
        loop {
            if ctl.stopped() || ctl.expired() || checker.interrupted() {
                return ctl.interrupted_verdict();
            }
            if !ctl.inbox_empty() {
                self.absorb(&blocks, ctl);
            }
            let Some(n) = self.work.pop_front() else {
                ctl.note(format!(
                    "status=safe nodes={} refinements={}",
                    self.nodes.len(),
                    self.stats.refinements
                ));
                return self.proof(&blocks);
            };
            if !self.nodes[n].alive || self.nodes[n].expanded || self.nodes[n].covered_by.is_some() {
                continue;
            }
            self.stats.nodes = self.nodes.iter().filter(|n| n.alive).count();
            let stuck = if self.stats.nodes > self.opts.max_nodes {
                Some(format!("more than {} abstract states", self.opts.max_nodes))
            } else if self.stats.refinements > self.opts.max_refinements {
                Some(format!("gave up after {} refinements", self.opts.max_refinements))
            } else {
                None
            };
            if let Some(why) = stuck {
                self.work.push_front(n);
                ctl.note(format!("status=stalled ({why})"));
                if let Some(v) = self.wait_for_help(&blocks, ctl, why) {
                    return v;
                }
                self.stats.refinements = 0;
                continue;
            }
            match self.expand(&blocks, n, &checker) {
                Step::Continue => {}
                Step::Done(v) => {
                    ctl.note("status=counterexample".into());
                    return v;
                }
                Step::Stuck(why) => {
                    self.nodes[n].expanded = false;
                    self.work.push_front(n);
                    ctl.note(format!("status=stalled ({why})"));
                    if let Some(v) = self.wait_for_help(&blocks, ctl, why) {
                        return v;
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parse_bexp;
    use crate::semantics::{brute_force_verify, reachable_states, holds};
    use crate::testing::{countdown_witness, COUNTDOWN};

    fn task(text: &str, width: u32) -> Task {
        Task::from_text("t.mc", text, width).unwrap()
    }

    fn set(items: &[&str]) -> BTreeSet<BExp> {
        items.iter().map(|s| parse_bexp(s).unwrap()).collect()
    }

    fn head(t: &Task) -> LocId {
        *t.cfa.loop_heads.iter().next().unwrap()
    }

    #[test]
    fn post_examples() {
        let t = task(COUNTDOWN, 4);
        let b = Blocks::new(&t.cfa, &t.properties).unwrap();
        let c = Checker::default();
        let entry = b.from_cut(0).next().unwrap().0;
        let got = abstract_post(&t.cfa, &b, &Region::Initial, entry, &set(&["y == 0", "n == x+y", "x > 0"]), &c);
        assert_eq!(got, Some(set(&["y == 0", "n == x+y"])));
        let h = b.cut_of(head(&t)).unwrap();
        let body = b
            .from_cut(h)
            .find(|(_, s)| s.to == SegEnd::Cut(h))
            .unwrap()
            .0;
        let inv = set(&["n == x+y"]);
        let got = abstract_post(&t.cfa, &b, &Region::Preds(inv.clone()), body, &inv, &c);
        assert_eq!(got, Some(inv));
        let got = abstract_post(&t.cfa, &b, &Region::Preds(BTreeSet::new()), body, &BTreeSet::new(), &c);
        assert_eq!(got, Some(BTreeSet::new()));
    }

    #[test]
    fn refinement_harvests_property_atoms() {
        let t = task(COUNTDOWN, 4);
        let b = Blocks::new(&t.cfa, &t.properties).unwrap();
        let check = b
            .segments
            .iter()
            .position(|s| matches!(s.to, SegEnd::Check(_)))
            .unwrap();
        let Refinement::NewPredicates(found) =
            cegar_refine(&t.cfa, &b, &[0, check], &Precision::new(), 24, &Checker::default())
        else {
            panic!("expected predicates");
        };
        assert!(found[&head(&t)].contains(&parse_bexp("n == y").unwrap()));
    }

    #[test]
    fn contradictory_assumes_yield_the_guard() {
        let src = "int main() {\n\tint x = 0;\n\twhile (x < 3) {\n\t\tx++;\n\t}\n\tif (!(x > 0)) {\n\t\tError: return 1; }\n\treturn 0;\n}\n";
        let t = task(src, 4);
        let b = Blocks::new(&t.cfa, &t.properties).unwrap();
        let check = b
            .segments
            .iter()
            .position(|s| matches!(s.to, SegEnd::Check(_)))
            .unwrap();
        match cegar_refine(&t.cfa, &b, &[0, check], &Precision::new(), 24, &Checker::default()) {
            Refinement::NewPredicates(found) => {
                let ps = &found[&head(&t)];
                assert!(ps.contains(&parse_bexp("x < 3").unwrap()));
                assert!(ps.contains(&parse_bexp("x > 0").unwrap()));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn feasible_path_on_mutant() {
        let t = task(&COUNTDOWN.replace("!(n == y)", "!(n == x)"), 4);
        let b = Blocks::new(&t.cfa, &t.properties).unwrap();
        let check = b
            .segments
            .iter()
            .position(|s| matches!(s.to, SegEnd::Check(_)))
            .unwrap();
        let body = b.segments.iter().position(|s| s.from == 1 && s.to == SegEnd::Cut(1)).unwrap();
        let Refinement::Feasible(cex) =
            cegar_refine(&t.cfa, &b, &[0, body, check], &Precision::new(), 24, &Checker::default())
        else {
            panic!("expected a counterexample");
        };
        assert!(replay(&t.cfa, &cex));
    }

    #[test]
    fn injection_splits_conjunctions() {
        let t = task(COUNTDOWN, 8);
        let mut prec = Precision::new();
        let w = countdown_witness(&t.program.hash());
        let (changed, _) = inject_predicates(&mut prec, &t.cfa, &[w]);
        assert_eq!(changed.len(), 1);
        assert_eq!(prec[&head(&t)], set(&["n == x+y"]));
        let mut both = BTreeMap::new();
        both.insert(head(&t), parse_bexp("n >= y && n == x+y").unwrap());
        let w = Witness::from_cfa(&t.cfa, &both, "test");
        let mut prec = Precision::new();
        inject_predicates(&mut prec, &t.cfa, &[w]);
        assert_eq!(prec[&head(&t)], set(&["n >= y", "n == x+y"]));
        let trivial = Witness::from_cfa(&t.cfa, &BTreeMap::new(), "test");
        let before = prec.clone();
        let (changed, _) = inject_predicates(&mut prec, &t.cfa, &[trivial]);
        assert!(changed.is_empty());
        assert_eq!(prec, before);
    }

    #[test]
    fn standalone_is_sound_on_countdown() {
        let t = task(COUNTDOWN, 4);
        let v = PredAbs::new(&t, PredAbsOptions::default()).run(&Control::standalone(None));
        assert!(!v.is_false(), "{v}");
        assert!(brute_force_verify(&t.cfa, &t.properties[0], 1 << 20).is_true());
    }

    #[test]
    fn injected_witness_proves_countdown() {
        let t = task(COUNTDOWN, 8);
        let ctl = Control::standalone(None);
        ctl.inject([countdown_witness(&t.program.hash())]);
        let v = PredAbs::new(&t, PredAbsOptions::default()).run(&ctl);
        assert!(v.is_true(), "{v}");
    }

    #[test]
    fn injection_while_waiting() {
        let t = task(COUNTDOWN, 8);
        let ctl = Control::standalone(Some(Duration::from_secs(60)));
        ctl.help_open.store(true, Ordering::SeqCst);
        let opts = PredAbsOptions {
            max_refinements: 2,
            ..PredAbsOptions::default()
        };
        let w = countdown_witness(&t.program.hash());
        let c2 = ctl.clone();
        let h = std::thread::spawn(move || {
            std::thread::sleep(Duration::from_millis(200));
            c2.inject([w]);
        });
        let v = PredAbs::new(&t, opts).run(&ctl);
        h.join().unwrap();
        assert!(v.is_true(), "{v}");
    }

    #[test]
    fn mutant_is_refuted() {
        let t = task(&COUNTDOWN.replace("!(n == y)", "!(n == x)"), 4);
        let Verdict::False(cex) = PredAbs::new(&t, PredAbsOptions::default()).run(&Control::standalone(None))
        else {
            panic!("expected False");
        };
        assert!(replay(&t.cfa, &cex));
    }

    #[test]
    fn counting_loop_proved_standalone() {
        let src = "int main() {\n\tunsigned int x = 0;\n\twhile (x < 6) {\n\t\tx++;\n\t}\n\tif (!(x == 6)) {\n\t\tError: return 1; }\n\treturn 0;\n}\n";
        let t = task(src, 8);
        let mut pa = PredAbs::new(&t, PredAbsOptions::default());
        let v = pa.run(&Control::standalone(None));
        assert!(v.is_true(), "{v}");
        let b = Blocks::new(&t.cfa, &t.properties).unwrap();
        let reach = reachable_states(&t.cfa, 1 << 16).unwrap();
        for (loc, regions) in pa.regions(&b) {
            let r = BExp::disj(regions);
            for s in reach.get(&loc).into_iter().flatten() {
                assert!(holds(&t.cfa, &r, s), "{r} at {loc}");
            }
        }
    }
}
