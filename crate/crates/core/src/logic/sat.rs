//! A small CDCL propositional solver.
//!
//! Two-watched-literal propagation, first-UIP clause learning, VSIDS branching with
//! phase saving and Luby restarts. Learnt clauses are kept; the formulas produced by
//! the bit-blaster are small enough that clause deletion has not been needed.

use std::ops::Not;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(u32);

impl Lit {
    pub fn new(var: u32, negative: bool) -> Lit {
        Lit(var << 1 | negative as u32)
    }

    pub fn var(self) -> u32 {
        self.0 >> 1
    }

    pub fn is_negative(self) -> bool {
        self.0 & 1 == 1
    }

    fn index(self) -> usize {
        self.0 as usize
    }
}

impl Not for Lit {
    type Output = Lit;
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Value {
    True,
    False,
    Undef,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SatResult {
    Sat,
    Unsat,
    /// Conflict budget exhausted or interrupted.
    Unknown,
}

#[derive(Default)]
pub struct Solver {
    clauses: Vec<Vec<Lit>>,
    watches: Vec<Vec<usize>>,
    assigns: Vec<Value>,
    level: Vec<u32>,
    reason: Vec<Option<usize>>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    var_inc: f64,
    polarity: Vec<bool>,
    seen: Vec<bool>,
    heap: VarHeap,
    unsat: bool,
    pub conflicts: u64,
}

impl Solver {
    pub fn new() -> Self {
        Solver {
            var_inc: 1.0,
            ..Default::default()
        }
    }

    pub fn num_vars(&self) -> u32 {
        self.assigns.len() as u32
    }

    pub fn new_var(&mut self) -> u32 {
        let v = self.assigns.len() as u32;
        self.assigns.push(Value::Undef);
        self.level.push(0);
        self.reason.push(None);
        self.activity.push(0.0);
        self.polarity.push(true);
        self.seen.push(false);
        self.watches.push(Vec::new());
        self.watches.push(Vec::new());
        self.heap.insert(v, &self.activity);
        v
    }

    fn value(&self, l: Lit) -> Value {
        match self.assigns[l.var() as usize] {
            Value::Undef => Value::Undef,
            Value::True if l.is_negative() => Value::False,
            Value::False if l.is_negative() => Value::True,
            v => v,
        }
    }

    /// Model value of a variable after `Sat`.
    pub fn model_value(&self, var: u32) -> bool {
        self.assigns[var as usize] == Value::True
    }

    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    /// Adds a clause at decision level 0. Returns false if the formula became unsat.
    pub fn add_clause(&mut self, lits: &[Lit]) -> bool {
        if self.unsat {
            return false;
        }
        debug_assert_eq!(self.decision_level(), 0);
        let mut c: Vec<Lit> = Vec::with_capacity(lits.len());
        for &l in lits {
            match self.value(l) {
                Value::True => return true,
                Value::False => continue,
                Value::Undef => {
                    if c.contains(&!l) {
                        return true;
                    }
                    if !c.contains(&l) {
                        c.push(l);
                    }
                }
            }
        }
        match c.len() {
            0 => {
                self.unsat = true;
                false
            }
            1 => {
                self.enqueue(c[0], None);
                if self.propagate().is_some() {
                    self.unsat = true;
                    return false;
                }
                true
            }
            _ => {
                self.attach(c);
                true
            }
        }
    }

    fn attach(&mut self, c: Vec<Lit>) -> usize {
        let idx = self.clauses.len();
        self.watches[c[0].index()].push(idx);
        self.watches[c[1].index()].push(idx);
        self.clauses.push(c);
        idx
    }

    fn enqueue(&mut self, l: Lit, reason: Option<usize>) {
        let v = l.var() as usize;
        self.assigns[v] = if l.is_negative() {
            Value::False
        } else {
            Value::True
        };
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.trail.push(l);
    }

    /// Unit propagation; returns a conflicting clause index.
    fn propagate(&mut self) -> Option<usize> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            let false_lit = !p;
            let ws = std::mem::take(&mut self.watches[false_lit.index()]);
            let mut kept = Vec::with_capacity(ws.len());
            let mut conflict = None;
            let mut i = 0;
            while i < ws.len() {
                let ci = ws[i];
                i += 1;
                let clause = &mut self.clauses[ci];
                if clause[0] == false_lit {
                    clause.swap(0, 1);
                }
                let first = clause[0];
                if self.assigns[first.var() as usize] != Value::Undef
                    && (self.assigns[first.var() as usize] == Value::True) != first.is_negative()
                {
                    kept.push(ci);
                    continue;
                }
                let mut moved = false;
                for k in 2..clause.len() {
                    let l = clause[k];
                    let val = self.assigns[l.var() as usize];
                    let is_false =
                        val != Value::Undef && ((val == Value::True) == l.is_negative());
                    if !is_false {
                        clause.swap(1, k);
                        let new_watch = clause[1];
                        self.watches[new_watch.index()].push(ci);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                kept.push(ci);
                if self.value(first) == Value::False {
                    conflict = Some(ci);
                    kept.extend_from_slice(&ws[i..]);
                    break;
                }
                self.enqueue(first, Some(ci));
            }
            let slot = &mut self.watches[false_lit.index()];
            kept.append(slot);
            *slot = kept;
            if conflict.is_some() {
                self.qhead = self.trail.len();
                return conflict;
            }
        }
        None
    }

    fn bump(&mut self, v: u32) {
        self.activity[v as usize] += self.var_inc;
        if self.activity[v as usize] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.heap.increase(v, &self.activity);
    }

    fn analyze(&mut self, mut confl: usize) -> (Vec<Lit>, u32) {
        let mut learnt = vec![Lit(0)];
        let mut counter = 0;
        let mut p: Option<Lit> = None;
        let mut idx = self.trail.len();
        loop {
            let clause = self.clauses[confl].clone();
            let start = if p.is_some() { 1 } else { 0 };
            for &q in &clause[start..] {
                let v = q.var() as usize;
                if !self.seen[v] && self.level[v] > 0 {
                    self.seen[v] = true;
                    self.bump(q.var());
                    if self.level[v] >= self.decision_level() {
                        counter += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                idx -= 1;
                if self.seen[self.trail[idx].var() as usize] {
                    break;
                }
            }
            let lit = self.trail[idx];
            p = Some(lit);
            self.seen[lit.var() as usize] = false;
            counter -= 1;
            if counter == 0 {
                break;
            }
            confl = self.reason[lit.var() as usize].expect("implied literal has a reason");
            // reason clauses keep the implied literal first
            debug_assert_eq!(self.clauses[confl][0], lit);
        }
        learnt[0] = !p.unwrap();
        for l in &learnt[1..] {
            self.seen[l.var() as usize] = false;
        }
        let mut bt = 0;
        if learnt.len() > 1 {
            let mut max_i = 1;
            for i in 2..learnt.len() {
                if self.level[learnt[i].var() as usize] > self.level[learnt[max_i].var() as usize]
                {
                    max_i = i;
                }
            }
            learnt.swap(1, max_i);
            bt = self.level[learnt[1].var() as usize];
        }
        (learnt, bt)
    }

    fn cancel_until(&mut self, lvl: u32) {
        if self.decision_level() > lvl {
            let lim = self.trail_lim[lvl as usize];
            for i in (lim..self.trail.len()).rev() {
                let l = self.trail[i];
                let v = l.var() as usize;
                self.assigns[v] = Value::Undef;
                self.reason[v] = None;
                self.polarity[v] = !l.is_negative();
                if !self.heap.contains(l.var()) {
                    self.heap.insert(l.var(), &self.activity);
                }
            }
            self.trail.truncate(lim);
            self.trail_lim.truncate(lvl as usize);
            self.qhead = lim;
        }
    }

    fn pick_branch(&mut self) -> Option<Lit> {
        while let Some(v) = self.heap.pop(&self.activity) {
            if self.assigns[v as usize] == Value::Undef {
                return Some(Lit::new(v, !self.polarity[v as usize]));
            }
        }
        None
    }

    /// Solves under the given conflict budget. `interrupt` is polled periodically.
    pub fn solve(&mut self, conflict_budget: u64, interrupt: &dyn Fn() -> bool) -> SatResult {
        if self.unsat {
            return SatResult::Unsat;
        }
        if self.propagate().is_some() {
            self.unsat = true;
            return SatResult::Unsat;
        }
        let mut used = 0u64;
        let mut restart_idx = 0u32;
        loop {
            let limit = 100 * luby(restart_idx);
            restart_idx += 1;
            let mut local = 0u64;
            loop {
                if let Some(confl) = self.propagate() {
                    self.conflicts += 1;
                    used += 1;
                    local += 1;
                    if self.decision_level() == 0 {
                        self.unsat = true;
                        return SatResult::Unsat;
                    }
                    let (learnt, bt) = self.analyze(confl);
                    self.cancel_until(bt);
                    if learnt.len() == 1 {
                        self.enqueue(learnt[0], None);
                    } else {
                        let first = learnt[0];
                        let ci = self.attach(learnt);
                        self.enqueue(first, Some(ci));
                    }
                    self.var_inc *= 1.0 / 0.95;
                    if used >= conflict_budget || (used.is_multiple_of(256) && interrupt()) {
                        self.cancel_until(0);
                        return SatResult::Unknown;
                    }
                } else {
                    if local >= limit {
                        self.cancel_until(0);
                        break;
                    }
                    match self.pick_branch() {
                        None => return SatResult::Sat,
                        Some(l) => {
                            self.trail_lim.push(self.trail.len());
                            self.enqueue(l, None);
                        }
                    }
                }
            }
            if interrupt() {
                return SatResult::Unknown;
            }
        }
    }
}

fn luby(mut i: u32) -> u64 {
    // index into 1,1,2,1,1,2,4,1,1,2,1,1,2,4,8,...
    let mut size = 1u64;
    let mut seq = 0u32;
    while size < i as u64 + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    while size - 1 != i as u64 {
        size = (size - 1) >> 1;
        seq -= 1;
        i %= size as u32;
    }
    1u64 << seq
}

/// Indexed binary max-heap keyed by activity.
#[derive(Default)]
struct VarHeap {
    heap: Vec<u32>,
    pos: Vec<Option<usize>>,
}

impl VarHeap {
    fn contains(&self, v: u32) -> bool {
        self.pos.get(v as usize).copied().flatten().is_some()
    }

    fn insert(&mut self, v: u32, act: &[f64]) {
        if self.pos.len() <= v as usize {
            self.pos.resize(v as usize + 1, None);
        }
        if self.contains(v) {
            return;
        }
        self.heap.push(v);
        self.pos[v as usize] = Some(self.heap.len() - 1);
        self.sift_up(self.heap.len() - 1, act);
    }

    fn increase(&mut self, v: u32, act: &[f64]) {
        if let Some(Some(i)) = self.pos.get(v as usize) {
            self.sift_up(*i, act);
        }
    }

    fn pop(&mut self, act: &[f64]) -> Option<u32> {
        if self.heap.is_empty() {
            return None;
        }
        let top = self.heap[0];
        let last = self.heap.pop().unwrap();
        self.pos[top as usize] = None;
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.pos[last as usize] = Some(0);
            self.sift_down(0, act);
        }
        Some(top)
    }

    fn sift_up(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        while i > 0 {
            let parent = (i - 1) / 2;
            let pv = self.heap[parent];
            if act[pv as usize] >= act[v as usize] {
                break;
            }
            self.heap[i] = pv;
            self.pos[pv as usize] = Some(i);
            i = parent;
        }
        self.heap[i] = v;
        self.pos[v as usize] = Some(i);
    }

    fn sift_down(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        loop {
            let l = 2 * i + 1;
            if l >= self.heap.len() {
                break;
            }
            let r = l + 1;
            let child = if r < self.heap.len() && act[self.heap[r] as usize] > act[self.heap[l] as usize]
            {
                r
            } else {
                l
            };
            let cv = self.heap[child];
            if act[cv as usize] <= act[v as usize] {
                break;
            }
            self.heap[i] = cv;
            self.pos[cv as usize] = Some(i);
            i = child;
        }
        self.heap[i] = v;
        self.pos[v as usize] = Some(i);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_force(n: u32, clauses: &[Vec<Lit>]) -> bool {
        (0u32..1 << n).any(|m| {
            clauses.iter().all(|c| {
                c.iter()
                    .any(|l| ((m >> l.var()) & 1 == 1) != l.is_negative())
            })
        })
    }

    #[test]
    fn luby_sequence() {
        let seq: Vec<u64> = (0..15).map(luby).collect();
        assert_eq!(seq, vec![1, 1, 2, 1, 1, 2, 4, 1, 1, 2, 1, 1, 2, 4, 8]);
    }

    #[test]
    fn pigeonhole_is_unsat() {
        // 4 pigeons, 3 holes
        let mut s = Solver::new();
        let var = |p: u32, h: u32| p * 3 + h;
        for _ in 0..12 {
            s.new_var();
        }
        for p in 0..4 {
            s.add_clause(&(0..3).map(|h| Lit::new(var(p, h), false)).collect::<Vec<_>>());
        }
        for h in 0..3 {
            for p in 0..4 {
                for q in p + 1..4 {
                    s.add_clause(&[Lit::new(var(p, h), true), Lit::new(var(q, h), true)]);
                }
            }
        }
        assert_eq!(s.solve(u64::MAX, &|| false), SatResult::Unsat);
    }

    proptest! {
        #[test]
        fn agrees_with_enumeration(
            clauses in prop::collection::vec(
                prop::collection::vec((0u32..8, any::<bool>()), 1..4), 1..40)
        ) {
            let clauses: Vec<Vec<Lit>> = clauses
                .into_iter()
                .map(|c| c.into_iter().map(|(v, n)| Lit::new(v, n)).collect())
                .collect();
            let mut s = Solver::new();
            for _ in 0..8 { s.new_var(); }
            let mut ok = true;
            for c in &clauses { ok &= s.add_clause(c); }
            let expected = brute_force(8, &clauses);
            let got = if ok { s.solve(u64::MAX, &|| false) } else { SatResult::Unsat };
            prop_assert_eq!(got == SatResult::Sat, expected);
            if got == SatResult::Sat {
                for c in &clauses {
                    prop_assert!(c.iter().any(|l| s.model_value(l.var()) != l.is_negative()));
                }
            }
        }
    }
}
