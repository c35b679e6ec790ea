//! Large-block encoding of a CFA.
//!
//! Cut points are the initial location and every loop head. A segment is a loop-free
//! path that starts at a cut and ends at the next cut it meets, or at a property location
//! where the property is then checked. Unrolling a sequence of segment steps yields
//! formulas in SSA form: program variable `x` at step `i` is `x@i`, intermediate values
//! are `x@i.k`, and the current cut is binary-encoded in variables `pc@i#b`.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::frontend::{Cfa, EdgeId, LocId, Operation, SafetyProperty};
use crate::logic::{
    defined, eval_bexp, fails_total, holds_total, AExp, BExp, CmpOp, Model, Signedness,
    SymbolTable,
};
use crate::semantics::{initial_state, replay, step, Counterexample, Path, PathStep};

pub const DEFAULT_PATH_LIMIT: usize = 20_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SegEnd {
    Cut(usize),
    /// Index into [`Blocks::props`].
    Check(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Segment {
    pub from: usize,
    pub to: SegEnd,
    pub edges: Vec<EdgeId>,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum EncodeError {
    #[error("more than {0} loop-free paths between cut points")]
    TooManyPaths(usize),
}

#[derive(Clone, Debug)]
pub struct Blocks {
    /// `cuts[0]` is the initial location.
    pub cuts: Vec<LocId>,
    pub segments: Vec<Segment>,
    pub props: Vec<SafetyProperty>,
}

impl Blocks {
    pub fn new(cfa: &Cfa, props: &[SafetyProperty]) -> Result<Self, EncodeError> {
        Self::with_limit(cfa, props, DEFAULT_PATH_LIMIT)
    }

    pub fn with_limit(
        cfa: &Cfa,
        props: &[SafetyProperty],
        limit: usize,
    ) -> Result<Self, EncodeError> {
        let mut cuts = vec![cfa.initial];
        cuts.extend(cfa.loop_heads.iter().copied().filter(|&h| h != cfa.initial));
        let mut b = Blocks {
            cuts,
            segments: Vec::new(),
            props: props.to_vec(),
        };
        for c in 0..b.cuts.len() {
            let mut stack = Vec::new();
            b.explore(cfa, c, b.cuts[c], &mut stack, limit)?;
        }
        Ok(b)
    }

    fn explore(
        &mut self,
        cfa: &Cfa,
        from: usize,
        loc: LocId,
        stack: &mut Vec<EdgeId>,
        limit: usize,
    ) -> Result<(), EncodeError> {
        if !stack.is_empty() {
            if let Some(c) = self.cut_of(loc) {
                return self.push(from, SegEnd::Cut(c), stack, limit);
            }
        }
        for p in 0..self.props.len() {
            if self.props[p].location == loc {
                self.push(from, SegEnd::Check(p), stack, limit)?;
            }
        }
        for &e in cfa.out_edge_ids(loc) {
            let edge = &cfa.edges[e];
            if edge.op == Operation::ErrorLabel {
                continue;
            }
            stack.push(e);
            self.explore(cfa, from, edge.target, stack, limit)?;
            stack.pop();
        }
        Ok(())
    }

    fn push(
        &mut self,
        from: usize,
        to: SegEnd,
        stack: &[EdgeId],
        limit: usize,
    ) -> Result<(), EncodeError> {
        if self.segments.len() >= limit {
            return Err(EncodeError::TooManyPaths(limit));
        }
        self.segments.push(Segment {
            from,
            to,
            edges: stack.to_vec(),
        });
        Ok(())
    }

    pub fn cut_of(&self, loc: LocId) -> Option<usize> {
        self.cuts.iter().position(|&c| c == loc)
    }

    pub fn from_cut(&self, c: usize) -> impl Iterator<Item = (usize, &Segment)> + '_ {
        self.segments
            .iter()
            .enumerate()
            .filter(move |(_, s)| s.from == c)
    }

    /// Cuts at which arbitrary (non-initial) states may arise.
    pub fn head_cuts(&self, cfa: &Cfa) -> Vec<usize> {
        (0..self.cuts.len())
            .filter(|&c| cfa.is_loop_head(self.cuts[c]))
            .collect()
    }
}

/// One disjunct of an unrolled formula, kept to read back a concrete path from a model.
#[derive(Clone, Debug)]
struct Choice {
    step: usize,
    segment: usize,
    formula: BExp,
    havocs: Vec<Option<String>>,
}

/// Symbolic values produced by encoding one segment.
#[derive(Clone, Debug)]
pub struct PathImage {
    /// Conjunction of assumptions and definitions along the segment; never faults.
    pub constraint: BExp,
    /// Value of each program variable at the end of the segment.
    pub out: Vec<AExp>,
    havocs: Vec<Option<String>>,
}

pub struct Unrolling<'a> {
    cfa: &'a Cfa,
    blocks: &'a Blocks,
    pub symbols: SymbolTable,
    vars: Vec<(String, Signedness)>,
    pc_bits: usize,
    fresh: usize,
    choices: Vec<Choice>,
}

impl<'a> Unrolling<'a> {
    pub fn new(cfa: &'a Cfa, blocks: &'a Blocks) -> Self {
        let vars = cfa.symbols.iter().map(|(n, s)| (n.to_string(), s)).collect();
        let mut pc_bits = 0;
        while (1usize << pc_bits) < blocks.cuts.len() {
            pc_bits += 1;
        }
        Unrolling {
            cfa,
            blocks,
            symbols: SymbolTable::new(cfa.width()),
            vars,
            pc_bits,
            fresh: 0,
            choices: Vec::new(),
        }
    }

    fn declare(&mut self, name: String, sign: Signedness) -> AExp {
        self.symbols.declare(name.clone(), sign);
        AExp::Var(name)
    }

    /// Variables `x@i` for every program variable, in symbol-table order.
    pub fn state(&mut self, i: usize) -> Vec<AExp> {
        let vars = self.vars.clone();
        vars.into_iter()
            .map(|(v, s)| self.declare(format!("{v}@{i}"), s))
            .collect()
    }

    /// The step-`i` cut is `c`.
    pub fn at(&mut self, i: usize, c: usize) -> BExp {
        BExp::conj((0..self.pc_bits).map(|b| {
            let v = self.declare(format!("pc@{i}#{b}"), Signedness::Unsigned);
            let op = if c >> b & 1 == 1 { CmpOp::Ne } else { CmpOp::Eq };
            BExp::cmp(op, v, AExp::Const(0))
        }))
    }

    pub fn at_any(&mut self, i: usize, cuts: &[usize]) -> BExp {
        BExp::disj(cuts.iter().map(|&c| self.at(i, c)).collect::<Vec<_>>())
    }

    /// Step 0 is the initial location with all variables zero.
    pub fn init(&mut self) -> BExp {
        let at = self.at(0, 0);
        let xs = self.state(0);
        BExp::and(
            at,
            BExp::conj(xs.into_iter().map(|x| BExp::eq(x, AExp::Const(0)))),
        )
    }

    /// `b` over program variables, evaluated on the step-`i` state.
    pub fn rename(&mut self, b: &BExp, i: usize) -> BExp {
        let xs = self.state(i);
        self.rename_to(b, &xs)
    }

    pub fn rename_to(&self, b: &BExp, vals: &[AExp]) -> BExp {
        let syms = &self.cfa.symbols;
        b.rename_with(&mut |n| syms.index_of(n).map(|k| vals[k].clone()))
    }

    fn rename_a(&self, a: &AExp, vals: &[AExp]) -> AExp {
        let syms = &self.cfa.symbols;
        a.rename_with(&mut |n| syms.index_of(n).map(|k| vals[k].clone()))
    }

    /// Encodes segment `seg` starting from the values `input`.
    pub fn image(&mut self, seg: usize, input: &[AExp], tag: usize) -> PathImage {
        let edges = self.blocks.segments[seg].edges.clone();
        let mut cur = input.to_vec();
        let mut parts = Vec::new();
        let mut havocs = Vec::new();
        for e in edges {
            let op = self.cfa.edges[e].op.clone();
            let mut hv = None;
            match &op {
                Operation::Assume(b) => parts.push(holds_total(&self.rename_to(b, &cur))),
                Operation::Assign(v, rhs) => {
                    let k = self.cfa.symbols.index_of(v).expect("declared");
                    let rhs = self.rename_a(rhs, &cur);
                    self.fresh += 1;
                    let t = self.declare(format!("{v}@{tag}.{}", self.fresh), self.vars[k].1);
                    let def = defined(&rhs);
                    if def != BExp::True {
                        parts.push(def);
                    }
                    parts.push(BExp::eq(t.clone(), rhs));
                    cur[k] = t;
                }
                Operation::Havoc(v) => {
                    let k = self.cfa.symbols.index_of(v).expect("declared");
                    self.fresh += 1;
                    let name = format!("{v}@{tag}.{}", self.fresh);
                    cur[k] = self.declare(name.clone(), self.vars[k].1);
                    hv = Some(name);
                }
                Operation::Call(_) | Operation::Return | Operation::ErrorLabel => {}
            }
            havocs.push(hv);
        }
        PathImage {
            constraint: BExp::conj(parts),
            out: cur,
            havocs,
        }
    }

    /// One block step from step `i` to step `i + 1`.
    pub fn transition(&mut self, i: usize) -> BExp {
        let xs = self.state(i);
        let ys = self.state(i + 1);
        let mut disj = Vec::new();
        for seg in 0..self.blocks.segments.len() {
            let SegEnd::Cut(to) = self.blocks.segments[seg].to else {
                continue;
            };
            let from = self.blocks.segments[seg].from;
            let img = self.image(seg, &xs, i);
            let mut parts = vec![self.at(i, from), img.constraint];
            parts.push(self.at(i + 1, to));
            parts.extend(ys.iter().zip(&img.out).map(|(y, o)| BExp::eq(y.clone(), o.clone())));
            let f = BExp::conj(parts);
            self.choices.push(Choice {
                step: i,
                segment: seg,
                formula: f.clone(),
                havocs: img.havocs,
            });
            disj.push(f);
        }
        BExp::disj(disj)
    }

    /// Some property is violated on a segment leaving the step-`i` state.
    pub fn violation(&mut self, i: usize) -> BExp {
        let xs = self.state(i);
        let mut disj = Vec::new();
        for seg in 0..self.blocks.segments.len() {
            let SegEnd::Check(p) = self.blocks.segments[seg].to else {
                continue;
            };
            let from = self.blocks.segments[seg].from;
            let img = self.image(seg, &xs, i);
            let cond = self.rename_to(&self.blocks.props[p].condition, &img.out);
            let f = BExp::conj([self.at(i, from), img.constraint, fails_total(&cond)]);
            self.choices.push(Choice {
                step: i,
                segment: seg,
                formula: f.clone(),
                havocs: img.havocs,
            });
            disj.push(f);
        }
        BExp::disj(disj)
    }

    /// For every cut with invariants: if step `i` is there, the invariants hold.
    pub fn assume_invariants(&mut self, i: usize, invs: &BTreeMap<usize, Vec<BExp>>) -> BExp {
        let mut parts = Vec::new();
        for (&c, list) in invs {
            if list.is_empty() {
                continue;
            }
            let body = BExp::conj(
                list.iter()
                    .map(|b| {
                        let r = self.rename(b, i);
                        holds_total(&r)
                    })
                    .collect::<Vec<_>>(),
            );
            let at = self.at(i, c);
            parts.push(if at == BExp::True {
                body
            } else {
                BExp::or(BExp::not(at), body)
            });
        }
        BExp::conj(parts)
    }

    /// Formula for executing exactly the segments `seq` from the initial state; the last
    /// segment may end in a property check, which must then fail.
    pub fn fixed_path(&mut self, seq: &[usize]) -> BExp {
        let mut parts = Vec::new();
        let mut cur = self.state(0);
        parts.extend(cur.iter().map(|x| BExp::eq(x.clone(), AExp::Const(0))));
        for (i, &seg) in seq.iter().enumerate() {
            let img = self.image(seg, &cur, i);
            let mut f = vec![img.constraint.clone()];
            if let SegEnd::Check(p) = self.blocks.segments[seg].to {
                let cond = self.rename_to(&self.blocks.props[p].condition, &img.out);
                f.push(fails_total(&cond));
            }
            let f = BExp::conj(f);
            self.choices.push(Choice {
                step: i,
                segment: seg,
                formula: f.clone(),
                havocs: img.havocs.clone(),
            });
            parts.push(f);
            cur = img.out;
        }
        BExp::conj(parts)
    }

    /// Reads a concrete counterexample out of a model of a formula built from
    /// [`Unrolling::init`], [`Unrolling::transition`], [`Unrolling::violation`] or
    /// [`Unrolling::fixed_path`]. The result is checked by replay.
    pub fn counterexample(&self, model: &Model) -> Option<Counterexample> {
        let sat = |c: &Choice| eval_bexp(&c.formula, &self.symbols, model) == Ok(true);
        let last = self
            .choices
            .iter()
            .filter(|c| matches!(self.blocks.segments[c.segment].to, SegEnd::Check(_)))
            .filter(|c| sat(c))
            .min_by_key(|c| c.step)?;
        let mut chosen = Vec::new();
        for i in 0..last.step {
            let c = self.choices.iter().find(|c| {
                c.step == i
                    && matches!(self.blocks.segments[c.segment].to, SegEnd::Cut(_))
                    && sat(c)
            })?;
            chosen.push(c);
        }
        chosen.push(last);
        let SegEnd::Check(p) = self.blocks.segments[last.segment].to else {
            return None;
        };
        let property = self.blocks.props[p].clone();
        let mut steps = Vec::new();
        let mut loc = self.cfa.initial;
        let mut state = initial_state(self.cfa);
        for c in chosen {
            for (k, &e) in self.blocks.segments[c.segment].edges.iter().enumerate() {
                let edge = &self.cfa.edges[e];
                let havoc = c.havocs[k].as_ref().map(|n| model.get(n).copied().unwrap_or(0));
                let next = step(self.cfa, &state, &edge.op, havoc)?;
                steps.push(PathStep {
                    location: loc,
                    state,
                    op: Some(edge.op.clone()),
                });
                loc = edge.target;
                state = next;
            }
        }
        steps.push(PathStep {
            location: loc,
            state,
            op: None,
        });
        let cex = Counterexample {
            violated_at: steps.len() - 1,
            path: Path { steps },
            property,
        };
        replay(self.cfa, &cex).then_some(cex)
    }
}
