//! Interval abstract interpretation with widening at loop heads.

use std::collections::{BTreeSet, VecDeque};

use crate::frontend::{Cfa, LocId, Operation};
use crate::logic::{AExp, ArithOp, BExp, CmpOp, Signedness, SymbolTable};
use crate::witness::LocatedInvariant;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Interval {
    pub lo: i64,
    pub hi: i64,
}

impl Interval {
    pub fn point(v: i64) -> Self {
        Interval { lo: v, hi: v }
    }

    fn join(self, o: Interval) -> Interval {
        Interval {
            lo: self.lo.min(o.lo),
            hi: self.hi.max(o.hi),
        }
    }

    fn within(self, o: Interval) -> bool {
        o.lo <= self.lo && self.hi <= o.hi
    }
}

/// `None` is the unreachable state.
pub type Store = Option<Vec<Interval>>;

#[derive(Clone, Debug)]
pub struct IntervalOptions {
    /// Joins at a loop head before widening kicks in.
    pub widen_after: usize,
    /// Decreasing iterations after the fixpoint.
    pub narrowing: usize,
}

impl Default for IntervalOptions {
    fn default() -> Self {
        IntervalOptions {
            widen_after: 3,
            narrowing: 0,
        }
    }
}

fn range(st: &SymbolTable, v: &str) -> Interval {
    Interval {
        lo: st.min_value(v),
        hi: st.max_value(v),
    }
}

fn top(st: &SymbolTable) -> Vec<Interval> {
    st.names().map(|v| range(st, v)).collect()
}

/// Value set of `e` over mathematical integers, congruent modulo `2^width` to the machine
/// result. `None` when unknown.
fn eval(e: &AExp, st: &SymbolTable, s: &[Interval]) -> Option<Interval> {
    match e {
        AExp::Const(c) => Some(Interval::point(*c)),
        AExp::Var(v) => st.index_of(v).map(|i| s[i]),
        AExp::Neg(a) => {
            let a = eval(a, st, s)?;
            Some(Interval {
                lo: a.hi.checked_neg()?,
                hi: a.lo.checked_neg()?,
            })
        }
        AExp::Bin(op, a, b) => {
            let a = eval(a, st, s)?;
            let b = eval(b, st, s)?;
            match op {
                ArithOp::Add => Some(Interval {
                    lo: a.lo.checked_add(b.lo)?,
                    hi: a.hi.checked_add(b.hi)?,
                }),
                ArithOp::Sub => Some(Interval {
                    lo: a.lo.checked_sub(b.hi)?,
                    hi: a.hi.checked_sub(b.lo)?,
                }),
                ArithOp::Mul => {
                    let ps = [
                        a.lo.checked_mul(b.lo)?,
                        a.lo.checked_mul(b.hi)?,
                        a.hi.checked_mul(b.lo)?,
                        a.hi.checked_mul(b.hi)?,
                    ];
                    Some(Interval {
                        lo: *ps.iter().min()?,
                        hi: *ps.iter().max()?,
                    })
                }
                ArithOp::Div | ArithOp::Rem => None,
            }
        }
    }
}

fn assign(st: &SymbolTable, s: &mut [Interval], v: &str, e: &AExp) {
    let Some(i) = st.index_of(v) else { return };
    let r = range(st, v);
    s[i] = match eval(e, st, s) {
        Some(iv) if iv.within(r) => iv,
        _ => r,
    };
}

/// Common signedness of the variables in a comparison, if they agree.
fn cmp_sign(st: &SymbolTable, a: &AExp, b: &AExp) -> Option<Signedness> {
    let mut vars = BTreeSet::new();
    a.free_vars(&mut vars);
    b.free_vars(&mut vars);
    let mut sign = None;
    for v in &vars {
        let s = st.signedness(v)?;
        if sign.is_some_and(|x| x != s) {
            return None;
        }
        sign = Some(s);
    }
    sign
}

/// Literal as read by a comparison of the given signedness.
fn literal(st: &SymbolTable, c: i64, sign: Signedness) -> i64 {
    let w = st.width();
    let bits = (c as u64) & st.mask();
    match sign {
        Signedness::Unsigned => bits as i64,
        Signedness::Signed => {
            if bits >> (w - 1) & 1 == 1 {
                bits as i64 - (1i64 << w)
            } else {
                bits as i64
            }
        }
    }
}

fn clamp_le(s: &mut Interval, c: i64) {
    s.hi = s.hi.min(c);
}

fn clamp_ge(s: &mut Interval, c: i64) {
    s.lo = s.lo.max(c);
}

/// Restricts `s` to states where the atom `a op b` may hold.
fn refine_cmp(st: &SymbolTable, s: &mut Vec<Interval>, op: CmpOp, a: &AExp, b: &AExp) {
    let Some(sign) = cmp_sign(st, a, b) else { return };
    match (a, b) {
        (AExp::Var(x), AExp::Const(c)) => {
            let i = st.index_of(x).expect("declared");
            let c = literal(st, *c, sign);
            let iv = &mut s[i];
            match op {
                CmpOp::Eq => {
                    clamp_ge(iv, c);
                    clamp_le(iv, c);
                }
                CmpOp::Ne => {
                    if iv.lo == c && iv.hi > c {
                        iv.lo += 1;
                    } else if iv.hi == c && iv.lo < c {
                        iv.hi -= 1;
                    } else if iv.lo == c && iv.hi == c {
                        iv.lo = c + 1;
                    }
                }
                CmpOp::Lt => clamp_le(iv, c.saturating_sub(1)),
                CmpOp::Le => clamp_le(iv, c),
                CmpOp::Gt => clamp_ge(iv, c.saturating_add(1)),
                CmpOp::Ge => clamp_ge(iv, c),
            }
        }
        (AExp::Const(_), AExp::Var(_)) => refine_cmp(st, s, op.flipped(), b, a),
        (AExp::Var(x), AExp::Var(y)) => {
            let (i, j) = (st.index_of(x).expect("declared"), st.index_of(y).expect("declared"));
            let (xi, yi) = (s[i], s[j]);
            let (mut nx, mut ny) = (xi, yi);
            match op {
                CmpOp::Eq => {
                    nx.lo = xi.lo.max(yi.lo);
                    nx.hi = xi.hi.min(yi.hi);
                    ny = nx;
                }
                CmpOp::Ne => {}
                CmpOp::Lt => {
                    nx.hi = xi.hi.min(yi.hi.saturating_sub(1));
                    ny.lo = yi.lo.max(xi.lo.saturating_add(1));
                }
                CmpOp::Le => {
                    nx.hi = xi.hi.min(yi.hi);
                    ny.lo = yi.lo.max(xi.lo);
                }
                CmpOp::Gt => return refine_cmp(st, s, CmpOp::Lt, b, a),
                CmpOp::Ge => return refine_cmp(st, s, CmpOp::Le, b, a),
            }
            if i == j {
                return;
            }
            s[i] = nx;
            s[j] = ny;
        }
        _ => {}
    }
}

fn is_empty(s: &[Interval]) -> bool {
    s.iter().any(|i| i.lo > i.hi)
}

fn join_store(a: &Store, b: &Store) -> Store {
    match (a, b) {
        (None, x) | (x, None) => x.clone(),
        (Some(x), Some(y)) => Some(x.iter().zip(y).map(|(p, q)| p.join(*q)).collect()),
    }
}

/// States of `s` in which `b` may evaluate to `want`.
fn refine(st: &SymbolTable, s: Store, b: &BExp, want: bool) -> Store {
    let mut s = s?;
    match b {
        BExp::True => want.then_some(s),
        BExp::False => (!want).then_some(s),
        BExp::Cmp(op, x, y) => {
            let op = if want { *op } else { op.negated() };
            refine_cmp(st, &mut s, op, x, y);
            (!is_empty(&s)).then_some(s)
        }
        BExp::Not(x) => refine(st, Some(s), x, !want),
        BExp::And(x, y) if want => {
            let s = refine(st, Some(s), x, true);
            refine(st, s, y, true)
        }
        BExp::Or(x, y) if !want => {
            let s = refine(st, Some(s), x, false);
            refine(st, s, y, false)
        }
        BExp::Implies(x, y) if !want => {
            let s = refine(st, Some(s), x, true);
            refine(st, s, y, false)
        }
        BExp::And(x, y) => join_store(
            &refine(st, Some(s.clone()), x, false),
            &refine(st, Some(s), y, false),
        ),
        BExp::Or(x, y) => join_store(
            &refine(st, Some(s.clone()), x, true),
            &refine(st, Some(s), y, true),
        ),
        BExp::Implies(x, y) => join_store(
            &refine(st, Some(s.clone()), x, false),
            &refine(st, Some(s), y, true),
        ),
    }
}

fn transfer(st: &SymbolTable, s: &Store, op: &Operation) -> Store {
    let mut s = s.clone()?;
    match op {
        Operation::Assume(b) => return refine(st, Some(s), b, true),
        Operation::Assign(v, e) => assign(st, &mut s, v, e),
        Operation::Havoc(v) => {
            if let Some(i) = st.index_of(v) {
                s[i] = range(st, v);
            }
        }
        Operation::Call(_) | Operation::Return | Operation::ErrorLabel => {}
    }
    Some(s)
}

fn widen(st: &SymbolTable, old: &[Interval], new: &[Interval]) -> Vec<Interval> {
    let full = top(st);
    old.iter()
        .zip(new)
        .zip(full)
        .map(|((o, n), r)| Interval {
            lo: if n.lo < o.lo { r.lo } else { o.lo },
            hi: if n.hi > o.hi { r.hi } else { o.hi },
        })
        .collect()
}

/// Interval store at every location.
pub fn analyze(cfa: &Cfa, opts: &IntervalOptions) -> Vec<Store> {
    let st = &cfa.symbols;
    let n = cfa.locations.len();
    let mut stores: Vec<Store> = vec![None; n];
    stores[cfa.initial] = Some(vec![Interval::point(0); st.len()]);
    let mut visits = vec![0usize; n];
    let mut queue: VecDeque<LocId> = VecDeque::from([cfa.initial]);
    let mut queued = vec![false; n];
    queued[cfa.initial] = true;
    while let Some(l) = queue.pop_front() {
        queued[l] = false;
        for e in cfa.out_edges(l) {
            let post = transfer(st, &stores[l], &e.op);
            if post.is_none() {
                continue;
            }
            let t = e.target;
            let joined = join_store(&stores[t], &post);
            if joined == stores[t] {
                continue;
            }
            let next = if cfa.is_loop_head(t) {
                visits[t] += 1;
                match (&stores[t], &joined) {
                    (Some(old), Some(new)) if visits[t] > opts.widen_after => {
                        Some(widen(st, old, new))
                    }
                    _ => joined,
                }
            } else {
                joined
            };
            if next != stores[t] {
                stores[t] = next;
                if !queued[t] {
                    queued[t] = true;
                    queue.push_back(t);
                }
            }
        }
    }
    for _ in 0..opts.narrowing {
        let mut next: Vec<Store> = vec![None; n];
        next[cfa.initial] = stores[cfa.initial].clone();
        for e in &cfa.edges {
            let post = transfer(st, &stores[e.source], &e.op);
            next[e.target] = join_store(&next[e.target], &post);
        }
        stores = next;
    }
    stores
}

/// Bound constraints of `s`; `None` for the unreachable store.
pub fn constraints(st: &SymbolTable, s: &Store) -> Option<Vec<BExp>> {
    let s = s.as_ref()?;
    let mut out = Vec::new();
    for (v, iv) in st.names().zip(s) {
        let r = range(st, v);
        let var = AExp::var(v);
        if iv.lo == iv.hi {
            out.push(BExp::eq(var, AExp::Const(iv.lo)));
            continue;
        }
        if iv.lo > r.lo || st.is_unsigned(v) {
            out.push(BExp::cmp(CmpOp::Ge, var.clone(), AExp::Const(iv.lo)));
        }
        if iv.hi < r.hi {
            out.push(BExp::cmp(CmpOp::Le, var, AExp::Const(iv.hi)));
        }
    }
    Some(out)
}

pub fn loop_head_invariants(cfa: &Cfa) -> Vec<LocatedInvariant> {
    let stores = analyze(cfa, &IntervalOptions::default());
    cfa.loop_heads
        .iter()
        .filter_map(|&h| {
            let cs = constraints(&cfa.symbols, &stores[h])?;
            (!cs.is_empty()).then(|| LocatedInvariant {
                loop_head: h,
                invariant: BExp::conj(cs),
                source: "interval".into(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{parse_bexp, split_conjunctions};
    use crate::semantics::holds_at;
    use crate::task::Task;
    use crate::testing::COUNTDOWN;

    fn head_invariant(text: &str, width: u32) -> (Task, Vec<BExp>) {
        let t = Task::from_text("t.mc", text, width).unwrap();
        let inv = loop_head_invariants(&t.cfa);
        let conj = inv.first().map(|l| split_conjunctions(&l.invariant)).unwrap_or_default();
        (t, conj)
    }

    #[test]
    fn countdown_has_unsigned_lower_bound() {
        let (_, c) = head_invariant(COUNTDOWN, 8);
        assert!(c.contains(&parse_bexp("x >= 0").unwrap()));
    }

    #[test]
    fn constant_before_loop() {
        let (_, c) = head_invariant(
            "int main() {\n int x = 5;\n int c = nondet();\n while (c != 0) {\n  c = nondet();\n }\n if (!(x == 5)) { Error: return 1; }\n return 0;\n}\n",
            8,
        );
        assert_eq!(c, vec![parse_bexp("x == 5").unwrap()]);
    }

    #[test]
    fn widening_keeps_lower_bound() {
        let (_, c) = head_invariant(
            "int main() {\n int x = 0;\n while (x < 100) {\n  x++;\n }\n if (!(x >= 0)) { Error: return 1; }\n return 0;\n}\n",
            8,
        );
        // the fourth change at the head widens the upper bound to 127
        assert_eq!(c, vec![parse_bexp("x >= 0").unwrap()]);
    }

    #[test]
    fn narrowing_recovers_guard_bound() {
        let t = Task::from_text(
            "t.mc",
            "int main() {\n int x = 0;\n while (x < 100) {\n  x++;\n }\n if (!(x >= 0)) { Error: return 1; }\n return 0;\n}\n",
            8,
        )
        .unwrap();
        let s = analyze(&t.cfa, &IntervalOptions { widen_after: 3, narrowing: 2 });
        let h = *t.cfa.loop_heads.iter().next().unwrap();
        assert_eq!(s[h].as_ref().unwrap()[0], Interval { lo: 0, hi: 100 });
    }

    #[test]
    fn results_hold_on_reachable_states() {
        let programs = [
            COUNTDOWN.to_string(),
            "int main() {\n int a = 0;\n int b = 3;\n while (a < 5) {\n  a = a + 1;\n  if (b > 0) { b = b - 1; }\n }\n if (!(b >= 0)) { Error: return 1; }\n return 0;\n}\n".to_string(),
            "int main() {\n signed int a = nondet();\n assume(a > -3 && a < 3);\n while (a != 0) {\n  if (a > 0) { a--; } else { a++; }\n }\n if (!(a == 0)) { Error: return 1; }\n return 0;\n}\n".to_string(),
        ];
        for p in programs {
            let t = Task::from_text("t.mc", &p, 4).unwrap();
            for li in loop_head_invariants(&t.cfa) {
                assert_eq!(holds_at(&t.cfa, &li.invariant, li.loop_head, 1 << 20), Some(true), "{}", li.invariant);
            }
        }
    }
}
