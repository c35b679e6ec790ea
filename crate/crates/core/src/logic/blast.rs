//! Bit-level encoding of fixed-width expressions into CNF (Tseitin style).
//!
//! Every arithmetic term becomes `width` literals (LSB first) plus a fault literal that
//! is true exactly when evaluation would divide by zero. Boolean connectives follow the
//! short-circuit rules of [`super::eval`], so the encoding agrees with `eval_bexp`
//! on every assignment, including faulting ones.

use std::collections::{BTreeMap, HashMap};

use super::expr::{to_value, AExp, ArithOp, BExp, CmpOp, SymbolTable};
use super::sat::{Lit, SatResult, Solver};

pub struct Blaster<'a> {
    pub solver: Solver,
    st: &'a SymbolTable,
    width: usize,
    truth: Lit,
    and_cache: HashMap<(Lit, Lit), Lit>,
    xor_cache: HashMap<(Lit, Lit), Lit>,
    vars: BTreeMap<String, Vec<Lit>>,
    terms: HashMap<AExp, Term>,
}

#[derive(Clone)]
struct Term {
    bits: Vec<Lit>,
    fault: Lit,
    unsigned: bool,
}

impl<'a> Blaster<'a> {
    pub fn new(st: &'a SymbolTable) -> Self {
        let mut solver = Solver::new();
        let t = Lit::new(solver.new_var(), false);
        solver.add_clause(&[t]);
        Blaster {
            solver,
            st,
            width: st.width() as usize,
            truth: t,
            and_cache: HashMap::new(),
            xor_cache: HashMap::new(),
            vars: BTreeMap::new(),
            terms: HashMap::new(),
        }
    }

    fn t(&self) -> Lit {
        self.truth
    }

    fn f(&self) -> Lit {
        !self.truth
    }

    fn fresh(&mut self) -> Lit {
        Lit::new(self.solver.new_var(), false)
    }

    fn and(&mut self, a: Lit, b: Lit) -> Lit {
        let (t, f) = (self.t(), self.f());
        if a == f || b == f || a == !b {
            return f;
        }
        if a == t || a == b {
            return b;
        }
        if b == t {
            return a;
        }
        let key = if a < b { (a, b) } else { (b, a) };
        if let Some(&g) = self.and_cache.get(&key) {
            return g;
        }
        let g = self.fresh();
        self.solver.add_clause(&[!g, a]);
        self.solver.add_clause(&[!g, b]);
        self.solver.add_clause(&[g, !a, !b]);
        self.and_cache.insert(key, g);
        g
    }

    fn or(&mut self, a: Lit, b: Lit) -> Lit {
        !self.and(!a, !b)
    }

    fn xor(&mut self, a: Lit, b: Lit) -> Lit {
        let (t, f) = (self.t(), self.f());
        if a == f {
            return b;
        }
        if b == f {
            return a;
        }
        if a == t {
            return !b;
        }
        if b == t {
            return !a;
        }
        if a == b {
            return f;
        }
        if a == !b {
            return t;
        }
        let key = if a < b { (a, b) } else { (b, a) };
        if let Some(&g) = self.xor_cache.get(&key) {
            return g;
        }
        let g = self.fresh();
        self.solver.add_clause(&[!g, a, b]);
        self.solver.add_clause(&[!g, !a, !b]);
        self.solver.add_clause(&[g, !a, b]);
        self.solver.add_clause(&[g, a, !b]);
        self.xor_cache.insert(key, g);
        g
    }

    fn ite(&mut self, c: Lit, a: Lit, b: Lit) -> Lit {
        if c == self.t() || a == b {
            return a;
        }
        if c == self.f() {
            return b;
        }
        let x = self.and(c, a);
        let y = self.and(!c, b);
        self.or(x, y)
    }

    fn ite_vec(&mut self, c: Lit, a: &[Lit], b: &[Lit]) -> Vec<Lit> {
        a.iter().zip(b).map(|(&x, &y)| self.ite(c, x, y)).collect()
    }

    fn const_bits(&self, value: i64, n: usize) -> Vec<Lit> {
        (0..n)
            .map(|i| {
                if i < 64 && (value >> i) & 1 == 1 {
                    self.t()
                } else {
                    self.f()
                }
            })
            .collect()
    }

    /// Ripple-carry addition; returns (sum, carry out).
    fn add_bits(&mut self, a: &[Lit], b: &[Lit], mut carry: Lit) -> (Vec<Lit>, Lit) {
        let mut out = Vec::with_capacity(a.len());
        for (&x, &y) in a.iter().zip(b) {
            let xy = self.xor(x, y);
            out.push(self.xor(xy, carry));
            let g = self.and(x, y);
            let p = self.and(carry, xy);
            carry = self.or(g, p);
        }
        (out, carry)
    }

    fn sub_bits(&mut self, a: &[Lit], b: &[Lit]) -> (Vec<Lit>, Lit) {
        let nb: Vec<Lit> = b.iter().map(|&l| !l).collect();
        let t = self.t();
        self.add_bits(a, &nb, t)
    }

    fn neg_bits(&mut self, a: &[Lit]) -> Vec<Lit> {
        let zero = self.const_bits(0, a.len());
        self.sub_bits(&zero, a).0
    }

    fn mul_bits(&mut self, a: &[Lit], b: &[Lit]) -> Vec<Lit> {
        let n = a.len();
        let mut acc = self.const_bits(0, n);
        for (i, &bi) in b.iter().enumerate() {
            if bi == self.f() {
                continue;
            }
            let mut partial = self.const_bits(0, n);
            for j in 0..n - i {
                partial[i + j] = self.and(a[j], bi);
            }
            let f = self.f();
            acc = self.add_bits(&acc, &partial, f).0;
        }
        acc
    }

    /// Unsigned `a >= b` via the carry of `a - b`.
    fn uge(&mut self, a: &[Lit], b: &[Lit]) -> Lit {
        self.sub_bits(a, b).1
    }

    fn udivrem(&mut self, a: &[Lit], b: &[Lit]) -> (Vec<Lit>, Vec<Lit>) {
        let n = a.len();
        let mut q = self.const_bits(0, n);
        let mut r = self.const_bits(0, n);
        let mut b_ext = b.to_vec();
        b_ext.push(self.f());
        for i in (0..n).rev() {
            let mut r_ext = Vec::with_capacity(n + 1);
            r_ext.push(a[i]);
            r_ext.extend_from_slice(&r);
            let ge = self.uge(&r_ext, &b_ext);
            q[i] = ge;
            let diff = self.sub_bits(&r_ext, &b_ext).0;
            let next = self.ite_vec(ge, &diff, &r_ext);
            r = next[..n].to_vec();
        }
        (q, r)
    }

    fn is_zero(&mut self, a: &[Lit]) -> Lit {
        let mut acc = self.t();
        for &l in a {
            acc = self.and(acc, !l);
        }
        acc
    }

    fn var_bits(&mut self, name: &str) -> Vec<Lit> {
        if let Some(bits) = self.vars.get(name) {
            return bits.clone();
        }
        let bits: Vec<Lit> = (0..self.width).map(|_| self.fresh()).collect();
        self.vars.insert(name.to_string(), bits.clone());
        bits
    }

    fn term(&mut self, e: &AExp) -> Term {
        if let Some(t) = self.terms.get(e) {
            return t.clone();
        }
        let f = self.f();
        let term = match e {
            AExp::Const(c) => Term {
                bits: self.const_bits(*c, self.width),
                fault: f,
                unsigned: false,
            },
            AExp::Var(v) => Term {
                bits: self.var_bits(v),
                fault: f,
                unsigned: self.st.is_unsigned(v),
            },
            AExp::Neg(a) => {
                let a = self.term(a);
                Term {
                    bits: self.neg_bits(&a.bits),
                    ..a
                }
            }
            AExp::Bin(op, a, b) => {
                let a = self.term(a);
                let b = self.term(b);
                let unsigned = a.unsigned || b.unsigned;
                let mut fault = self.or(a.fault, b.fault);
                let bits = match op {
                    ArithOp::Add => self.add_bits(&a.bits, &b.bits, f).0,
                    ArithOp::Sub => self.sub_bits(&a.bits, &b.bits).0,
                    ArithOp::Mul => self.mul_bits(&a.bits, &b.bits),
                    ArithOp::Div | ArithOp::Rem => {
                        let z = self.is_zero(&b.bits);
                        fault = self.or(fault, z);
                        if unsigned {
                            let (q, r) = self.udivrem(&a.bits, &b.bits);
                            if *op == ArithOp::Div {
                                q
                            } else {
                                r
                            }
                        } else {
                            let sa = a.bits[self.width - 1];
                            let sb = b.bits[self.width - 1];
                            let na = self.neg_bits(&a.bits);
                            let nb = self.neg_bits(&b.bits);
                            let abs_a = self.ite_vec(sa, &na, &a.bits);
                            let abs_b = self.ite_vec(sb, &nb, &b.bits);
                            let (q, r) = self.udivrem(&abs_a, &abs_b);
                            if *op == ArithOp::Div {
                                let s = self.xor(sa, sb);
                                let nq = self.neg_bits(&q);
                                self.ite_vec(s, &nq, &q)
                            } else {
                                let nr = self.neg_bits(&r);
                                self.ite_vec(sa, &nr, &r)
                            }
                        }
                    }
                };
                Term {
                    bits,
                    fault,
                    unsigned,
                }
            }
        };
        self.terms.insert(e.clone(), term.clone());
        term
    }

    fn compare(&mut self, op: CmpOp, a: &Term, b: &Term) -> Lit {
        let unsigned = a.unsigned || b.unsigned;
        let (mut x, mut y) = (a.bits.clone(), b.bits.clone());
        if !unsigned {
            let top = self.width - 1;
            x[top] = !x[top];
            y[top] = !y[top];
        }
        match op {
            CmpOp::Eq | CmpOp::Ne => {
                let mut acc = self.t();
                for (&p, &q) in x.iter().zip(&y) {
                    let d = self.xor(p, q);
                    acc = self.and(acc, !d);
                }
                if op == CmpOp::Eq {
                    acc
                } else {
                    !acc
                }
            }
            CmpOp::Ge => self.uge(&x, &y),
            CmpOp::Lt => !self.uge(&x, &y),
            CmpOp::Le => self.uge(&y, &x),
            CmpOp::Gt => !self.uge(&y, &x),
        }
    }

    /// Encodes `e`; returns (value, fault) literals.
    pub fn formula(&mut self, e: &BExp) -> (Lit, Lit) {
        let (t, f) = (self.t(), self.f());
        match e {
            BExp::True => (t, f),
            BExp::False => (f, f),
            BExp::Cmp(op, a, b) => {
                let a = self.term(a);
                let b = self.term(b);
                let v = self.compare(*op, &a, &b);
                let fault = self.or(a.fault, b.fault);
                (v, fault)
            }
            BExp::Not(a) => {
                let (v, fa) = self.formula(a);
                (!v, fa)
            }
            BExp::And(a, b) => {
                let (va, fa) = self.formula(a);
                let (vb, fb) = self.formula(b);
                let v = self.and(va, vb);
                let g = self.and(va, fb);
                (v, self.or(fa, g))
            }
            BExp::Or(a, b) => {
                let (va, fa) = self.formula(a);
                let (vb, fb) = self.formula(b);
                let v = self.or(va, vb);
                let g = self.and(!va, fb);
                (v, self.or(fa, g))
            }
            BExp::Implies(a, b) => {
                let (va, fa) = self.formula(a);
                let (vb, fb) = self.formula(b);
                let v = self.or(!va, vb);
                let g = self.and(va, fb);
                (v, self.or(fa, g))
            }
        }
    }

    pub fn assert_lit(&mut self, l: Lit) -> bool {
        self.solver.add_clause(&[l])
    }

    /// Literal that holds iff `e` evaluates to `Ok(true)`.
    pub fn holds(&mut self, e: &BExp) -> Lit {
        let (v, fault) = self.formula(e);
        self.and(v, !fault)
    }

    pub fn solve(&mut self, budget: u64, interrupt: &dyn Fn() -> bool) -> SatResult {
        self.solver.solve(budget, interrupt)
    }

    /// Values of all encoded variables in the current model.
    pub fn model(&self) -> BTreeMap<String, i64> {
        self.vars
            .iter()
            .map(|(name, bits)| {
                let raw = bits
                    .iter()
                    .enumerate()
                    .fold(0u64, |acc, (i, l)| {
                        let bit = self.solver.model_value(l.var()) != l.is_negative();
                        acc | (bit as u64) << i
                    });
                (
                    name.clone(),
                    to_value(raw, self.width as u32, self.st.is_unsigned(name)),
                )
            })
            .collect()
    }
}
