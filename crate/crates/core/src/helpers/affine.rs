//! Karr's affine-relation analysis, generic over the coefficient field.
//!
//! An abstract value is an affine subspace kept as a base point plus a basis of
//! directions in reduced row echelon form, so equal subspaces have equal
//! representations. Guards are ignored and non-linear assignments become havocs, which
//! keeps every relation valid modulo `2^width` as well.

use std::collections::VecDeque;
use std::fmt::Debug;

use num_rational::Rational64;
use num_traits::{Num, Signed, ToPrimitive};

use crate::frontend::{Cfa, LocId, Operation};
use crate::logic::{AExp, ArithOp, BExp, SymbolTable};
use crate::witness::LocatedInvariant;

/// Scalars the analysis computes with.
pub trait Field: Num + Signed + Clone + PartialEq + Debug + Send + Sync + 'static {
    fn from_i64(v: i64) -> Self;
    fn near_zero(&self) -> bool;
    /// Close rational approximation `(numerator, denominator)`.
    fn to_ratio(&self) -> Option<(i64, i64)>;
}

impl Field for Rational64 {
    fn from_i64(v: i64) -> Self {
        Rational64::from_integer(v)
    }

    fn near_zero(&self) -> bool {
        num_traits::Zero::is_zero(self)
    }

    fn to_ratio(&self) -> Option<(i64, i64)> {
        Some((*self.numer(), *self.denom()))
    }
}

impl Field for f64 {
    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn near_zero(&self) -> bool {
        self.abs() < 1e-9
    }

    fn to_ratio(&self) -> Option<(i64, i64)> {
        if !self.is_finite() {
            return None;
        }
        for den in 1..=1000i64 {
            let num = (self * den as f64).round();
            if (num / den as f64 - self).abs() < 1e-9 {
                return num.to_i64().map(|n| (n, den));
            }
        }
        None
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Affine<T> {
    pub point: Vec<T>,
    /// Reduced row echelon basis of the direction space.
    pub basis: Vec<Vec<T>>,
}

fn pivot<T: Field>(row: &[T]) -> Option<usize> {
    row.iter().position(|x| !x.near_zero())
}

impl<T: Field> Affine<T> {
    pub fn point(p: Vec<T>) -> Self {
        Affine {
            point: p,
            basis: Vec::new(),
        }
    }

    /// Equality up to [`Field::near_zero`].
    pub fn same(&self, o: &Affine<T>) -> bool {
        let close = |a: &[T], b: &[T]| a.iter().zip(b).all(|(x, y)| (x.clone() - y.clone()).near_zero());
        self.basis.len() == o.basis.len()
            && close(&self.point, &o.point)
            && self.basis.iter().zip(&o.basis).all(|(a, b)| close(a, b))
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Subtracts basis components at pivot columns.
    fn reduce(&self, v: &mut [T]) {
        for row in &self.basis {
            let p = pivot(row).expect("basis rows are nonzero");
            if v[p].near_zero() {
                continue;
            }
            let f = v[p].clone();
            for (x, r) in v.iter_mut().zip(row) {
                *x = x.clone() - f.clone() * r.clone();
            }
        }
        for x in v.iter_mut() {
            if x.near_zero() {
                *x = T::zero();
            }
        }
    }

    /// Adds a direction; returns whether the dimension grew.
    pub fn add_direction(&mut self, mut v: Vec<T>) -> bool {
        self.reduce(&mut v);
        let Some(p) = pivot(&v) else { return false };
        let lead = v[p].clone();
        for x in v.iter_mut() {
            *x = x.clone() / lead.clone();
        }
        for row in self.basis.iter_mut() {
            if row[p].near_zero() {
                continue;
            }
            let f = row[p].clone();
            for (x, r) in row.iter_mut().zip(&v) {
                *x = x.clone() - f.clone() * r.clone();
            }
        }
        self.basis.push(v);
        self.basis.sort_by_key(|r| pivot(r));
        let mut pt = std::mem::take(&mut self.point);
        self.reduce(&mut pt);
        self.point = pt;
        true
    }

    pub fn join(&self, other: &Affine<T>) -> Affine<T> {
        let mut out = self.clone();
        for d in &other.basis {
            out.add_direction(d.clone());
        }
        let diff: Vec<T> = other
            .point
            .iter()
            .zip(&self.point)
            .map(|(a, b)| a.clone() - b.clone())
            .collect();
        out.add_direction(diff);
        out
    }

    /// `x_i := coeffs · x + c`.
    pub fn assign(&self, i: usize, coeffs: &[T], c: &T) -> Affine<T> {
        let dot = |v: &[T]| {
            v.iter()
                .zip(coeffs)
                .fold(T::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
        };
        let mut point = self.point.clone();
        point[i] = dot(&self.point) + c.clone();
        let mut out = Affine::point(point);
        let mut pt = out.point.clone();
        out.reduce(&mut pt);
        out.point = pt;
        for d in &self.basis {
            let mut d2 = d.clone();
            d2[i] = dot(d);
            out.add_direction(d2);
        }
        out
    }

    pub fn havoc(&self, i: usize) -> Affine<T> {
        let mut out = self.clone();
        let mut e = vec![T::zero(); self.point.len()];
        e[i] = T::one();
        out.add_direction(e);
        out
    }

    /// Equations `a · x == b` cutting out the subspace, one per free column.
    pub fn equations(&self) -> Vec<(Vec<T>, T)> {
        let n = self.point.len();
        let pivots: Vec<usize> = self.basis.iter().filter_map(|r| pivot(r)).collect();
        let mut out = Vec::new();
        for f in 0..n {
            if pivots.contains(&f) {
                continue;
            }
            let mut a = vec![T::zero(); n];
            a[f] = T::one();
            for (row, &p) in self.basis.iter().zip(&pivots) {
                a[p] = T::zero() - row[f].clone();
            }
            let b = a
                .iter()
                .zip(&self.point)
                .fold(T::zero(), |acc, (x, y)| acc + x.clone() * y.clone());
            out.push((a, b));
        }
        out
    }
}

/// `coeffs · x + c` if `e` is affine in the program variables.
fn linearize<T: Field>(e: &AExp, st: &SymbolTable) -> Option<(Vec<T>, T)> {
    let n = st.len();
    match e {
        AExp::Const(c) => Some((vec![T::zero(); n], T::from_i64(*c))),
        AExp::Var(v) => {
            let mut a = vec![T::zero(); n];
            a[st.index_of(v)?] = T::one();
            Some((a, T::zero()))
        }
        AExp::Neg(x) => {
            let (a, c) = linearize::<T>(x, st)?;
            Some((a.into_iter().map(|v| T::zero() - v).collect(), T::zero() - c))
        }
        AExp::Bin(op, x, y) => {
            let (a, c) = linearize::<T>(x, st)?;
            let (b, d) = linearize::<T>(y, st)?;
            let is_const = |v: &[T]| v.iter().all(|t| t.near_zero());
            match op {
                ArithOp::Add => Some((
                    a.iter().zip(&b).map(|(p, q)| p.clone() + q.clone()).collect(),
                    c + d,
                )),
                ArithOp::Sub => Some((
                    a.iter().zip(&b).map(|(p, q)| p.clone() - q.clone()).collect(),
                    c - d,
                )),
                ArithOp::Mul if is_const(&a) => Some((
                    b.into_iter().map(|q| q * c.clone()).collect(),
                    c * d,
                )),
                ArithOp::Mul if is_const(&b) => Some((
                    a.into_iter().map(|p| p * d.clone()).collect(),
                    c * d,
                )),
                _ => None,
            }
        }
    }
}

fn transfer<T: Field>(st: &SymbolTable, s: &Affine<T>, op: &Operation) -> Affine<T> {
    match op {
        Operation::Assign(v, e) => {
            let Some(i) = st.index_of(v) else {
                return s.clone();
            };
            match linearize::<T>(e, st) {
                Some((a, c)) => s.assign(i, &a, &c),
                None => s.havoc(i),
            }
        }
        Operation::Havoc(v) => match st.index_of(v) {
            Some(i) => s.havoc(i),
            None => s.clone(),
        },
        _ => s.clone(),
    }
}

/// Karr's analysis over scalar type `T`.
pub struct Karr<T> {
    pub values: Vec<Option<Affine<T>>>,
}

impl<T: Field> Karr<T> {
    pub fn analyze(cfa: &Cfa) -> Karr<T> {
        let st = &cfa.symbols;
        let n = cfa.locations.len();
        let mut values: Vec<Option<Affine<T>>> = vec![None; n];
        values[cfa.initial] = Some(Affine::point(vec![T::zero(); st.len()]));
        let mut queue: VecDeque<LocId> = VecDeque::from([cfa.initial]);
        while let Some(l) = queue.pop_front() {
            let Some(cur) = values[l].clone() else { continue };
            for e in cfa.out_edges(l) {
                if matches!(&e.op, Operation::Assume(BExp::False)) {
                    continue;
                }
                let post = transfer(st, &cur, &e.op);
                let next = match &values[e.target] {
                    None => post,
                    Some(old) => old.join(&post),
                };
                if !values[e.target].as_ref().is_some_and(|v| v.same(&next)) {
                    values[e.target] = Some(next);
                    queue.push_back(e.target);
                }
            }
        }
        Karr { values }
    }

    /// Integer-coefficient equations at `loc`, first coefficient positive, gcd one.
    pub fn integer_equations(&self, loc: LocId) -> Vec<(Vec<i64>, i64)> {
        let Some(a) = &self.values[loc] else {
            return Vec::new();
        };
        a.equations()
            .into_iter()
            .filter_map(|(co, b)| integerize(&co, &b))
            .collect()
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn integerize<T: Field>(co: &[T], b: &T) -> Option<(Vec<i64>, i64)> {
    let mut ratios = co.iter().map(|c| c.to_ratio()).collect::<Option<Vec<_>>>()?;
    ratios.push(b.to_ratio()?);
    let lcm = ratios
        .iter()
        .try_fold(1i64, |l, &(_, d)| l.checked_mul(d / gcd(l, d)))?;
    let mut ints: Vec<i64> = ratios
        .iter()
        .map(|&(n, d)| n.checked_mul(lcm / d))
        .collect::<Option<_>>()?;
    let g = ints.iter().fold(0, |g, &x| gcd(g, x));
    if g == 0 {
        return None;
    }
    let sign = ints[..co.len()].iter().find(|&&x| x != 0).map_or(1, |x| x.signum());
    for x in ints.iter_mut() {
        *x = *x / g * sign;
    }
    let rhs = ints.pop()?;
    ints.iter().any(|&x| x != 0).then_some((ints, rhs))
}

/// `a · x == b` as an expression: `n - x - y == 0`.
pub fn render(st: &SymbolTable, coeffs: &[i64], rhs: i64) -> BExp {
    let mut lhs: Option<AExp> = None;
    for (v, &a) in st.names().zip(coeffs) {
        if a == 0 {
            continue;
        }
        let mag = a.abs();
        let term = if mag == 1 {
            AExp::var(v)
        } else {
            AExp::mul(AExp::Const(mag), AExp::var(v))
        };
        lhs = Some(match lhs {
            None if a < 0 => AExp::Neg(Box::new(term)),
            None => term,
            Some(acc) if a < 0 => AExp::sub(acc, term),
            Some(acc) => AExp::add(acc, term),
        });
    }
    BExp::eq(lhs.unwrap_or(AExp::Const(0)), AExp::Const(rhs))
}

pub fn loop_head_invariants<T: Field>(cfa: &Cfa) -> Vec<LocatedInvariant> {
    let k = Karr::<T>::analyze(cfa);
    cfa.loop_heads
        .iter()
        .filter_map(|&h| {
            let eqs = k.integer_equations(h);
            (!eqs.is_empty()).then(|| LocatedInvariant {
                loop_head: h,
                invariant: BExp::conj(eqs.iter().map(|(a, b)| render(&cfa.symbols, a, *b))),
                source: "affine".into(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parse_bexp;
    use crate::semantics::holds_at;
    use crate::task::Task;
    use crate::testing::COUNTDOWN;
    use proptest::prelude::*;

    fn invs<T: Field>(text: &str) -> Vec<String> {
        let t = Task::from_text("t.mc", text, 8).unwrap();
        loop_head_invariants::<T>(&t.cfa)
            .into_iter()
            .map(|l| l.invariant.to_string())
            .collect()
    }

    #[test]
    fn countdown_relation() {
        assert_eq!(invs::<Rational64>(COUNTDOWN), vec!["n - x - y == 0"]);
        assert_eq!(invs::<f64>(COUNTDOWN), vec!["n - x - y == 0"]);
    }

    #[test]
    fn lockstep_counters() {
        let p = "int main() {\n int x = 0;\n int y = 0;\n int c = nondet();\n while (c != 0) {\n  c = nondet();\n  x++;\n  y++;\n }\n if (!(x == y)) { Error: return 1; }\n return 0;\n}\n";
        assert_eq!(invs::<Rational64>(p), vec!["x - y == 0"]);
    }

    #[test]
    fn havoc_everything_gives_nothing() {
        let p = "int main() {\n int x = 0;\n int y = 0;\n int c = nondet();\n while (c != 0) {\n  c = nondet();\n  x = nondet();\n  y = nondet();\n }\n if (!(x == y)) { Error: return 1; }\n return 0;\n}\n";
        assert!(invs::<Rational64>(p).is_empty());
    }

    #[test]
    fn scaled_relation_and_constants() {
        let p = "int main() {\n int x = 1;\n int y = 4;\n int c = nondet();\n while (c != 0) {\n  c = nondet();\n  x = x + 1;\n  y = y + 2;\n }\n if (!(y >= 0)) { Error: return 1; }\n return 0;\n}\n";
        assert_eq!(invs::<Rational64>(p), vec!["2 * x - y == -2"]);
        assert_eq!(
            parse_bexp("2*x - y == -2").unwrap().to_string(),
            "2 * x - y == -2"
        );
    }

    #[test]
    fn rref_is_canonical() {
        let r = |v: i64| Rational64::from_integer(v);
        let mut a = Affine::point(vec![r(0); 3]);
        a.add_direction(vec![r(1), r(1), r(0)]);
        a.add_direction(vec![r(0), r(-1), r(1)]);
        let mut b = Affine::point(vec![r(0); 3]);
        b.add_direction(vec![r(1), r(0), r(1)]);
        b.add_direction(vec![r(2), r(2), r(0)]);
        assert_eq!(a, b);
        assert_eq!(a.equations(), vec![(vec![r(-1), r(1), r(1)], r(0))]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn relations_hold_on_reachable_states(
            a in -3i64..4, b in -3i64..4, c in -2i64..3, d in -2i64..3, init in 0i64..5,
        ) {
            let p = format!(
                "int main() {{\n int x = {init};\n int y = 0;\n int z = 1;\n int e = 0;\n int c = nondet();\n while (c != 0) {{\n  c = nondet();\n  x = x + {a};\n  y = y + {b} * x + {c};\n  e = nondet();\n  if (e != 0) {{ z = z + {d}; }}\n }}\n if (!(z != 100)) {{ Error: return 1; }}\n return 0;\n}}\n"
            );
            let t = Task::from_text("t.mc", &p, 4).unwrap();
            for li in loop_head_invariants::<Rational64>(&t.cfa) {
                prop_assert_eq!(holds_at(&t.cfa, &li.invariant, li.loop_head, 1 << 20), Some(true));
            }
        }
    }
}
