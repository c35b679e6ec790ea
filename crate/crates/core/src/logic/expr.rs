//! Expression trees over fixed-width integer program variables.

use std::collections::BTreeSet;
use std::fmt;

use indexmap::IndexMap;

/// Arithmetic operators of the mini language.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
}

impl ArithOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
            ArithOp::Div => "/",
            ArithOp::Rem => "%",
        }
    }

    pub(crate) fn precedence(self) -> u8 {
        match self {
            ArithOp::Add | ArithOp::Sub => 6,
            ArithOp::Mul | ArithOp::Div | ArithOp::Rem => 7,
        }
    }
}

/// Comparison operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    /// The operator `op'` with `!(a op b) <=> a op' b`.
    pub fn negated(self) -> CmpOp {
        match self {
            CmpOp::Eq => CmpOp::Ne,
            CmpOp::Ne => CmpOp::Eq,
            CmpOp::Lt => CmpOp::Ge,
            CmpOp::Le => CmpOp::Gt,
            CmpOp::Gt => CmpOp::Le,
            CmpOp::Ge => CmpOp::Lt,
        }
    }

    /// The operator `op'` with `a op b <=> b op' a`.
    pub fn flipped(self) -> CmpOp {
        match self {
            CmpOp::Eq => CmpOp::Eq,
            CmpOp::Ne => CmpOp::Ne,
            CmpOp::Lt => CmpOp::Gt,
            CmpOp::Le => CmpOp::Ge,
            CmpOp::Gt => CmpOp::Lt,
            CmpOp::Ge => CmpOp::Le,
        }
    }
}

/// Arithmetic expression.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AExp {
    Const(i64),
    Var(String),
    Neg(Box<AExp>),
    Bin(ArithOp, Box<AExp>, Box<AExp>),
}

/// Boolean expression. `And`, `Or` and `Implies` short-circuit left to right.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BExp {
    True,
    False,
    Cmp(CmpOp, AExp, AExp),
    Not(Box<BExp>),
    And(Box<BExp>, Box<BExp>),
    Or(Box<BExp>, Box<BExp>),
    Implies(Box<BExp>, Box<BExp>),
}

impl AExp {
    pub fn var(name: impl Into<String>) -> AExp {
        AExp::Var(name.into())
    }

    pub fn bin(op: ArithOp, a: AExp, b: AExp) -> AExp {
        AExp::Bin(op, Box::new(a), Box::new(b))
    }

    pub fn add(a: AExp, b: AExp) -> AExp {
        AExp::bin(ArithOp::Add, a, b)
    }

    pub fn sub(a: AExp, b: AExp) -> AExp {
        AExp::bin(ArithOp::Sub, a, b)
    }

    pub fn mul(a: AExp, b: AExp) -> AExp {
        AExp::bin(ArithOp::Mul, a, b)
    }

    pub fn free_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            AExp::Const(_) => {}
            AExp::Var(v) => {
                out.insert(v.clone());
            }
            AExp::Neg(a) => a.free_vars(out),
            AExp::Bin(_, a, b) => {
                a.free_vars(out);
                b.free_vars(out);
            }
        }
    }

    pub fn mentions(&self, var: &str) -> bool {
        match self {
            AExp::Const(_) => false,
            AExp::Var(v) => v == var,
            AExp::Neg(a) => a.mentions(var),
            AExp::Bin(_, a, b) => a.mentions(var) || b.mentions(var),
        }
    }

    /// Capture-free substitution of `var` by `by`.
    pub fn substitute(&self, var: &str, by: &AExp) -> AExp {
        self.rename_with(&mut |name| (name == var).then(|| by.clone()))
    }

    /// Replaces every variable for which `f` returns `Some`.
    pub fn rename_with(&self, f: &mut impl FnMut(&str) -> Option<AExp>) -> AExp {
        match self {
            AExp::Const(c) => AExp::Const(*c),
            AExp::Var(v) => f(v).unwrap_or_else(|| AExp::Var(v.clone())),
            AExp::Neg(a) => AExp::Neg(Box::new(a.rename_with(f))),
            AExp::Bin(op, a, b) => AExp::bin(*op, a.rename_with(f), b.rename_with(f)),
        }
    }

    /// Divisors of every `/` and `%` in evaluation order (innermost first).
    pub fn divisors(&self, out: &mut Vec<AExp>) {
        match self {
            AExp::Const(_) | AExp::Var(_) => {}
            AExp::Neg(a) => a.divisors(out),
            AExp::Bin(op, a, b) => {
                a.divisors(out);
                b.divisors(out);
                if matches!(op, ArithOp::Div | ArithOp::Rem) {
                    out.push((**b).clone());
                }
            }
        }
    }

    pub fn size(&self) -> usize {
        match self {
            AExp::Const(_) | AExp::Var(_) => 1,
            AExp::Neg(a) => 1 + a.size(),
            AExp::Bin(_, a, b) => 1 + a.size() + b.size(),
        }
    }
}

impl BExp {
    pub fn cmp(op: CmpOp, a: AExp, b: AExp) -> BExp {
        BExp::Cmp(op, a, b)
    }

    pub fn eq(a: AExp, b: AExp) -> BExp {
        BExp::Cmp(CmpOp::Eq, a, b)
    }

    pub fn not(b: BExp) -> BExp {
        BExp::Not(Box::new(b))
    }

    pub fn and(a: BExp, b: BExp) -> BExp {
        BExp::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: BExp, b: BExp) -> BExp {
        BExp::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: BExp, b: BExp) -> BExp {
        BExp::Implies(Box::new(a), Box::new(b))
    }

    /// Left-nested conjunction; `true` for an empty iterator.
    pub fn conj(items: impl IntoIterator<Item = BExp>) -> BExp {
        let mut it = items.into_iter();
        match it.next() {
            None => BExp::True,
            Some(first) => it.fold(first, BExp::and),
        }
    }

    /// Left-nested disjunction; `false` for an empty iterator.
    pub fn disj(items: impl IntoIterator<Item = BExp>) -> BExp {
        let mut it = items.into_iter();
        match it.next() {
            None => BExp::False,
            Some(first) => it.fold(first, BExp::or),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            BExp::True | BExp::False => {}
            BExp::Cmp(_, a, b) => {
                a.free_vars(out);
                b.free_vars(out);
            }
            BExp::Not(a) => a.collect_vars(out),
            BExp::And(a, b) | BExp::Or(a, b) | BExp::Implies(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn mentions(&self, var: &str) -> bool {
        match self {
            BExp::True | BExp::False => false,
            BExp::Cmp(_, a, b) => a.mentions(var) || b.mentions(var),
            BExp::Not(a) => a.mentions(var),
            BExp::And(a, b) | BExp::Or(a, b) | BExp::Implies(a, b) => {
                a.mentions(var) || b.mentions(var)
            }
        }
    }

    /// Capture-free substitution `self[var := by]`.
    pub fn substitute(&self, var: &str, by: &AExp) -> BExp {
        self.rename_with(&mut |name| (name == var).then(|| by.clone()))
    }

    pub fn rename_with(&self, f: &mut impl FnMut(&str) -> Option<AExp>) -> BExp {
        match self {
            BExp::True => BExp::True,
            BExp::False => BExp::False,
            BExp::Cmp(op, a, b) => BExp::Cmp(*op, a.rename_with(f), b.rename_with(f)),
            BExp::Not(a) => BExp::not(a.rename_with(f)),
            BExp::And(a, b) => BExp::and(a.rename_with(f), b.rename_with(f)),
            BExp::Or(a, b) => BExp::or(a.rename_with(f), b.rename_with(f)),
            BExp::Implies(a, b) => BExp::implies(a.rename_with(f), b.rename_with(f)),
        }
    }

    /// Simultaneous substitution from a map of variable images.
    pub fn substitute_all(&self, map: &IndexMap<String, AExp>) -> BExp {
        self.rename_with(&mut |name| map.get(name).cloned())
    }

    /// Comparison atoms occurring in the formula, in first-occurrence order.
    pub fn atoms(&self) -> Vec<BExp> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut Vec<BExp>) {
        match self {
            BExp::True | BExp::False => {}
            BExp::Cmp(..) => {
                if !out.contains(self) {
                    out.push(self.clone());
                }
            }
            BExp::Not(a) => a.collect_atoms(out),
            BExp::And(a, b) | BExp::Or(a, b) | BExp::Implies(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }

    /// Divisors of every division inside the formula.
    pub fn divisors(&self, out: &mut Vec<AExp>) {
        match self {
            BExp::True | BExp::False => {}
            BExp::Cmp(_, a, b) => {
                a.divisors(out);
                b.divisors(out);
            }
            BExp::Not(a) => a.divisors(out),
            BExp::And(a, b) | BExp::Or(a, b) | BExp::Implies(a, b) => {
                a.divisors(out);
                b.divisors(out);
            }
        }
    }

    pub fn size(&self) -> usize {
        match self {
            BExp::True | BExp::False => 1,
            BExp::Cmp(_, a, b) => 1 + a.size() + b.size(),
            BExp::Not(a) => 1 + a.size(),
            BExp::And(a, b) | BExp::Or(a, b) | BExp::Implies(a, b) => 1 + a.size() + b.size(),
        }
    }
}

/// `substitute(expr, var, by)` as a free function.
pub fn substitute(expr: &BExp, var: &str, by: &AExp) -> BExp {
    expr.substitute(var, by)
}

/// Top-level conjuncts of `expr`, after pushing a leading negation one level inward.
///
/// `!(a || b)` splits into `!a`, `!b`; `!(a ==> b)` into `a`, `!b`. The conjunction of the
/// result is logically equivalent to the input.
pub fn split_conjunctions(expr: &BExp) -> Vec<BExp> {
    let mut out = Vec::new();
    split_into(expr, &mut out);
    out
}

fn split_into(expr: &BExp, out: &mut Vec<BExp>) {
    match expr {
        BExp::And(a, b) => {
            split_into(a, out);
            split_into(b, out);
        }
        BExp::Not(inner) => match &**inner {
            BExp::Or(a, b) => {
                push_negated(a, out);
                push_negated(b, out);
            }
            BExp::Implies(a, b) => {
                split_into(a, out);
                push_negated(b, out);
            }
            BExp::Not(a) => split_into(a, out),
            _ => out.push(expr.clone()),
        },
        _ => out.push(expr.clone()),
    }
}

fn push_negated(e: &BExp, out: &mut Vec<BExp>) {
    match e {
        BExp::Not(a) => split_into(a, out),
        other => out.push(BExp::not(other.clone())),
    }
}

/// Variable signedness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Signedness {
    Signed,
    Unsigned,
}

/// Declared variables of a program (or a query), all sharing one bit width.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolTable {
    width: u32,
    vars: IndexMap<String, Signedness>,
}

pub const MAX_WIDTH: u32 = 32;

impl SymbolTable {
    pub fn new(width: u32) -> Self {
        assert!(
            (1..=MAX_WIDTH).contains(&width),
            "bit width must be in 1..={MAX_WIDTH}"
        );
        SymbolTable {
            width,
            vars: IndexMap::new(),
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    /// Declares `name`; returns false if it already existed.
    pub fn declare(&mut self, name: impl Into<String>, sign: Signedness) -> bool {
        let name = name.into();
        if self.vars.contains_key(&name) {
            return false;
        }
        self.vars.insert(name, sign);
        true
    }

    pub fn signedness(&self, name: &str) -> Option<Signedness> {
        self.vars.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.vars.contains_key(name)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.vars.get_index_of(name)
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.vars.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Signedness)> {
        self.vars.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn is_unsigned(&self, name: &str) -> bool {
        self.signedness(name) == Some(Signedness::Unsigned)
    }

    pub fn mask(&self) -> u64 {
        mask(self.width)
    }

    /// Smallest representable value of `name`.
    pub fn min_value(&self, name: &str) -> i64 {
        match self.signedness(name) {
            Some(Signedness::Unsigned) => 0,
            _ => -(1i64 << (self.width - 1)),
        }
    }

    /// Largest representable value of `name`.
    pub fn max_value(&self, name: &str) -> i64 {
        match self.signedness(name) {
            Some(Signedness::Unsigned) => (1i64 << self.width) - 1,
            _ => (1i64 << (self.width - 1)) - 1,
        }
    }

    /// Interprets raw bits as a value of variable `name`.
    pub fn canonical(&self, name: &str, bits: u64) -> i64 {
        to_value(bits, self.width, self.is_unsigned(name))
    }

    /// True if an arithmetic expression is evaluated with unsigned semantics.
    pub fn expr_unsigned(&self, e: &AExp) -> bool {
        match e {
            AExp::Const(_) => false,
            AExp::Var(v) => self.is_unsigned(v),
            AExp::Neg(a) => self.expr_unsigned(a),
            AExp::Bin(_, a, b) => self.expr_unsigned(a) || self.expr_unsigned(b),
        }
    }

    /// Names in `expr` that are not declared here.
    pub fn undeclared(&self, expr: &BExp) -> Vec<String> {
        expr.free_vars()
            .into_iter()
            .filter(|v| !self.contains(v))
            .collect()
    }
}

pub(crate) fn mask(width: u32) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

/// Sign- or zero-extends `bits` of the given width.
pub(crate) fn to_value(bits: u64, width: u32, unsigned: bool) -> i64 {
    let bits = bits & mask(width);
    if unsigned || width == 64 {
        bits as i64
    } else if bits >> (width - 1) & 1 == 1 {
        (bits | !mask(width)) as i64
    } else {
        bits as i64
    }
}

impl fmt::Display for AExp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        super::print::write_aexp(f, self, 0)
    }
}

impl fmt::Display for BExp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        super::print::write_bexp(f, self, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parse_bexp;

    #[test]
    fn substitute_examples() {
        let e = parse_bexp("n == x + y").unwrap();
        let by = parse_bexp("y + 1 == 0").unwrap();
        let BExp::Cmp(_, y1, _) = by else { panic!() };
        assert_eq!(e.substitute("y", &y1).to_string(), "n == x + (y + 1)");
        let e = parse_bexp("x > 0").unwrap();
        let rhs = AExp::sub(AExp::var("x"), AExp::Const(1));
        assert_eq!(e.substitute("x", &rhs).to_string(), "x - 1 > 0");
        assert_eq!(BExp::True.substitute("v", &rhs), BExp::True);
    }

    #[test]
    fn split_examples() {
        let e = parse_bexp("a > 0 && (b > 0 && c > 0)").unwrap();
        let parts: Vec<String> = split_conjunctions(&e).iter().map(|p| p.to_string()).collect();
        assert_eq!(parts, ["a > 0", "b > 0", "c > 0"]);
        let e = parse_bexp("a > 0 || b > 0").unwrap();
        assert_eq!(split_conjunctions(&e), vec![e.clone()]);
        let e = parse_bexp("n >= y && n == x + y").unwrap();
        let parts: Vec<String> = split_conjunctions(&e).iter().map(|p| p.to_string()).collect();
        assert_eq!(parts, ["n >= y", "n == x + y"]);
        let e = parse_bexp("!(a > 0 || !(b > 0))").unwrap();
        let parts: Vec<String> = split_conjunctions(&e).iter().map(|p| p.to_string()).collect();
        assert_eq!(parts, ["!(a > 0)", "b > 0"]);
    }

    #[test]
    fn value_conversion() {
        assert_eq!(to_value(0xff, 8, false), -1);
        assert_eq!(to_value(0xff, 8, true), 255);
        assert_eq!(to_value(0x7f, 8, false), 127);
        let mut st = SymbolTable::new(4);
        st.declare("u", Signedness::Unsigned);
        st.declare("s", Signedness::Signed);
        assert_eq!((st.min_value("u"), st.max_value("u")), (0, 15));
        assert_eq!((st.min_value("s"), st.max_value("s")), (-8, 7));
    }
}
