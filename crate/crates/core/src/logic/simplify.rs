//! Syntactic simplification and triviality detection.
//!
//! The folding rules are:
//!
//! * literal arithmetic `c1 op c2` is folded over mathematical integers when it neither
//!   overflows `i64` nor divides by zero (folding is width independent, so results are
//!   only meaningful for values representable at the program width);
//! * neutral and absorbing elements: `e + 0`, `0 + e`, `e - 0`, `e * 1`, `1 * e` become `e`;
//!   `e * 0` and `0 * e` become `0`; `e - e` becomes `0`; `-(-e)` becomes `e`;
//! * comparisons of two literals are decided; `e == e`, `e <= e`, `e >= e` become `true`
//!   and `e != e`, `e < e`, `e > e` become `false` for syntactically equal sides;
//! * boolean connectives absorb `true`/`false` operands and `!!b` becomes `b`.
//!
//! Anything beyond these rules (e.g. `x + 1 > x`, which is false under wraparound) is left
//! alone; [`is_trivial`] is therefore a purely syntactic test.

use super::expr::{AExp, ArithOp, BExp, CmpOp};

pub fn simplify_aexp(e: &AExp) -> AExp {
    match e {
        AExp::Const(_) | AExp::Var(_) => e.clone(),
        AExp::Neg(a) => match simplify_aexp(a) {
            AExp::Const(c) => match c.checked_neg() {
                Some(v) => AExp::Const(v),
                None => AExp::Neg(Box::new(AExp::Const(c))),
            },
            AExp::Neg(inner) => *inner,
            other => AExp::Neg(Box::new(other)),
        },
        AExp::Bin(op, a, b) => {
            let a = simplify_aexp(a);
            let b = simplify_aexp(b);
            if let (AExp::Const(x), AExp::Const(y)) = (&a, &b) {
                let folded = match op {
                    ArithOp::Add => x.checked_add(*y),
                    ArithOp::Sub => x.checked_sub(*y),
                    ArithOp::Mul => x.checked_mul(*y),
                    ArithOp::Div => x.checked_div(*y),
                    ArithOp::Rem => x.checked_rem(*y),
                };
                if let Some(v) = folded {
                    return AExp::Const(v);
                }
            }
            match (op, &a, &b) {
                (ArithOp::Add, _, AExp::Const(0)) | (ArithOp::Sub, _, AExp::Const(0)) => a,
                (ArithOp::Add, AExp::Const(0), _) => b,
                (ArithOp::Mul, _, AExp::Const(1)) => a,
                (ArithOp::Mul, AExp::Const(1), _) => b,
                (ArithOp::Mul, _, AExp::Const(0)) | (ArithOp::Mul, AExp::Const(0), _) => {
                    AExp::Const(0)
                }
                (ArithOp::Sub, _, _) if a == b => AExp::Const(0),
                _ => AExp::bin(*op, a, b),
            }
        }
    }
}

pub fn simplify(e: &BExp) -> BExp {
    match e {
        BExp::True | BExp::False => e.clone(),
        BExp::Cmp(op, a, b) => {
            let a = simplify_aexp(a);
            let b = simplify_aexp(b);
            if let (AExp::Const(x), AExp::Const(y)) = (&a, &b) {
                return bool_const(match op {
                    CmpOp::Eq => x == y,
                    CmpOp::Ne => x != y,
                    CmpOp::Lt => x < y,
                    CmpOp::Le => x <= y,
                    CmpOp::Gt => x > y,
                    CmpOp::Ge => x >= y,
                });
            }
            if a == b {
                return bool_const(matches!(op, CmpOp::Eq | CmpOp::Le | CmpOp::Ge));
            }
            BExp::Cmp(*op, a, b)
        }
        BExp::Not(a) => match simplify(a) {
            BExp::True => BExp::False,
            BExp::False => BExp::True,
            BExp::Not(inner) => *inner,
            other => BExp::not(other),
        },
        BExp::And(a, b) => match (simplify(a), simplify(b)) {
            (BExp::False, _) => BExp::False,
            (BExp::True, x) => x,
            (x, BExp::True) => x,
            (x, BExp::False) => BExp::and(x, BExp::False),
            (x, y) => BExp::and(x, y),
        },
        BExp::Or(a, b) => match (simplify(a), simplify(b)) {
            (BExp::True, _) => BExp::True,
            (BExp::False, x) => x,
            (x, BExp::False) => x,
            (x, BExp::True) => BExp::or(x, BExp::True),
            (x, y) => BExp::or(x, y),
        },
        BExp::Implies(a, b) => match (simplify(a), simplify(b)) {
            (BExp::False, _) => BExp::True,
            (BExp::True, x) => x,
            (x, BExp::True) => BExp::implies(x, BExp::True),
            (x, y) => BExp::implies(x, y),
        },
    }
}

fn bool_const(b: bool) -> BExp {
    if b {
        BExp::True
    } else {
        BExp::False
    }
}

/// True iff `e` simplifies syntactically to `true` or `false`.
pub fn is_trivial(e: &BExp) -> bool {
    matches!(simplify(e), BExp::True | BExp::False)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parse_bexp;

    #[test]
    fn trivial_examples() {
        assert!(is_trivial(&BExp::True));
        assert!(is_trivial(&BExp::False));
        assert!(is_trivial(&parse_bexp("1 == 1").unwrap()));
        assert!(is_trivial(&parse_bexp("x == x").unwrap()));
        assert!(is_trivial(&parse_bexp("x * 0 == 0").unwrap()));
        assert!(is_trivial(&parse_bexp("x - x != 0 || true").unwrap()));
        assert!(!is_trivial(&parse_bexp("x >= 0").unwrap()));
        assert!(!is_trivial(&parse_bexp("x + 1 > x").unwrap()));
    }

    #[test]
    fn folding_is_overflow_safe() {
        let e = parse_bexp("9223372036854775807 + 1 > 0").unwrap();
        assert!(!is_trivial(&e));
    }
}
