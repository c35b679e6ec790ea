//! Fault-free reformulation of boolean expressions.
//!
//! [`holds_total`] and [`fails_total`] never evaluate a division by zero: every comparison
//! is preceded by nonzero checks of its divisors. `holds_total(b)` is `Ok(true)` exactly
//! where `b` is `Ok(true)` and `Ok(false)` everywhere else; `fails_total(b)` likewise
//! tracks `b == Ok(false)`.

use super::expr::{AExp, BExp, CmpOp};

/// Nonzero checks of all divisors of `a`, innermost first.
pub fn defined(a: &AExp) -> BExp {
    let mut ds = Vec::new();
    a.divisors(&mut ds);
    guard(ds)
}

fn guard(ds: Vec<AExp>) -> BExp {
    BExp::conj(ds.into_iter().map(|d| BExp::cmp(CmpOp::Ne, d, AExp::Const(0))))
}

fn has_division(b: &BExp) -> bool {
    let mut ds = Vec::new();
    b.divisors(&mut ds);
    !ds.is_empty()
}

pub fn holds_total(b: &BExp) -> BExp {
    if has_division(b) {
        total(b, true)
    } else {
        b.clone()
    }
}

pub fn fails_total(b: &BExp) -> BExp {
    if has_division(b) {
        total(b, false)
    } else {
        BExp::not(b.clone())
    }
}

fn total(b: &BExp, want: bool) -> BExp {
    match b {
        BExp::True => bool_lit(want),
        BExp::False => bool_lit(!want),
        BExp::Cmp(op, x, y) => {
            let mut ds = Vec::new();
            x.divisors(&mut ds);
            y.divisors(&mut ds);
            let c = BExp::cmp(*op, x.clone(), y.clone());
            let c = if want { c } else { BExp::not(c) };
            if ds.is_empty() {
                c
            } else {
                BExp::and(guard(ds), c)
            }
        }
        BExp::Not(x) => total(x, !want),
        BExp::And(x, y) => {
            if want {
                BExp::and(total(x, true), total(y, true))
            } else {
                BExp::or(total(x, false), BExp::and(total(x, true), total(y, false)))
            }
        }
        BExp::Or(x, y) => {
            if want {
                BExp::or(total(x, true), BExp::and(total(x, false), total(y, true)))
            } else {
                BExp::and(total(x, false), total(y, false))
            }
        }
        BExp::Implies(x, y) => {
            if want {
                BExp::or(total(x, false), BExp::and(total(x, true), total(y, true)))
            } else {
                BExp::and(total(x, true), total(y, false))
            }
        }
    }
}

fn bool_lit(v: bool) -> BExp {
    if v {
        BExp::True
    } else {
        BExp::False
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::eval::eval_bexp;
    use crate::logic::valid::tests::{arb_bexp, mixed_table};
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    proptest! {
        #[test]
        fn total_forms_track_outcomes(b in arb_bexp(), u in 0i64..16, s in -8i64..8, t in -8i64..8) {
            let st = mixed_table(4);
            let env: BTreeMap<String, i64> =
                [("u".to_string(), u), ("s".to_string(), s), ("t".to_string(), t)].into();
            let r = eval_bexp(&b, &st, &env);
            let h = eval_bexp(&holds_total(&b), &st, &env);
            let f = eval_bexp(&fails_total(&b), &st, &env);
            prop_assert_eq!(h, Ok(r == Ok(true)));
            prop_assert_eq!(f, Ok(r == Ok(false)));
        }
    }
}
