//! Concrete syntax printer. Output re-parses to the same tree.

use std::fmt::{self, Write};

use super::expr::{AExp, BExp};

const PREC_IMPLIES: u8 = 1;
const PREC_OR: u8 = 2;
const PREC_AND: u8 = 3;
const PREC_CMP: u8 = 4;
const PREC_UNARY: u8 = 8;

pub(crate) fn write_aexp<W: Write>(f: &mut W, e: &AExp, min: u8) -> fmt::Result {
    match e {
        AExp::Const(c) => {
            if *c < 0 && min > 6 {
                write!(f, "({c})")
            } else {
                write!(f, "{c}")
            }
        }
        AExp::Var(v) => f.write_str(v),
        AExp::Neg(a) => match &**a {
            AExp::Var(v) => write!(f, "-{v}"),
            other => {
                f.write_str("-(")?;
                write_aexp(f, other, 0)?;
                f.write_str(")")
            }
        },
        AExp::Bin(op, a, b) => {
            let p = op.precedence();
            let paren = p < min;
            if paren {
                f.write_str("(")?;
            }
            write_aexp(f, a, p)?;
            write!(f, " {} ", op.symbol())?;
            write_aexp(f, b, p + 1)?;
            if paren {
                f.write_str(")")?;
            }
            Ok(())
        }
    }
}

pub(crate) fn write_bexp<W: Write>(f: &mut W, e: &BExp, min: u8) -> fmt::Result {
    let (prec, right_assoc) = match e {
        BExp::True | BExp::False | BExp::Not(_) => (PREC_UNARY, false),
        BExp::Cmp(..) => (PREC_CMP, false),
        BExp::And(..) => (PREC_AND, false),
        BExp::Or(..) => (PREC_OR, false),
        BExp::Implies(..) => (PREC_IMPLIES, true),
    };
    let paren = prec < min;
    if paren {
        f.write_str("(")?;
    }
    match e {
        BExp::True => f.write_str("true")?,
        BExp::False => f.write_str("false")?,
        BExp::Cmp(op, a, b) => {
            write_aexp(f, a, 5)?;
            write!(f, " {} ", op.symbol())?;
            write_aexp(f, b, 5)?;
        }
        BExp::Not(a) => {
            f.write_str("!")?;
            match &**a {
                BExp::True | BExp::False | BExp::Not(_) => write_bexp(f, a, PREC_UNARY)?,
                other => {
                    f.write_str("(")?;
                    write_bexp(f, other, 0)?;
                    f.write_str(")")?;
                }
            }
        }
        BExp::And(a, b) | BExp::Or(a, b) | BExp::Implies(a, b) => {
            let sym = match e {
                BExp::And(..) => "&&",
                BExp::Or(..) => "||",
                _ => "==>",
            };
            let (lmin, rmin) = if right_assoc {
                (prec + 1, prec)
            } else {
                (prec, prec + 1)
            };
            write_bexp(f, a, lmin)?;
            write!(f, " {sym} ")?;
            write_bexp(f, b, rmin)?;
        }
    }
    if paren {
        f.write_str(")")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::parse::{parse_aexp, parse_bexp};
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn arb_aexp() -> impl Strategy<Value = AExp> {
        let leaf = prop_oneof![
            (-20i64..20).prop_map(AExp::Const),
            prop::sample::select(vec!["x", "y", "n"]).prop_map(AExp::var),
        ];
        leaf.prop_recursive(4, 24, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|a| AExp::Neg(Box::new(a))),
                (
                    prop::sample::select(vec![
                        super::super::expr::ArithOp::Add,
                        super::super::expr::ArithOp::Sub,
                        super::super::expr::ArithOp::Mul,
                        super::super::expr::ArithOp::Div,
                        super::super::expr::ArithOp::Rem,
                    ]),
                    inner.clone(),
                    inner
                )
                    .prop_map(|(op, a, b)| AExp::bin(op, a, b)),
            ]
        })
    }

    fn arb_bexp() -> impl Strategy<Value = BExp> {
        let cmp = prop::sample::select(vec![
            super::super::expr::CmpOp::Eq,
            super::super::expr::CmpOp::Ne,
            super::super::expr::CmpOp::Lt,
            super::super::expr::CmpOp::Le,
            super::super::expr::CmpOp::Gt,
            super::super::expr::CmpOp::Ge,
        ]);
        let leaf = prop_oneof![
            Just(BExp::True),
            Just(BExp::False),
            (cmp, arb_aexp(), arb_aexp()).prop_map(|(op, a, b)| BExp::Cmp(op, a, b)),
        ];
        leaf.prop_recursive(3, 16, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(BExp::not),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| BExp::and(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| BExp::or(a, b)),
                (inner.clone(), inner).prop_map(|(a, b)| BExp::implies(a, b)),
            ]
        })
    }

    /// `Neg(Const)` prints like a negative literal; normalize before comparing.
    fn canon(e: &AExp) -> AExp {
        match e {
            AExp::Neg(a) => match canon(a) {
                AExp::Const(c) => AExp::Neg(Box::new(AExp::Const(c))),
                other => AExp::Neg(Box::new(other)),
            },
            AExp::Bin(op, a, b) => AExp::bin(*op, canon(a), canon(b)),
            other => other.clone(),
        }
    }

    proptest! {
        #[test]
        fn aexp_print_parse_roundtrip(e in arb_aexp()) {
            let text = e.to_string();
            let back = parse_aexp(&text).unwrap();
            prop_assert_eq!(canon(&back), canon(&e));
        }

        #[test]
        fn bexp_print_parse_roundtrip(e in arb_bexp()) {
            let text = e.to_string();
            let back = parse_bexp(&text).unwrap();
            prop_assert_eq!(back.to_string(), text);
            prop_assert_eq!(back, e);
        }
    }

    #[test]
    fn minimal_parentheses() {
        let e = parse_bexp("!(n == y)").unwrap();
        assert_eq!(e.to_string(), "!(n == y)");
        let e = parse_bexp("a - (b - c) == 0").unwrap();
        assert_eq!(e.to_string(), "a - (b - c) == 0");
        let e = parse_bexp("(a > 0 ==> b > 0) ==> c > 0").unwrap();
        assert_eq!(e.to_string(), "(a > 0 ==> b > 0) ==> c > 0");
        let e = parse_bexp("x * -3 > 0").unwrap();
        assert_eq!(e.to_string(), "x * (-3) > 0");
    }
}
