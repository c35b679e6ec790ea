//! Fixed-width evaluation of expressions.
//!
//! Arithmetic wraps modulo `2^width`. An operation is unsigned if any variable in its
//! operands is unsigned (literals adapt to the other side), which decides the meaning of
//! `/`, `%` and the ordering comparisons. Division by zero is an [`EvalFault`].

use thiserror::Error;

use super::expr::{mask, to_value, AExp, ArithOp, BExp, CmpOp, SymbolTable};

#[derive(Clone, Copy, Debug, Error, PartialEq, Eq)]
pub enum EvalFault {
    #[error("division by zero")]
    DivisionByZero,
    #[error("variable `{0}` has no value")]
    Unbound(&'static str),
}

/// Anything that can supply a value for a variable name.
pub trait Valuation {
    fn value_of(&self, var: &str) -> Option<i64>;
}

impl Valuation for std::collections::BTreeMap<String, i64> {
    fn value_of(&self, var: &str) -> Option<i64> {
        self.get(var).copied()
    }
}

impl Valuation for std::collections::HashMap<String, i64> {
    fn value_of(&self, var: &str) -> Option<i64> {
        self.get(var).copied()
    }
}

impl Valuation for indexmap::IndexMap<String, i64> {
    fn value_of(&self, var: &str) -> Option<i64> {
        self.get(var).copied()
    }
}

impl<F: Fn(&str) -> Option<i64>> Valuation for F {
    fn value_of(&self, var: &str) -> Option<i64> {
        self(var)
    }
}

/// A machine word: raw bits plus the signedness under which they are interpreted.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Word {
    pub bits: u64,
    pub unsigned: bool,
}

impl Word {
    pub fn value(self, width: u32) -> i64 {
        to_value(self.bits, width, self.unsigned)
    }
}

pub fn eval_aexp(
    e: &AExp,
    st: &SymbolTable,
    env: &impl Valuation,
) -> Result<Word, EvalFault> {
    let w = st.width();
    let m = mask(w);
    match e {
        AExp::Const(c) => Ok(Word {
            bits: (*c as u64) & m,
            unsigned: false,
        }),
        AExp::Var(v) => {
            let val = env
                .value_of(v)
                .ok_or(EvalFault::Unbound("free variable"))?;
            Ok(Word {
                bits: (val as u64) & m,
                unsigned: st.is_unsigned(v),
            })
        }
        AExp::Neg(a) => {
            let a = eval_aexp(a, st, env)?;
            Ok(Word {
                bits: a.bits.wrapping_neg() & m,
                unsigned: a.unsigned,
            })
        }
        AExp::Bin(op, a, b) => {
            let a = eval_aexp(a, st, env)?;
            let b = eval_aexp(b, st, env)?;
            let unsigned = a.unsigned || b.unsigned;
            let bits = match op {
                ArithOp::Add => a.bits.wrapping_add(b.bits),
                ArithOp::Sub => a.bits.wrapping_sub(b.bits),
                ArithOp::Mul => a.bits.wrapping_mul(b.bits),
                ArithOp::Div | ArithOp::Rem => {
                    if b.bits == 0 {
                        return Err(EvalFault::DivisionByZero);
                    }
                    if unsigned {
                        if *op == ArithOp::Div {
                            a.bits / b.bits
                        } else {
                            a.bits % b.bits
                        }
                    } else {
                        let x = to_value(a.bits, w, false);
                        let y = to_value(b.bits, w, false);
                        (if *op == ArithOp::Div { x / y } else { x % y }) as u64
                    }
                }
            };
            Ok(Word {
                bits: bits & m,
                unsigned,
            })
        }
    }
}

pub fn compare(op: CmpOp, a: Word, b: Word, width: u32) -> bool {
    use std::cmp::Ordering;
    let ord = if a.unsigned || b.unsigned {
        a.bits.cmp(&b.bits)
    } else {
        to_value(a.bits, width, false).cmp(&to_value(b.bits, width, false))
    };
    match op {
        CmpOp::Eq => ord == Ordering::Equal,
        CmpOp::Ne => ord != Ordering::Equal,
        CmpOp::Lt => ord == Ordering::Less,
        CmpOp::Le => ord != Ordering::Greater,
        CmpOp::Gt => ord == Ordering::Greater,
        CmpOp::Ge => ord != Ordering::Less,
    }
}

/// Evaluates a boolean expression with short-circuit `&&`, `||` and `==>`.
pub fn eval_bexp(
    e: &BExp,
    st: &SymbolTable,
    env: &impl Valuation,
) -> Result<bool, EvalFault> {
    match e {
        BExp::True => Ok(true),
        BExp::False => Ok(false),
        BExp::Cmp(op, a, b) => {
            let a = eval_aexp(a, st, env)?;
            let b = eval_aexp(b, st, env)?;
            Ok(compare(*op, a, b, st.width()))
        }
        BExp::Not(a) => Ok(!eval_bexp(a, st, env)?),
        BExp::And(a, b) => Ok(eval_bexp(a, st, env)? && eval_bexp(b, st, env)?),
        BExp::Or(a, b) => Ok(eval_bexp(a, st, env)? || eval_bexp(b, st, env)?),
        BExp::Implies(a, b) => Ok(!eval_bexp(a, st, env)? || eval_bexp(b, st, env)?),
    }
}
