//! Expressions over fixed-width integers: syntax, evaluation, and decision procedures.

pub mod blast;
pub mod eval;
pub mod expr;
pub mod lex;
pub mod parse;
pub mod print;
pub mod sat;
pub mod simplify;
pub mod total;
pub mod valid;

pub use eval::{eval_aexp, eval_bexp, EvalFault, Valuation};
pub use expr::{
    split_conjunctions, substitute, AExp, ArithOp, BExp, CmpOp, Signedness, SymbolTable,
    MAX_WIDTH,
};
pub use lex::SyntaxError;
pub use parse::{parse_aexp, parse_bexp};
pub use simplify::{is_trivial, simplify};
pub use total::{defined, fails_total, holds_total};
pub use valid::{Checker, Model, Satisfiability, Validity};
