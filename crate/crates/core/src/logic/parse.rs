//! C-like expression syntax, shared by program text and witness invariants.
//!
//! Expressions are first parsed into an untyped tree using C precedence and then
//! classified into arithmetic ([`AExp`]) or boolean ([`BExp`]) form. An arithmetic
//! expression in boolean position means `e != 0`, as in C.

use super::expr::{AExp, ArithOp, BExp, CmpOp};
use super::lex::{Pos, SyntaxError, Tok, TokenStream};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Arith(ArithOp),
    Cmp(CmpOp),
    And,
    Or,
    Implies,
}

/// Untyped expression tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Int(i64, Pos),
    Bool(bool, Pos),
    Var(String, Pos),
    Call(String, Pos),
    Neg(Box<Expr>, Pos),
    Not(Box<Expr>, Pos),
    Bin(BinOp, Box<Expr>, Box<Expr>, Pos),
}

impl Expr {
    pub fn pos(&self) -> Pos {
        match self {
            Expr::Int(_, p)
            | Expr::Bool(_, p)
            | Expr::Var(_, p)
            | Expr::Call(_, p)
            | Expr::Neg(_, p)
            | Expr::Not(_, p)
            | Expr::Bin(_, _, _, p) => *p,
        }
    }

    fn is_boolean(&self) -> bool {
        match self {
            Expr::Bool(..) | Expr::Not(..) => true,
            Expr::Bin(op, ..) => !matches!(op, BinOp::Arith(_)),
            _ => false,
        }
    }

    /// Variables referenced, with their first position.
    pub fn vars(&self, out: &mut Vec<(String, Pos)>) {
        match self {
            Expr::Var(v, p) => {
                if !out.iter().any(|(w, _)| w == v) {
                    out.push((v.clone(), *p));
                }
            }
            Expr::Neg(a, _) | Expr::Not(a, _) => a.vars(out),
            Expr::Bin(_, a, b, _) => {
                a.vars(out);
                b.vars(out);
            }
            _ => {}
        }
    }

    pub fn to_aexp(&self) -> Result<AExp, SyntaxError> {
        match self {
            Expr::Int(v, _) => Ok(AExp::Const(*v)),
            Expr::Var(v, _) => Ok(AExp::Var(v.clone())),
            Expr::Neg(a, _) => Ok(AExp::Neg(Box::new(a.to_aexp()?))),
            Expr::Bin(BinOp::Arith(op), a, b, _) => {
                Ok(AExp::bin(*op, a.to_aexp()?, b.to_aexp()?))
            }
            Expr::Call(name, p) => Err(SyntaxError::new(
                *p,
                format!("call to `{name}` is not allowed inside an expression"),
            )),
            other => Err(SyntaxError::new(
                other.pos(),
                "boolean expression used where an integer is expected",
            )),
        }
    }

    pub fn to_bexp(&self) -> Result<BExp, SyntaxError> {
        match self {
            Expr::Bool(true, _) => Ok(BExp::True),
            Expr::Bool(false, _) => Ok(BExp::False),
            Expr::Not(a, _) => Ok(BExp::not(a.to_bexp()?)),
            Expr::Bin(BinOp::And, a, b, _) => Ok(BExp::and(a.to_bexp()?, b.to_bexp()?)),
            Expr::Bin(BinOp::Or, a, b, _) => Ok(BExp::or(a.to_bexp()?, b.to_bexp()?)),
            Expr::Bin(BinOp::Implies, a, b, _) => Ok(BExp::implies(a.to_bexp()?, b.to_bexp()?)),
            Expr::Bin(BinOp::Cmp(op), a, b, p) => {
                if a.is_boolean() || b.is_boolean() {
                    return Err(SyntaxError::new(*p, "comparison between boolean operands"));
                }
                Ok(BExp::Cmp(*op, a.to_aexp()?, b.to_aexp()?))
            }
            arith => Ok(BExp::Cmp(CmpOp::Ne, arith.to_aexp()?, AExp::Const(0))),
        }
    }
}

fn binop_of(tok: &Tok) -> Option<(BinOp, u8)> {
    let Tok::Punct(p) = tok else { return None };
    let r = match *p {
        "==>" => (BinOp::Implies, 1),
        "||" => (BinOp::Or, 2),
        "&&" => (BinOp::And, 3),
        "==" => (BinOp::Cmp(CmpOp::Eq), 4),
        "!=" => (BinOp::Cmp(CmpOp::Ne), 4),
        "<" => (BinOp::Cmp(CmpOp::Lt), 5),
        "<=" => (BinOp::Cmp(CmpOp::Le), 5),
        ">" => (BinOp::Cmp(CmpOp::Gt), 5),
        ">=" => (BinOp::Cmp(CmpOp::Ge), 5),
        "+" => (BinOp::Arith(ArithOp::Add), 6),
        "-" => (BinOp::Arith(ArithOp::Sub), 6),
        "*" => (BinOp::Arith(ArithOp::Mul), 7),
        "/" => (BinOp::Arith(ArithOp::Div), 7),
        "%" => (BinOp::Arith(ArithOp::Rem), 7),
        _ => return None,
    };
    Some(r)
}

/// Parses one expression from the stream (precedence climbing).
pub fn parse_expr(ts: &mut TokenStream) -> Result<Expr, SyntaxError> {
    parse_prec(ts, 1)
}

fn parse_prec(ts: &mut TokenStream, min: u8) -> Result<Expr, SyntaxError> {
    let mut lhs = parse_unary(ts)?;
    while let Some((op, prec)) = binop_of(&ts.peek().tok) {
        if prec < min {
            break;
        }
        let pos = ts.next_token().pos;
        // `==>` is right associative, everything else left associative.
        let next_min = if op == BinOp::Implies { prec } else { prec + 1 };
        let rhs = parse_prec(ts, next_min)?;
        lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs), pos);
    }
    Ok(lhs)
}

fn parse_unary(ts: &mut TokenStream) -> Result<Expr, SyntaxError> {
    let t = ts.peek().clone();
    match &t.tok {
        Tok::Punct("!") => {
            ts.next_token();
            Ok(Expr::Not(Box::new(parse_unary(ts)?), t.pos))
        }
        Tok::Punct("-") => {
            ts.next_token();
            if let Tok::Int(v) = ts.peek().tok {
                ts.next_token();
                return Ok(Expr::Int(-v, t.pos));
            }
            Ok(Expr::Neg(Box::new(parse_unary(ts)?), t.pos))
        }
        Tok::Punct("+") => {
            ts.next_token();
            parse_unary(ts)
        }
        _ => parse_primary(ts),
    }
}

fn parse_primary(ts: &mut TokenStream) -> Result<Expr, SyntaxError> {
    let t = ts.next_token();
    match t.tok {
        Tok::Int(v) => Ok(Expr::Int(v, t.pos)),
        Tok::Ident(w) if w == "true" => Ok(Expr::Bool(true, t.pos)),
        Tok::Ident(w) if w == "false" => Ok(Expr::Bool(false, t.pos)),
        Tok::Ident(w) => {
            if ts.is_punct("(") {
                ts.next_token();
                ts.expect_punct(")")?;
                Ok(Expr::Call(w, t.pos))
            } else {
                Ok(Expr::Var(w, t.pos))
            }
        }
        Tok::Punct("(") => {
            let e = parse_expr(ts)?;
            ts.expect_punct(")")?;
            Ok(e)
        }
        other => Err(SyntaxError::new(
            t.pos,
            format!("expected expression, found {other}"),
        )),
    }
}

fn parse_whole(text: &str) -> Result<Expr, SyntaxError> {
    let mut ts = TokenStream::new(text)?;
    let e = parse_expr(&mut ts)?;
    if !ts.at_eof() {
        let t = ts.peek();
        return Err(SyntaxError::new(
            t.pos,
            format!("unexpected {} after expression", t.tok),
        ));
    }
    Ok(e)
}

/// Parses a complete boolean expression such as `n == x+y`.
pub fn parse_bexp(text: &str) -> Result<BExp, SyntaxError> {
    parse_whole(text)?.to_bexp()
}

/// Parses a complete arithmetic expression.
pub fn parse_aexp(text: &str) -> Result<AExp, SyntaxError> {
    parse_whole(text)?.to_aexp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence() {
        let e = parse_bexp("n == x+y").unwrap();
        assert_eq!(
            e,
            BExp::eq(
                AExp::var("n"),
                AExp::add(AExp::var("x"), AExp::var("y"))
            )
        );
        let e = parse_bexp("a > 0 && b > 0 || c > 0 ==> d > 0").unwrap();
        assert!(matches!(e, BExp::Implies(..)));
        let e = parse_bexp("(x + 1) * 2 > 3").unwrap();
        assert_eq!(e.to_string(), "(x + 1) * 2 > 3");
    }

    #[test]
    fn truthiness_and_errors() {
        assert_eq!(parse_bexp("x").unwrap().to_string(), "x != 0");
        assert!(parse_bexp("(x > 0) + 1 > 2").is_err());
        assert!(parse_bexp("x >").is_err());
        assert!(parse_bexp("x > 0 )").is_err());
        assert!(parse_aexp("x > 0").is_err());
    }

    #[test]
    fn negative_literals() {
        assert_eq!(parse_aexp("-5").unwrap(), AExp::Const(-5));
        assert_eq!(
            parse_aexp("-x").unwrap(),
            AExp::Neg(Box::new(AExp::var("x")))
        );
    }
}
