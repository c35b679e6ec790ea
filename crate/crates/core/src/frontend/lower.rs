//! Statement parser and lowering to a CFA.

use std::collections::BTreeSet;

use crate::logic::lex::{Pos, Tok, TokenStream};
use crate::logic::parse::{parse_expr, Expr};
use crate::logic::{AExp, ArithOp, BExp, Signedness, SymbolTable, SyntaxError, MAX_WIDTH};

use super::loops::compute_loops;
use super::property::strip_not;
use super::{
    source_hash, Branch, Cfa, Edge, FrontendError, LocId, Location, Operation, Program,
    PropertyEncoding, PropertySite, DEFAULT_WIDTH,
};

#[derive(Clone, Debug)]
enum Rhs {
    Expr(AExp),
    Nondet,
}

#[derive(Clone, Debug)]
enum Stmt {
    Empty,
    Block(Vec<Stmt>),
    Assign(String, Rhs, Pos),
    Assume(BExp, Pos),
    Assert {
        cond: BExp,
        pos: Pos,
        end: usize,
    },
    If {
        cond: BExp,
        then: Box<Stmt>,
        els: Option<Box<Stmt>>,
        pos: Pos,
        end: usize,
    },
    While(BExp, Box<Stmt>, Pos),
    Break(Pos),
    Continue(Pos),
    Return(Pos),
    ErrorLabel(Pos),
    VerifierError(Pos),
    Call(String, Pos),
}

const NONDET_NAMES: &[&str] = &["nondet", "nondet_int", "nondet_uint"];
const ERROR_CALLS: &[&str] = &["verifier_error", "__VERIFIER_error", "reach_error"];

fn is_nondet(name: &str) -> bool {
    NONDET_NAMES.contains(&name) || name.starts_with("__VERIFIER_nondet")
}

fn is_type_word(ts: &TokenStream) -> bool {
    ["int", "unsigned", "signed", "void", "extern", "static", "const"]
        .iter()
        .any(|w| ts.is_ident(w))
}

struct Parser<'a> {
    ts: TokenStream,
    st: SymbolTable,
    globals: Vec<Stmt>,
    text: &'a str,
}

impl<'a> Parser<'a> {
    fn err(&self, pos: Pos, msg: impl Into<String>) -> FrontendError {
        FrontendError::Syntax(SyntaxError::new(pos, msg))
    }

    /// Parses a type; `None` means `void`.
    fn parse_type(&mut self) -> Result<Option<Signedness>, FrontendError> {
        while self.ts.eat_ident("extern") || self.ts.eat_ident("static") || self.ts.eat_ident("const")
        {}
        if self.ts.eat_ident("void") {
            return Ok(None);
        }
        if self.ts.eat_ident("unsigned") {
            self.ts.eat_ident("int");
            return Ok(Some(Signedness::Unsigned));
        }
        if self.ts.eat_ident("signed") {
            self.ts.eat_ident("int");
            return Ok(Some(Signedness::Signed));
        }
        if self.ts.eat_ident("int") {
            return Ok(Some(Signedness::Signed));
        }
        let t = self.ts.peek().clone();
        Err(self.err(t.pos, format!("expected a type, found {}", t.tok)))
    }

    fn check_vars(&self, e: &Expr) -> Result<(), FrontendError> {
        let mut vars = Vec::new();
        e.vars(&mut vars);
        for (v, p) in vars {
            if !self.st.contains(&v) {
                return Err(FrontendError::Undeclared {
                    name: v,
                    line: p.line as usize,
                    col: p.col as usize,
                });
            }
        }
        Ok(())
    }

    fn bexp(&mut self) -> Result<BExp, FrontendError> {
        let e = parse_expr(&mut self.ts)?;
        self.check_vars(&e)?;
        Ok(e.to_bexp()?)
    }

    fn rhs(&mut self) -> Result<Rhs, FrontendError> {
        let e = parse_expr(&mut self.ts)?;
        if let Expr::Call(name, _) = &e {
            if is_nondet(name) {
                return Ok(Rhs::Nondet);
            }
        }
        self.check_vars(&e)?;
        Ok(Rhs::Expr(e.to_aexp()?))
    }

    fn declare(&mut self, name: &str, sign: Signedness, pos: Pos) -> Result<(), FrontendError> {
        if !self.st.declare(name, sign) {
            return Err(FrontendError::Redeclared {
                name: name.to_string(),
                line: pos.line as usize,
                col: pos.col as usize,
            });
        }
        Ok(())
    }

    /// Declarators after the type, up to and including `;`.
    fn declarators(
        &mut self,
        sign: Signedness,
        first: (String, Pos),
    ) -> Result<Vec<Stmt>, FrontendError> {
        let mut out = Vec::new();
        let (mut name, mut pos) = first;
        loop {
            if self.ts.eat_punct("=") {
                let rhs = self.rhs()?;
                self.declare(&name, sign, pos)?;
                out.push(Stmt::Assign(name.clone(), rhs, pos));
            } else {
                self.declare(&name, sign, pos)?;
            }
            if self.ts.eat_punct(";") {
                return Ok(out);
            }
            self.ts.expect_punct(",")?;
            (name, pos) = self.ts.expect_ident()?;
        }
    }

    fn skip_params(&mut self) -> Result<(), FrontendError> {
        self.ts.expect_punct("(")?;
        let mut depth = 1;
        while depth > 0 {
            let t = self.ts.next_token();
            match t.tok {
                Tok::Punct("(") => depth += 1,
                Tok::Punct(")") => depth -= 1,
                Tok::Eof => return Err(self.err(t.pos, "unterminated parameter list")),
                _ => {}
            }
        }
        Ok(())
    }

    fn program(&mut self) -> Result<Stmt, FrontendError> {
        let mut main: Option<Stmt> = None;
        while !self.ts.at_eof() {
            let ty = self.parse_type()?;
            let (name, pos) = self.ts.expect_ident()?;
            if self.ts.is_punct("(") {
                self.skip_params()?;
                if self.ts.eat_punct(";") {
                    continue;
                }
                if name != "main" || main.is_some() {
                    return Err(FrontendError::UnsupportedProcedure {
                        name,
                        line: pos.line as usize,
                        col: pos.col as usize,
                    });
                }
                main = Some(self.block()?);
            } else {
                let Some(sign) = ty else {
                    return Err(self.err(pos, "variable of type void"));
                };
                let inits = self.declarators(sign, (name, pos))?;
                self.globals.extend(inits);
            }
        }
        main.ok_or(FrontendError::NoMain)
    }

    fn block(&mut self) -> Result<Stmt, FrontendError> {
        self.ts.expect_punct("{")?;
        let mut items = Vec::new();
        while !self.ts.eat_punct("}") {
            if self.ts.at_eof() {
                let p = self.ts.peek().pos;
                return Err(self.err(p, "missing `}`"));
            }
            items.push(self.stmt()?);
        }
        Ok(Stmt::Block(items))
    }

    fn paren_bexp(&mut self) -> Result<BExp, FrontendError> {
        self.ts.expect_punct("(")?;
        let b = self.bexp()?;
        self.ts.expect_punct(")")?;
        Ok(b)
    }

    fn stmt(&mut self) -> Result<Stmt, FrontendError> {
        let t = self.ts.peek().clone();
        let pos = t.pos;
        if self.ts.eat_punct(";") {
            return Ok(Stmt::Empty);
        }
        if self.ts.is_punct("{") {
            return self.block();
        }
        if self.ts.is_punct("++") || self.ts.is_punct("--") {
            let op = if self.ts.eat_punct("++") {
                ArithOp::Add
            } else {
                self.ts.next_token();
                ArithOp::Sub
            };
            let (v, vpos) = self.ts.expect_ident()?;
            self.ts.expect_punct(";")?;
            return self.increment(v, op, vpos, pos);
        }
        if is_type_word(&self.ts) {
            let ty = self.parse_type()?;
            let (name, npos) = self.ts.expect_ident()?;
            if self.ts.is_punct("(") {
                self.skip_params()?;
                if self.ts.eat_punct(";") {
                    return Ok(Stmt::Empty);
                }
                return Err(FrontendError::UnsupportedProcedure {
                    name,
                    line: npos.line as usize,
                    col: npos.col as usize,
                });
            }
            let Some(sign) = ty else {
                return Err(self.err(npos, "variable of type void"));
            };
            let inits = self.declarators(sign, (name, npos))?;
            return Ok(Stmt::Block(inits));
        }
        let Tok::Ident(word) = t.tok.clone() else {
            return Err(self.err(pos, format!("expected a statement, found {}", t.tok)));
        };
        match word.as_str() {
            "if" => {
                self.ts.next_token();
                let cond = self.paren_bexp()?;
                let then = Box::new(self.stmt()?);
                let els = if self.ts.eat_ident("else") {
                    Some(Box::new(self.stmt()?))
                } else {
                    None
                };
                let end = self.ts.prev_end();
                return Ok(Stmt::If {
                    cond,
                    then,
                    els,
                    pos,
                    end,
                });
            }
            "while" => {
                self.ts.next_token();
                let cond = self.paren_bexp()?;
                let body = self.stmt()?;
                return Ok(Stmt::While(cond, Box::new(body), pos));
            }
            "break" | "continue" => {
                self.ts.next_token();
                self.ts.expect_punct(";")?;
                return Ok(if word == "break" {
                    Stmt::Break(pos)
                } else {
                    Stmt::Continue(pos)
                });
            }
            "return" => {
                self.ts.next_token();
                if !self.ts.eat_punct(";") {
                    let e = parse_expr(&mut self.ts)?;
                    self.check_vars(&e)?;
                    self.ts.expect_punct(";")?;
                }
                return Ok(Stmt::Return(pos));
            }
            "else" => return Err(self.err(pos, "`else` without `if`")),
            _ => {}
        }
        self.ts.next_token();
        if self.ts.eat_punct(":") {
            if word != "Error" && word != "ERROR" {
                return Err(self.err(pos, format!("unsupported label `{word}`")));
            }
            if !self.ts.is_punct("}") {
                // the labelled statement is never executed past the error
                self.stmt()?;
            }
            return Ok(Stmt::ErrorLabel(pos));
        }
        if self.ts.is_punct("(") {
            if matches!(word.as_str(), "assume" | "__VERIFIER_assume" | "assert" | "__VERIFIER_assert")
            {
                let cond = self.paren_bexp()?;
                self.ts.expect_punct(";")?;
                if word.ends_with("assume") {
                    return Ok(Stmt::Assume(cond, pos));
                }
                return Ok(Stmt::Assert {
                    cond,
                    pos,
                    end: self.ts.prev_end(),
                });
            }
            self.ts.next_token();
            self.ts.expect_punct(")")?;
            self.ts.expect_punct(";")?;
            if ERROR_CALLS.contains(&word.as_str()) {
                return Ok(Stmt::VerifierError(pos));
            }
            return Ok(Stmt::Call(word, pos));
        }
        if self.ts.is_punct("++") || self.ts.is_punct("--") {
            let op = if self.ts.eat_punct("++") {
                ArithOp::Add
            } else {
                self.ts.next_token();
                ArithOp::Sub
            };
            self.ts.expect_punct(";")?;
            return self.increment(word, op, pos, pos);
        }
        let compound = [
            ("+=", ArithOp::Add),
            ("-=", ArithOp::Sub),
            ("*=", ArithOp::Mul),
            ("/=", ArithOp::Div),
            ("%=", ArithOp::Rem),
        ]
        .into_iter()
        .find(|(p, _)| self.ts.is_punct(p));
        if !self.st.contains(&word) {
            return Err(FrontendError::Undeclared {
                name: word,
                line: pos.line as usize,
                col: pos.col as usize,
            });
        }
        if let Some((_, op)) = compound {
            self.ts.next_token();
            let e = parse_expr(&mut self.ts)?;
            self.check_vars(&e)?;
            let rhs = AExp::bin(op, AExp::var(word.clone()), e.to_aexp()?);
            self.ts.expect_punct(";")?;
            return Ok(Stmt::Assign(word, Rhs::Expr(rhs), pos));
        }
        self.ts.expect_punct("=")?;
        let rhs = self.rhs()?;
        self.ts.expect_punct(";")?;
        Ok(Stmt::Assign(word, rhs, pos))
    }

    fn increment(
        &self,
        v: String,
        op: ArithOp,
        vpos: Pos,
        pos: Pos,
    ) -> Result<Stmt, FrontendError> {
        if !self.st.contains(&v) {
            return Err(FrontendError::Undeclared {
                name: v,
                line: vpos.line as usize,
                col: vpos.col as usize,
            });
        }
        let rhs = AExp::bin(op, AExp::var(v.clone()), AExp::Const(1));
        Ok(Stmt::Assign(v, Rhs::Expr(rhs), pos))
    }
}

const UNRESOLVED: LocId = usize::MAX;

enum Frontier {
    Start,
    Pending(Vec<usize>),
}

impl Frontier {
    fn merge(self, other: Frontier) -> Frontier {
        match (self, other) {
            (Frontier::Pending(mut a), Frontier::Pending(b)) => {
                a.extend(b);
                Frontier::Pending(a)
            }
            // a start frontier cannot meet another one
            (f, _) => f,
        }
    }

    fn dead() -> Frontier {
        Frontier::Pending(Vec::new())
    }
}

#[derive(Default)]
struct Lowering {
    locations: Vec<Location>,
    edges: Vec<Edge>,
    error_locations: BTreeSet<LocId>,
    sites: Vec<PropertySite>,
    loops: Vec<(LocId, Vec<usize>)>,
    returns: Vec<usize>,
}

impl Lowering {
    fn new_loc(&mut self, pos: Pos) -> LocId {
        let id = self.locations.len();
        self.locations.push(Location {
            id,
            line: pos.line as usize,
            col: pos.col as usize,
        });
        id
    }

    fn materialize(&mut self, fr: Frontier, pos: Pos) -> LocId {
        let id = self.new_loc(pos);
        if let Frontier::Pending(edges) = fr {
            for e in edges {
                self.edges[e].target = id;
            }
        }
        id
    }

    fn emit(&mut self, source: LocId, op: Operation, pos: Pos, branch: Branch) -> usize {
        self.edges.push(Edge {
            source,
            op,
            target: UNRESOLVED,
            line: pos.line as usize,
            branch,
        });
        self.edges.len() - 1
    }

    fn error_edge(&mut self, source: LocId, pos: Pos) {
        let e = self.emit(source, Operation::ErrorLabel, pos, Branch::None);
        let sink = self.new_loc(pos);
        self.edges[e].target = sink;
        self.error_locations.insert(sink);
    }

    fn lower(&mut self, s: &Stmt, fr: Frontier, text: &str) -> Result<Frontier, FrontendError> {
        Ok(match s {
            Stmt::Empty => fr,
            Stmt::Block(items) => {
                let mut fr = fr;
                for item in items {
                    fr = self.lower(item, fr, text)?;
                }
                fr
            }
            Stmt::Assign(v, rhs, pos) => {
                let src = self.materialize(fr, *pos);
                let op = match rhs {
                    Rhs::Expr(e) => Operation::Assign(v.clone(), e.clone()),
                    Rhs::Nondet => Operation::Havoc(v.clone()),
                };
                Frontier::Pending(vec![self.emit(src, op, *pos, Branch::None)])
            }
            Stmt::Assume(b, pos) => {
                let src = self.materialize(fr, *pos);
                let e = self.emit(src, Operation::Assume(b.clone()), *pos, Branch::None);
                Frontier::Pending(vec![e])
            }
            Stmt::Call(name, pos) => {
                let src = self.materialize(fr, *pos);
                let e = self.emit(src, Operation::Call(name.clone()), *pos, Branch::None);
                Frontier::Pending(vec![e])
            }
            Stmt::Return(pos) => {
                let src = self.materialize(fr, *pos);
                let e = self.emit(src, Operation::Return, *pos, Branch::None);
                self.returns.push(e);
                Frontier::dead()
            }
            Stmt::ErrorLabel(pos) | Stmt::VerifierError(pos) => {
                let src = self.materialize(fr, *pos);
                self.error_edge(src, *pos);
                Frontier::dead()
            }
            Stmt::Assert { cond, pos, end } => {
                let src = self.materialize(fr, *pos);
                let t = self.emit(
                    src,
                    Operation::Assume(BExp::not(cond.clone())),
                    *pos,
                    Branch::Then,
                );
                let m = self.materialize(Frontier::Pending(vec![t]), *pos);
                self.error_edge(m, *pos);
                let e = self.emit(
                    src,
                    Operation::Assume(BExp::not(BExp::not(cond.clone()))),
                    *pos,
                    Branch::Else,
                );
                self.sites.push(PropertySite {
                    start: pos.offset,
                    end: *end,
                    line: pos.line as usize,
                    end_line: line_of(text, end.saturating_sub(1)),
                    style: PropertyEncoding::AssertStmt,
                    condition: cond.clone(),
                    location: src,
                });
                Frontier::Pending(vec![e])
            }
            Stmt::If {
                cond,
                then,
                els,
                pos,
                end,
            } => {
                let src = self.materialize(fr, *pos);
                let t = self.emit(src, Operation::Assume(cond.clone()), *pos, Branch::Then);
                let e = self.emit(
                    src,
                    Operation::Assume(BExp::not(cond.clone())),
                    *pos,
                    Branch::Else,
                );
                if els.is_none() {
                    if let Some(style) = error_style(then) {
                        self.sites.push(PropertySite {
                            start: pos.offset,
                            end: *end,
                            line: pos.line as usize,
                            end_line: line_of(text, end.saturating_sub(1)),
                            style,
                            condition: strip_not(cond),
                            location: src,
                        });
                    }
                }
                let after_then = self.lower(then, Frontier::Pending(vec![t]), text)?;
                let after_else = match els {
                    Some(s) => self.lower(s, Frontier::Pending(vec![e]), text)?,
                    None => Frontier::Pending(vec![e]),
                };
                after_then.merge(after_else)
            }
            Stmt::While(cond, body, pos) => {
                let head = self.materialize(fr, *pos);
                let t = self.emit(head, Operation::Assume(cond.clone()), *pos, Branch::Then);
                let e = self.emit(
                    head,
                    Operation::Assume(BExp::not(cond.clone())),
                    *pos,
                    Branch::Else,
                );
                self.loops.push((head, Vec::new()));
                let after = self.lower(body, Frontier::Pending(vec![t]), text)?;
                if let Frontier::Pending(back) = after {
                    for b in back {
                        self.edges[b].target = head;
                    }
                }
                let (_, breaks) = self.loops.pop().unwrap();
                let mut exits = vec![e];
                exits.extend(breaks);
                Frontier::Pending(exits)
            }
            Stmt::Break(pos) | Stmt::Continue(pos) => {
                let what = if matches!(s, Stmt::Break(_)) {
                    "`break`"
                } else {
                    "`continue`"
                };
                let Some((head, _)) = self.loops.last() else {
                    return Err(FrontendError::OutsideLoop {
                        what,
                        line: pos.line as usize,
                        col: pos.col as usize,
                    });
                };
                let head = *head;
                let Frontier::Pending(pending) = fr else {
                    unreachable!("loop bodies start with a pending edge")
                };
                if matches!(s, Stmt::Break(_)) {
                    self.loops.last_mut().unwrap().1.extend(pending);
                } else {
                    for p in pending {
                        self.edges[p].target = head;
                    }
                }
                Frontier::dead()
            }
        })
    }
}

fn error_style(s: &Stmt) -> Option<PropertyEncoding> {
    match s {
        Stmt::ErrorLabel(_) => Some(PropertyEncoding::ErrorLabel),
        Stmt::VerifierError(_) => Some(PropertyEncoding::VerifierErrorCall),
        Stmt::Block(items) if items.len() == 1 => error_style(&items[0]),
        _ => None,
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    let offset = offset.min(text.len());
    text.as_bytes()[..offset].iter().filter(|&&b| b == b'\n').count() + 1
}

/// Parses at the default 8-bit width.
pub fn parse(program: &Program) -> Result<Cfa, FrontendError> {
    parse_with_width(program, DEFAULT_WIDTH)
}

pub fn parse_with_width(program: &Program, width: u32) -> Result<Cfa, FrontendError> {
    if !(1..=MAX_WIDTH).contains(&width) {
        return Err(FrontendError::BadWidth(width));
    }
    let mut p = Parser {
        ts: TokenStream::new(&program.text)?,
        st: SymbolTable::new(width),
        globals: Vec::new(),
        text: &program.text,
    };
    let body = p.program()?;
    let close = p.ts.prev_pos();
    let mut low = Lowering::default();
    let mut fr = Frontier::Start;
    for g in std::mem::take(&mut p.globals) {
        fr = low.lower(&g, fr, p.text)?;
    }
    fr = low.lower(&body, fr, p.text)?;
    let returns = std::mem::take(&mut low.returns);
    let exit = match fr {
        Frontier::Start => low.materialize(Frontier::Start, close),
        Frontier::Pending(mut v) => {
            v.extend(returns.iter().copied());
            low.materialize(Frontier::Pending(v), close)
        }
    };
    for r in returns {
        low.edges[r].target = exit;
    }
    debug_assert!(low.edges.iter().all(|e| e.target != UNRESOLVED));
    let mut cfa = Cfa {
        locations: low.locations,
        initial: 0,
        exit,
        edges: low.edges,
        loop_heads: BTreeSet::new(),
        loop_bodies: Default::default(),
        error_locations: low.error_locations,
        symbols: p.st,
        sites: low.sites,
        source_hash: source_hash(&program.text),
        out: Vec::new(),
        inc: Vec::new(),
    };
    cfa.index_edges();
    compute_loops(&mut cfa)?;
    Ok(cfa)
}

#[cfg(test)]
mod tests {
    use super::super::extract_property;
    use super::*;
    use crate::logic::parse_bexp;

    pub(crate) const COUNTDOWN: &str = "int main() {
\tunsigned int n = nondet();
\tunsigned int x = n, y = 0;
\twhile(x > 0){
\t\t x--;
\t\t y++; }
  // Safety property
\tif (!(n == y)) {
\t\tError: return 1; }
\treturn 0;
}
";

    fn cfa(text: &str) -> Cfa {
        parse(&Program::new("t.mc", text)).unwrap()
    }

    fn edge_summary(c: &Cfa) -> Vec<(usize, String, usize, usize)> {
        c.edges
            .iter()
            .map(|e| (e.source, e.op.to_string(), e.target, e.line))
            .collect()
    }

    #[test]
    fn countdown_cfa_shape() {
        let c = cfa(COUNTDOWN);
        let lines: Vec<usize> = c.locations.iter().map(|l| l.line).collect();
        assert_eq!(lines, vec![2, 3, 3, 4, 5, 6, 8, 9, 9, 10, 11]);
        assert_eq!(c.loop_heads, BTreeSet::from([3]));
        assert_eq!(c.line(3), 4);
        assert_eq!(
            edge_summary(&c),
            vec![
                (0, "n = nondet()".into(), 1, 2),
                (1, "x = n".into(), 2, 3),
                (2, "y = 0".into(), 3, 3),
                (3, "assume(x > 0)".into(), 4, 4),
                (3, "assume(!(x > 0))".into(), 6, 4),
                (4, "x = x - 1".into(), 5, 5),
                (5, "y = y + 1".into(), 3, 6),
                (6, "assume(!(n == y))".into(), 7, 8),
                (6, "assume(!!(n == y))".into(), 9, 8),
                (7, "ERROR".into(), 8, 9),
                (9, "return".into(), 10, 10),
            ]
        );
        assert_eq!(c.exit, 10);
        let props = extract_property(&c).unwrap();
        assert_eq!(props.len(), 1);
        assert_eq!(c.line(props[0].location), 8);
        assert_eq!(props[0].condition, parse_bexp("n == y").unwrap());
    }

    #[test]
    fn trivial_program() {
        let c = cfa("int main(){return 0;}");
        assert_eq!(c.locations.len(), 2);
        assert_eq!(c.edges.len(), 1);
        assert_eq!(c.edges[0].op, Operation::Return);
        assert!(c.loop_heads.is_empty());
        assert!(extract_property(&c).is_err());
    }

    #[test]
    fn loop_head_has_both_branches() {
        let c = cfa("int main(){ int x; while(x>0){x--;} }");
        // hand-built expectation: head 0 with the two guards, body 1 back to 0
        let expected = vec![
            (0, "assume(x > 0)".to_string(), 1, 1),
            (0, "assume(!(x > 0))".to_string(), 2, 1),
            (1, "x = x - 1".to_string(), 0, 1),
        ];
        assert_eq!(edge_summary(&c), expected);
        assert_eq!(c.loop_heads, BTreeSet::from([0]));
    }

    #[test]
    fn property_after_loop() {
        let c = cfa("int main(){ int x = 3; while(x>0){x--;}\n if(!(x>=0)) { Error: return 1; } return 0; }");
        let props = extract_property(&c).unwrap();
        assert_eq!(props[0].condition, parse_bexp("x >= 0").unwrap());
        assert!(matches!(
            c.edges.iter().find(|e| e.target == props[0].location).unwrap().op,
            Operation::Assume(_)
        ));
    }

    #[test]
    fn unguarded_error_is_false_property() {
        let c = cfa("int main(){ int x = 1; verifier_error(); }");
        let props = extract_property(&c).unwrap();
        assert_eq!(props[0].condition, BExp::False);
    }

    #[test]
    fn assert_and_call_styles() {
        let c = cfa("int main(){ int x = 1; assert(x == 1); return 0; }");
        assert_eq!(c.sites[0].style, PropertyEncoding::AssertStmt);
        let props = extract_property(&c).unwrap();
        assert_eq!(props[0].condition, parse_bexp("x == 1").unwrap());
        let c = cfa("int main(){ int x = 1; if (!(x == 1)) { verifier_error(); } return 0; }");
        assert_eq!(c.sites[0].style, PropertyEncoding::VerifierErrorCall);
        assert_eq!(extract_property(&c).unwrap()[0].condition, parse_bexp("x == 1").unwrap());
    }

    #[test]
    fn errors_are_reported() {
        let p = |t: &str| parse(&Program::new("t.mc", t));
        assert!(matches!(
            p("int main(){ y = 1; }"),
            Err(FrontendError::Undeclared { .. })
        ));
        assert!(matches!(
            p("int f(){ return 0; } int main(){ return 0; }"),
            Err(FrontendError::UnsupportedProcedure { .. })
        ));
        assert!(matches!(
            p("int main(){ int g(){ return 1; } return 0; }"),
            Err(FrontendError::UnsupportedProcedure { .. })
        ));
        assert!(matches!(p("int main(){ x = ; }"), Err(FrontendError::Undeclared { .. })));
        assert!(matches!(p("int main(){ int x; x = ; }"), Err(FrontendError::Syntax(_))));
        assert!(matches!(p("int main(){ break; }"), Err(FrontendError::OutsideLoop { .. })));
        assert!(matches!(p("int x;"), Err(FrontendError::NoMain)));
        match p("int main(){\n  int x;\n  x = 1 +;\n}") {
            Err(FrontendError::Syntax(e)) => assert_eq!((e.line, e.col), (3, 10)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn deterministic() {
        assert_eq!(cfa(COUNTDOWN), cfa(COUNTDOWN));
    }

    #[test]
    fn break_continue_nested() {
        let c = cfa(
            "int main(){ int i = 0; int j;\n while (i < 5) { i++; j = 0;\n while (1) { j++; if (j > 2) break; else continue; }\n }\n return 0; }",
        );
        assert_eq!(c.loop_heads.len(), 2);
        let heads: Vec<_> = c.loop_heads.iter().copied().collect();
        let outer = heads[0];
        let inner = heads[1];
        assert!(c.loop_bodies[&outer].contains(&inner));
        assert_eq!(c.innermost_loop(inner), Some(inner));
        assert_eq!(c.loop_head_for_line(3), Some(inner));
    }
}
