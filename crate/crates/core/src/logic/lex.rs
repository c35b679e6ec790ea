//! Tokenizer shared by the program parser and the expression parser.

use std::fmt;

use thiserror::Error;

/// A syntax error with a 1-based source position.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("{line}:{col}: {message}")]
pub struct SyntaxError {
    pub line: u32,
    pub col: u32,
    pub message: String,
}

impl SyntaxError {
    pub fn new(pos: Pos, message: impl Into<String>) -> Self {
        SyntaxError {
            line: pos.line,
            col: pos.col,
            message: message.into(),
        }
    }
}

/// Source position: 1-based line and column plus byte offset.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
    pub offset: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Punct(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(v) => write!(f, "`{v}`"),
            Tok::Punct(p) => write!(f, "`{p}`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
    /// Byte offset one past the token.
    pub end: usize,
}

// Longest first so that greedy matching works.
const PUNCT: &[&str] = &[
    "==>", "&&", "||", "==", "!=", "<=", ">=", "++", "--", "+=", "-=", "*=", "/=", "%=", "(",
    ")", "{", "}", ";", ",", ":", "!", "<", ">", "=", "+", "-", "*", "/", "%",
];

pub fn tokenize(src: &str) -> Result<Vec<Token>, SyntaxError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    let advance = |i: &mut usize, line: &mut u32, col: &mut u32, n: usize| {
        for _ in 0..n {
            if bytes[*i] == b'\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            *i += 1;
        }
    };
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            advance(&mut i, &mut line, &mut col, 1);
            continue;
        }
        if src[i..].starts_with("//") || src[i..].starts_with('#') {
            while i < bytes.len() && bytes[i] != b'\n' {
                advance(&mut i, &mut line, &mut col, 1);
            }
            continue;
        }
        if src[i..].starts_with("/*") {
            let start = Pos {
                line,
                col,
                offset: i,
            };
            match src[i + 2..].find("*/") {
                Some(end) => advance(&mut i, &mut line, &mut col, end + 4),
                None => return Err(SyntaxError::new(start, "unterminated comment")),
            }
            continue;
        }
        let pos = Pos {
            line,
            col,
            offset: i,
        };
        if c.is_ascii_alphabetic() || c == b'_' {
            let len = src[i..]
                .find(|ch: char| !(ch.is_ascii_alphanumeric() || ch == '_'))
                .unwrap_or(src.len() - i);
            let word = src[i..i + len].to_string();
            advance(&mut i, &mut line, &mut col, len);
            out.push(Token {
                tok: Tok::Ident(word),
                pos,
                end: i,
            });
            continue;
        }
        if c.is_ascii_digit() {
            let len = src[i..]
                .find(|ch: char| !ch.is_ascii_alphanumeric())
                .unwrap_or(src.len() - i);
            let text = &src[i..i + len];
            let digits = text.trim_end_matches(['u', 'U', 'l', 'L']);
            let value = if let Some(hex) = digits
                .strip_prefix("0x")
                .or_else(|| digits.strip_prefix("0X"))
            {
                i64::from_str_radix(hex, 16)
            } else {
                digits.parse::<i64>()
            }
            .map_err(|_| SyntaxError::new(pos, format!("invalid integer literal `{text}`")))?;
            advance(&mut i, &mut line, &mut col, len);
            out.push(Token {
                tok: Tok::Int(value),
                pos,
                end: i,
            });
            continue;
        }
        match PUNCT.iter().find(|p| src[i..].starts_with(**p)) {
            Some(p) => {
                advance(&mut i, &mut line, &mut col, p.len());
                out.push(Token {
                    tok: Tok::Punct(p),
                    pos,
                    end: i,
                });
            }
            None => {
                let ch = src[i..].chars().next().unwrap_or('?');
                return Err(SyntaxError::new(pos, format!("unexpected character `{ch}`")));
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        pos: Pos {
            line,
            col,
            offset: src.len(),
        },
        end: src.len(),
    });
    Ok(out)
}

/// Cursor over a token vector.
#[derive(Clone, Debug)]
pub struct TokenStream {
    toks: Vec<Token>,
    at: usize,
}

impl TokenStream {
    pub fn new(src: &str) -> Result<Self, SyntaxError> {
        Ok(TokenStream {
            toks: tokenize(src)?,
            at: 0,
        })
    }

    pub fn peek(&self) -> &Token {
        &self.toks[self.at]
    }

    pub fn peek_at(&self, k: usize) -> &Token {
        let idx = (self.at + k).min(self.toks.len() - 1);
        &self.toks[idx]
    }

    pub fn next_token(&mut self) -> Token {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    /// End offset of the most recently consumed token.
    pub fn prev_end(&self) -> usize {
        if self.at == 0 {
            0
        } else {
            self.toks[self.at - 1].end
        }
    }

    pub fn prev_pos(&self) -> Pos {
        if self.at == 0 {
            self.toks[0].pos
        } else {
            self.toks[self.at - 1].pos
        }
    }

    pub fn is_punct(&self, p: &str) -> bool {
        matches!(&self.peek().tok, Tok::Punct(q) if *q == p)
    }

    pub fn is_ident(&self, word: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(w) if w == word)
    }

    pub fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.next_token();
            true
        } else {
            false
        }
    }

    pub fn eat_ident(&mut self, word: &str) -> bool {
        if self.is_ident(word) {
            self.next_token();
            true
        } else {
            false
        }
    }

    pub fn expect_punct(&mut self, p: &str) -> Result<Pos, SyntaxError> {
        let t = self.peek().clone();
        if self.eat_punct(p) {
            Ok(t.pos)
        } else {
            Err(SyntaxError::new(
                t.pos,
                format!("expected `{p}`, found {}", t.tok),
            ))
        }
    }

    pub fn expect_ident(&mut self) -> Result<(String, Pos), SyntaxError> {
        let t = self.next_token();
        match t.tok {
            Tok::Ident(w) => Ok((w, t.pos)),
            other => Err(SyntaxError::new(
                t.pos,
                format!("expected identifier, found {other}"),
            )),
        }
    }

    pub fn at_eof(&self) -> bool {
        self.peek().tok == Tok::Eof
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positions_and_comments() {
        let toks = tokenize("int x; // c\n/* a\n b */ x==>y 0x1F 10u").unwrap();
        let kinds: Vec<_> = toks.iter().map(|t| t.tok.clone()).collect();
        assert_eq!(
            kinds,
            vec![
                Tok::Ident("int".into()),
                Tok::Ident("x".into()),
                Tok::Punct(";"),
                Tok::Ident("x".into()),
                Tok::Punct("==>"),
                Tok::Ident("y".into()),
                Tok::Int(31),
                Tok::Int(10),
                Tok::Eof
            ]
        );
        assert_eq!((toks[3].pos.line, toks[3].pos.col), (3, 7));
    }

    #[test]
    fn bad_character() {
        let err = tokenize("x = 1 @ 2").unwrap_err();
        assert_eq!((err.line, err.col), (1, 7));
    }
}
