//! Recursive-descent parser.
//!
//! ```text
//! expr   := term (("+" | "-") term)*
//! term   := factor (("*" | "/") factor)*
//! factor := "-"? power
//! power  := atom ("^" power)?
//! atom   := number | VAR | func "(" expr ")" | "(" expr ")"
//! func   := exp | log | sin | cos | sqrt
//! ```
//!
//! `-` may also be written as U+2212. A unary minus applied to a constant
//! folds into a negative constant; otherwise `-a` becomes `0 - a`.
//! Exponents without the variable are folded to a number; an integral
//! exponent gives `PowInt`. An exponent that depends on the variable is
//! rewritten as `exp(e * log(base))`.

use super::Expr;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokenize(src: &'a str) -> Result<Vec<(Tok, usize)>> {
        let mut lx = Lexer { src, pos: 0 };
        let mut out = Vec::new();
        loop {
            let (tok, at) = lx.next()?;
            let end = tok == Tok::End;
            out.push((tok, at));
            if end {
                return Ok(out);
            }
        }
    }

    fn next(&mut self) -> Result<(Tok, usize)> {
        let rest = &self.src[self.pos..];
        let trimmed = rest.trim_start();
        self.pos += rest.len() - trimmed.len();
        let start = self.pos;
        let Some(c) = trimmed.chars().next() else {
            return Ok((Tok::End, start));
        };
        let single = match c {
            '+' => Some(Tok::Plus),
            '-' | '\u{2212}' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '^' => Some(Tok::Caret),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(tok) = single {
            self.pos += c.len_utf8();
            return Ok((tok, start));
        }
        if c.is_ascii_digit() || c == '.' {
            return self.number(start);
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let len = trimmed
                .find(|ch: char| !(ch.is_ascii_alphanumeric() || ch == '_'))
                .unwrap_or(trimmed.len());
            self.pos += len;
            return Ok((Tok::Ident(trimmed[..len].to_string()), start));
        }
        Err(Error::Syntax {
            column: start + 1,
            message: format!("unexpected character `{c}`"),
        })
    }

    fn number(&mut self, start: usize) -> Result<(Tok, usize)> {
        let bytes = self.src.as_bytes();
        let mut i = start;
        let digits = |i: &mut usize| {
            let from = *i;
            while *i < bytes.len() && bytes[*i].is_ascii_digit() {
                *i += 1;
            }
            *i - from
        };
        let mut mantissa_digits = digits(&mut i);
        if i < bytes.len() && bytes[i] == b'.' {
            i += 1;
            mantissa_digits += digits(&mut i);
        }
        if mantissa_digits == 0 {
            return Err(Error::Syntax {
                column: start + 1,
                message: "malformed number".into(),
            });
        }
        if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
            let mut j = i + 1;
            if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                j += 1;
            }
            if digits(&mut j) == 0 {
                return Err(Error::Syntax {
                    column: i + 1,
                    message: "malformed exponent".into(),
                });
            }
            i = j;
        }
        let text = &self.src[start..i];
        let value: f64 = text.parse().map_err(|_| Error::Syntax {
            column: start + 1,
            message: format!("malformed number `{text}`"),
        })?;
        self.pos = i;
        Ok((Tok::Num(value), start))
    }
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    at: usize,
    var: &'a str,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn column(&self) -> usize {
        self.toks[self.at].1 + 1
    }

    fn bump(&mut self) -> Tok {
        let tok = self.toks[self.at].0.clone();
        if tok != Tok::End {
            self.at += 1;
        }
        tok
    }

    fn unexpected(&self, what: &str) -> Error {
        let found = match self.peek() {
            Tok::End => "end of input".to_string(),
            t => format!("{t:?}"),
        };
        Error::Syntax {
            column: self.column(),
            message: format!("expected {what}, found {found}"),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(what))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Minus => {
                    self.bump();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Tok::Slash => {
                    self.bump();
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(match self.power()? {
                Expr::Const(c) => Expr::Const(-c),
                e => Expr::Sub(Box::new(Expr::Const(0.0)), Box::new(e)),
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let exponent = self.power()?;
        if exponent.has_var() {
            let log = Expr::Log(Box::new(base));
            return Ok(Expr::Exp(Box::new(Expr::Mul(Box::new(exponent), Box::new(log)))));
        }
        // Folding needs no variable value.
        let value: f64 = exponent.eval(0.0)?;
        Ok(Expr::pow(base, value))
    }

    fn atom(&mut self) -> Result<Expr> {
        let column = self.column();
        if matches!(self.peek(), Tok::Plus | Tok::Minus | Tok::Star | Tok::Slash | Tok::Caret | Tok::RParen | Tok::End) {
            return Err(self.unexpected("a number, variable, function or `(`"));
        }
        match self.bump() {
            Tok::Num(v) => Ok(Expr::Const(v)),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                if name == self.var {
                    return Ok(Expr::Var);
                }
                let ctor: fn(Box<Expr>) -> Expr = match name.as_str() {
                    "exp" => Expr::Exp,
                    "log" => Expr::Log,
                    "sin" => Expr::Sin,
                    "cos" => Expr::Cos,
                    "sqrt" => Expr::Sqrt,
                    _ => return Err(Error::UnknownIdentifier { name, column }),
                };
                self.expect(Tok::LParen, "`(`")?;
                let arg = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(ctor(Box::new(arg)))
            }
            _ => unreachable!("rejected above"),
        }
    }
}

/// Parses an expression in the variable `x`.
pub fn parse_expr(text: &str) -> Result<Expr> {
    parse_expr_in(text, "x")
}

/// Parses an expression whose free variable is spelled `var`.
pub fn parse_expr_in(text: &str, var: &str) -> Result<Expr> {
    if text.trim().is_empty() {
        return Err(Error::Syntax {
            column: 1,
            message: "empty expression".into(),
        });
    }
    let toks = Lexer::tokenize(text)?;
    let mut parser = Parser { toks, at: 0, var };
    let e = parser.expr()?;
    if *parser.peek() != Tok::End {
        return Err(parser.unexpected("an operator or end of input"));
    }
    Ok(e)
}
