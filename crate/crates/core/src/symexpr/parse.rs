//! Recursive-descent parser for the infix expression grammar.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := ('-' | '+') unary | power
//! power   := primary ('^' unary)?        exponent must fold to an integer
//! primary := INT | IDENT | IDENT '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! Functions: `sin cos sinh cosh` (one argument), `Sk Ck Tk` (argument, curvature).

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use thiserror::Error;

use super::{Expr, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown function `{name}` at byte {pos}")]
    UnknownFunction { pos: usize, name: String },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    Op(char),
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'.' || bytes[i] == b'e' || bytes[i] == b'E') {
                return Err(ParseError::Syntax {
                    pos: i,
                    msg: "only integer and rational literals are supported".into(),
                });
            }
            let n: BigInt = text[start..i].parse().expect("digits");
            out.push((start, Tok::Int(n)));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(text[start..i].to_string())));
        } else if "+-*/^(),".contains(c) {
            out.push((i, Tok::Op(c)));
            i += 1;
        } else {
            return Err(ParseError::Syntax {
                pos: i,
                msg: format!("unexpected character `{c}`"),
            });
        }
    }
    Ok(out)
}

/// Parser configuration: which identifiers denote parameters rather than variables.
#[derive(Debug, Clone, Default)]
pub struct Parser {
    params: BTreeSet<String>,
}

/// Parses `text` treating every identifier as a variable.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    Parser::new().parse(text)
}

impl Parser {
    pub fn new() -> Self {
        Parser::default()
    }

    pub fn with_params<I, S>(params: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Parser {
            params: params.into_iter().map(Into::into).collect(),
        }
    }

    pub fn parse(&self, text: &str) -> Result<Expr, ParseError> {
        let toks = lex(text)?;
        let mut st = State {
            toks,
            pos: 0,
            end: text.len(),
            params: &self.params,
        };
        let e = st.expr()?;
        if st.pos < st.toks.len() {
            return Err(st.error("unexpected trailing input"));
        }
        Ok(e)
    }
}

struct State<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    params: &'a BTreeSet<String>,
}

impl State<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(p, _)| *p)
    }

    fn error(&self, msg: &str) -> ParseError {
        ParseError::Syntax {
            pos: self.here(),
            msg: msg.into(),
        }
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek() == Some(&Tok::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, op: char) -> Result<(), ParseError> {
        if self.eat(op) {
            Ok(())
        } else {
            Err(self.error(&format!("expected `{op}`")))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut terms = vec![self.term()?];
        loop {
            if self.eat('+') {
                terms.push(self.term()?);
            } else if self.eat('-') {
                terms.push(-self.term()?);
            } else {
                break;
            }
        }
        Ok(Expr::sum(terms))
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.unary()?;
        loop {
            if self.eat('*') {
                acc = acc * self.unary()?;
            } else if self.eat('/') {
                acc = acc / self.unary()?;
            } else {
                break;
            }
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat('-') {
            return Ok(-self.unary()?);
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let at = self.here();
        let exponent = self.unary()?;
        let k = exponent
            .as_const()
            .filter(|c| c.is_integer())
            .and_then(|c| c.to_integer().to_i64())
            .ok_or(ParseError::Syntax {
                pos: at,
                msg: "exponent must be an integer".into(),
            })?;
        Ok(Expr::pow(base, k))
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let at = self.here();
        match self.peek().cloned() {
            Some(Tok::Int(n)) => {
                self.pos += 1;
                Ok(Expr::constant(Rational::from_integer(n)))
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if self.eat('(') {
                    let mut args = vec![self.expr()?];
                    while self.eat(',') {
                        args.push(self.expr()?);
                    }
                    self.expect(')')?;
                    return self.call(at, &name, args);
                }
                if self.params.contains(&name) {
                    Ok(Expr::param(name))
                } else {
                    Ok(Expr::var(name))
                }
            }
            _ => Err(self.error("expected a number, identifier or `(`")),
        }
    }

    fn call(&self, at: usize, name: &str, mut args: Vec<Expr>) -> Result<Expr, ParseError> {
        let arity = match name {
            "sin" | "cos" | "sinh" | "cosh" => 1,
            "Sk" | "Ck" | "Tk" => 2,
            _ => {
                return Err(ParseError::UnknownFunction {
                    pos: at,
                    name: name.into(),
                })
            }
        };
        if args.len() != arity {
            return Err(ParseError::Syntax {
                pos: at,
                msg: format!("`{name}` takes {arity} argument(s), got {}", args.len()),
            });
        }
        let first = args.remove(0);
        Ok(match name {
            "sin" => Expr::sin(first),
            "cos" => Expr::cos(first),
            "sinh" => Expr::sinh(first),
            "cosh" => Expr::cosh(first),
            "Sk" => Expr::tag_s(first, args.remove(0)),
            "Ck" => Expr::tag_c(first, args.remove(0)),
            _ => Expr::tag_t(first, args.remove(0)),
        })
    }
}
