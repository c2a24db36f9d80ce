//! Whitelisted analytic expressions in the spatial variables x and y, used
//! for load and coefficient fields in configuration files.
//!
//! Grammar: sums/differences of products of numbers, `x`, `y`, `pi`,
//! parenthesized subexpressions, powers `^1`/`^2`, and `sin(..)`/`cos(..)`.
//! The whitelist is enforced structurally: the polynomial degree of the
//! expression (trigonometric factors counting as degree 0) must not exceed 2,
//! and sin/cos arguments must be trig-free polynomials of degree at most 1.

use std::sync::Arc;

use crate::assembly::ScalarFn;
use crate::error::Error;
use crate::Result;

#[derive(Debug, Clone)]
enum Ast {
    Num(f64),
    X,
    Y,
    Add(Box<Ast>, Box<Ast>),
    Sub(Box<Ast>, Box<Ast>),
    Mul(Box<Ast>, Box<Ast>),
    Neg(Box<Ast>),
    Pow(Box<Ast>, u32),
    Sin(Box<Ast>),
    Cos(Box<Ast>),
}

impl Ast {
    fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            Ast::Num(v) => *v,
            Ast::X => x,
            Ast::Y => y,
            Ast::Add(a, b) => a.eval(x, y) + b.eval(x, y),
            Ast::Sub(a, b) => a.eval(x, y) - b.eval(x, y),
            Ast::Mul(a, b) => a.eval(x, y) * b.eval(x, y),
            Ast::Neg(a) => -a.eval(x, y),
            Ast::Pow(a, k) => a.eval(x, y).powi(*k as i32),
            Ast::Sin(a) => a.eval(x, y).sin(),
            Ast::Cos(a) => a.eval(x, y).cos(),
        }
    }

    /// Polynomial degree with trig factors counting as 0; errors on
    /// violations of the whitelist.
    fn degree(&self) -> Result<u32> {
        match self {
            Ast::Num(_) => Ok(0),
            Ast::X | Ast::Y => Ok(1),
            Ast::Add(a, b) | Ast::Sub(a, b) => Ok(a.degree()?.max(b.degree()?)),
            Ast::Mul(a, b) => Ok(a.degree()? + b.degree()?),
            Ast::Neg(a) => a.degree(),
            Ast::Pow(a, k) => {
                if *k == 0 || *k > 2 {
                    return Err(Error::Expression(format!(
                        "exponent {k} outside the whitelist (only ^1 and ^2)"
                    )));
                }
                Ok(a.degree()? * k)
            }
            Ast::Sin(a) | Ast::Cos(a) => {
                if a.contains_trig() {
                    return Err(Error::Expression(
                        "nested trigonometric functions are not whitelisted".into(),
                    ));
                }
                let d = a.degree()?;
                if d > 1 {
                    return Err(Error::Expression(format!(
                        "sin/cos argument must be linear, found degree {d}"
                    )));
                }
                Ok(0)
            }
        }
    }

    fn contains_trig(&self) -> bool {
        match self {
            Ast::Num(_) | Ast::X | Ast::Y => false,
            Ast::Add(a, b) | Ast::Sub(a, b) | Ast::Mul(a, b) => {
                a.contains_trig() || b.contains_trig()
            }
            Ast::Neg(a) | Ast::Pow(a, _) => a.contains_trig(),
            Ast::Sin(_) | Ast::Cos(_) => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
}

fn tokenize(s: &str) -> Result<Vec<Tok>> {
    let mut toks = Vec::new();
    let bytes = s.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' => i += 1,
            '+' => {
                toks.push(Tok::Plus);
                i += 1;
            }
            '-' => {
                toks.push(Tok::Minus);
                i += 1;
            }
            '*' => {
                toks.push(Tok::Star);
                i += 1;
            }
            '^' => {
                toks.push(Tok::Caret);
                i += 1;
            }
            '(' => {
                toks.push(Tok::LParen);
                i += 1;
            }
            ')' => {
                toks.push(Tok::RParen);
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() {
                    let d = bytes[i] as char;
                    if d.is_ascii_digit() || d == '.' {
                        i += 1;
                    } else if (d == 'e' || d == 'E')
                        && i + 1 < bytes.len()
                        && ((bytes[i + 1] as char).is_ascii_digit()
                            || bytes[i + 1] == b'+'
                            || bytes[i + 1] == b'-')
                    {
                        i += 2;
                        while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                            i += 1;
                        }
                        break;
                    } else {
                        break;
                    }
                }
                let text = &s[start..i];
                let v: f64 = text
                    .parse()
                    .map_err(|_| Error::Expression(format!("bad number '{text}'")))?;
                toks.push(Tok::Num(v));
            }
            'a'..='z' | 'A'..='Z' => {
                let start = i;
                while i < bytes.len() && (bytes[i] as char).is_ascii_alphanumeric() {
                    i += 1;
                }
                toks.push(Tok::Ident(s[start..i].to_ascii_lowercase()));
            }
            other => {
                return Err(Error::Expression(format!(
                    "unexpected character '{other}' in expression '{s}'"
                )))
            }
        }
    }
    Ok(toks)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, t: Tok) -> Result<()> {
        match self.next() {
            Some(ref got) if *got == t => Ok(()),
            got => Err(Error::Expression(format!("expected {t:?}, found {got:?}"))),
        }
    }

    fn expr(&mut self) -> Result<Ast> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.next();
                    lhs = Ast::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Tok::Minus) => {
                    self.next();
                    lhs = Ast::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Ast> {
        let mut lhs = self.factor()?;
        while matches!(self.peek(), Some(Tok::Star)) {
            self.next();
            lhs = Ast::Mul(Box::new(lhs), Box::new(self.factor()?));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Ast> {
        let base = self.base()?;
        if matches!(self.peek(), Some(Tok::Caret)) {
            self.next();
            match self.next() {
                Some(Tok::Num(v)) if v.fract() == 0.0 && v >= 0.0 && v <= u32::MAX as f64 => {
                    Ok(Ast::Pow(Box::new(base), v as u32))
                }
                got => Err(Error::Expression(format!(
                    "exponent must be a small integer, found {got:?}"
                ))),
            }
        } else {
            Ok(base)
        }
    }

    fn base(&mut self) -> Result<Ast> {
        match self.next() {
            Some(Tok::Num(v)) => Ok(Ast::Num(v)),
            Some(Tok::Minus) => Ok(Ast::Neg(Box::new(self.factor()?))),
            Some(Tok::LParen) => {
                let inner = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Some(Tok::Ident(name)) => match name.as_str() {
                "x" => Ok(Ast::X),
                "y" => Ok(Ast::Y),
                "pi" => Ok(Ast::Num(std::f64::consts::PI)),
                "sin" | "cos" => {
                    self.expect(Tok::LParen)?;
                    let arg = self.expr()?;
                    self.expect(Tok::RParen)?;
                    Ok(if name == "sin" {
                        Ast::Sin(Box::new(arg))
                    } else {
                        Ast::Cos(Box::new(arg))
                    })
                }
                other => Err(Error::Expression(format!(
                    "identifier '{other}' is not whitelisted (allowed: x, y, pi, sin, cos)"
                ))),
            },
            got => Err(Error::Expression(format!("unexpected token {got:?}"))),
        }
    }
}

/// A parsed, validated expression.
#[derive(Debug, Clone)]
pub struct Expression {
    ast: Arc<Ast>,
    text: String,
}

impl Expression {
    pub fn parse(text: &str) -> Result<Self> {
        let toks = tokenize(text)?;
        if toks.is_empty() {
            return Err(Error::Expression("empty expression".into()));
        }
        let mut p = Parser { toks, pos: 0 };
        let ast = p.expr()?;
        if p.pos != p.toks.len() {
            return Err(Error::Expression(format!(
                "trailing tokens in expression '{text}'"
            )));
        }
        let deg = ast.degree()?;
        if deg > 2 {
            return Err(Error::Expression(format!(
                "polynomial degree {deg} exceeds the whitelist limit 2 in '{text}'"
            )));
        }
        Ok(Expression {
            ast: Arc::new(ast),
            text: text.to_string(),
        })
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.ast.eval(x, y)
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    /// Wraps the expression as a shareable scalar field.
    pub fn into_fn(self) -> ScalarFn {
        let ast = self.ast;
        Arc::new(move |x, y| ast.eval(x, y))
    }
}
