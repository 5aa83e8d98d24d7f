use num_complex::Complex64;
use thiserror::Error;

use super::{Dims, MetricExpr, Var};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax(String),
    UnknownIdentifier(String),
    VariableOutOfRange(String),
    Arity {
        func: String,
        expected: usize,
        found: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{} at byte {offset}", describe(.kind))]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub offset: usize,
}

fn describe(kind: &ParseErrorKind) -> String {
    match kind {
        ParseErrorKind::Syntax(msg) => format!("syntax error: {msg}"),
        ParseErrorKind::UnknownIdentifier(name) => format!("unknown identifier `{name}`"),
        ParseErrorKind::VariableOutOfRange(name) => {
            format!("variable `{name}` exceeds the declared dimensions")
        }
        ParseErrorKind::Arity {
            func,
            expected,
            found,
        } => {
            format!("`{func}` takes {expected} argument(s), found {found}")
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Imag(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    End,
}

fn syntax(offset: usize, msg: impl Into<String>) -> ParseError {
    ParseError {
        kind: ParseErrorKind::Syntax(msg.into()),
        offset,
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let ident_char = |b: u8| b.is_ascii_alphanumeric() || b == b'_';
    while i < bytes.len() {
        let b = bytes[i];
        let start = i;
        let tok = match b {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b',' => Tok::Comma,
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let value: f64 = text[start..i].parse().map_err(|_| {
                    syntax(start, format!("malformed number `{}`", &text[start..i]))
                })?;
                let imaginary = i < bytes.len()
                    && bytes[i] == b'i'
                    && !(i + 1 < bytes.len() && ident_char(bytes[i + 1]));
                if imaginary {
                    i += 1;
                    out.push((Tok::Imag(value), start));
                } else {
                    out.push((Tok::Num(value), start));
                }
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && ident_char(bytes[i]) {
                    i += 1;
                }
                out.push((Tok::Ident(text[start..i].to_string()), start));
                continue;
            }
            _ => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(syntax(i, format!("unexpected character `{ch}`")));
            }
        };
        out.push((tok, start));
        i += 1;
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    dims: Dims,
    params: &'a [&'a str],
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(what))
        }
    }

    fn unexpected(&self, what: &str) -> ParseError {
        match self.peek() {
            Tok::End => syntax(
                self.offset(),
                format!("unexpected end of input, expected {what}"),
            ),
            t => syntax(self.offset(), format!("unexpected {t:?}, expected {what}")),
        }
    }

    fn expr(&mut self) -> Result<MetricExpr, ParseError> {
        let mut terms = vec![self.term()?];
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    terms.push(self.term()?);
                }
                Tok::Minus => {
                    self.bump();
                    terms.push(self.term()?.neg());
                }
                _ => break,
            }
        }
        Ok(MetricExpr::sum(terms))
    }

    fn term(&mut self) -> Result<MetricExpr, ParseError> {
        let mut factors = vec![self.unary()?];
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    factors.push(self.unary()?);
                }
                Tok::Slash => {
                    self.bump();
                    factors.push(MetricExpr::pow(self.unary()?, -1));
                }
                _ => break,
            }
        }
        Ok(MetricExpr::product(factors))
    }

    fn unary(&mut self) -> Result<MetricExpr, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(self.unary()?.neg());
        }
        self.factor()
    }

    fn factor(&mut self) -> Result<MetricExpr, ParseError> {
        let base = self.base()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let negative = if *self.peek() == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        let at = self.offset();
        match self.bump().0 {
            Tok::Num(x) if x.fract() == 0.0 && x.abs() <= f64::from(i32::MAX) => {
                let k = x as i32;
                Ok(MetricExpr::pow(base, if negative { -k } else { k }))
            }
            _ => Err(syntax(at, "expected an integer exponent")),
        }
    }

    fn base(&mut self) -> Result<MetricExpr, ParseError> {
        let at = self.offset();
        match self.peek().clone() {
            Tok::Num(x) => {
                self.bump();
                Ok(MetricExpr::real(x))
            }
            Tok::Imag(x) => {
                self.bump();
                Ok(MetricExpr::constant(Complex64::new(0.0, x)))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                if name == "exp" || name == "log" {
                    return self.call(&name, at);
                }
                if *self.peek() == Tok::LParen {
                    return Err(ParseError {
                        kind: ParseErrorKind::UnknownIdentifier(name),
                        offset: at,
                    });
                }
                self.identifier(name, at)
            }
            _ => Err(self.unexpected("a number, identifier or `(`")),
        }
    }

    fn call(&mut self, name: &str, at: usize) -> Result<MetricExpr, ParseError> {
        self.expect(Tok::LParen, "`(` after function name")?;
        let mut args = Vec::new();
        if *self.peek() != Tok::RParen {
            args.push(self.expr()?);
            while *self.peek() == Tok::Comma {
                self.bump();
                args.push(self.expr()?);
            }
        }
        self.expect(Tok::RParen, "`)`")?;
        if args.len() != 1 {
            return Err(ParseError {
                kind: ParseErrorKind::Arity {
                    func: name.to_string(),
                    expected: 1,
                    found: args.len(),
                },
                offset: at,
            });
        }
        let arg = args.pop().unwrap();
        Ok(if name == "exp" {
            MetricExpr::exp(arg)
        } else {
            MetricExpr::log(arg)
        })
    }

    fn identifier(&self, name: String, at: usize) -> Result<MetricExpr, ParseError> {
        if name == "i" {
            return Ok(MetricExpr::constant(Complex64::new(0.0, 1.0)));
        }
        if let Some(v) = coordinate(&name) {
            if !self.dims.contains(v) {
                return Err(ParseError {
                    kind: ParseErrorKind::VariableOutOfRange(name),
                    offset: at,
                });
            }
            return Ok(MetricExpr::var(v));
        }
        if self.params.contains(&name.as_str()) {
            return Ok(MetricExpr::param(&name));
        }
        Err(ParseError {
            kind: ParseErrorKind::UnknownIdentifier(name),
            offset: at,
        })
    }
}

fn coordinate(name: &str) -> Option<Var> {
    let split = name.find(|c: char| c.is_ascii_digit())?;
    let (stem, digits) = name.split_at(split);
    if digits.starts_with('0') || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let index: usize = digits.parse().ok()?;
    match stem {
        "t" => Some(Var::t(index)),
        "tb" => Some(Var::tb(index)),
        "z" => Some(Var::z(index)),
        "zb" => Some(Var::zb(index)),
        _ => None,
    }
}

pub(super) fn parse(text: &str, dims: Dims, params: &[&str]) -> Result<MetricExpr, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        dims,
        params,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.unexpected("an operator or end of input"));
    }
    Ok(e)
}
