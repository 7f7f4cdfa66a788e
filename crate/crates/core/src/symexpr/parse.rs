//! Pratt parser for the expression grammar.
//!
//! Binding powers, loosest first: `+ -`, `* /`, unary minus, `^`.
//! All binary operators associate to the left, so `a^b^c` is `(a^b)^c`.
//! Exponents must fold to an integer constant.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::expr::{Expr, Func, Rational};
use super::{simplify, VarSet};
use crate::error::ParseError;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(Rational),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || c == '.' {
            let (q, end) = lex_number(text, i)?;
            out.push((Tok::Num(q), start));
            i = end;
        } else if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(text[start..i].to_string()), start));
        } else {
            let tok = match c {
                '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ',' => Tok::Comma,
                _ => {
                    return Err(ParseError::Syntax {
                        position: start,
                        message: format!("unexpected character `{c}`"),
                    })
                }
            };
            out.push((tok, start));
            i += c.len_utf8();
        }
    }
    Ok(out)
}

/// Decimal literal to an exact rational.
fn lex_number(text: &str, start: usize) -> Result<(Rational, usize), ParseError> {
    let bytes = text.as_bytes();
    let mut i = start;
    let mut digits = String::new();
    let mut frac_len: i64 = 0;
    let mut seen_point = false;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_digit() {
            digits.push(c as char);
            if seen_point {
                frac_len += 1;
            }
        } else if c == b'.' && !seen_point {
            seen_point = true;
        } else {
            break;
        }
        i += 1;
    }
    if digits.is_empty() {
        return Err(ParseError::Syntax { position: start, message: "malformed number".into() });
    }
    let mut exp: i64 = 0;
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        let mut j = i + 1;
        let mut sign = 1;
        if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
            if bytes[j] == b'-' {
                sign = -1;
            }
            j += 1;
        }
        let ds = j;
        while j < bytes.len() && bytes[j].is_ascii_digit() {
            j += 1;
        }
        if ds == j {
            return Err(ParseError::Syntax { position: i, message: "malformed exponent".into() });
        }
        exp = sign
            * text[ds..j].parse::<i64>().map_err(|_| ParseError::Syntax {
                position: ds,
                message: "exponent out of range".into(),
            })?;
        i = j;
    }
    let mantissa: BigInt = digits.parse().expect("digits");
    let shift = exp - frac_len;
    if shift.abs() > 400 {
        return Err(ParseError::Syntax { position: start, message: "number out of range".into() });
    }
    let ten = BigInt::from(10);
    let q = if shift >= 0 {
        Rational::from_integer(mantissa * num_traits::pow(ten, shift as usize))
    } else {
        Rational::new(mantissa, num_traits::pow(ten, (-shift) as usize))
    };
    Ok((q, i))
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
    vars: &'a VarSet,
}

/// Parses `text` against the declared variables.
pub fn parse(text: &str, vars: &VarSet) -> Result<Expr, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, end: text.len(), vars };
    let e = p.expr(0)?;
    if let Some((_, at)) = p.toks.get(p.pos) {
        return Err(ParseError::Syntax { position: *at, message: "unexpected token".into() });
    }
    Ok(e)
}

const UNARY_BP: u8 = 5;

fn infix_bp(op: char) -> (u8, u8) {
    match op {
        '+' | '-' => (1, 2),
        '*' | '/' => (3, 4),
        '^' => (7, 8),
        _ => unreachable!(),
    }
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map(|(_, p)| *p).unwrap_or(self.end)
    }

    fn next(&mut self) -> Option<(Tok, usize)> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            Some(Tok::RParen) => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(ParseError::Syntax { position: self.here(), message: "expected `)`".into() }),
        }
    }

    fn expr(&mut self, min_bp: u8) -> Result<Expr, ParseError> {
        let mut lhs = self.prefix()?;
        while let Some(Tok::Op(c)) = self.peek() {
            let op = *c;
            let (lbp, rbp) = infix_bp(op);
            if lbp < min_bp {
                break;
            }
            self.pos += 1;
            let at = self.here();
            let rhs = self.expr(rbp)?;
            lhs = match op {
                '+' => lhs + rhs,
                '-' => lhs - rhs,
                '*' => lhs * rhs,
                '/' => lhs / rhs,
                '^' => lhs.powi(integer_exponent(&rhs, at)?),
                _ => unreachable!(),
            };
        }
        Ok(lhs)
    }

    fn prefix(&mut self) -> Result<Expr, ParseError> {
        let at = self.here();
        match self.next() {
            Some((Tok::Num(q), _)) => Ok(Expr::rational(q)),
            Some((Tok::Op('-'), _)) => Ok(-self.expr(UNARY_BP)?),
            Some((Tok::LParen, _)) => {
                let e = self.expr(0)?;
                self.expect_rparen()?;
                Ok(e)
            }
            Some((Tok::Ident(name), _)) => {
                if let Some(f) = Func::from_name(&name) {
                    if self.peek() != Some(&Tok::LParen) {
                        return Err(ParseError::Syntax {
                            position: self.here(),
                            message: format!("expected `(` after `{name}`"),
                        });
                    }
                    self.pos += 1;
                    let arg = self.expr(0)?;
                    self.expect_rparen()?;
                    Ok(Expr::apply(f, arg))
                } else if self.vars.contains(&name) {
                    Ok(Expr::var(&name))
                } else {
                    Err(ParseError::UnknownIdentifier { name, position: at })
                }
            }
            Some(_) => Err(ParseError::Syntax { position: at, message: "expected operand".into() }),
            None => Err(ParseError::Syntax {
                position: at,
                message: "unexpected end of input".into(),
            }),
        }
    }
}

fn integer_exponent(e: &Expr, at: usize) -> Result<i64, ParseError> {
    let s = if e.as_const().is_some() { e.clone() } else { simplify(e) };
    let bad = || ParseError::Syntax { position: at, message: "exponent must be an integer constant".into() };
    let q = s.as_const().ok_or_else(bad)?;
    if !q.denom().is_one() {
        return Err(bad());
    }
    let k: i64 = q.numer().try_into().map_err(|_| bad())?;
    if k.abs() > 64 && !q.is_zero() {
        return Err(ParseError::Syntax { position: at, message: "exponent too large".into() });
    }
    Ok(k)
}
