//! Display in the parser's grammar: printing then parsing gives the same value.

use std::fmt;

use num_traits::{One, Signed};

use super::expr::{Expr, Node};

const ADD: u8 = 1;
const MUL: u8 = 2;
const NEG: u8 = 3;
const POW: u8 = 4;
const ATOM: u8 = 5;

fn prec(e: &Expr) -> u8 {
    match e.node() {
        Node::Const(c) => {
            let q = c.value();
            if q.is_negative() {
                NEG
            } else if !q.denom().is_one() {
                MUL
            } else {
                ATOM
            }
        }
        Node::Var(_) | Node::Func(..) => ATOM,
        Node::Add(_) => ADD,
        Node::Mul(_) | Node::Div(..) => MUL,
        Node::Neg(_) => NEG,
        Node::Pow(..) => POW,
    }
}

fn write_at(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
    if prec(e) < min {
        write!(f, "(")?;
        write_expr(f, e)?;
        write!(f, ")")
    } else {
        write_expr(f, e)
    }
}

fn write_expr(f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
    match e.node() {
        Node::Const(c) => {
            let q = c.value();
            if q.denom().is_one() {
                write!(f, "{}", q.numer())
            } else {
                write!(f, "{}/{}", q.numer(), q.denom())
            }
        }
        Node::Var(v) => write!(f, "{v}"),
        Node::Add(xs) => {
            for (i, x) in xs.iter().enumerate() {
                match x.node() {
                    Node::Neg(inner) if i > 0 => {
                        write!(f, " - ")?;
                        write_at(f, inner, MUL)?;
                    }
                    Node::Const(c) if i > 0 && c.value().is_negative() => {
                        write!(f, " - ")?;
                        write_expr(f, &Expr::rational(-c.value().clone()))?;
                    }
                    _ => {
                        if i > 0 {
                            write!(f, " + ")?;
                        }
                        write_at(f, x, ADD + 1)?;
                    }
                }
            }
            Ok(())
        }
        Node::Mul(xs) => {
            for (i, x) in xs.iter().enumerate() {
                if i > 0 {
                    write!(f, "*")?;
                }
                write_at(f, x, if i == 0 { MUL } else { NEG + 1 })?;
            }
            Ok(())
        }
        Node::Div(a, b) => {
            write_at(f, a, MUL)?;
            write!(f, "/")?;
            write_at(f, b, NEG + 1)
        }
        Node::Neg(a) => {
            write!(f, "-")?;
            write_at(f, a, MUL)
        }
        Node::Pow(b, k) => {
            write_at(f, b, ATOM)?;
            if *k < 0 {
                write!(f, "^({k})")
            } else {
                write!(f, "^{k}")
            }
        }
        Node::Func(func, a) => {
            write!(f, "{}(", func.name())?;
            write_expr(f, a)?;
            write!(f, ")")
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self)
    }
}

#[cfg(test)]
mod tests {
    use crate::symexpr::{parse, simplify, VarSet};

    #[test]
    fn readable() {
        let vs = VarSet::standard(2);
        let e = simplify(&parse("x1^2 - 3*x1*v1 + 1/2", &vs).unwrap());
        let s = e.to_string();
        assert_eq!(s, "1/2 - 3*v1*x1 + x1^2");
        assert_eq!(simplify(&parse(&s, &vs).unwrap()), e);
        assert_eq!(parse("-(x1+v1)*2", &vs).unwrap().to_string(), "-2*(x1 + v1)");
        assert_eq!(parse("x1^(-2)", &vs).unwrap().to_string(), "x1^(-2)");
        assert_eq!(parse("(-x1)^3", &vs).unwrap().to_string(), "(-x1)^3");
    }
}
