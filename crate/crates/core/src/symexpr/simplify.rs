//! Canonical form: Laurent polynomials with rational coefficients over atoms.
//!
//! An atom is a variable or an opaque subexpression (a function application
//! with simplified argument, or the reciprocal of a multi-term polynomial
//! normalised to leading coefficient one). Identically zero polynomials
//! therefore always collapse to the constant 0.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::{One, Signed, Zero};

use super::expr::{Expr, Func, Node, Rational};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Var(Arc<str>),
    Opaque(Expr),
}

impl Atom {
    fn to_expr(&self) -> Expr {
        match self {
            Atom::Var(v) => Expr::from_node(Node::Var(v.clone())),
            Atom::Opaque(e) => e.clone(),
        }
    }
}

/// Sorted list of (atom, nonzero exponent).
pub type Mono = Vec<(Atom, i32)>;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Poly {
    terms: BTreeMap<Mono, Rational>,
}

fn mono_mul(a: &Mono, b: &Mono) -> Mono {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => {
                out.push(a[i].clone());
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j].clone());
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                let k = a[i].1 + b[j].1;
                if k != 0 {
                    out.push((a[i].0.clone(), k));
                }
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

impl Poly {
    pub fn zero() -> Poly {
        Poly::default()
    }

    pub fn constant(c: Rational) -> Poly {
        let mut p = Poly::zero();
        if !c.is_zero() {
            p.terms.insert(Vec::new(), c);
        }
        p
    }

    pub fn atom(a: Atom, k: i32) -> Poly {
        let mut p = Poly::zero();
        p.terms.insert(vec![(a, k)], Rational::one());
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => self.terms.get(&Vec::new()).cloned(),
            _ => None,
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Mono, &Rational)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    fn add_term(&mut self, m: Mono, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let (mut big, small) =
            if self.len() >= other.len() { (self.clone(), other) } else { (other.clone(), self) };
        for (m, c) in &small.terms {
            big.add_term(m.clone(), c.clone());
        }
        big
    }

    pub fn add_assign(&mut self, other: Poly) {
        for (m, c) in other.terms {
            self.add_term(m, c);
        }
    }

    pub fn neg(&self) -> Poly {
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect() }
    }

    pub fn scale(&self, k: &Rational) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect() }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(mono_mul(ma, mb), ca * cb);
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> Poly {
        let mut out = Poly::constant(Rational::one());
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                out = out.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        out
    }

    /// Multiplicative inverse. Monomials invert exactly; longer polynomials
    /// become an opaque reciprocal atom.
    pub fn recip(&self) -> Option<Poly> {
        match self.terms.len() {
            0 => None,
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                let inv: Mono = m.iter().map(|(a, k)| (a.clone(), -k)).collect();
                let mut p = Poly::zero();
                p.terms.insert(inv, c.recip());
                Some(p)
            }
            _ => {
                let lead = self.terms.values().next().unwrap().clone();
                let monic = self.scale(&lead.recip());
                let atom = Atom::Opaque(monic.to_expr());
                Some(Poly::atom(atom, -1).scale(&lead.recip()))
            }
        }
    }

    /// Highest exponent of variable `name` over all terms; `None` if the
    /// variable sits inside an opaque atom or with a negative exponent.
    pub fn degree_in(&self, name: &str) -> Option<u32> {
        let mut deg = 0;
        for m in self.terms.keys() {
            for (a, k) in m {
                match a {
                    Atom::Var(v) if &**v == name => {
                        if *k < 0 {
                            return None;
                        }
                        deg = deg.max(*k as u32);
                    }
                    Atom::Opaque(e) if e.depends_on(name) => return None,
                    _ => {}
                }
            }
        }
        Some(deg)
    }

    pub fn to_expr(&self) -> Expr {
        let mut terms = Vec::with_capacity(self.terms.len());
        for (m, c) in &self.terms {
            let mut factors = Vec::with_capacity(m.len() + 1);
            let mag = c.abs();
            if !mag.is_one() || m.is_empty() {
                factors.push(Expr::rational(mag));
            }
            for (a, k) in m {
                let base = a.to_expr();
                factors.push(if *k == 1 { base } else { Expr::from_node(Node::Pow(base, *k as i64)) });
            }
            let body =
                if factors.len() == 1 { factors.pop().unwrap() } else { Expr::from_node(Node::Mul(factors)) };
            terms.push(if c.is_negative() {
                match body.node() {
                    Node::Const(k) => Expr::rational(-k.value().clone()),
                    _ => Expr::from_node(Node::Neg(body)),
                }
            } else {
                body
            });
        }
        match terms.len() {
            0 => Expr::zero(),
            1 => terms.pop().unwrap(),
            _ => Expr::from_node(Node::Add(terms)),
        }
    }
}

/// Converts to canonical polynomial form. Division by a polynomial that is
/// identically zero leaves the quotient opaque (it can never evaluate).
pub fn to_poly(e: &Expr) -> Poly {
    match e.node() {
        Node::Const(c) => Poly::constant(c.value().clone()),
        Node::Var(v) => Poly::atom(Atom::Var(v.clone()), 1),
        Node::Add(xs) => {
            let mut acc = Poly::zero();
            for x in xs {
                acc.add_assign(to_poly(x));
            }
            acc
        }
        Node::Mul(xs) => {
            let mut acc = Poly::constant(Rational::one());
            for x in xs {
                acc = acc.mul(&to_poly(x));
                if acc.is_zero() {
                    break;
                }
            }
            acc
        }
        Node::Neg(a) => to_poly(a).neg(),
        Node::Pow(b, k) => {
            if *k >= 0 {
                to_poly(b).pow(*k as u32)
            } else {
                match recip_of(b) {
                    Some(r) => r.pow((-k) as u32),
                    None => opaque_zero_division(e),
                }
            }
        }
        Node::Div(a, b) => {
            let pa = to_poly(a);
            if pa.is_zero() {
                return pa;
            }
            match recip_of(b) {
                Some(r) => pa.mul(&r),
                None => opaque_zero_division(e),
            }
        }
        Node::Func(f, a) => func_poly(*f, &to_poly(a)),
    }
}

/// Reciprocal that keeps factored denominators factored, so that
/// `1/(1+x)^2` and `(1+x)^(-2)` share the atom `(1+x)`.
fn recip_of(e: &Expr) -> Option<Poly> {
    match e.node() {
        Node::Pow(b, k) if *k > 0 => Some(recip_of(b)?.pow(*k as u32)),
        Node::Pow(b, k) => Some(to_poly(b).pow((-k) as u32)),
        Node::Mul(xs) => {
            let mut acc = Poly::constant(Rational::one());
            for x in xs {
                acc = acc.mul(&recip_of(x)?);
            }
            Some(acc)
        }
        Node::Neg(a) => Some(recip_of(a)?.neg()),
        Node::Div(a, b) => {
            let pb = to_poly(b);
            if pb.is_zero() {
                return None;
            }
            Some(pb.mul(&recip_of(a)?))
        }
        _ => to_poly(e).recip(),
    }
}

fn opaque_zero_division(e: &Expr) -> Poly {
    Poly::atom(Atom::Opaque(e.clone()), 1)
}

fn func_poly(f: Func, arg: &Poly) -> Poly {
    if let Some(c) = arg.as_constant() {
        if c.is_zero() {
            match f {
                Func::Sin | Func::Sqrt => return Poly::zero(),
                Func::Cos | Func::Exp => return Poly::constant(Rational::one()),
                Func::Log => {}
            }
        } else if c.is_one() {
            match f {
                Func::Log => return Poly::zero(),
                Func::Sqrt => return Poly::constant(Rational::one()),
                _ => {}
            }
        }
    }
    Poly::atom(Atom::Opaque(Expr::apply(f, arg.to_expr())), 1)
}

/// Canonical form of `e`; idempotent.
pub fn simplify(e: &Expr) -> Expr {
    to_poly(e).to_expr()
}

/// Exact zero test on the canonical form.
pub fn is_zero(e: &Expr) -> bool {
    to_poly(e).is_zero()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::{parse, VarSet};

    fn p(s: &str) -> Expr {
        let vs = VarSet::standard(3);
        parse(s, &vs).unwrap()
    }

    #[test]
    fn worked_examples() {
        assert_eq!(simplify(&p("x1 - x1")), Expr::zero());
        assert_eq!(simplify(&p("0*v1 + 2*3")), Expr::int(6));
        assert_eq!(simplify(&p("v1*x1 + x1*v1")), simplify(&p("2*x1*v1")));
    }

    #[test]
    fn zero_polynomials() {
        assert!(is_zero(&p("(x1+v1)^2 - x1^2 - 2*x1*v1 - v1^2")));
        assert!(is_zero(&p("(x1 - x2)*(x1 + x2) - x1^2 + x2^2")));
        assert!(is_zero(&p("x1/x1 - 1")));
        assert!(is_zero(&p("sin(x1+0)^2 - sin(x1)*sin(x1)")));
        assert!(is_zero(&p("1/(x1+1) - 2/(2*x1+2)")));
        assert!(is_zero(&p("cos(0) - exp(0)")));
        assert!(!is_zero(&p("x1 - x2")));
    }

    #[test]
    fn idempotent_and_ordered() {
        for s in ["x1^3*v2 - 2*x1 + 7/3", "sin(x1)^2*cos(x1)^(-1) + 1/(x1+v1)", "exp(x1*2)/3 - x1"] {
            let once = simplify(&p(s));
            assert_eq!(simplify(&once), once);
        }
    }

    #[test]
    fn degree() {
        let e = to_poly(&p("v1^3*x1 + v1*x2"));
        assert_eq!(e.degree_in("v1"), Some(3));
        assert_eq!(e.degree_in("v2"), Some(0));
        assert_eq!(to_poly(&p("sin(v1)")).degree_in("v1"), None);
    }
}
