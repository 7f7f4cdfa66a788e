use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops;
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

/// Exact rational constant with its `f64` image cached for evaluation.
#[derive(Clone, Debug)]
pub struct Num {
    q: Rational,
    f: f64,
}

impl Num {
    pub fn new(q: Rational) -> Num {
        let f = q.to_f64().unwrap_or(f64::NAN);
        Num { q, f }
    }

    pub fn value(&self) -> &Rational {
        &self.q
    }

    pub fn to_f64(&self) -> f64 {
        self.f
    }
}

impl PartialEq for Num {
    fn eq(&self, other: &Num) -> bool {
        self.q == other.q
    }
}

impl Eq for Num {}

impl PartialOrd for Num {
    fn partial_cmp(&self, other: &Num) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Num {
    fn cmp(&self, other: &Num) -> Ordering {
        self.q.cmp(&other.q)
    }
}

impl Hash for Num {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.q.hash(state)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Const(Num),
    Var(Arc<str>),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Pow(Expr, i64),
    Div(Expr, Expr),
    Func(Func, Expr),
    Neg(Expr),
}

/// Immutable symbolic expression. Cloning is cheap.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Expr(Arc<Node>);

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

impl Expr {
    pub fn from_node(node: Node) -> Expr {
        Expr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn rational(q: Rational) -> Expr {
        Expr::from_node(Node::Const(Num::new(q)))
    }

    pub fn int(i: i64) -> Expr {
        Expr::rational(Rational::from_integer(i.into()))
    }

    pub fn ratio(n: i64, d: i64) -> Expr {
        Expr::rational(Rational::new(n.into(), d.into()))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn var(name: &str) -> Expr {
        Expr::from_node(Node::Var(Arc::from(name)))
    }

    pub fn as_const(&self) -> Option<&Rational> {
        match self.node() {
            Node::Const(c) => Some(c.value()),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const().is_some_and(|c| c.is_zero())
    }

    pub fn is_one(&self) -> bool {
        self.as_const().is_some_and(|c| c.is_one())
    }

    /// Sum with constant folding and flattening of nested sums.
    pub fn sum<I: IntoIterator<Item = Expr>>(terms: I) -> Expr {
        let mut out = Vec::new();
        let mut c = Rational::zero();
        for t in terms {
            match t.node() {
                Node::Const(k) => c += k.value(),
                Node::Add(inner) => {
                    for s in inner {
                        match s.as_const() {
                            Some(k) => c += k,
                            None => out.push(s.clone()),
                        }
                    }
                }
                _ => out.push(t),
            }
        }
        if !c.is_zero() {
            out.push(Expr::rational(c));
        }
        match out.len() {
            0 => Expr::zero(),
            1 => out.pop().unwrap(),
            _ => Expr::from_node(Node::Add(out)),
        }
    }

    /// Product with constant folding; any zero factor gives zero.
    pub fn product<I: IntoIterator<Item = Expr>>(factors: I) -> Expr {
        let mut out = Vec::new();
        let mut c = Rational::one();
        for f in factors {
            match f.node() {
                Node::Const(k) => c *= k.value(),
                Node::Mul(inner) => {
                    for s in inner {
                        match s.as_const() {
                            Some(k) => c *= k,
                            None => out.push(s.clone()),
                        }
                    }
                }
                Node::Neg(inner) => {
                    c = -c;
                    match inner.as_const() {
                        Some(k) => c *= k,
                        None => out.push(inner.clone()),
                    }
                }
                _ => out.push(f),
            }
            if c.is_zero() {
                return Expr::zero();
            }
        }
        if out.is_empty() {
            return Expr::rational(c);
        }
        let neg = c.is_negative();
        let mag = c.abs();
        if !mag.is_one() {
            out.insert(0, Expr::rational(mag));
        }
        let body = if out.len() == 1 {
            out.pop().unwrap()
        } else {
            Expr::from_node(Node::Mul(out))
        };
        if neg {
            Expr::from_node(Node::Neg(body))
        } else {
            body
        }
    }

    pub fn powi(&self, k: i64) -> Expr {
        if k == 0 {
            return Expr::one();
        }
        if k == 1 {
            return self.clone();
        }
        if let Some(c) = self.as_const() {
            if !(c.is_zero() && k < 0) {
                let r = if k > 0 {
                    num_traits::pow(c.clone(), k as usize)
                } else {
                    num_traits::pow(c.recip(), (-k) as usize)
                };
                return Expr::rational(r);
            }
        }
        Expr::from_node(Node::Pow(self.clone(), k))
    }

    pub fn apply(f: Func, arg: Expr) -> Expr {
        Expr::from_node(Node::Func(f, arg))
    }

    pub fn sin(&self) -> Expr {
        Expr::apply(Func::Sin, self.clone())
    }

    pub fn cos(&self) -> Expr {
        Expr::apply(Func::Cos, self.clone())
    }

    pub fn exp(&self) -> Expr {
        Expr::apply(Func::Exp, self.clone())
    }

    pub fn ln(&self) -> Expr {
        Expr::apply(Func::Log, self.clone())
    }

    pub fn sqrt(&self) -> Expr {
        Expr::apply(Func::Sqrt, self.clone())
    }

    /// Names of all variables occurring in the tree, sorted.
    pub fn variables(&self) -> Vec<Arc<str>> {
        let mut out = std::collections::BTreeSet::new();
        self.collect_vars(&mut out);
        out.into_iter().collect()
    }

    fn collect_vars(&self, out: &mut std::collections::BTreeSet<Arc<str>>) {
        match self.node() {
            Node::Const(_) => {}
            Node::Var(v) => {
                out.insert(v.clone());
            }
            Node::Add(xs) | Node::Mul(xs) => xs.iter().for_each(|x| x.collect_vars(out)),
            Node::Pow(b, _) => b.collect_vars(out),
            Node::Div(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Node::Func(_, a) | Node::Neg(a) => a.collect_vars(out),
        }
    }

    pub fn depends_on(&self, name: &str) -> bool {
        match self.node() {
            Node::Const(_) => false,
            Node::Var(v) => &**v == name,
            Node::Add(xs) | Node::Mul(xs) => xs.iter().any(|x| x.depends_on(name)),
            Node::Pow(b, _) => b.depends_on(name),
            Node::Div(a, b) => a.depends_on(name) || b.depends_on(name),
            Node::Func(_, a) | Node::Neg(a) => a.depends_on(name),
        }
    }

    /// True when the tree uses no functions and no division by a non-constant.
    pub fn is_polynomial(&self) -> bool {
        match self.node() {
            Node::Const(_) | Node::Var(_) => true,
            Node::Add(xs) | Node::Mul(xs) => xs.iter().all(Expr::is_polynomial),
            Node::Pow(b, k) => *k >= 0 && b.is_polynomial(),
            Node::Div(a, b) => a.is_polynomial() && b.as_const().is_some_and(|c| !c.is_zero()),
            Node::Func(..) => false,
            Node::Neg(a) => a.is_polynomial(),
        }
    }

    /// Replaces every occurrence of variable `name` by `value`.
    pub fn subs(&self, name: &str, value: &Expr) -> Expr {
        if !self.depends_on(name) {
            return self.clone();
        }
        match self.node() {
            Node::Const(_) => self.clone(),
            Node::Var(v) => {
                if &**v == name {
                    value.clone()
                } else {
                    self.clone()
                }
            }
            Node::Add(xs) => Expr::sum(xs.iter().map(|x| x.subs(name, value))),
            Node::Mul(xs) => Expr::product(xs.iter().map(|x| x.subs(name, value))),
            Node::Pow(b, k) => b.subs(name, value).powi(*k),
            Node::Div(a, b) => a.subs(name, value) / b.subs(name, value),
            Node::Func(f, a) => Expr::apply(*f, a.subs(name, value)),
            Node::Neg(a) => -a.subs(name, value),
        }
    }

    /// Simultaneous substitution of several variables.
    pub fn subs_all(&self, map: &[(&str, Expr)]) -> Expr {
        if map.iter().all(|(n, _)| !self.depends_on(n)) {
            return self.clone();
        }
        match self.node() {
            Node::Const(_) => self.clone(),
            Node::Var(v) => map
                .iter()
                .find(|(n, _)| *n == &**v)
                .map(|(_, e)| e.clone())
                .unwrap_or_else(|| self.clone()),
            Node::Add(xs) => Expr::sum(xs.iter().map(|x| x.subs_all(map))),
            Node::Mul(xs) => Expr::product(xs.iter().map(|x| x.subs_all(map))),
            Node::Pow(b, k) => b.subs_all(map).powi(*k),
            Node::Div(a, b) => a.subs_all(map) / b.subs_all(map),
            Node::Func(f, a) => Expr::apply(*f, a.subs_all(map)),
            Node::Neg(a) => -a.subs_all(map),
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self.node() {
            Node::Const(_) | Node::Var(_) => 1,
            Node::Add(xs) | Node::Mul(xs) => 1 + xs.iter().map(Expr::size).sum::<usize>(),
            Node::Pow(b, _) => 1 + b.size(),
            Node::Div(a, b) => 1 + a.size() + b.size(),
            Node::Func(_, a) | Node::Neg(a) => 1 + a.size(),
        }
    }
}

impl From<i64> for Expr {
    fn from(i: i64) -> Expr {
        Expr::int(i)
    }
}

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -&self
    }
}

impl ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        match self.node() {
            Node::Const(c) => Expr::rational(-c.value().clone()),
            Node::Neg(a) => a.clone(),
            _ => Expr::from_node(Node::Neg(self.clone())),
        }
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl ops::$tr<&Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                let f: fn(&Expr, &Expr) -> Expr = $body;
                f(self, rhs)
            }
        }
        impl ops::$tr<Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                ops::$tr::$m(&self, &rhs)
            }
        }
        impl ops::$tr<&Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                ops::$tr::$m(&self, rhs)
            }
        }
        impl ops::$tr<Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                ops::$tr::$m(self, &rhs)
            }
        }
    };
}

binop!(Add, add, |a, b| Expr::sum([a.clone(), b.clone()]));
binop!(Sub, sub, |a, b| Expr::sum([a.clone(), -b]));
binop!(Mul, mul, |a, b| Expr::product([a.clone(), b.clone()]));
binop!(Div, div, |a, b| {
    if a.is_zero() {
        return Expr::zero();
    }
    match b.as_const() {
        Some(c) if c.is_one() => a.clone(),
        Some(c) if !c.is_zero() => Expr::product([Expr::rational(c.recip()), a.clone()]),
        _ => Expr::from_node(Node::Div(a.clone(), b.clone())),
    }
});

impl std::iter::Sum for Expr {
    fn sum<I: Iterator<Item = Expr>>(iter: I) -> Expr {
        Expr::sum(iter)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folding() {
        let x = Expr::var("x1");
        assert!((&x * Expr::zero()).is_zero());
        assert_eq!(&x * Expr::one(), x);
        assert_eq!(&x + Expr::zero(), x);
        assert_eq!(Expr::int(2) * Expr::int(3), Expr::int(6));
        assert_eq!(-(-&x), x);
        assert_eq!(x.powi(1), x);
        assert!(x.powi(0).is_one());
    }

    #[test]
    fn substitution() {
        let x = Expr::var("x1");
        let e = &x * &x + Expr::var("v1");
        let s = e.subs("x1", &Expr::int(3));
        assert_eq!(s.variables().len(), 1);
        assert!(!s.depends_on("x1"));
    }
}
