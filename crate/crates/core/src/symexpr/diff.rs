use super::expr::{Expr, Func, Node};

/// Exact partial derivative with light folding; see [`super::simplify`] for
/// canonical output.
pub fn diff(e: &Expr, var: &str) -> Expr {
    if !e.depends_on(var) {
        return Expr::zero();
    }
    match e.node() {
        Node::Const(_) => Expr::zero(),
        Node::Var(v) => {
            if &**v == var {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Node::Add(xs) => Expr::sum(xs.iter().map(|x| diff(x, var))),
        Node::Mul(xs) => {
            let mut terms = Vec::new();
            for (i, x) in xs.iter().enumerate() {
                let dx = diff(x, var);
                if dx.is_zero() {
                    continue;
                }
                let mut fs: Vec<Expr> = xs.clone();
                fs[i] = dx;
                terms.push(Expr::product(fs));
            }
            Expr::sum(terms)
        }
        Node::Pow(b, k) => Expr::product([Expr::int(*k), b.powi(k - 1), diff(b, var)]),
        Node::Div(a, b) => {
            let da = diff(a, var);
            let db = diff(b, var);
            &da / b - Expr::product([a.clone(), db, b.powi(-2)])
        }
        Node::Neg(a) => -diff(a, var),
        Node::Func(f, a) => {
            let da = diff(a, var);
            let outer = match f {
                Func::Sin => a.cos(),
                Func::Cos => -a.sin(),
                Func::Exp => e.clone(),
                Func::Log => a.powi(-1),
                Func::Sqrt => Expr::ratio(1, 2) * e.powi(-1),
            };
            outer * da
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::{parse, simplify, VarSet};

    fn p(s: &str) -> Expr {
        parse(s, &VarSet::standard(2)).unwrap()
    }

    fn same(a: &Expr, b: &str) -> bool {
        simplify(&(a - p(b))).is_zero()
    }

    #[test]
    fn worked_examples() {
        assert!(same(&diff(&p("x1*v2"), "x1"), "v2"));
        assert!(same(&diff(&p("sin(x1)^2"), "x1"), "2*sin(x1)*cos(x1)"));
        let d3 = diff(&diff(&diff(&p("v1^3"), "v1"), "v1"), "v1");
        assert_eq!(simplify(&d3), Expr::int(6));
    }

    #[test]
    fn rules() {
        assert!(same(&diff(&p("x1/(1+x1)"), "x1"), "1/(1+x1) - x1/(1+x1)^2"));
        assert!(same(&diff(&p("exp(2*x1)"), "x1"), "2*exp(2*x1)"));
        assert!(same(&diff(&p("log(x1)"), "x1"), "1/x1"));
        assert!(same(&diff(&p("sqrt(x1)"), "x1"), "1/(2*sqrt(x1))"));
        assert!(same(&diff(&p("cos(x1*v1)"), "v1"), "-x1*sin(x1*v1)"));
        assert!(same(&diff(&p("x1^(-2)"), "x1"), "-2*x1^(-3)"));
        assert!(diff(&p("x2*v2"), "x1").is_zero());
    }
}
