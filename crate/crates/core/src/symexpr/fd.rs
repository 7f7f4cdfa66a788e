use super::eval::{eval, Env, Shifted};
use super::expr::Expr;
use crate::error::EvalError;

/// Central difference with one Richardson step: `(4 D(h/2) - D(h)) / 3`.
pub fn fd_diff<E: Env + ?Sized>(e: &Expr, var: &str, p: &E, h: f64) -> Result<f64, EvalError> {
    let central = |h: f64| -> Result<f64, EvalError> {
        let plus = eval(e, &Shifted { inner: p, var, delta: h })?;
        let minus = eval(e, &Shifted { inner: p, var, delta: -h })?;
        Ok((plus - minus) / (2.0 * h))
    };
    let d1 = central(h)?;
    let d2 = central(h / 2.0)?;
    Ok((4.0 * d2 - d1) / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::{parse, VarSet};

    #[test]
    fn known_derivatives() {
        let vs = VarSet::standard(1);
        let at = |x: f64| [("t", 0.0), ("x1", x), ("v1", 0.0)];
        let d = fd_diff(&parse("sin(x1)", &vs).unwrap(), "x1", &at(0.0), 1e-4).unwrap();
        assert!((d - 1.0).abs() < 1e-8);
        let d = fd_diff(&parse("x1^2", &vs).unwrap(), "x1", &at(3.0), 1e-4).unwrap();
        assert!((d - 6.0).abs() < 1e-8);
        assert!(fd_diff(&parse("log(x1)", &vs).unwrap(), "x1", &at(0.0), 1e-4).is_err());
    }
}
