use std::collections::{BTreeMap, HashMap};

use super::expr::{Expr, Func, Node};
use crate::error::EvalError;

/// Source of variable values.
pub trait Env {
    fn get(&self, name: &str) -> Option<f64>;
}

impl Env for HashMap<String, f64> {
    fn get(&self, name: &str) -> Option<f64> {
        HashMap::get(self, name).copied()
    }
}

impl Env for BTreeMap<String, f64> {
    fn get(&self, name: &str) -> Option<f64> {
        BTreeMap::get(self, name).copied()
    }
}

impl Env for [(&str, f64)] {
    fn get(&self, name: &str) -> Option<f64> {
        self.iter().find(|(n, _)| *n == name).map(|(_, v)| *v)
    }
}

impl<const N: usize> Env for [(&str, f64); N] {
    fn get(&self, name: &str) -> Option<f64> {
        Env::get(self.as_slice(), name)
    }
}

impl<E: Env + ?Sized> Env for &E {
    fn get(&self, name: &str) -> Option<f64> {
        (**self).get(name)
    }
}

/// `inner` with one variable moved by `delta`.
pub struct Shifted<'a, E: Env + ?Sized> {
    pub inner: &'a E,
    pub var: &'a str,
    pub delta: f64,
}

impl<E: Env + ?Sized> Env for Shifted<'_, E> {
    fn get(&self, name: &str) -> Option<f64> {
        let v = self.inner.get(name)?;
        Some(if name == self.var { v + self.delta } else { v })
    }
}

pub fn eval<E: Env + ?Sized>(e: &Expr, env: &E) -> Result<f64, EvalError> {
    Ok(match e.node() {
        Node::Const(c) => c.to_f64(),
        Node::Var(v) => env.get(v).ok_or_else(|| EvalError::Unbound(v.to_string()))?,
        Node::Add(xs) => {
            let mut s = 0.0;
            for x in xs {
                s += eval(x, env)?;
            }
            s
        }
        Node::Mul(xs) => {
            let mut s = 1.0;
            for x in xs {
                s *= eval(x, env)?;
            }
            s
        }
        Node::Pow(b, k) => {
            let x = eval(b, env)?;
            if *k < 0 && x == 0.0 {
                return Err(EvalError::Domain("division by zero".into()));
            }
            x.powi(*k as i32)
        }
        Node::Div(a, b) => {
            let d = eval(b, env)?;
            if d == 0.0 {
                return Err(EvalError::Domain("division by zero".into()));
            }
            eval(a, env)? / d
        }
        Node::Neg(a) => -eval(a, env)?,
        Node::Func(f, a) => {
            let x = eval(a, env)?;
            match f {
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Exp => x.exp(),
                Func::Log => {
                    if x <= 0.0 {
                        return Err(EvalError::Domain(format!("log of non-positive value {x}")));
                    }
                    x.ln()
                }
                Func::Sqrt => {
                    if x < 0.0 {
                        return Err(EvalError::Domain(format!("sqrt of negative value {x}")));
                    }
                    x.sqrt()
                }
            }
        }
    })
}
