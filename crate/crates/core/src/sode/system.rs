use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::symexpr::{d, parse, Env, Expr, Rational, Role, VarSet};

/// `ẍ^i = F^i(t, x, ẋ)` on an n-dimensional configuration space.
#[derive(Clone, Debug)]
pub struct SodeSystem {
    vars: VarSet,
    t: Arc<str>,
    x: Vec<Arc<str>>,
    v: Vec<Arc<str>>,
    f: Vec<Expr>,
    derivs: Arc<OnceLock<Derivs>>,
}

/// Partial derivatives of F used throughout, all in canonical form.
///
/// Index order follows the derivative order: `fxv[i][a][b]` is
/// `∂²F^i/∂x^a∂v^b`.
#[derive(Clone, Debug)]
pub struct Derivs {
    pub ft: Vec<Expr>,
    pub fx: Vec<Vec<Expr>>,
    pub fv: Vec<Vec<Expr>>,
    pub ftv: Vec<Vec<Expr>>,
    pub fxv: Vec<Vec<Vec<Expr>>>,
    pub fvv: Vec<Vec<Vec<Expr>>>,
    pub fvvv: Vec<Vec<Vec<Vec<Expr>>>>,
}

impl SodeSystem {
    /// Builds a system from expressions over `vars`. Parameter variables must
    /// already have been substituted away.
    pub fn new(vars: VarSet, f: Vec<Expr>) -> Result<SodeSystem> {
        let x = vars.names_with(Role::Position);
        let v = vars.names_with(Role::Velocity);
        let n = f.len();
        if n == 0 {
            return Err(Error::Invalid("a SODE needs at least one equation".into()));
        }
        if x.len() != n || v.len() != n {
            return Err(Error::Invalid(format!(
                "{n} equations need {n} position and {n} velocity variables, got {} and {}",
                x.len(),
                v.len()
            )));
        }
        for (i, e) in f.iter().enumerate() {
            for name in e.variables() {
                match vars.role(&name) {
                    Some(Role::Parameter) => {
                        return Err(Error::Invalid(format!("F[{i}] uses unset parameter `{name}`")))
                    }
                    None => return Err(Error::Invalid(format!("F[{i}] uses undeclared `{name}`"))),
                    _ => {}
                }
            }
        }
        let t = vars.time();
        Ok(SodeSystem { vars, t, x, v, f, derivs: Arc::new(OnceLock::new()) })
    }

    /// Parses F over the standard variables `t, x1.., v1..`.
    pub fn parse(n: usize, f: &[&str]) -> Result<SodeSystem> {
        SodeSystem::parse_with(VarSet::standard(n), f, &[])
    }

    /// Parses F over `vars`, substituting exact parameter values.
    pub fn parse_with(vars: VarSet, f: &[&str], params: &[(&str, Rational)]) -> Result<SodeSystem> {
        let mut exprs = Vec::with_capacity(f.len());
        for s in f {
            let mut e = parse(s, &vars)?;
            for (name, value) in params {
                e = e.subs(name, &Expr::rational(value.clone()));
            }
            exprs.push(e);
        }
        let kept = VarSet::new(
            vars.iter().filter(|(n, _)| !params.iter().any(|(p, _)| p == n)),
        )?;
        SodeSystem::new(kept, exprs)
    }

    /// `F ≡ 0` in dimension n.
    pub fn flat(n: usize) -> SodeSystem {
        SodeSystem::new(VarSet::standard(n), vec![Expr::zero(); n]).expect("valid")
    }

    pub fn n(&self) -> usize {
        self.f.len()
    }

    pub fn vars(&self) -> &VarSet {
        &self.vars
    }

    pub fn f(&self) -> &[Expr] {
        &self.f
    }

    pub fn t_var(&self) -> &str {
        &self.t
    }

    pub fn x_var(&self, i: usize) -> &str {
        &self.x[i]
    }

    pub fn v_var(&self, i: usize) -> &str {
        &self.v[i]
    }

    pub fn x_vars(&self) -> &[Arc<str>] {
        &self.x
    }

    pub fn v_vars(&self) -> &[Arc<str>] {
        &self.v
    }

    /// Coordinates of M¹ in basis order `(t, x^1..x^n, v^1..v^n)`.
    pub fn coords(&self) -> Vec<Arc<str>> {
        let mut out = vec![self.t.clone()];
        out.extend(self.x.iter().cloned());
        out.extend(self.v.iter().cloned());
        out
    }

    pub fn is_polynomial(&self) -> bool {
        self.f.iter().all(Expr::is_polynomial)
    }

    pub fn derivs(&self) -> &Derivs {
        self.derivs.get_or_init(|| Derivs::compute(self))
    }

    pub fn env<'a>(&'a self, p: &'a JetPoint1) -> PointEnv<'a> {
        PointEnv { s: self, p }
    }
}

impl Derivs {
    fn compute(s: &SodeSystem) -> Derivs {
        let n = s.n();
        let f = s.f();
        let fv: Vec<Vec<Expr>> =
            (0..n).map(|i| (0..n).map(|j| d(&f[i], s.v_var(j))).collect()).collect();
        let fx: Vec<Vec<Expr>> =
            (0..n).map(|i| (0..n).map(|j| d(&f[i], s.x_var(j))).collect()).collect();
        let ft = (0..n).map(|i| d(&f[i], s.t_var())).collect();
        let ftv = (0..n).map(|i| (0..n).map(|j| d(&fv[i][j], s.t_var())).collect()).collect();
        let fxv = (0..n)
            .map(|i| (0..n).map(|a| (0..n).map(|b| d(&fv[i][b], s.x_var(a))).collect()).collect())
            .collect();
        let fvv: Vec<Vec<Vec<Expr>>> = (0..n)
            .map(|i| {
                let mut m = vec![vec![Expr::zero(); n]; n];
                for j in 0..n {
                    for k in j..n {
                        let e = d(&fv[i][j], s.v_var(k));
                        m[j][k] = e.clone();
                        m[k][j] = e;
                    }
                }
                m
            })
            .collect();
        let fvvv = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).map(|k| (0..n).map(|l| d(&fvv[i][j][k], s.v_var(l))).collect()).collect())
                    .collect()
            })
            .collect();
        Derivs { ft, fx, fv, ftv, fxv, fvv, fvvv }
    }
}

/// A point (t, x, ẋ) of the 1-jet space.
#[derive(Clone, Debug, PartialEq)]
pub struct JetPoint1 {
    pub t: f64,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
}

impl JetPoint1 {
    pub fn new(t: f64, x: Vec<f64>, v: Vec<f64>) -> JetPoint1 {
        JetPoint1 { t, x, v }
    }

    pub fn origin(n: usize) -> JetPoint1 {
        JetPoint1 { t: 0.0, x: vec![0.0; n], v: vec![0.0; n] }
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    /// Coordinates in basis order `(t, x.., v..)`.
    pub fn coords(&self) -> Vec<f64> {
        let mut out = vec![self.t];
        out.extend(&self.x);
        out.extend(&self.v);
        out
    }

    pub fn from_coords(z: &[f64]) -> JetPoint1 {
        let n = (z.len() - 1) / 2;
        JetPoint1 { t: z[0], x: z[1..=n].to_vec(), v: z[n + 1..].to_vec() }
    }

    pub fn is_finite(&self) -> bool {
        self.coords().iter().all(|c| c.is_finite())
    }
}

/// Variable values of a [`JetPoint1`] under the names of a [`SodeSystem`].
pub struct PointEnv<'a> {
    s: &'a SodeSystem,
    p: &'a JetPoint1,
}

impl Env for PointEnv<'_> {
    fn get(&self, name: &str) -> Option<f64> {
        if name == self.s.t_var() {
            return Some(self.p.t);
        }
        if let Some(i) = self.s.x.iter().position(|x| &**x == name) {
            return self.p.x.get(i).copied();
        }
        if let Some(i) = self.s.v.iter().position(|v| &**v == name) {
            return self.p.v.get(i).copied();
        }
        None
    }
}
