use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::jets::{JetExprs, SodeJet2};
use crate::error::{Error, Result};
use crate::sode::random::{coefficient, exponents, monomial, rng};
use crate::sode::{JetPoint1, SodeSystem};
use crate::symexpr::{d, eval, simplify, Expr, Rational};

/// Fibred map `(t, x) ↦ (t, φ(t, x))` with an optional known inverse `ψ`.
#[derive(Clone, Debug)]
pub struct VerticalAutomorphism {
    t: Arc<str>,
    x: Vec<Arc<str>>,
    pub phi: Vec<Expr>,
    pub inverse: Option<Vec<Expr>>,
    /// `jac[h][i] = ∂φ^h/∂x^i`
    jac: Vec<Vec<Expr>>,
}

impl VerticalAutomorphism {
    /// `phi` and `inverse` are written in the coordinates of `s`; they may
    /// depend on t and x only.
    pub fn new(s: &SodeSystem, phi: Vec<Expr>, inverse: Option<Vec<Expr>>) -> Result<VerticalAutomorphism> {
        let n = s.n();
        if phi.len() != n || inverse.as_ref().is_some_and(|p| p.len() != n) {
            return Err(Error::BadAutomorphism(format!("expected {n} components")));
        }
        for e in phi.iter().chain(inverse.iter().flatten()) {
            for v in e.variables() {
                if &*v != s.t_var() && !s.x_vars().contains(&v) {
                    return Err(Error::BadAutomorphism(format!("component depends on `{v}`")));
                }
            }
        }
        let jac = phi.iter().map(|f| s.x_vars().iter().map(|x| d(f, x)).collect()).collect();
        Ok(VerticalAutomorphism { t: s.t_var().into(), x: s.x_vars().to_vec(), phi, inverse, jac })
    }

    pub fn parse(s: &SodeSystem, phi: &[&str], inverse: Option<&[&str]>) -> Result<VerticalAutomorphism> {
        let p = |xs: &[&str]| -> Result<Vec<Expr>> {
            xs.iter().map(|e| Ok(crate::symexpr::parse(e, s.vars())?)).collect()
        };
        VerticalAutomorphism::new(s, p(phi)?, inverse.map(p).transpose()?)
    }

    pub fn identity(s: &SodeSystem) -> VerticalAutomorphism {
        let phi = s.x_vars().iter().map(|x| Expr::var(x)).collect();
        VerticalAutomorphism::new(s, phi, Some(s.x_vars().iter().map(|x| Expr::var(x)).collect())).expect("identity")
    }

    pub fn n(&self) -> usize {
        self.phi.len()
    }

    pub fn jacobian_exprs(&self) -> &[Vec<Expr>] {
        &self.jac
    }

    fn env(&self, t: f64, x: &[f64]) -> Vec<(&str, f64)> {
        let mut env = vec![(&*self.t, t)];
        env.extend(self.x.iter().map(|n| &**n).zip(x.iter().copied()));
        env
    }

    pub fn apply(&self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        let env = self.env(t, x);
        Ok(self.phi.iter().map(|e| eval(e, env.as_slice())).collect::<Result<_, _>>()?)
    }

    pub fn jacobian(&self, t: f64, x: &[f64]) -> Result<DMatrix<f64>> {
        let env = self.env(t, x);
        let n = self.n();
        let mut m = DMatrix::zeros(n, n);
        for h in 0..n {
            for i in 0..n {
                m[(h, i)] = eval(&self.jac[h][i], env.as_slice())?;
            }
        }
        Ok(m)
    }

    /// Checks invertibility of the Jacobian and, when present, the inverse.
    pub fn validate(&self, points: &[JetPoint1]) -> Result<()> {
        for (k, p) in points.iter().enumerate() {
            let det = self.jacobian(p.t, &p.x)?.determinant();
            if det.is_nan() || det.abs() < 1e-8 {
                return Err(Error::BadAutomorphism(format!("Jacobian determinant {det:e} at point {k}")));
            }
            if let Some(inv) = &self.inverse {
                let env = self.env(p.t, &p.x);
                let y: Vec<f64> = inv.iter().map(|e| eval(e, env.as_slice())).collect::<Result<_, _>>()?;
                let back = self.apply(p.t, &y)?;
                let err = back.iter().zip(&p.x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                if err.is_nan() || err > 1e-10 {
                    return Err(Error::BadAutomorphism(format!("inverse residual {err:e} at point {k}")));
                }
            }
        }
        Ok(())
    }

    /// Components of `Φ^(1)(t, x, v) = (t, φ, φ_t + φ_x v)` as expressions on M¹.
    pub fn prolongation_exprs(&self, s: &SodeSystem) -> Vec<Expr> {
        let n = self.n();
        let mut out = vec![Expr::var(s.t_var())];
        out.extend(self.phi.iter().cloned());
        for h in 0..n {
            let e = d(&self.phi[h], s.t_var())
                + Expr::sum((0..n).map(|a| &self.jac[h][a] * Expr::var(s.v_var(a))));
            out.push(simplify(&e));
        }
        out
    }

    /// `φ^h_tt + 2φ^h_ti v^i + φ^h_ij v^i v^j + φ^h_i F^i`: the pushed SODE
    /// composed with `Φ^(1)`.
    pub fn pushed_rhs(&self, s: &SodeSystem) -> Vec<Expr> {
        let n = self.n();
        let t = s.t_var();
        (0..n)
            .map(|h| {
                let phi_t = d(&self.phi[h], t);
                let mut terms = vec![d(&phi_t, t)];
                for i in 0..n {
                    let vi = Expr::var(s.v_var(i));
                    terms.push(Expr::int(2) * d(&self.jac[h][i], t) * &vi);
                    for j in 0..n {
                        terms.push(d(&self.jac[h][i], s.x_var(j)) * &vi * Expr::var(s.v_var(j)));
                    }
                    terms.push(&self.jac[h][i] * &s.f()[i]);
                }
                simplify(&Expr::sum(terms))
            })
            .collect()
    }

    /// `ψ ∘ φ`-style composition: `(self ∘ other)(t, x) = self(t, other(t, x))`.
    pub fn compose(&self, other: &VerticalAutomorphism, s: &SodeSystem) -> Result<VerticalAutomorphism> {
        let map: Vec<(&str, Expr)> = self.x.iter().map(|n| &**n).zip(other.phi.iter().cloned()).collect();
        let phi = self.phi.iter().map(|e| simplify(&e.subs_all(&map))).collect();
        let inverse = match (&self.inverse, &other.inverse) {
            (Some(a), Some(b)) => {
                let map: Vec<(&str, Expr)> = self.x.iter().map(|n| &**n).zip(a.iter().cloned()).collect();
                Some(b.iter().map(|e| simplify(&e.subs_all(&map))).collect())
            }
            _ => None,
        };
        VerticalAutomorphism::new(s, phi, inverse)
    }
}

/// `Φ^(1)(p)`.
pub fn prolong1(phi: &VerticalAutomorphism, s: &SodeSystem, p: &JetPoint1) -> Result<JetPoint1> {
    let env = s.env(p);
    let z: Vec<f64> =
        phi.prolongation_exprs(s).iter().map(|e| eval(e, &env)).collect::<Result<_, _>>()?;
    Ok(JetPoint1::from_coords(&z))
}

/// Value of the pushed SODE at `Φ^(1)(p)`.
pub fn push_sode_value(phi: &VerticalAutomorphism, s: &SodeSystem, p: &JetPoint1) -> Result<Vec<f64>> {
    let env = s.env(p);
    Ok(phi.pushed_rhs(s).iter().map(|e| eval(e, &env)).collect::<Result<_, _>>()?)
}

/// The pushed SODE `Φ·σ` in the same coordinate names; needs the inverse.
pub fn push_sode_symbolic(phi: &VerticalAutomorphism, s: &SodeSystem) -> Result<SodeSystem> {
    let inv = phi.inverse.as_ref().ok_or(Error::MissingInverse)?;
    let psi = VerticalAutomorphism::new(s, inv.clone(), None)?;
    let back = psi.prolongation_exprs(s);
    let names = s.coords();
    let map: Vec<(&str, Expr)> = names.iter().map(|n| &**n).zip(back).skip(1).collect();
    let f = phi.pushed_rhs(s).iter().map(|e| simplify(&e.subs_all(&map))).collect();
    SodeSystem::new(s.vars().clone(), f)
}

/// Chain-rule data of `Φ^(1)` and of the pushed right-hand side, reusable
/// across points.
pub struct Pushforward<'a> {
    pub phi: &'a VerticalAutomorphism,
    pub s: &'a SodeSystem,
    map: JetExprs,
    rhs: JetExprs,
}

impl<'a> Pushforward<'a> {
    pub fn new(phi: &'a VerticalAutomorphism, s: &'a SodeSystem) -> Pushforward<'a> {
        let map = JetExprs::of(s, &phi.prolongation_exprs(s));
        let rhs = JetExprs::of(s, &phi.pushed_rhs(s));
        Pushforward { phi, s, map, rhs }
    }

    /// `DΦ^(1)` at p in the coordinates `(t, x, v)`.
    pub fn differential(&self, p: &JetPoint1) -> Result<DMatrix<f64>> {
        let j = self.map.at(self.s, p)?;
        let m = j.z.len();
        Ok(DMatrix::from_fn(m, m, |r, c| j.grad[r][c]))
    }

    /// 2-jet of `Φ·σ` at `Φ^(1)(p)`, from the 2-jets of `Φ^(1)` and of
    /// `F(Φ·σ) ∘ Φ^(1)` at p; no inverse is needed.
    pub fn push_jet(&self, p: &JetPoint1) -> Result<SodeJet2> {
        let jm = self.map.at(self.s, p)?;
        let g = self.rhs.at(self.s, p)?;
        let m = jm.z.len();
        let a = DMatrix::from_fn(m, m, |r, c| jm.grad[r][c]);
        let b = a.clone().try_inverse().ok_or_else(|| Error::BadAutomorphism("singular prolongation".into()))?;
        // second derivatives of the inverse map at the image point
        let mut d2psi = vec![vec![vec![0.0; m]; m]; m];
        for (x, y) in (0..m).flat_map(|x| (0..m).map(move |y| (x, y))) {
            let col_x = b.column(x);
            let col_y = b.column(y);
            let q = DVector::from_fn(m, |dd, _| {
                let h = &jm.hess[dd];
                let mut acc = 0.0;
                for e in 0..m {
                    for f in 0..m {
                        acc += h[e][f] * col_x[e] * col_y[f];
                    }
                }
                acc
            });
            let r = -(&b * q);
            for c in 0..m {
                d2psi[c][x][y] = r[c];
            }
        }
        let n = g.n();
        let mut out = SodeJet2 { z: jm.value.clone(), value: g.value.clone(), grad: vec![], hess: vec![] };
        for i in 0..n {
            let gi = DVector::from_row_slice(&g.grad[i]);
            let grad = b.transpose() * &gi;
            out.grad.push(grad.iter().copied().collect());
            let hi = DMatrix::from_fn(m, m, |r, c| g.hess[i][r][c]);
            let mut h = b.transpose() * hi * &b;
            for x in 0..m {
                for y in 0..m {
                    h[(x, y)] += (0..m).map(|c| gi[c] * d2psi[c][x][y]).sum::<f64>();
                }
            }
            out.hess.push((0..m).map(|r| (0..m).map(|c| 0.5 * (h[(r, c)] + h[(c, r)])).collect()).collect());
        }
        Ok(out)
    }
}

fn poly_bound(e: &Expr) -> f64 {
    let p = crate::symexpr::to_poly(e);
    p.terms().map(|(_, c)| num_traits::ToPrimitive::to_f64(c).map_or(f64::INFINITY, f64::abs)).sum()
}

fn random_quadratic(r: &mut impl Rng, names: &[&str]) -> Expr {
    let mut terms = Vec::new();
    for e in exponents(names.len(), 2) {
        if e.iter().sum::<u32>() > 0 && r.gen::<f64>() < 0.5 {
            terms.push(Expr::rational(coefficient(r)) * monomial(names, &e));
        }
    }
    simplify(&Expr::sum(terms))
}

fn coord_names(s: &SodeSystem) -> Vec<String> {
    std::iter::once(s.t_var().to_string()).chain(s.x_vars().iter().map(|x| x.to_string())).collect()
}

/// Near-identity `φ = x + ε·q(t, x)` with q of degree ≤ 2; ε is chosen so the
/// Jacobian determinant stays ≥ ½ whenever |x^i| ≤ 1 and 0 ≤ t ≤ 1.
pub fn random_automorphism(s: &SodeSystem, seed: u64) -> VerticalAutomorphism {
    let n = s.n();
    let mut r = rng(seed);
    let names = coord_names(s);
    let names: Vec<&str> = names.iter().map(String::as_str).collect();
    let q: Vec<Expr> = (0..n).map(|_| random_quadratic(&mut r, &names)).collect();
    // Σ_i |∂q^h/∂x^i| ≤ 2 Σ|coefficients| on the box; keep the row sums of
    // εDq below 1 − 2^{−1/n}
    let bound = q.iter().map(poly_bound).fold(1e-3, f64::max);
    let eps = 0.9 * (1.0 - 0.5f64.powf(1.0 / n as f64)) / (2.0 * bound);
    let eps = Rational::new(((eps * 1024.0).floor() as i64).max(1).into(), 1024.into());
    let phi = (0..n).map(|h| simplify(&(Expr::var(s.x_var(h)) + Expr::rational(eps.clone()) * &q[h]))).collect();
    VerticalAutomorphism::new(s, phi, None).expect("valid")
}

/// Triangular automorphism `φ^h = x^h + q^h(t, x^{h+1}, …, x^n)` with its
/// polynomial inverse.
pub fn random_triangular_automorphism(s: &SodeSystem, seed: u64) -> VerticalAutomorphism {
    let n = s.n();
    let mut r = rng(seed);
    let mut phi = Vec::new();
    let mut q = Vec::new();
    for h in 0..n {
        let mut names = vec![s.t_var()];
        names.extend((h + 1..n).map(|k| s.x_var(k)));
        let qh = random_quadratic(&mut r, &names);
        phi.push(simplify(&(Expr::var(s.x_var(h)) + &qh)));
        q.push(qh);
    }
    let mut inv: Vec<Expr> = vec![Expr::zero(); n];
    for h in (0..n).rev() {
        let map: Vec<(&str, Expr)> = (h + 1..n).map(|k| (s.x_var(k), inv[k].clone())).collect();
        inv[h] = simplify(&(Expr::var(s.x_var(h)) - q[h].subs_all(&map)));
    }
    VerticalAutomorphism::new(s, phi, Some(inv)).expect("valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sode::random::{random_points, random_sode, SampleBox};

    fn one() -> SodeSystem {
        SodeSystem::parse(1, &["-x1"]).unwrap()
    }

    #[test]
    fn prolongation_examples() {
        let s = one();
        let p = JetPoint1::new(0.0, vec![1.0], vec![2.0]);
        let id = VerticalAutomorphism::identity(&s);
        assert_eq!(prolong1(&id, &s, &p).unwrap(), p);
        let shift = VerticalAutomorphism::parse(&s, &["x1 + t"], None).unwrap();
        assert_eq!(prolong1(&shift, &s, &p).unwrap(), JetPoint1::new(0.0, vec![1.0], vec![3.0]));
        let dbl = VerticalAutomorphism::parse(&s, &["2*x1"], Some(&["x1/2"])).unwrap();
        assert_eq!(prolong1(&dbl, &s, &p).unwrap(), JetPoint1::new(0.0, vec![2.0], vec![4.0]));
    }

    #[test]
    fn push_examples() {
        let s = one();
        let dbl = VerticalAutomorphism::parse(&s, &["2*x1"], Some(&["x1/2"])).unwrap();
        assert_eq!(push_sode_value(&dbl, &s, &JetPoint1::new(0.0, vec![1.0], vec![0.0])).unwrap(), vec![-2.0]);
        assert_eq!(push_sode_symbolic(&dbl, &s).unwrap().f(), s.f());
        let c = VerticalAutomorphism::parse(&s, &["x1 + 3"], Some(&["x1 - 3"])).unwrap();
        assert_eq!(push_sode_value(&c, &s, &JetPoint1::origin(1)).unwrap(), vec![0.0]);
        let shifted = push_sode_symbolic(&c, &s).unwrap().f()[0].clone();
        assert!(crate::symexpr::is_zero(&(shifted + Expr::var("x1") - Expr::int(3))));
        let flat = SodeSystem::flat(1);
        let bend = VerticalAutomorphism::parse(&flat, &["x1 + t^2"], Some(&["x1 - t^2"])).unwrap();
        assert_eq!(push_sode_symbolic(&bend, &flat).unwrap().f()[0], Expr::int(2));
        assert!(matches!(
            push_sode_symbolic(&VerticalAutomorphism::parse(&s, &["x1 + t"], None).unwrap(), &s),
            Err(Error::MissingInverse)
        ));
        let id = VerticalAutomorphism::identity(&s);
        assert_eq!(push_sode_symbolic(&id, &s).unwrap().f(), s.f());
    }

    #[test]
    fn random_automorphisms_are_invertible_on_the_box() {
        let s = random_sode(2, 1);
        let pts = random_points(2, 200, 5, &SampleBox::default());
        for seed in 0..10 {
            let phi = random_automorphism(&s, seed);
            phi.validate(&pts).unwrap();
            for p in &pts {
                assert!(phi.jacobian(p.t, &p.x).unwrap().determinant() >= 0.5);
            }
            assert!(phi.phi.iter().zip(s.x_vars()).any(|(e, x)| *e != Expr::var(x)));
            random_triangular_automorphism(&s, seed).validate(&pts).unwrap();
        }
    }

    #[test]
    fn pushed_jet_matches_symbolic_push() {
        let s = random_sode(2, 8);
        let phi = random_triangular_automorphism(&s, 4);
        let pushed = push_sode_symbolic(&phi, &s).unwrap();
        let pf = Pushforward::new(&phi, &s);
        let exprs = JetExprs::new(&pushed);
        for p in random_points(2, 5, 7, &SampleBox::default()) {
            let j = pf.push_jet(&p).unwrap();
            let q = JetPoint1::from_coords(&j.z);
            let direct = exprs.at(&pushed, &q).unwrap();
            let diff = j
                .to_vector(2)
                .iter()
                .zip(direct.to_vector(2))
                .map(|(a, b)| (a - b).abs() / (1.0 + b.abs()))
                .fold(0.0, f64::max);
            assert!(diff < 1e-10, "{diff:e}");
        }
    }

    #[test]
    fn pushforward_composes() {
        let s = random_sode(2, 3);
        let a = random_automorphism(&s, 1);
        let b = random_automorphism(&s, 2);
        let ba = b.compose(&a, &s).unwrap();
        let pf = Pushforward::new(&a, &s);
        for p in random_points(2, 5, 13, &SampleBox::default()) {
            let j = pf.push_jet(&p).unwrap();
            let q = JetPoint1::from_coords(&j.z);
            // push by b of the once-pushed value: only the value of F' is needed
            let env = s.env(&q);
            let free = b.pushed_rhs(&SodeSystem::flat(2));
            let mut val = Vec::new();
            for h in 0..2 {
                let mut v = eval(&free[h], &env).unwrap();
                for i in 0..2 {
                    v += eval(&b.jacobian_exprs()[h][i], &env).unwrap() * j.value[i];
                }
                val.push(v);
            }
            let direct = push_sode_value(&ba, &s, &p).unwrap();
            let pq = prolong1(&b, &s, &q).unwrap();
            let pd = prolong1(&ba, &s, &p).unwrap();
            for (x, y) in pq.coords().iter().zip(pd.coords()) {
                assert!((x - y).abs() < 1e-12);
            }
            for (x, y) in val.iter().zip(&direct) {
                assert!((x - y).abs() < 1e-10, "{x} {y}");
            }
        }
    }
}
