//! Prolongation of vertical vector fields to `J²(p^21)` by the total
//! derivative recursion.

use nalgebra::DMatrix;
use serde::Serialize;

use super::automorphism::{Pushforward, VerticalAutomorphism};
use super::jets::{curvature_mapping, curvature_mapping_exprs, JetCoordinates, JetExprs, SodeJet2};
use crate::error::{Error, Result};
use crate::linalg::{numeric_rank, NumericRank};
use crate::sode::random::{coefficient, exponents, monomial, rng};
use crate::sode::{JetPoint1, SodeSystem};
use crate::symexpr::{d, eval, simplify, Expr};

/// Coefficients of the prolonged field, over the coordinates of
/// [`JetCoordinates`]: `base` on `(t, x, v)`, then the fibre blocks.
#[derive(Clone, Debug)]
pub struct ProlongedField {
    pub coords: JetCoordinates,
    pub order: usize,
    pub base: Vec<Expr>,
    pub value: Vec<Expr>,
    pub grad: Vec<Vec<Expr>>,
    /// symmetric, filled only when `order == 2`
    pub hess: Vec<Vec<Vec<Expr>>>,
}

impl ProlongedField {
    /// Coefficients in the layout of [`SodeJet2::to_vector`].
    pub fn components(&self) -> Vec<Expr> {
        let m = self.base.len();
        let mut out = self.base.clone();
        out.extend(self.value.iter().cloned());
        if self.order >= 1 {
            out.extend(self.grad.iter().flatten().cloned());
        }
        if self.order >= 2 {
            for h in &self.hess {
                for a in 0..m {
                    out.extend(h[a][a..].iter().cloned());
                }
            }
        }
        out
    }

    pub fn eval_at(&self, j: &SodeJet2) -> Result<Vec<f64>> {
        let env = self.coords.env(j);
        Ok(self.components().iter().map(|e| eval(e, &env)).collect::<Result<_, _>>()?)
    }

    /// The field applied to a function of the jet coordinates.
    pub fn apply(&self, f: &Expr) -> Expr {
        let names = self.coords.all(self.order);
        let terms = names
            .iter()
            .zip(self.components())
            .filter(|(n, c)| !c.is_zero() && f.depends_on(n))
            .map(|(n, c)| c * d(f, n));
        simplify(&Expr::sum(terms))
    }

    /// Second-order family at slots `(μ, ν)` of `(t, x, v)`, e.g. `w_tv`
    /// is `second(i, 0, 1 + n + a)`.
    pub fn second(&self, i: usize, mu: usize, nu: usize) -> &Expr {
        &self.hess[i][mu][nu]
    }
}

fn check_vertical(s: &SodeSystem, u: &[Expr]) -> Result<()> {
    if u.len() != s.n() {
        return Err(Error::Invalid(format!("expected {} field components", s.n())));
    }
    for e in u {
        if s.v_vars().iter().any(|v| e.depends_on(v)) {
            return Err(Error::Invalid("vertical field may depend on t and x only".into()));
        }
    }
    Ok(())
}

pub fn prolong_vertical_field(s: &SodeSystem, u: &[Expr]) -> Result<ProlongedField> {
    prolong_vertical_field_to(s, u, 2)
}

/// Prolongation to `J^order(p^21)`, `order ≤ 2`; order 0 is the field on M².
pub fn prolong_vertical_field_to(s: &SodeSystem, u: &[Expr], order: usize) -> Result<ProlongedField> {
    check_vertical(s, u)?;
    let n = s.n();
    let jc = JetCoordinates::new(s);
    let m = jc.base.len();
    let t = s.t_var();
    let var = |n: &str| Expr::var(n);
    let ut: Vec<Expr> = u.iter().map(|e| d(e, t)).collect();
    let ux: Vec<Vec<Expr>> = u.iter().map(|e| (0..n).map(|a| d(e, s.x_var(a))).collect()).collect();
    let mut base = vec![Expr::zero()];
    base.extend(u.iter().cloned());
    for h in 0..n {
        base.push(simplify(&(&ut[h] + Expr::sum((0..n).map(|a| &ux[h][a] * var(s.v_var(a)))))));
    }
    let value: Vec<Expr> = (0..n)
        .map(|i| {
            let mut terms = vec![d(&ut[i], t)];
            for a in 0..n {
                let va = var(s.v_var(a));
                terms.push(Expr::int(2) * d(&ux[i][a], t) * &va);
                for b in 0..n {
                    terms.push(d(&ux[i][a], s.x_var(b)) * &va * var(s.v_var(b)));
                }
                terms.push(&ux[i][a] * var(&jc.value[a]));
            }
            simplify(&Expr::sum(terms))
        })
        .collect();
    // ∂ξ^ν/∂z^μ
    let dxi: Vec<Vec<Expr>> = (0..m).map(|mu| base.iter().map(|x| d(x, &jc.base[mu])).collect()).collect();
    let total = |f: &Expr, mu: usize| -> Expr {
        let mut terms = vec![d(f, &jc.base[mu])];
        for i in 0..n {
            if f.depends_on(&jc.value[i]) {
                terms.push(var(&jc.grad[i][mu]) * d(f, &jc.value[i]));
            }
            for nu in 0..m {
                if f.depends_on(&jc.grad[i][nu]) {
                    terms.push(var(&jc.hess[i][mu][nu]) * d(f, &jc.grad[i][nu]));
                }
            }
        }
        Expr::sum(terms)
    };
    let mut grad = Vec::new();
    if order >= 1 {
        for i in 0..n {
            let row: Vec<Expr> = (0..m)
                .map(|mu| {
                    let corr = Expr::sum((0..m).map(|nu| var(&jc.grad[i][nu]) * &dxi[mu][nu]));
                    simplify(&(total(&value[i], mu) - corr))
                })
                .collect();
            grad.push(row);
        }
    }
    let mut hess = Vec::new();
    if order >= 2 {
        for i in 0..n {
            let mut h = vec![vec![Expr::zero(); m]; m];
            for mu in 0..m {
                for nu in mu..m {
                    let corr = Expr::sum((0..m).map(|rho| var(&jc.hess[i][mu][rho]) * &dxi[nu][rho]));
                    let e = simplify(&(total(&grad[i][mu], nu) - corr));
                    h[nu][mu] = e.clone();
                    h[mu][nu] = e;
                }
            }
            hess.push(h);
        }
    }
    Ok(ProlongedField { coords: jc, order: order.min(2), base, value, grad, hess })
}

/// Both sides of the infinitesimal equivariance laws at the 2-jet of `s` at p.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct EquivarianceResiduals {
    /// `X(y^i_j) − (u^i_r y^r_j − u^r_j y^i_r)`
    pub p_law: f64,
    /// `X(y^k_ij) − (u^k_r y^r_ij − u^r_i y^k_rj − u^r_j y^k_ir)`
    pub t_law: f64,
}

pub(crate) struct EquivarianceTerms {
    pub lhs_p: Vec<Vec<f64>>,
    pub lhs_t: Vec<Vec<Vec<f64>>>,
    pub rhs_p: Vec<Vec<f64>>,
    pub rhs_t: Vec<Vec<Vec<f64>>>,
}

pub(crate) fn equivariance_terms(s: &SodeSystem, u: &[Expr], p: &JetPoint1) -> Result<EquivarianceTerms> {
    let n = s.n();
    let field = prolong_vertical_field(s, u)?;
    let j = JetExprs::new(s).at(s, p)?;
    let env = field.coords.env(&j);
    let (yp, yt) = curvature_mapping_exprs(&field.coords);
    let ev = |e: &Expr| eval(&field.apply(e), &env);
    let lhs_p = yp.iter().map(|r| r.iter().map(ev).collect::<Result<_, _>>()).collect::<Result<_, _>>()?;
    let lhs_t = yt
        .iter()
        .map(|r| r.iter().map(|c| c.iter().map(ev).collect::<Result<_, _>>()).collect::<Result<_, _>>())
        .collect::<Result<_, _>>()?;
    let y = curvature_mapping(&j);
    let penv = s.env(p);
    let mut ux = vec![vec![0.0; n]; n];
    for (i, row) in ux.iter_mut().enumerate() {
        for (r, x) in row.iter_mut().enumerate() {
            *x = eval(&d(&u[i], s.x_var(r)), &penv)?;
        }
    }
    let rhs_p = (0..n)
        .map(|i| (0..n).map(|a| (0..n).map(|r| ux[i][r] * y.y_p[r][a] - ux[r][a] * y.y_p[i][r]).sum()).collect())
        .collect();
    let rhs_t = (0..n)
        .map(|k| {
            (0..n)
                .map(|a| {
                    (0..n)
                        .map(|b| {
                            (0..n)
                                .map(|r| {
                                    ux[k][r] * y.y_t[r][a][b] - ux[r][a] * y.y_t[k][r][b] - ux[r][b] * y.y_t[k][a][r]
                                })
                                .sum()
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    Ok(EquivarianceTerms { lhs_p, lhs_t, rhs_p, rhs_t })
}

fn max_diff<'a>(a: impl Iterator<Item = &'a f64>, b: impl Iterator<Item = &'a f64>) -> f64 {
    a.zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn infinitesimal_equivariance(s: &SodeSystem, u: &[Expr], p: &JetPoint1) -> Result<EquivarianceResiduals> {
    let t = equivariance_terms(s, u, p)?;
    Ok(EquivarianceResiduals {
        p_law: max_diff(t.lhs_p.iter().flatten(), t.rhs_p.iter().flatten()),
        t_law: max_diff(t.lhs_t.iter().flatten().flatten(), t.rhs_t.iter().flatten().flatten()),
    })
}

/// Vertical fields `m(t, x) ∂/∂x^i` for all monomials m of degree ≤ `deg`.
pub fn monomial_fields(s: &SodeSystem, deg: u32) -> Vec<Vec<Expr>> {
    let n = s.n();
    let mut names = vec![s.t_var()];
    names.extend(s.x_vars().iter().map(|x| &**x));
    let mut out = Vec::new();
    for e in exponents(n + 1, deg) {
        let mono = monomial(&names, &e);
        for i in 0..n {
            let mut u = vec![Expr::zero(); n];
            u[i] = mono.clone();
            out.push(u);
        }
    }
    out
}

/// Rank of the distribution spanned by prolonged vertical fields on
/// `J^order(p^21)` at the 2-jet of `s` at p.
///
/// Rows are `sample_count` random polynomial fields of degree ≤ 4; since the
/// prolongation is linear in the field, each row is a random combination of
/// the prolonged monomial fields.
pub fn distribution_rank(
    s: &SodeSystem,
    p: &JetPoint1,
    order: usize,
    sample_count: usize,
    seed: u64,
) -> Result<NumericRank> {
    let j = JetExprs::new(s).at(s, p)?;
    let rows: Vec<Vec<f64>> = monomial_fields(s, 4)
        .iter()
        .map(|u| prolong_vertical_field_to(s, u, order)?.eval_at(&j))
        .collect::<Result<_>>()?;
    let k = rows.len();
    let dim = rows[0].len();
    let basis = DMatrix::from_fn(k, dim, |r, c| rows[r][c]);
    let mut r = rng(seed);
    let mix = DMatrix::from_fn(sample_count, k, |_, _| num_traits::ToPrimitive::to_f64(&coefficient(&mut r)).unwrap_or(0.0));
    Ok(numeric_rank(&(mix * basis), 1e-8))
}

/// `½n(3n² + 11n + 10)` for n > 1 and 11 for n = 1.
pub fn expected_distribution_rank(n: usize) -> usize {
    if n == 1 {
        11
    } else {
        n * (3 * n * n + 11 * n + 10) / 2
    }
}

/// Dimension of the kernel of the differential of the curvature mapping
/// restricted to the fibre coordinates of `J²(p^21)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KernelDimension {
    pub fiber_dim: usize,
    pub rank: usize,
    pub kernel: usize,
}

pub fn curvature_kernel_dimension(s: &SodeSystem, p: &JetPoint1) -> Result<KernelDimension> {
    let jc = JetCoordinates::new(s);
    let j = JetExprs::new(s).at(s, p)?;
    let env = jc.env(&j);
    let (yp, yt) = curvature_mapping_exprs(&jc);
    let n = s.n();
    let mut ys: Vec<Expr> = yp.into_iter().flatten().collect();
    for k in 0..n {
        for a in 0..n {
            for b in a + 1..n {
                ys.push(yt[k][a][b].clone());
            }
        }
    }
    let fiber = jc.fiber(2);
    let mut m = DMatrix::zeros(ys.len(), fiber.len());
    for (r, y) in ys.iter().enumerate() {
        for (c, name) in fiber.iter().enumerate() {
            m[(r, c)] = eval(&d(y, name), &env)?;
        }
    }
    let rank = numeric_rank(&m, 1e-8).rank;
    Ok(KernelDimension { fiber_dim: fiber.len(), rank, kernel: fiber.len() - rank })
}

/// `max |finite(ε) − ε·X^(2)(j)|` for the automorphisms `x + εu`, one entry per ε.
pub fn prolongation_convergence(s: &SodeSystem, u: &[Expr], p: &JetPoint1, eps: &[f64]) -> Result<Vec<f64>> {
    let field = prolong_vertical_field(s, u)?;
    let j = JetExprs::new(s).at(s, p)?;
    let base = j.to_vector(2);
    let inf = field.eval_at(&j)?;
    let mut out = Vec::new();
    for &e in eps {
        let q = crate::symexpr::Rational::from_float(e).ok_or_else(|| Error::Invalid("bad epsilon".into()))?;
        let phi = (0..s.n()).map(|h| simplify(&(Expr::var(s.x_var(h)) + Expr::rational(q.clone()) * &u[h]))).collect();
        let phi = VerticalAutomorphism::new(s, phi, None)?;
        let pushed = Pushforward::new(&phi, s).push_jet(p)?.to_vector(2);
        let err = pushed.iter().zip(&base).zip(&inf).map(|((a, b), c)| (a - b - e * c).abs()).fold(0.0, f64::max);
        out.push(err);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sode::random::{random_points, random_sode, SampleBox};

    fn u_of(s: &SodeSystem, xs: &[&str]) -> Vec<Expr> {
        xs.iter().map(|e| crate::symexpr::parse(e, s.vars()).unwrap()).collect()
    }

    #[test]
    fn constant_field_only_moves_positions() {
        let s = SodeSystem::flat(2);
        let f = prolong_vertical_field(&s, &u_of(&s, &["3", "-1/2"])).unwrap();
        let c = f.components();
        let nonzero: Vec<usize> = (0..c.len()).filter(|&k| !c[k].is_zero()).collect();
        assert_eq!(nonzero, vec![1, 2]);
    }

    #[test]
    fn identity_field_in_one_dimension() {
        let s = SodeSystem::flat(1);
        let f = prolong_vertical_field(&s, &u_of(&s, &["x1"])).unwrap();
        let jc = &f.coords;
        assert_eq!(f.base[2], Expr::var("v1"));
        assert_eq!(f.value[0], Expr::var("F1"));
        assert_eq!(f.hess[0][2][2], -Expr::var(&jc.hess[0][2][2]));
    }

    #[test]
    fn recursion_is_symmetric() {
        let s = SodeSystem::flat(2);
        let u = u_of(&s, &["x1^2*x2 + t*x1", "t^2*x2^3"]);
        let f = prolong_vertical_field(&s, &u).unwrap();
        // recompute the μ > ν entries from the recursion and compare
        let m = f.base.len();
        let g = prolong_vertical_field_to(&s, &u, 1).unwrap();
        assert_eq!(g.grad, f.grad);
        for i in 0..2 {
            for a in 0..m {
                for b in 0..m {
                    assert_eq!(f.hess[i][a][b], f.hess[i][b][a]);
                }
            }
        }
    }

    #[test]
    fn equivariance_laws() {
        let s = random_sode(2, 6);
        let u = u_of(&s, &["x1*x2 + t*x2^2 - x1", "t*x1^2 + 2*x2"]);
        for p in random_points(2, 3, 1, &SampleBox::default()) {
            let r = infinitesimal_equivariance(&s, &u, &p).unwrap();
            assert!(r.p_law < 1e-9 && r.t_law < 1e-9, "{r:?}");
            let t = equivariance_terms(&s, &u, &p).unwrap();
            let negated =
                max_diff(t.lhs_t.iter().flatten().flatten(), t.rhs_t.iter().flatten().flatten().map(|x| -x).collect::<Vec<_>>().iter());
            assert!(negated > 1e-3, "opposite-sign T-law must fail");
        }
        let flat = SodeSystem::flat(2);
        let r = infinitesimal_equivariance(&flat, &u, &JetPoint1::origin(2)).unwrap();
        assert_eq!(r, EquivarianceResiduals::default());
        let c = u_of(&s, &["1", "2"]);
        let t = equivariance_terms(&s, &c, &JetPoint1::new(0.1, vec![0.2, 0.3], vec![0.4, 0.5])).unwrap();
        assert!(t.lhs_p.iter().flatten().chain(t.rhs_p.iter().flatten()).all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn ranks() {
        let p = JetPoint1::new(0.3, vec![0.2], vec![-0.5]);
        let s = random_sode(1, 2);
        let r = distribution_rank(&s, &p, 2, 30, 1).unwrap();
        assert_eq!(r.rank, expected_distribution_rank(1));
        assert!(r.gap >= 1e3);
        assert_eq!(distribution_rank(&s, &p, 0, 30, 1).unwrap().rank, 3);
        assert_eq!(distribution_rank(&s, &p, 1, 30, 1).unwrap().rank, 6);
        assert_eq!(curvature_kernel_dimension(&s, &p).unwrap().kernel, 9);
        assert_eq!(expected_distribution_rank(2), 44);
        assert_eq!(expected_distribution_rank(3), 105);
    }

    #[test]
    fn first_order_convergence() {
        let s = random_sode(2, 9);
        let u = u_of(&s, &["x1*x2 + t^2", "x2^2 - t*x1"]);
        let p = JetPoint1::new(0.4, vec![0.3, -0.2], vec![0.6, 0.1]);
        let e = prolongation_convergence(&s, &u, &p, &[1e-2, 1e-3]).unwrap();
        assert!(e[0] / 1e-4 < 1e3 && e[1] / 1e-6 < 1e3, "{e:?}");
        assert!(e[1] < e[0] / 50.0, "{e:?}");
    }
}
