//! Second jets of SODEs, viewed as sections of `M² → M¹`, and the curvature
//! mapping on them.

use std::collections::HashMap;
use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use serde::Serialize;

use crate::error::Result;
use crate::sode::{JetPoint1, SodeSystem};
use crate::symexpr::{d, eval, Expr};

/// 2-jet of `F` at a point `z = (t, x, v)` of M¹.
///
/// `grad[i][μ] = ∂F^i/∂z^μ`, `hess[i][μ][ν] = ∂²F^i/∂z^μ∂z^ν` (symmetric).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SodeJet2 {
    pub z: Vec<f64>,
    pub value: Vec<f64>,
    pub grad: Vec<Vec<f64>>,
    pub hess: Vec<Vec<Vec<f64>>>,
}

impl SodeJet2 {
    pub fn zero(p: &JetPoint1) -> SodeJet2 {
        let n = p.n();
        let m = 2 * n + 1;
        SodeJet2 {
            z: p.coords(),
            value: vec![0.0; n],
            grad: vec![vec![0.0; m]; n],
            hess: vec![vec![vec![0.0; m]; m]; n],
        }
    }

    pub fn n(&self) -> usize {
        self.value.len()
    }

    pub fn point(&self) -> JetPoint1 {
        JetPoint1::from_coords(&self.z)
    }

    /// Coordinates on `J^order(p^21)`: `z`, values, gradients, then the
    /// upper triangle (`μ ≤ ν`) of each Hessian.
    pub fn to_vector(&self, order: usize) -> Vec<f64> {
        let m = self.z.len();
        let mut out = self.z.clone();
        out.extend(&self.value);
        if order >= 1 {
            out.extend(self.grad.iter().flatten());
        }
        if order >= 2 {
            for h in &self.hess {
                for a in 0..m {
                    out.extend(&h[a][a..]);
                }
            }
        }
        out
    }

    pub fn max_symmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for h in &self.hess {
            for (a, row) in h.iter().enumerate() {
                for (b, x) in row.iter().enumerate() {
                    worst = worst.max((x - h[b][a]).abs());
                }
            }
        }
        worst
    }
}

/// Symbolic 2-jet of a SODE, reusable across points.
#[derive(Clone, Debug)]
pub struct JetExprs {
    pub value: Vec<Expr>,
    pub grad: Vec<Vec<Expr>>,
    pub hess: Vec<Vec<Vec<Expr>>>,
}

impl JetExprs {
    pub fn new(s: &SodeSystem) -> JetExprs {
        JetExprs::of(s, s.f())
    }

    /// Jet of arbitrary functions on M¹ in the coordinates of `s`.
    pub fn of(s: &SodeSystem, f: &[Expr]) -> JetExprs {
        let coords = s.coords();
        let m = coords.len();
        let grad: Vec<Vec<Expr>> = f.iter().map(|fi| coords.iter().map(|c| d(fi, c)).collect()).collect();
        let hess = grad
            .iter()
            .map(|g| {
                let mut h = vec![vec![Expr::zero(); m]; m];
                for a in 0..m {
                    for b in a..m {
                        let e = d(&g[a], &coords[b]);
                        h[b][a] = e.clone();
                        h[a][b] = e;
                    }
                }
                h
            })
            .collect();
        JetExprs { value: f.to_vec(), grad, hess }
    }

    pub fn at(&self, s: &SodeSystem, p: &JetPoint1) -> Result<SodeJet2> {
        let env = s.env(p);
        let ev = |e: &Expr| eval(e, &env);
        Ok(SodeJet2 {
            z: p.coords(),
            value: self.value.iter().map(ev).collect::<Result<_, _>>()?,
            grad: self.grad.iter().map(|r| r.iter().map(ev).collect::<Result<_, _>>()).collect::<Result<_, _>>()?,
            hess: self
                .hess
                .iter()
                .map(|h| h.iter().map(|r| r.iter().map(ev).collect::<Result<_, _>>()).collect::<Result<_, _>>())
                .collect::<Result<_, _>>()?,
        })
    }
}

pub fn jet2_of(s: &SodeSystem, p: &JetPoint1) -> Result<SodeJet2> {
    JetExprs::new(s).at(s, p)
}

/// Values `(y_P, y_T)` of the curvature mapping; `y_T[k][a][b]` is stored
/// for all `a, b` and is antisymmetric.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvatureValue {
    pub y_p: Vec<Vec<f64>>,
    pub y_t: Vec<Vec<Vec<f64>>>,
}

impl CurvatureValue {
    pub fn is_finite(&self) -> bool {
        self.y_p.iter().flatten().chain(self.y_t.iter().flatten().flatten()).all(|x| x.is_finite())
    }

    pub fn max_abs_difference(&self, other: &CurvatureValue) -> f64 {
        let a = self.y_p.iter().flatten().zip(other.y_p.iter().flatten());
        let b = self.y_t.iter().flatten().flatten().zip(other.y_t.iter().flatten().flatten());
        a.chain(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }
}

pub(crate) trait Ring: Clone + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> {
    fn ratio(n: i64, d: i64) -> Self;
    fn zero() -> Self {
        Self::ratio(0, 1)
    }
}

impl Ring for f64 {
    fn ratio(n: i64, d: i64) -> f64 {
        n as f64 / d as f64
    }
}

impl Ring for Expr {
    fn ratio(n: i64, d: i64) -> Expr {
        Expr::ratio(n, d)
    }
}

fn sum<T: Ring>(it: impl Iterator<Item = T>) -> T {
    it.fold(T::zero(), |a, b| a + b)
}

/// Curvature mapping written against accessor closures so that it serves
/// both numeric jets and symbolic jet coordinates.
pub(crate) fn curvature_formula<T: Ring>(
    n: usize,
    z: &dyn Fn(usize) -> T,
    val: &dyn Fn(usize) -> T,
    grad: &dyn Fn(usize, usize) -> T,
    hess: &dyn Fn(usize, usize, usize) -> T,
) -> (Vec<Vec<T>>, Vec<Vec<Vec<T>>>) {
    let xi = |a: usize| 1 + a;
    let vi = |a: usize| 1 + n + a;
    let half = T::ratio(1, 2);
    let quarter = T::ratio(1, 4);
    let y_p = (0..n)
        .map(|i| {
            (0..n)
                .map(|a| {
                    let transport = hess(i, 0, vi(a))
                        + sum((0..n).map(|h| z(vi(h)) * hess(i, xi(h), vi(a))))
                        + sum((0..n).map(|h| val(h) * hess(i, vi(h), vi(a))));
                    let quad = sum((0..n).map(|k| grad(k, vi(a)) * grad(i, vi(k))));
                    grad(i, xi(a)) - half.clone() * transport + quarter.clone() * quad
                })
                .collect()
        })
        .collect();
    let y_t = (0..n)
        .map(|k| {
            (0..n)
                .map(|a| {
                    (0..n)
                        .map(|b| {
                            let mixed = hess(k, xi(b), vi(a)) - hess(k, xi(a), vi(b));
                            let quad = sum((0..n).map(|h| {
                                grad(h, vi(b)) * hess(k, vi(h), vi(a)) - grad(h, vi(a)) * hess(k, vi(h), vi(b))
                            }));
                            half.clone() * mixed + quarter.clone() * quad
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    (y_p, y_t)
}

pub fn curvature_mapping(j: &SodeJet2) -> CurvatureValue {
    let (y_p, y_t) = curvature_formula::<f64>(
        j.n(),
        &|a| j.z[a],
        &|i| j.value[i],
        &|i, a| j.grad[i][a],
        &|i, a, b| j.hess[i][a][b],
    );
    CurvatureValue { y_p, y_t }
}

/// Names of the coordinates of `J²(p^21)` built from the variable names of
/// a SODE: `F1` for `ẍ^1`, `F1_x2` for its `x^2` derivative, `F1_t_v1` for
/// a second derivative (factors in coordinate order).
#[derive(Clone, Debug)]
pub struct JetCoordinates {
    pub base: Vec<Arc<str>>,
    pub value: Vec<Arc<str>>,
    pub grad: Vec<Vec<Arc<str>>>,
    pub hess: Vec<Vec<Vec<Arc<str>>>>,
}

impl JetCoordinates {
    pub fn new(s: &SodeSystem) -> JetCoordinates {
        let base = s.coords();
        let m = base.len();
        let n = s.n();
        let value: Vec<Arc<str>> = (1..=n).map(|i| Arc::from(format!("F{i}").as_str())).collect();
        let grad = value.iter().map(|f| base.iter().map(|c| Arc::from(format!("{f}_{c}").as_str())).collect()).collect();
        let hess = value
            .iter()
            .map(|f| {
                (0..m)
                    .map(|a| {
                        (0..m)
                            .map(|b| {
                                let (lo, hi) = (a.min(b), a.max(b));
                                Arc::from(format!("{f}_{}_{}", base[lo], base[hi]).as_str())
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        JetCoordinates { base, value, grad, hess }
    }

    pub fn n(&self) -> usize {
        self.value.len()
    }

    /// Fibre coordinates up to `order`, in the layout of [`SodeJet2::to_vector`].
    pub fn fiber(&self, order: usize) -> Vec<Arc<str>> {
        let m = self.base.len();
        let mut out = self.value.clone();
        if order >= 1 {
            out.extend(self.grad.iter().flatten().cloned());
        }
        if order >= 2 {
            for h in &self.hess {
                for a in 0..m {
                    out.extend(h[a][a..].iter().cloned());
                }
            }
        }
        out
    }

    /// All coordinates up to `order`, base first.
    pub fn all(&self, order: usize) -> Vec<Arc<str>> {
        let mut out = self.base.clone();
        out.extend(self.fiber(order));
        out
    }

    /// Values of every coordinate at a numeric jet.
    pub fn env(&self, j: &SodeJet2) -> HashMap<String, f64> {
        let names = self.all(2);
        names.iter().map(|s| s.to_string()).zip(j.to_vector(2)).collect()
    }

    /// Substitution taking jet coordinates to the derivatives of `F`.
    pub fn section_map(&self, jet: &JetExprs) -> Vec<(Arc<str>, Expr)> {
        let m = self.base.len();
        let mut out = Vec::new();
        for i in 0..self.n() {
            out.push((self.value[i].clone(), jet.value[i].clone()));
            for a in 0..m {
                out.push((self.grad[i][a].clone(), jet.grad[i][a].clone()));
                for b in a..m {
                    out.push((self.hess[i][a][b].clone(), jet.hess[i][a][b].clone()));
                }
            }
        }
        out
    }
}

/// The curvature mapping as expressions in the jet coordinates.
pub fn curvature_mapping_exprs(jc: &JetCoordinates) -> (Vec<Vec<Expr>>, Vec<Vec<Vec<Expr>>>) {
    let var = |s: &Arc<str>| Expr::var(s);
    let (p, t) = curvature_formula::<Expr>(
        jc.n(),
        &|a| var(&jc.base[a]),
        &|i| var(&jc.value[i]),
        &|i, a| var(&jc.grad[i][a]),
        &|i, a, b| var(&jc.hess[i][a][b]),
    );
    let simp = crate::symexpr::simplify;
    (
        p.iter().map(|r| r.iter().map(simp).collect()).collect(),
        t.iter().map(|r| r.iter().map(|c| c.iter().map(simp).collect()).collect()).collect(),
    )
}

/// `y ∘ j²σ + (P, T)` as simplified expressions in the coordinates of `s`:
/// P entries first, then T. All vanish when the mapping matches the closed
/// formulas.
pub fn section_curvature_defect(s: &SodeSystem) -> Vec<Expr> {
    let n = s.n();
    let jc = JetCoordinates::new(s);
    let map = jc.section_map(&JetExprs::new(s));
    let map: Vec<(&str, Expr)> = map.iter().map(|(k, v)| (&**k, v.clone())).collect();
    let (yp, yt) = curvature_mapping_exprs(&jc);
    let split = crate::sode::SplitCurvature::from_formulas(s);
    let simp = crate::symexpr::simplify;
    let mut out = Vec::new();
    for i in 0..n {
        for a in 0..n {
            out.push(simp(&(yp[i][a].subs_all(&map) + &split.p[i][a])));
        }
    }
    for i in 0..n {
        for a in 0..n {
            for b in 0..n {
                out.push(simp(&(yt[i][a][b].subs_all(&map) + &split.t[i][a][b])));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chern::Geometry;
    use crate::sode::random::{random_points, random_sode, SampleBox};
    use crate::symexpr::{fd_diff, is_zero};

    #[test]
    fn cubic_jet() {
        let s = SodeSystem::parse(1, &["v1^3"]).unwrap();
        let j = jet2_of(&s, &JetPoint1::new(0.0, vec![0.0], vec![2.0])).unwrap();
        assert_eq!((j.value[0], j.grad[0][2], j.hess[0][2][2]), (8.0, 12.0, 12.0));
        let z = jet2_of(&SodeSystem::flat(2), &JetPoint1::origin(2)).unwrap();
        assert_eq!(z, SodeJet2::zero(&JetPoint1::origin(2)));
    }

    #[test]
    fn jet_matches_finite_differences() {
        let s = random_sode(2, 21);
        let exprs = JetExprs::new(&s);
        let coords = s.coords();
        for p in random_points(2, 20, 3, &SampleBox::default()) {
            let j = exprs.at(&s, &p).unwrap();
            let env = s.env(&p);
            for i in 0..2 {
                for (a, c) in coords.iter().enumerate() {
                    let fd = fd_diff(&s.f()[i], c, &env, 1e-3).unwrap();
                    assert!((fd - j.grad[i][a]).abs() <= 1e-6 * (1.0 + fd.abs()));
                    for b in 0..coords.len() {
                        let fd = fd_diff(&exprs.grad[i][b], c, &env, 1e-3).unwrap();
                        assert!((fd - j.hess[i][a][b]).abs() <= 1e-6 * (1.0 + fd.abs()));
                    }
                }
            }
            assert_eq!(j.max_symmetry_defect(), 0.0);
        }
    }

    #[test]
    fn mapping_gives_minus_p_and_t() {
        for (n, seed) in [(1, 2), (2, 5)] {
            let s = random_sode(n, seed);
            let g = Geometry::new(s.clone());
            let jc = JetCoordinates::new(&s);
            assert!(section_curvature_defect(&s).iter().all(is_zero));
            let map = jc.section_map(&JetExprs::new(&s));
            let map: Vec<(&str, Expr)> = map.iter().map(|(k, v)| (&**k, v.clone())).collect();
            let (yp, yt) = curvature_mapping_exprs(&jc);
            for i in 0..n {
                for a in 0..n {
                    assert!(is_zero(&(yp[i][a].subs_all(&map) + &g.split.p[i][a])));
                    for b in 0..n {
                        assert!(is_zero(&(yt[i][a][b].subs_all(&map) + &g.split.t[i][a][b])));
                    }
                }
            }
            let p = JetPoint1::new(0.3, vec![0.1; n], vec![-0.4; n]);
            let y = curvature_mapping(&jet2_of(&s, &p).unwrap());
            let env = s.env(&p);
            assert!((y.y_p[0][0] + eval(&g.split.p[0][0], &env).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn harmonic_value() {
        let s = SodeSystem::parse(1, &["-x1"]).unwrap();
        let y = curvature_mapping(&jet2_of(&s, &JetPoint1::new(0.5, vec![0.2], vec![0.7])).unwrap());
        assert_eq!(y.y_p, vec![vec![-1.0]]);
        assert!(curvature_mapping(&SodeJet2::zero(&JetPoint1::origin(2))).y_p.iter().flatten().all(|x| *x == 0.0));
    }
}
