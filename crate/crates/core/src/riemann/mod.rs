//! Metrics, their geodesic sprays, and the comparison of the spray's
//! torsion and curvature with the Riemann tensor.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::chern::{max_abs_at, Geometry};
use crate::classify::{frame_tensor_parallel_residual, lifted_metric, orthogonal_residual};
use crate::error::{Error, Result};
use crate::sode::{eval_matrix, ExprMatrix, JetPoint1, SodeSystem};
use crate::symexpr::{d, is_zero, parse, simplify, Expr, Role, VarSet};

/// Time-independent metric `g_ij(x)` on the position coordinates of `vars`.
#[derive(Clone, Debug)]
pub struct MetricField {
    vars: VarSet,
    pub g: ExprMatrix,
}

fn det(m: &[Vec<Expr>]) -> Expr {
    match m.len() {
        0 => Expr::one(),
        1 => m[0][0].clone(),
        n => Expr::sum((0..n).filter(|&c| !m[0][c].is_zero()).map(|c| {
            let sign = if c % 2 == 0 { Expr::one() } else { Expr::int(-1) };
            sign * &m[0][c] * det(&minor(m, 0, c))
        })),
    }
}

fn minor(m: &[Vec<Expr>], r: usize, c: usize) -> Vec<Vec<Expr>> {
    m.iter()
        .enumerate()
        .filter(|(i, _)| *i != r)
        .map(|(_, row)| row.iter().enumerate().filter(|(j, _)| *j != c).map(|(_, e)| e.clone()).collect())
        .collect()
}

impl MetricField {
    pub fn new(vars: VarSet, g: ExprMatrix) -> Result<MetricField> {
        let xs = vars.names_with(Role::Position);
        let n = xs.len();
        if g.len() != n || g.iter().any(|r| r.len() != n) {
            return Err(Error::Invalid(format!("metric must be {n}x{n}")));
        }
        let g: ExprMatrix = g.iter().map(|r| r.iter().map(simplify).collect()).collect();
        for i in 0..n {
            for j in 0..n {
                if g[i][j] != g[j][i] && !is_zero(&(&g[i][j] - &g[j][i])) {
                    return Err(Error::Invalid("metric must be symmetric".into()));
                }
                if g[i][j].variables().iter().any(|v| !xs.contains(v)) {
                    return Err(Error::Invalid("metric may depend on positions only".into()));
                }
            }
        }
        Ok(MetricField { vars, g })
    }

    pub fn parse(n: usize, rows: &[Vec<&str>]) -> Result<MetricField> {
        let vars = VarSet::standard(n);
        let g = rows
            .iter()
            .map(|r| r.iter().map(|e| Ok(parse(e, &vars)?)).collect::<Result<Vec<_>>>())
            .collect::<Result<_>>()?;
        MetricField::new(vars, g)
    }

    pub fn identity(n: usize) -> MetricField {
        let g = (0..n).map(|i| (0..n).map(|j| if i == j { Expr::one() } else { Expr::zero() }).collect()).collect();
        MetricField::new(VarSet::standard(n), g).expect("identity")
    }

    /// `diag(1, sin²x1)`
    pub fn sphere() -> MetricField {
        MetricField::parse(2, &[vec!["1", "0"], vec!["0", "sin(x1)^2"]]).expect("sphere")
    }

    pub fn n(&self) -> usize {
        self.g.len()
    }

    pub fn vars(&self) -> &VarSet {
        &self.vars
    }

    fn x(&self, i: usize) -> String {
        self.vars.names_with(Role::Position)[i].to_string()
    }

    pub fn scaled(&self, c: Expr) -> MetricField {
        let g = self.g.iter().map(|r| r.iter().map(|e| simplify(&(&c * e))).collect()).collect();
        MetricField::new(self.vars.clone(), g).expect("scaled metric")
    }

    pub fn determinant(&self) -> Expr {
        simplify(&det(&self.g))
    }

    /// Symbolic inverse by cofactors.
    pub fn inverse(&self) -> Result<ExprMatrix> {
        let n = self.n();
        let dt = self.determinant();
        if is_zero(&dt) {
            return Err(Error::SingularMetric);
        }
        Ok((0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let sign = if (i + j) % 2 == 0 { Expr::one() } else { Expr::int(-1) };
                        simplify(&(sign * det(&minor(&self.g, j, i)) / &dt))
                    })
                    .collect()
            })
            .collect())
    }

    /// Fails with `SingularMetric` when `|det g| < 1e-12` at a point.
    pub fn check_points(&self, points: &[JetPoint1]) -> Result<()> {
        let s = SodeSystem::new(self.vars.clone(), vec![Expr::zero(); self.n()])?;
        let dt = self.determinant();
        for p in points {
            let det = crate::symexpr::eval(&dt, &s.env(p))?;
            if det.is_nan() || det.abs() < 1e-12 {
                return Err(Error::SingularMetric);
            }
        }
        Ok(())
    }
}

/// `Γ[h][i][j] = ½ g^{hk}(∂_j g_ki + ∂_i g_jk − ∂_k g_ij)`.
pub fn christoffel(m: &MetricField) -> Result<Vec<ExprMatrix>> {
    let n = m.n();
    let inv = m.inverse()?;
    let dg: Vec<Vec<Vec<Expr>>> =
        (0..n).map(|a| (0..n).map(|b| (0..n).map(|c| d(&m.g[a][b], &m.x(c))).collect()).collect()).collect();
    Ok((0..n)
        .map(|h| {
            (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            let terms = (0..n).filter(|&k| !inv[h][k].is_zero()).map(|k| {
                                &inv[h][k] * (&dg[k][i][j] + &dg[j][k][i] - &dg[i][j][k])
                            });
                            simplify(&(Expr::ratio(1, 2) * Expr::sum(terms)))
                        })
                        .collect()
                })
                .collect()
        })
        .collect())
}

/// `F^h = −Γ^h_ij v^i v^j`.
pub fn geodesic_spray(m: &MetricField) -> Result<SodeSystem> {
    let n = m.n();
    let gamma = christoffel(m)?;
    let vs = m.vars.names_with(Role::Velocity);
    let f = (0..n)
        .map(|h| {
            let terms = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| {
                -(&gamma[h][i][j] * Expr::var(&vs[i]) * Expr::var(&vs[j]))
            });
            simplify(&Expr::sum(terms))
        })
        .collect();
    SodeSystem::new(m.vars.clone(), f)
}

/// `R[h][k][i][j] = ∂_iΓ^h_{jk} − ∂_jΓ^h_{ik} + Γ^h_{im}Γ^m_{jk} − Γ^h_{jm}Γ^m_{ik}`.
pub fn riemann_tensor(m: &MetricField) -> Result<Vec<Vec<ExprMatrix>>> {
    let n = m.n();
    let g = christoffel(m)?;
    let r = |h: usize, k: usize, i: usize, j: usize| {
        let mut terms = vec![d(&g[h][j][k], &m.x(i)), -d(&g[h][i][k], &m.x(j))];
        for l in 0..n {
            terms.push(&g[h][i][l] * &g[l][j][k]);
            terms.push(-(&g[h][j][l] * &g[l][i][k]));
        }
        simplify(&Expr::sum(terms))
    };
    Ok((0..n)
        .map(|h| (0..n).map(|k| (0..n).map(|i| (0..n).map(|j| r(h, k, i, j)).collect()).collect()).collect())
        .collect())
}

/// Residuals of the four contractions relating the spray's torsion and
/// curvature to the Riemann tensor.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CrossCheck {
    /// `T^k_ij − R^k_{rji} v^r`
    pub t: f64,
    /// `P^h_j − R^h_{sjr} v^r v^s`
    pub p: f64,
    /// `A^h_{kj} − R^h_{krj} v^r`
    pub a: f64,
    /// `B^h_{ijk} − R^h_{kij}`
    pub b: f64,
    /// number of the residual expressions that simplify to zero
    pub symbolic_zero: usize,
    pub total: usize,
}

impl CrossCheck {
    pub fn max(&self) -> f64 {
        self.t.max(self.p).max(self.a).max(self.b)
    }
}

pub fn cross_check(m: &MetricField, points: &[JetPoint1]) -> Result<CrossCheck> {
    m.check_points(points)?;
    let n = m.n();
    let s = geodesic_spray(m)?;
    let geo = Geometry::new(s.clone());
    let rt = riemann_tensor(m)?;
    let v = |r: usize| Expr::var(s.v_var(r));
    let mut rt_res = Vec::new();
    let mut rp = Vec::new();
    let mut ra = Vec::new();
    let mut rb = Vec::new();
    for h in 0..n {
        for i in 0..n {
            for j in 0..n {
                let tc = Expr::sum((0..n).map(|r| &rt[h][r][j][i] * v(r)));
                rt_res.push(simplify(&(&geo.split.t[h][i][j] - tc)));
                let ac = Expr::sum((0..n).map(|r| &rt[h][i][r][j] * v(r)));
                ra.push(simplify(&(&geo.curvature.a[h][i][j] - ac)));
                for k in 0..n {
                    rb.push(simplify(&(&geo.curvature.b[h][i][j][k] - &rt[h][k][i][j])));
                }
            }
            let pc = Expr::sum((0..n).flat_map(|r| (0..n).map(move |q| (r, q))).map(|(r, q)| &rt[h][q][i][r] * v(r) * v(q)));
            rp.push(simplify(&(&geo.split.p[h][i] - pc)));
        }
    }
    let all: Vec<&Expr> = rt_res.iter().chain(&rp).chain(&ra).chain(&rb).collect();
    Ok(CrossCheck {
        t: max_abs_at(&s, &rt_res, points)?,
        p: max_abs_at(&s, &rp, points)?,
        a: max_abs_at(&s, &ra, points)?,
        b: max_abs_at(&s, &rb, points)?,
        symbolic_zero: all.iter().filter(|e| is_zero(e)).count(),
        total: all.len(),
    })
}

/// Frame matrix of `dt² + g_ij(ω^iϖ^j + ϖ^iω^j) + g_ij v^i(dt ϖ^j + ϖ^j dt)`,
/// i.e. `dt² + g_ij(dx^iϖ^j + ϖ^j dx^i)`; with `velocity_term = false` the
/// last summand is dropped.
pub fn hyperbolic_companion(m: &MetricField, velocity_term: bool) -> ExprMatrix {
    let n = m.n();
    let vs = m.vars.names_with(Role::Velocity);
    let mut h = vec![vec![Expr::zero(); 2 * n + 1]; 2 * n + 1];
    h[0][0] = Expr::one();
    for j in 0..n {
        for i in 0..n {
            h[1 + i][1 + n + j] = m.g[i][j].clone();
            h[1 + n + j][1 + i] = m.g[i][j].clone();
        }
        if velocity_term {
            let gv = simplify(&Expr::sum((0..n).map(|i| &m.g[i][j] * Expr::var(&vs[i]))));
            h[0][1 + n + j] = gv.clone();
            h[1 + n + j][0] = gv;
        }
    }
    h
}

/// `(positive, negative)` eigenvalue counts of a symmetric matrix.
pub fn signature(a: &DMatrix<f64>, tol: f64) -> (usize, usize) {
    let ev = a.clone().symmetric_eigen().eigenvalues;
    (ev.iter().filter(|x| **x > tol).count(), ev.iter().filter(|x| **x < -tol).count())
}

/// Checks of the metric example: the orthogonality equations with `U = g`,
/// parallelism of the lifted metric and of the two companions, and the
/// signature of the companion.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricChecks {
    pub pde: f64,
    pub pde_symbolic_zero: bool,
    pub secondary: f64,
    pub integrability: f64,
    pub lifted_parallel: f64,
    /// not zero in general: `h(X^σ, ∂/∂v^j) = g_ij v^i` is not constant
    /// along the parallel vertical frame
    pub companion_parallel: f64,
    pub split_companion_parallel: f64,
    pub companion_signature: Vec<(usize, usize)>,
}

pub fn metric_checks(m: &MetricField, points: &[JetPoint1]) -> Result<MetricChecks> {
    m.check_points(points)?;
    let geo = Geometry::new(geodesic_spray(m)?);
    let o = orthogonal_residual(&geo, &m.g, points)?;
    let h = hyperbolic_companion(m, true);
    let companion_signature =
        points.iter().map(|p| Ok(signature(&eval_matrix(&geo.sode, &h, p)?, 1e-12))).collect::<Result<_>>()?;
    Ok(MetricChecks {
        pde: o.pde,
        pde_symbolic_zero: o.pde_symbolic_zero,
        secondary: o.secondary,
        integrability: o.integrability,
        lifted_parallel: frame_tensor_parallel_residual(&geo, &lifted_metric(&m.g), points)?,
        companion_parallel: frame_tensor_parallel_residual(&geo, &h, points)?,
        split_companion_parallel: frame_tensor_parallel_residual(&geo, &hyperbolic_companion(m, false), points)?,
        companion_signature,
    })
}

/// `Σ v^r ∂f/∂v^r − k f` for each expression.
pub fn euler_defect(s: &SodeSystem, f: &Expr, k: i64) -> Expr {
    let e = Expr::sum((0..s.n()).map(|r| Expr::var(s.v_var(r)) * d(f, s.v_var(r))));
    simplify(&(e - Expr::int(k) * f))
}

/// Maximum homogeneity defects of `(T, A, B, P)` with degrees `(1, 1, 0, 2)`,
/// and of `R` (which must vanish).
pub fn spray_homogeneity(g: &Geometry, points: &[JetPoint1]) -> Result<[f64; 5]> {
    let s = &g.sode;
    let n = s.n();
    let mut sets: [Vec<Expr>; 5] = Default::default();
    for h in 0..n {
        for i in 0..n {
            sets[3].push(euler_defect(s, &g.split.p[h][i], 2));
            for j in 0..n {
                sets[0].push(euler_defect(s, &g.split.t[h][i][j], 1));
                sets[1].push(euler_defect(s, &g.curvature.a[h][i][j], 1));
                for k in 0..n {
                    sets[2].push(euler_defect(s, &g.curvature.b[h][i][j][k], 0));
                    sets[4].push(g.curvature.r[h][i][j][k].clone());
                }
            }
        }
    }
    let mut out = [0.0; 5];
    for (o, set) in out.iter_mut().zip(&sets) {
        *o = max_abs_at(s, set, points)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sode::random::{random_points, SampleBox};

    fn sphere_points(count: usize) -> Vec<JetPoint1> {
        random_points(2, count, 5, &SampleBox { t: [0.0, 1.0], x: [0.3, 2.8], v: [-1.0, 1.0] })
    }

    #[test]
    fn flat_metric() {
        let m = MetricField::identity(2);
        assert!(christoffel(&m).unwrap().iter().flatten().flatten().all(Expr::is_zero));
        assert!(geodesic_spray(&m).unwrap().f().iter().all(Expr::is_zero));
        assert!(riemann_tensor(&m).unwrap().iter().flatten().flatten().flatten().all(Expr::is_zero));
        let c = cross_check(&m, &sphere_points(5)).unwrap();
        assert_eq!((c.max(), c.symbolic_zero), (0.0, c.total));
    }

    #[test]
    fn sphere_values() {
        let m = MetricField::sphere();
        let g = christoffel(&m).unwrap();
        let vs = m.vars().clone();
        let e = |s: &str| simplify(&parse(s, &vs).unwrap());
        assert_eq!(g[0][1][1], e("-sin(x1)*cos(x1)"));
        assert_eq!(g[1][0][1], e("cos(x1)/sin(x1)"));
        let s = geodesic_spray(&m).unwrap();
        assert_eq!(s.f()[0], e("sin(x1)*cos(x1)*v2^2"));
        assert_eq!(s.f()[1], e("-2*cos(x1)/sin(x1)*v1*v2"));
        let r = riemann_tensor(&m).unwrap();
        let pts = sphere_points(10);
        let diff = simplify(&(&r[0][1][0][1] - e("sin(x1)^2")));
        assert!(max_abs_at(&s, &[diff], &pts).unwrap() < 1e-12);
        let c = cross_check(&m, &sphere_points(50)).unwrap();
        assert!(c.max() <= 1e-9, "{c:?}");
    }

    #[test]
    fn generic_metric_cross_check() {
        let m = MetricField::parse(2, &[vec!["2 + x2^2", "x1*x2/3"], vec!["x1*x2/3", "1 + x1^2"]]).unwrap();
        let c = cross_check(&m, &random_points(2, 20, 1, &SampleBox::default())).unwrap();
        assert!(c.max() <= 1e-9, "{c:?}");
        let m = MetricField::parse(2, &[vec!["exp(2*x1)", "0"], vec!["0", "exp(2*x1)"]]).unwrap();
        let g = christoffel(&m).unwrap();
        assert_eq!(g[0][0][0], Expr::one());
        assert_eq!(g[0][1][1], Expr::int(-1));
        assert_eq!(g[1][0][1], Expr::one());
    }

    #[test]
    fn metric_example() {
        let m = MetricField::sphere();
        let pts = sphere_points(20);
        let k = metric_checks(&m, &pts).unwrap();
        assert!(k.pde <= 1e-12 && k.secondary <= 1e-12 && k.integrability <= 1e-12, "{k:?}");
        assert!(k.lifted_parallel <= 1e-8, "{k:?}");
        assert!(k.split_companion_parallel <= 1e-8 && k.companion_parallel > 0.1, "{k:?}");
        assert!(k.companion_signature.iter().all(|s| *s == (3, 2)));
    }

    #[test]
    fn spray_structure() {
        let m = MetricField::parse(2, &[vec!["2 + x2^2", "x1*x2/3"], vec!["x1*x2/3", "1 + x1^2"]]).unwrap();
        let g = Geometry::new(geodesic_spray(&m).unwrap());
        let h = spray_homogeneity(&g, &random_points(2, 10, 2, &SampleBox::default())).unwrap();
        assert!(h.iter().all(|x| *x <= 1e-10), "{h:?}");
        let pts = sphere_points(5);
        let hol = crate::classify::holonomy_span(&Geometry::new(geodesic_spray(&MetricField::sphere()).unwrap()), &pts[0], 1e-8);
        assert!(hol.unwrap().rank <= 1);
    }

    #[test]
    fn scaling_invariance() {
        let m = MetricField::parse(2, &[vec!["2 + x2^2", "x1*x2/3"], vec!["x1*x2/3", "1 + x1^2"]]).unwrap();
        let a = riemann_tensor(&m).unwrap();
        let b = riemann_tensor(&m.scaled(Expr::int(7))).unwrap();
        for (x, y) in a.iter().flatten().flatten().flatten().zip(b.iter().flatten().flatten().flatten()) {
            assert!(is_zero(&(x - y)));
        }
        let z = vec![vec![Expr::zero(); 2]; 2];
        assert!(matches!(MetricField::new(VarSet::standard(2), z).unwrap().inverse(), Err(Error::SingularMetric)));
    }
}
