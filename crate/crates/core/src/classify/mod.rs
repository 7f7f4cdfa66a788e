//! Pointwise and symbolic classifiers built on the Chern curvature.
//!
//! All classifiers report necessary conditions only.

mod prolongation;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::chern::{max_abs_at, Chern, Geometry};
use crate::error::{Error, Result};
use crate::linalg::{numeric_rank, NumericRank};
use crate::sode::fields;
use crate::sode::{eval_matrix, ExprMatrix, JetPoint1, SodeSystem};
use crate::symexpr::{d, eval, is_zero, simplify, to_poly, Expr, Poly, Rational};

pub use prolongation::first_prolongation_dim;

/// How a vanishing condition was established.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    SymbolicZero,
    NumericZero,
    Violated,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub point: usize,
    pub component: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Flag {
    pub status: Status,
    pub witness: Option<Witness>,
}

impl Flag {
    pub fn holds(&self) -> bool {
        self.status != Status::Violated
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Symbolic,
    Numeric,
}

/// Curvature conditions for special fibred coordinates:
/// (a) `B = R = 0`, (b) `A = R = 0`, (c) `R = 0` and `P = T = 0`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpecialFlags {
    pub linearizable_necessary: Flag,
    pub affine_necessary: Flag,
    pub trivializable_necessary: Flag,
}

type Named = Vec<(String, Expr)>;

fn named_components(g: &Geometry) -> (Named, Named, Named, Named, Named) {
    let n = g.n();
    let c = &g.curvature;
    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut r = Vec::new();
    let mut p = Vec::new();
    let mut t = Vec::new();
    for h in 0..n {
        for k in 0..n {
            for j in 0..n {
                a.push((format!("A^{}_{}{}", h + 1, k + 1, j + 1), c.a[h][k][j].clone()));
            }
            p.push((format!("P^{}_{}", h + 1, k + 1), g.split.p[h][k].clone()));
        }
        for i in 0..n {
            for j in i + 1..n {
                for k in 0..n {
                    b.push((format!("B^{}_{}{}{}", h + 1, i + 1, j + 1, k + 1), c.b[h][i][j][k].clone()));
                }
                t.push((format!("T^{}_{}{}", h + 1, i + 1, j + 1), g.split.t[h][i][j].clone()));
            }
        }
        for i in 0..n {
            for j in i..n {
                for k in j..n {
                    r.push((format!("R^{}_{}{}{}", h + 1, i + 1, j + 1, k + 1), c.r[h][i][j][k].clone()));
                }
            }
        }
    }
    (a, b, r, p, t)
}

fn first_violation(s: &SodeSystem, comps: &[(String, Expr)], points: &[JetPoint1], tol: f64) -> Result<Option<Witness>> {
    for (name, e) in comps {
        if is_zero(e) {
            continue;
        }
        let mut best: Option<Witness> = None;
        for (i, p) in points.iter().enumerate() {
            let v = eval(e, &s.env(p))?;
            if v.abs() > tol && best.as_ref().is_none_or(|w| v.abs() > w.value.abs()) {
                best = Some(Witness { point: i, component: name.clone(), value: v });
            }
        }
        if best.is_some() {
            return Ok(best);
        }
    }
    Ok(None)
}

fn flag(s: &SodeSystem, comps: &[(String, Expr)], mode: Mode, points: &[JetPoint1], tol: f64) -> Result<Flag> {
    if mode == Mode::Symbolic && comps.iter().all(|(_, e)| is_zero(e)) {
        return Ok(Flag { status: Status::SymbolicZero, witness: None });
    }
    match first_violation(s, comps, points, tol)? {
        Some(w) => Ok(Flag { status: Status::Violated, witness: Some(w) }),
        None if mode == Mode::Numeric => Ok(Flag { status: Status::NumericZero, witness: None }),
        None => {
            // symbolically nonzero yet below tolerance at every sample point
            let (name, e) = comps.iter().find(|(_, e)| !is_zero(e)).expect("nonzero component");
            let value = points.first().map(|p| eval(e, &s.env(p))).transpose()?.unwrap_or(f64::NAN);
            Ok(Flag { status: Status::Violated, witness: Some(Witness { point: 0, component: name.clone(), value }) })
        }
    }
}

pub fn special_coordinate_conditions(
    g: &Geometry,
    mode: Mode,
    points: &[JetPoint1],
    tol: f64,
) -> Result<SpecialFlags> {
    if mode == Mode::Symbolic && !g.sode.is_polynomial() {
        return Err(Error::SymbolicModeUnsupported("F contains functions or divisions".into()));
    }
    let (a, b, r, p, t) = named_components(g);
    let cat = |xs: &[&Named]| xs.iter().flat_map(|x| x.iter().cloned()).collect::<Named>();
    Ok(SpecialFlags {
        linearizable_necessary: flag(&g.sode, &cat(&[&b, &r]), mode, points, tol)?,
        affine_necessary: flag(&g.sode, &cat(&[&a, &r]), mode, points, tol)?,
        trivializable_necessary: flag(&g.sode, &cat(&[&r, &p, &t]), mode, points, tol)?,
    })
}

/// Numeric curvature matrices `A_j`, `B_{ij}` (i<j), `R_{ij}` (i≤j) at p.
pub fn holonomy_generators(g: &Geometry, p: &JetPoint1) -> Result<Vec<DMatrix<f64>>> {
    g.curvature.generator_matrices().iter().map(|m| eval_matrix(&g.sode, m, p)).collect()
}

/// Rank of the span of the curvature matrices at p, as vectors in n²-space.
pub fn holonomy_span(g: &Geometry, p: &JetPoint1, rel_tol: f64) -> Result<NumericRank> {
    let n = g.n();
    let gens = holonomy_generators(g, p)?;
    let mut m = DMatrix::zeros(gens.len(), n * n);
    for (r, a) in gens.iter().enumerate() {
        for h in 0..n {
            for k in 0..n {
                m[(r, h * n + k)] = a[(h, k)];
            }
        }
    }
    Ok(numeric_rank(&m, rel_tol))
}

/// Trace condition for the special linear holonomy: the divergence
/// `D = Σ ∂F^h/∂v^h` must equal `F_0 + F_i v^i` with closed `(F_0, F_i)`.
#[derive(Clone, Debug, Serialize)]
pub struct UnimodularReport {
    pub status: Status,
    pub reason: Option<String>,
    pub f0: Option<String>,
    pub fi: Option<Vec<String>>,
    #[serde(skip)]
    pub decomposition: Option<(Expr, Vec<Expr>)>,
}

pub fn unimodular_test(s: &SodeSystem, points: &[JetPoint1], tol: f64) -> Result<UnimodularReport> {
    let n = s.n();
    let dv = s.derivs();
    let div = simplify(&Expr::sum((0..n).map(|h| dv.fv[h][h].clone())));
    let mut numeric = false;
    let check = |es: Vec<Expr>, what: &str, numeric: &mut bool| -> Result<Option<String>> {
        if es.iter().all(is_zero) {
            return Ok(None);
        }
        *numeric = true;
        let worst = max_abs_at(s, &es, points)?;
        Ok((worst > tol).then(|| format!("{what}: residual {worst:e}")))
    };
    let second: Vec<Expr> =
        (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| d(&d(&div, s.v_var(i)), s.v_var(j))).collect();
    let violated = |reason: String| UnimodularReport {
        status: Status::Violated,
        reason: Some(reason),
        f0: None,
        fi: None,
        decomposition: None,
    };
    if let Some(r) = check(second, "divergence not affine in v", &mut numeric)? {
        return Ok(violated(r));
    }
    let fi: Vec<Expr> = (0..n).map(|i| d(&div, s.v_var(i))).collect();
    let zero_v: Vec<(&str, Expr)> = (0..n).map(|i| (s.v_var(i), Expr::zero())).collect();
    let fi: Vec<Expr> = fi.iter().map(|e| simplify(&e.subs_all(&zero_v))).collect();
    let f0 = simplify(&div.subs_all(&zero_v));
    let mut closed = Vec::new();
    for i in 0..n {
        for j in 0..n {
            closed.push(simplify(&(d(&fi[j], s.x_var(i)) - d(&fi[i], s.x_var(j)))));
        }
    }
    if let Some(r) = check(closed, "dF_j/dx^i != dF_i/dx^j", &mut numeric)? {
        return Ok(violated(r));
    }
    let timed: Vec<Expr> = (0..n).map(|j| simplify(&(d(&fi[j], s.t_var()) - d(&f0, s.x_var(j))))).collect();
    if let Some(r) = check(timed, "dF_j/dt != dF_0/dx^j", &mut numeric)? {
        return Ok(violated(r));
    }
    Ok(UnimodularReport {
        status: if numeric { Status::NumericZero } else { Status::SymbolicZero },
        reason: None,
        f0: Some(f0.to_string()),
        fi: Some(fi.iter().map(Expr::to_string).collect()),
        decomposition: Some((f0, fi)),
    })
}

/// Largest |trace| of the curvature matrices over the points.
pub fn max_generator_trace(g: &Geometry, points: &[JetPoint1]) -> Result<f64> {
    let n = g.n();
    let traces: Vec<Expr> = g
        .curvature
        .generator_matrices()
        .iter()
        .map(|m| simplify(&Expr::sum((0..n).map(|h| m[h][h].clone()))))
        .collect();
    max_abs_at(&g.sode, &traces, points)
}

/// Residuals of the orthogonality equations for a candidate matrix U(t, x).
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct OrthogonalResiduals {
    /// `∂U/∂t + v^i ∂U/∂x^i + UW + (UW)ᵗ`
    pub pde: f64,
    /// `∂U/∂x^k + U V_k + (U V_k)ᵗ`
    pub secondary: f64,
    /// `U M + Mᵗ U` over the curvature matrices
    pub integrability: f64,
    pub pde_symbolic_zero: bool,
}

fn sym_residual(u: &ExprMatrix, m: &ExprMatrix) -> Vec<Expr> {
    let n = u.len();
    let um = |i: usize, j: usize| Expr::sum((0..n).map(|k| &u[i][k] * &m[k][j]));
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            out.push(simplify(&(um(i, j) + um(j, i))));
        }
    }
    out
}

fn check_u(s: &SodeSystem, u: &ExprMatrix, points: &[JetPoint1]) -> Result<()> {
    let n = s.n();
    if u.len() != n || u.iter().any(|r| r.len() != n) {
        return Err(Error::Invalid(format!("U must be {n}x{n}")));
    }
    for r in u {
        for e in r {
            if (0..n).any(|i| e.depends_on(s.v_var(i))) {
                return Err(Error::Invalid("U may depend on t and x only".into()));
            }
        }
    }
    for (i, j) in (0..n).flat_map(|i| (0..n).map(move |j| (i, j))) {
        if !is_zero(&(&u[i][j] - &u[j][i])) {
            let asym = max_abs_at(s, &[simplify(&(&u[i][j] - &u[j][i]))], points)?;
            if asym > 1e-12 {
                return Err(Error::Invalid("U must be symmetric".into()));
            }
        }
    }
    for (idx, p) in points.iter().enumerate() {
        let m = eval_matrix(s, u, p)?;
        if m.cholesky().is_none() {
            return Err(Error::NotPositiveDefinite(idx));
        }
    }
    Ok(())
}

pub fn orthogonal_residual(g: &Geometry, u: &ExprMatrix, points: &[JetPoint1]) -> Result<OrthogonalResiduals> {
    let s = &g.sode;
    let n = s.n();
    check_u(s, u, points)?;
    let w = &g.connection.w;
    let mut pde = sym_residual(u, w);
    for i in 0..n {
        for j in 0..n {
            let transport = d(&u[i][j], s.t_var())
                + Expr::sum((0..n).map(|k| Expr::var(s.v_var(k)) * d(&u[i][j], s.x_var(k))));
            pde[i * n + j] = simplify(&(&pde[i * n + j] + transport));
        }
    }
    let mut secondary = Vec::new();
    for k in 0..n {
        let vk: ExprMatrix = (0..n).map(|h| (0..n).map(|i| g.connection.v[h][i][k].clone()).collect()).collect();
        let mut r = sym_residual(u, &vk);
        for i in 0..n {
            for j in 0..n {
                r[i * n + j] = simplify(&(&r[i * n + j] + d(&u[i][j], s.x_var(k))));
            }
        }
        secondary.extend(r);
    }
    let integrability: Vec<Expr> =
        g.curvature.generator_matrices().iter().flat_map(|m| sym_residual(u, m)).collect();
    Ok(OrthogonalResiduals {
        pde_symbolic_zero: pde.iter().all(is_zero),
        pde: max_abs_at(s, &pde, points)?,
        secondary: max_abs_at(s, &secondary, points)?,
        integrability: max_abs_at(s, &integrability, points)?,
    })
}

/// Frame matrix of `dt⊗dt + U_ij ω^i⊗ω^j + U_ij ϖ^i⊗ϖ^j`.
pub fn lifted_metric(u: &ExprMatrix) -> ExprMatrix {
    let n = u.len();
    let mut g = vec![vec![Expr::zero(); 2 * n + 1]; 2 * n + 1];
    g[0][0] = Expr::one();
    for i in 0..n {
        for j in 0..n {
            g[1 + i][1 + j] = u[i][j].clone();
            g[1 + n + i][1 + n + j] = u[i][j].clone();
        }
    }
    g
}

/// `max |(∇_{e_a} g)(e_b, e_c)|` for a symmetric 2-tensor given in frame components.
pub fn frame_tensor_parallel_residual(g: &Geometry, metric: &ExprMatrix, points: &[JetPoint1]) -> Result<f64> {
    let ch = Chern::with_connection(&g.sode, g.connection.clone());
    let m = ch.dim();
    let pair = |x: &[Expr], y: &[Expr]| {
        simplify(&Expr::sum((0..m).flat_map(|b| (0..m).map(move |c| (b, c)))
            .filter(|&(b, c)| !x[b].is_zero() && !y[c].is_zero() && !metric[b][c].is_zero())
            .map(|(b, c)| &x[b] * &y[c] * &metric[b][c])))
    };
    let mut res = Vec::new();
    for a in 0..m {
        let ea = ch.frame_field(a).clone();
        let nab: Vec<_> = (0..m).map(|b| ch.nabla(&ch.basis(a), &ch.basis(b))).collect();
        for b in 0..m {
            for c in 0..m {
                let lhs = fields::apply(&g.sode, &ea, &metric[b][c]);
                let rhs = pair(&nab[b], &ch.basis(c)) + pair(&ch.basis(b), &nab[c]);
                res.push(simplify(&(lhs - rhs)));
            }
        }
    }
    max_abs_at(&g.sode, &res, points)
}

/// Kosambi endomorphism `K̃ = −P` and `det(λI − K̃)` coefficients from `λ^n` down.
#[derive(Clone, Debug)]
pub struct KosambiData {
    pub ktilde: ExprMatrix,
    pub charpoly: Vec<Expr>,
}

/// Symbolic; the cost grows like the n-th power of the size of P, so beyond
/// n = 2 prefer [`kosambi_charpoly_at`].
pub fn kosambi_invariants(g: &Geometry) -> KosambiData {
    let n = g.n();
    // Faddeev–LeVerrier in polynomial form; converting back to expressions
    // only at the end keeps the products from being re-canonicalised.
    let k: Vec<Vec<Poly>> = g.split.p.iter().map(|r| r.iter().map(|e| to_poly(e).neg()).collect()).collect();
    let matmul = |a: &[Vec<Poly>], b: &[Vec<Poly>]| -> Vec<Vec<Poly>> {
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let mut acc = Poly::zero();
                        for l in 0..n {
                            if !a[i][l].is_zero() && !b[l][j].is_zero() {
                                acc.add_assign(a[i][l].mul(&b[l][j]));
                            }
                        }
                        acc
                    })
                    .collect()
            })
            .collect()
    };
    let mut coeffs = vec![Expr::one()];
    let mut m: Vec<Vec<Poly>> = vec![vec![Poly::zero(); n]; n];
    let mut c = Poly::constant(num_traits::One::one());
    for step in 1..=n {
        m = matmul(&k, &m);
        for (i, row) in m.iter_mut().enumerate() {
            row[i].add_assign(c.clone());
        }
        let mut tr = Poly::zero();
        for i in 0..n {
            for l in 0..n {
                if !k[i][l].is_zero() && !m[l][i].is_zero() {
                    tr.add_assign(k[i][l].mul(&m[l][i]));
                }
            }
        }
        c = tr.scale(&Rational::new((-1).into(), (step as i64).into()));
        coeffs.push(c.to_expr());
    }
    let ktilde = k.iter().map(|r| r.iter().map(Poly::to_expr).collect()).collect();
    KosambiData { ktilde, charpoly: coeffs }
}

/// `det(λI − K̃)` coefficients at a point, from numeric P.
pub fn kosambi_charpoly_at(g: &Geometry, p: &JetPoint1) -> Result<Vec<f64>> {
    let k = eval_matrix(&g.sode, &g.split.p, p)?;
    Ok(crate::linalg::charpoly(&(-k)))
}
