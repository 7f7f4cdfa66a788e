//! SODE model and the geometry of the 1-jet space: dynamical flow,
//! fundamental tensor, eigenbundle splitting, adapted frames, and the
//! curvature (P, T) of the splitting.

pub mod fields;
pub mod random;
mod system;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::symexpr::{eval, is_zero, simplify, Expr};

pub use fields::{dynamical_flow, Field};
pub use system::{Derivs, JetPoint1, PointEnv, SodeSystem};

/// Symbolic square matrix, row-major.
pub type ExprMatrix = Vec<Vec<Expr>>;

/// Evaluates a symbolic matrix at a point.
pub fn eval_matrix(s: &SodeSystem, m: &[Vec<Expr>], p: &JetPoint1) -> Result<DMatrix<f64>> {
    let env = s.env(p);
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut out = DMatrix::zeros(rows, cols);
    for (i, row) in m.iter().enumerate() {
        for (j, e) in row.iter().enumerate() {
            out[(i, j)] = eval(e, &env)?;
        }
    }
    Ok(out)
}

pub fn eval_vector(s: &SodeSystem, v: &[Expr], p: &JetPoint1) -> Result<DVector<f64>> {
    let env = s.env(p);
    let vals = v.iter().map(|e| eval(e, &env)).collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(DVector::from_vec(vals))
}

/// Adapted frame and its dual coframe evaluated at a point. Frame columns are
/// `(X^σ, X_1.., ∂/∂v^1..)`; coframe rows are `(dt, ω^i, ϖ^i)`.
#[derive(Clone, Debug)]
pub struct FrameAtPoint {
    pub frame: DMatrix<f64>,
    pub coframe: DMatrix<f64>,
}

pub fn adapted_frame(s: &SodeSystem, p: &JetPoint1) -> Result<FrameAtPoint> {
    let fields = fields::frame_fields(s);
    let m = fields.len();
    let env = s.env(p);
    let mut frame = DMatrix::zeros(m, m);
    for (c, f) in fields.iter().enumerate() {
        for (r, e) in f.iter().enumerate() {
            frame[(r, c)] = eval(e, &env)?;
        }
    }
    let coframe = eval_matrix(s, &fields::coframe_rows(s), p)?;
    Ok(FrameAtPoint { frame, coframe })
}

/// Matrix of `L_{X^σ} J` in the coordinate basis; column μ is the image of ∂/∂z^μ.
pub fn lie_derivative_j(s: &SodeSystem) -> ExprMatrix {
    let n = s.n();
    let fv = &s.derivs().fv;
    let mut m = vec![vec![Expr::zero(); 2 * n + 1]; 2 * n + 1];
    for i in 0..n {
        m[1 + i][0] = Expr::var(s.v_var(i));
        m[1 + i][1 + i] = Expr::int(-1);
        m[1 + n + i][1 + n + i] = Expr::one();
    }
    for j in 0..n {
        let trace: Vec<Expr> = (0..n).map(|i| Expr::var(s.v_var(i)) * &fv[j][i]).collect();
        m[1 + n + j][0] = simplify(&(Expr::sum(trace) - &s.f()[j]));
        for i in 0..n {
            m[1 + n + j][1 + i] = -&fv[j][i];
        }
    }
    m
}

/// Matrix of `E^σ = ω^i ⊗ ∂/∂v^i + ϖ^i ⊗ X_i` in the coordinate basis.
pub fn endomorphism_e(s: &SodeSystem) -> ExprMatrix {
    let n = s.n();
    let rows = fields::coframe_rows(s);
    let m = 2 * n + 1;
    let mut out = vec![vec![Expr::zero(); m]; m];
    for i in 0..n {
        let xi = fields::horizontal_field(s, i);
        for col in 0..m {
            out[1 + n + i][col] = &out[1 + n + i][col] + &rows[1 + i][col];
            for (row, xr) in xi.iter().enumerate() {
                if !xr.is_zero() && !rows[1 + n + i][col].is_zero() {
                    out[row][col] = &out[row][col] + xr * &rows[1 + n + i][col];
                }
            }
        }
    }
    out.into_iter().map(|r| r.iter().map(simplify).collect()).collect()
}

/// Horizontal and vertical parts of a tangent vector at p.
pub fn split(s: &SodeSystem, x: &[f64], p: &JetPoint1) -> Result<(DVector<f64>, DVector<f64>)> {
    let n = s.n();
    let fr = adapted_frame(s, p)?;
    let x = DVector::from_column_slice(x);
    let c = &fr.coframe * &x;
    let mut h = DVector::zeros(2 * n + 1);
    for a in 0..=n {
        h += fr.frame.column(a) * c[a];
    }
    let v = &x - &h;
    Ok((h, v))
}

/// Curvature of the splitting: `P^i_j` as `p[i][j]`, `T^k_{ij}` as `t[k][i][j]`.
#[derive(Clone, Debug)]
pub struct SplitCurvature {
    pub p: ExprMatrix,
    pub t: Vec<ExprMatrix>,
}

impl SplitCurvature {
    /// Closed formulas:
    /// `P^i_j = ½X^σ(F^i_{v^j}) − F^i_{x^j} − ¼F^k_{v^j}F^i_{v^k}` and
    /// `T^k_{ij} = ½(F^k_{x^iv^j} − F^k_{x^jv^i}) + ¼(F^h_{v^i}F^k_{v^hv^j} − F^h_{v^j}F^k_{v^hv^i})`.
    pub fn from_formulas(s: &SodeSystem) -> SplitCurvature {
        let n = s.n();
        let dv = s.derivs();
        let flow = dynamical_flow(s);
        let half = Expr::ratio(1, 2);
        let quarter = Expr::ratio(1, 4);
        let p = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let prod: Vec<Expr> = (0..n).map(|k| &dv.fv[k][j] * &dv.fv[i][k]).collect();
                        simplify(
                            &(&half * fields::apply(s, &flow, &dv.fv[i][j]) - &dv.fx[i][j]
                                - &quarter * Expr::sum(prod)),
                        )
                    })
                    .collect()
            })
            .collect();
        let t = (0..n)
            .map(|k| {
                let mut m = vec![vec![Expr::zero(); n]; n];
                for i in 0..n {
                    for j in i + 1..n {
                        let quad: Vec<Expr> = (0..n)
                            .map(|h| &dv.fv[h][i] * &dv.fvv[k][h][j] - &dv.fv[h][j] * &dv.fvv[k][h][i])
                            .collect();
                        let e = simplify(
                            &(&half * (&dv.fxv[k][i][j] - &dv.fxv[k][j][i]) + &quarter * Expr::sum(quad)),
                        );
                        m[j][i] = simplify(&-&e);
                        m[i][j] = e;
                    }
                }
                m
            })
            .collect();
        SplitCurvature { p, t }
    }

    /// The same components read off as vertical parts of brackets of
    /// horizontal fields: `[X^σ, X_j]^v = P^i_j ∂/∂v^i`, `[X_i, X_j]^v = T^k_{ij} ∂/∂v^k`.
    pub fn from_brackets(s: &SodeSystem) -> SplitCurvature {
        let n = s.n();
        let flow = dynamical_flow(s);
        let hs: Vec<Field> = (0..n).map(|i| fields::horizontal_field(s, i)).collect();
        let mut p = vec![vec![Expr::zero(); n]; n];
        for j in 0..n {
            let b = fields::to_frame(s, &fields::bracket(s, &flow, &hs[j]));
            for i in 0..n {
                p[i][j] = b[1 + n + i].clone();
            }
        }
        let mut t = vec![vec![vec![Expr::zero(); n]; n]; n];
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let b = fields::to_frame(s, &fields::bracket(s, &hs[i], &hs[j]));
                for k in 0..n {
                    t[k][i][j] = b[1 + n + k].clone();
                }
            }
        }
        SplitCurvature { p, t }
    }

    pub fn flat(n: usize) -> SplitCurvature {
        SplitCurvature { p: vec![vec![Expr::zero(); n]; n], t: vec![vec![vec![Expr::zero(); n]; n]; n] }
    }

    /// Componentwise differences, P entries first, then T.
    pub fn difference(&self, other: &SplitCurvature) -> Vec<Expr> {
        let mut out: Vec<Expr> =
            self.p.iter().flatten().zip(other.p.iter().flatten()).map(|(a, b)| simplify(&(a - b))).collect();
        for (a, b) in self.t.iter().flatten().flatten().zip(other.t.iter().flatten().flatten()) {
            out.push(simplify(&(a - b)));
        }
        out
    }
}

/// Closed-form (P, T), checked against the bracket computation. The check is
/// symbolic; residues that do not simplify to zero are sampled numerically.
pub fn splitting_curvature(s: &SodeSystem) -> Result<SplitCurvature> {
    let formulas = SplitCurvature::from_formulas(s);
    let brackets = SplitCurvature::from_brackets(s);
    let diff = formulas.difference(&brackets);
    let residual = residual_max(s, &diff, 8, 0x5eed)?;
    if residual > 1e-10 {
        return Err(Error::OracleMismatch { what: "splitting curvature".into(), residual });
    }
    Ok(formulas)
}

/// Largest relative size of a list of expressions that should vanish: exact
/// zero when every entry simplifies to 0, else sampled at seeded points of the
/// default box (points outside the domain are skipped).
pub fn residual_max(s: &SodeSystem, residues: &[Expr], samples: usize, seed: u64) -> Result<f64> {
    let open: Vec<&Expr> = residues.iter().filter(|e| !is_zero(e)).collect();
    if open.is_empty() {
        return Ok(0.0);
    }
    let pts = random::random_points(s.n(), samples, seed, &random::SampleBox::default());
    let mut worst: f64 = 0.0;
    let mut evaluated = false;
    for p in &pts {
        let env = s.env(p);
        for e in &open {
            if let Ok(v) = eval(e, &env) {
                evaluated = true;
                worst = worst.max(v.abs());
            }
        }
    }
    if !evaluated {
        return Err(Error::Invalid("residual could not be evaluated at any sample point".into()));
    }
    Ok(worst)
}

/// A symbolic derivative `∂expr/∂var` to compare with finite differences.
#[derive(Clone, Debug)]
pub struct DerivativePair {
    pub expr: Expr,
    pub var: String,
    pub derivative: Expr,
}

/// Every cached derivative of F, each paired with the expression it was
/// differentiated from.
pub fn derivative_pairs(s: &SodeSystem) -> Vec<DerivativePair> {
    let n = s.n();
    let dv = s.derivs();
    let f = s.f();
    let mut out = Vec::new();
    let mut push = |e: &Expr, var: &str, de: &Expr| {
        out.push(DerivativePair { expr: e.clone(), var: var.to_string(), derivative: de.clone() })
    };
    for i in 0..n {
        push(&f[i], s.t_var(), &dv.ft[i]);
        for j in 0..n {
            push(&f[i], s.x_var(j), &dv.fx[i][j]);
            push(&f[i], s.v_var(j), &dv.fv[i][j]);
            push(&dv.fv[i][j], s.t_var(), &dv.ftv[i][j]);
            for k in 0..n {
                push(&dv.fv[i][k], s.x_var(j), &dv.fxv[i][j][k]);
                push(&dv.fv[i][j], s.v_var(k), &dv.fvv[i][j][k]);
                for l in 0..n {
                    push(&dv.fvv[i][j][k], s.v_var(l), &dv.fvvv[i][j][k][l]);
                }
            }
        }
    }
    out
}

/// Largest `|symbolic − fd| / max(1, |symbolic|)` over pairs and points,
/// with Richardson-extrapolated central differences of step `h`.
pub fn derivative_oracle(s: &SodeSystem, pairs: &[DerivativePair], points: &[JetPoint1], h: f64) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for p in points {
        let env = s.env(p);
        for q in pairs {
            let exact = eval(&q.derivative, &env)?;
            let approx = crate::symexpr::fd_diff(&q.expr, &q.var, &env, h)?;
            let r = (exact - approx).abs() / exact.abs().max(1.0);
            worst = worst.max(if r.is_nan() { f64::INFINITY } else { r });
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::Rational;

    fn osc(zeta: Rational) -> SodeSystem {
        let vars = crate::symexpr::VarSet::standard(1).with_parameter("zeta").unwrap();
        SodeSystem::parse_with(vars, &["-x1 - 2*zeta*v1"], &[("zeta", zeta)]).unwrap()
    }

    fn half() -> Rational {
        Rational::new(1.into(), 2.into())
    }

    #[test]
    fn flat_frame_is_identity() {
        let s = SodeSystem::flat(2);
        let p = JetPoint1::new(0.3, vec![0.1, -0.2], vec![0.5, 0.7]);
        let fr = adapted_frame(&s, &p).unwrap();
        for a in 0..5 {
            for b in 1..5 {
                assert_eq!(fr.frame[(b, a)], if a == b { 1.0 } else if a == 0 && b <= 2 { p.v[b - 1] } else { 0.0 });
            }
        }
        assert_eq!(fr.coframe[(1, 0)], -0.5);
        assert_eq!(fr.coframe[(3, 3)], 1.0);
    }

    #[test]
    fn oscillator_horizontal_field() {
        let s = osc(half());
        let fr = adapted_frame(&s, &JetPoint1::new(0.0, vec![0.4], vec![-0.3])).unwrap();
        assert_eq!(fr.frame[(1, 1)], 1.0);
        assert_eq!(fr.frame[(2, 1)], -0.5);
    }

    #[test]
    fn split_examples() {
        let flat = SodeSystem::flat(1);
        let p = JetPoint1::new(0.0, vec![1.0], vec![0.0]);
        let (h, v) = split(&flat, &[1.0, 0.0, 0.0], &p).unwrap();
        assert_eq!(h.as_slice(), &[1.0, 0.0, 0.0]);
        assert_eq!(v.as_slice(), &[0.0, 0.0, 0.0]);
        let s = SodeSystem::parse(1, &["-x1"]).unwrap();
        let (h, v) = split(&s, &[1.0, 0.0, 0.0], &p).unwrap();
        assert_eq!(v.as_slice(), &[0.0, 0.0, 1.0]);
        assert_eq!(h.as_slice(), &[1.0, 0.0, -1.0]);
        let (h, v) = split(&s, &[0.0, 0.0, 1.0], &p).unwrap();
        assert_eq!(h.as_slice(), &[0.0, 0.0, 0.0]);
        assert_eq!(v.as_slice(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn split_curvature_examples() {
        let k = splitting_curvature(&SodeSystem::flat(2)).unwrap();
        assert!(k.p.iter().flatten().chain(k.t.iter().flatten().flatten()).all(Expr::is_zero));
        let k = splitting_curvature(&osc(half())).unwrap();
        assert_eq!(k.p[0][0], Expr::ratio(3, 4));
        let s = SodeSystem::parse(2, &["x1*v2", "0"]).unwrap();
        let k = splitting_curvature(&s).unwrap();
        assert_eq!(k.t[0][0][1], Expr::ratio(1, 2));
        assert_eq!(k.t[0][1][0], Expr::ratio(-1, 2));
    }

    #[test]
    fn oscillator_p_is_one_minus_zeta_squared() {
        let vars = crate::symexpr::VarSet::standard(1).with_parameter("zeta").unwrap();
        let s = SodeSystem::parse_with(vars, &["-x1 - 2*zeta*v1"], &[("zeta", Rational::new(3.into(), 10.into()))])
            .unwrap();
        let k = SplitCurvature::from_formulas(&s);
        assert_eq!(k.p[0][0], Expr::ratio(91, 100));
    }

    #[test]
    fn lie_derivative_j_against_bracket_definition() {
        // (L_X J)(Y) = [X, J Y] − J [X, Y] with J = ω^i ⊗ ∂/∂v^i
        let s = SodeSystem::parse(2, &["x2*v1^2 - t*v2", "x1*x2*v1*v2 + v2^3"]).unwrap();
        let n = 2;
        let m = lie_derivative_j(&s);
        let flow = dynamical_flow(&s);
        let j_apply = |y: &[Expr]| -> Field {
            let mut out = vec![Expr::zero(); 2 * n + 1];
            for i in 0..n {
                out[1 + n + i] = simplify(&(&y[1 + i] - Expr::var(s.v_var(i)) * &y[0]));
            }
            out
        };
        for mu in 0..2 * n + 1 {
            let e = fields::coordinate_field(&s, mu);
            let a = fields::bracket(&s, &flow, &j_apply(&e));
            let b = j_apply(&fields::bracket(&s, &flow, &e));
            for r in 0..2 * n + 1 {
                assert!(is_zero(&(&a[r] - &b[r] - &m[r][mu])), "entry {r},{mu}");
            }
        }
    }

    #[test]
    fn e_examples() {
        let s = SodeSystem::flat(2);
        let e = endomorphism_e(&s);
        assert!(e[3][1].is_one() && e[4][2].is_one());
        let s = SodeSystem::parse(1, &["x1*v1^2 + t"]).unwrap();
        let e = endomorphism_e(&s);
        let flow = dynamical_flow(&s);
        for row in &e {
            let img: Vec<Expr> = row.iter().zip(&flow).map(|(a, b)| a * b).collect();
            assert!(is_zero(&Expr::sum(img)));
        }
        let x1 = fields::horizontal_field(&s, 0);
        for r in 0..3 {
            assert!(is_zero(&(&e[r][2] - &x1[r])));
        }
    }
}

/// Numeric eigen-analysis of `L_{X^σ}J` at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct Eigenstructure {
    /// Real parts of the eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// Largest imaginary part seen.
    pub max_imaginary: f64,
    /// Dimensions of the kernels of `M`, `M − I`, `M + I`.
    pub multiplicities: [usize; 3],
    /// `max |M(M − I)(M + I)|`, zero exactly when M is diagonalizable with
    /// spectrum in {0, ±1}.
    pub minimal_polynomial_residual: f64,
    /// `max |M e_a − λ_a e_a|` over the adapted frame with λ = (0, −1.., +1..).
    pub frame_residual: f64,
}

pub fn eigenstructure(s: &SodeSystem, p: &JetPoint1) -> Result<Eigenstructure> {
    let n = s.n();
    let m = eval_matrix(s, &lie_derivative_j(s), p)?;
    let dim = 2 * n + 1;
    let eig = m.clone().schur().complex_eigenvalues();
    let mut eigenvalues: Vec<f64> = eig.iter().map(|c| c.re).collect();
    eigenvalues.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let max_imaginary = eig.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
    let id = DMatrix::<f64>::identity(dim, dim);
    let nullity = |a: &DMatrix<f64>| dim - crate::linalg::numeric_rank(a, 1e-9).rank;
    let multiplicities = [nullity(&m), nullity(&(&m - &id)), nullity(&(&m + &id))];
    let minpoly = &m * (&m - &id) * (&m + &id);
    let minimal_polynomial_residual = minpoly.iter().fold(0.0, |a: f64, x| a.max(x.abs()));
    let fr = adapted_frame(s, p)?;
    let mut frame_residual: f64 = 0.0;
    for a in 0..dim {
        let lambda = if a == 0 { 0.0 } else if a <= n { -1.0 } else { 1.0 };
        let col = fr.frame.column(a);
        let r = &m * col - col * lambda;
        frame_residual = frame_residual.max(r.amax());
    }
    Ok(Eigenstructure { eigenvalues, max_imaginary, multiplicities, minimal_polynomial_residual, frame_residual })
}
