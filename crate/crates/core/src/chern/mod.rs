//! The Chern connection of a SODE in its adapted frame.
//!
//! Frame index convention: `e_0 = X^σ`, `e_{1+i} = X_i`, `e_{1+n+i} = ∂/∂v^i`.
//! Vector fields handed to this module are frame components (`Vec<Expr>` of
//! length `2n+1`). Torsion is `Tor(X,Y) = ∇_X Y − ∇_Y X − [X,Y]` and
//! curvature `R(X,Y)Z = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_{[X,Y]} Z`.

mod checks;

use crate::error::{Error, Result};
use crate::sode::fields::{self, Field};
use crate::sode::{ExprMatrix, SodeSystem, SplitCurvature};
use crate::symexpr::{d, is_zero, simplify, Expr};

pub use checks::{
    max_abs_at, torsion_residual, verify_characterization, verify_characterization_with, verify_curvature_pattern,
    verify_structure_identities, CharacterizationResiduals, StructureResiduals,
};

/// Coefficients `w^i_j = ½ ∂F^i/∂v^j` and `v^h_{ik} = ½ ∂²F^h/∂v^i∂v^k`
/// (`v[h][i][k]`), which fix every covariant derivative of frame fields.
#[derive(Clone, Debug)]
pub struct ConnectionData {
    pub w: ExprMatrix,
    pub v: Vec<ExprMatrix>,
}

pub fn connection_data(s: &SodeSystem) -> ConnectionData {
    let n = s.n();
    let dv = s.derivs();
    let half = Expr::ratio(1, 2);
    let w = (0..n).map(|i| (0..n).map(|j| simplify(&(&half * &dv.fv[i][j]))).collect()).collect();
    let v = (0..n)
        .map(|h| (0..n).map(|i| (0..n).map(|k| simplify(&(&half * &dv.fvv[h][i][k]))).collect()).collect())
        .collect();
    ConnectionData { w, v }
}

impl ConnectionData {
    pub fn n(&self) -> usize {
        self.w.len()
    }

    /// Frame components of `∇_{e_a} e_b`:
    /// `∇_{X^σ}X_i = −w^j_i X_j`, `∇_{X^σ}∂_i = −w^j_i ∂_j`,
    /// `∇_{X_j}X_i = −v^k_{ij} X_k`, `∇_{X_j}∂_i = −v^k_{ij} ∂_k`, all others 0.
    pub fn gamma(&self, a: usize, b: usize) -> Field {
        let n = self.n();
        let mut out = vec![Expr::zero(); 2 * n + 1];
        if b == 0 || a > n {
            return out;
        }
        let (block, i) = if b <= n { (1, b - 1) } else { (1 + n, b - 1 - n) };
        for k in 0..n {
            let c = if a == 0 { &self.w[k][i] } else { &self.v[k][i][a - 1] };
            out[block + k] = -c;
        }
        out
    }
}

/// Covariant differentiation with cached frame data.
pub struct Chern<'a> {
    pub s: &'a SodeSystem,
    pub conn: ConnectionData,
    frame: Vec<Field>,
}

impl<'a> Chern<'a> {
    pub fn new(s: &'a SodeSystem) -> Chern<'a> {
        Chern::with_connection(s, connection_data(s))
    }

    pub fn with_connection(s: &'a SodeSystem, conn: ConnectionData) -> Chern<'a> {
        Chern { s, conn, frame: fields::frame_fields(s) }
    }

    pub fn dim(&self) -> usize {
        self.frame.len()
    }

    pub fn frame_field(&self, a: usize) -> &Field {
        &self.frame[a]
    }

    pub fn basis(&self, a: usize) -> Field {
        let mut e = vec![Expr::zero(); self.dim()];
        e[a] = Expr::one();
        e
    }

    fn to_coords(&self, x: &[Expr]) -> Field {
        (0..self.dim())
            .map(|mu| {
                simplify(&Expr::sum(
                    x.iter()
                        .zip(&self.frame)
                        .filter(|(c, e)| !c.is_zero() && !e[mu].is_zero())
                        .map(|(c, e)| c * &e[mu]),
                ))
            })
            .collect()
    }

    /// `∇_X Y` for frame components X, Y.
    pub fn nabla(&self, x: &[Expr], y: &[Expr]) -> Field {
        let m = self.dim();
        let xc = self.to_coords(x);
        let mut out: Vec<Expr> = y.iter().map(|yb| fields::apply(self.s, &xc, yb)).collect();
        for (a, xa) in x.iter().enumerate() {
            if xa.is_zero() {
                continue;
            }
            for (b, yb) in y.iter().enumerate() {
                if yb.is_zero() {
                    continue;
                }
                let g = self.conn.gamma(a, b);
                for c in 0..m {
                    if !g[c].is_zero() {
                        out[c] = &out[c] + xa * yb * &g[c];
                    }
                }
            }
        }
        out.iter().map(simplify).collect()
    }

    /// Frame components of the Lie bracket of two frame-component fields.
    pub fn bracket(&self, x: &[Expr], y: &[Expr]) -> Field {
        let b = fields::bracket(self.s, &self.to_coords(x), &self.to_coords(y));
        fields::to_frame(self.s, &b)
    }

    /// `Tor(X, Y)` by definition.
    pub fn torsion(&self, x: &[Expr], y: &[Expr]) -> Field {
        let a = self.nabla(x, y);
        let b = self.nabla(y, x);
        let c = self.bracket(x, y);
        (0..self.dim()).map(|i| simplify(&(&a[i] - &b[i] - &c[i]))).collect()
    }

    /// `R(X, Y)Z` by definition.
    pub fn curvature(&self, x: &[Expr], y: &[Expr], z: &[Expr]) -> Field {
        let a = self.nabla(x, &self.nabla(y, z));
        let b = self.nabla(y, &self.nabla(x, z));
        let c = self.nabla(&self.bracket(x, y), z);
        (0..self.dim()).map(|i| simplify(&(&a[i] - &b[i] - &c[i]))).collect()
    }
}

/// `∇_X Y` for the Chern connection of `s`, frame components in and out.
pub fn covariant_derivative(s: &SodeSystem, x: &[Expr], y: &[Expr]) -> Field {
    Chern::new(s).nabla(x, y)
}

/// Torsion in the coframe basis:
/// `T^σ = −P^h_j dt∧ω^j ⊗ ∂_h − T^h_{ij} ω^i∧ω^j ⊗ ∂_h (i<j) + dt∧ϖ^i ⊗ X_i`,
/// with `α∧β = α⊗β − β⊗α`.
#[derive(Clone, Debug)]
pub struct TorsionTensor {
    /// `p_block[h][j] = −P^h_j`
    pub p_block: ExprMatrix,
    /// `t_block[h][i][j] = −T^h_{ij}`
    pub t_block: Vec<ExprMatrix>,
    /// Coefficient of `dt∧ϖ^i ⊗ X_i`; always 1.
    pub identity_block: Expr,
}

impl TorsionTensor {
    pub fn from_split(k: &SplitCurvature) -> TorsionTensor {
        let neg = |e: &Expr| simplify(&-e);
        TorsionTensor {
            p_block: k.p.iter().map(|r| r.iter().map(neg).collect()).collect(),
            t_block: k.t.iter().map(|m| m.iter().map(|r| r.iter().map(neg).collect()).collect()).collect(),
            identity_block: Expr::one(),
        }
    }

    pub fn n(&self) -> usize {
        self.p_block.len()
    }

    /// Frame components of `T^σ(e_a, e_b)`.
    pub fn on_frame(&self, a: usize, b: usize) -> Field {
        let n = self.n();
        let mut out = vec![Expr::zero(); 2 * n + 1];
        if a == b {
            return out;
        }
        if a > b {
            return self.on_frame(b, a).iter().map(|e| simplify(&-e)).collect();
        }
        let kind = |i: usize| if i == 0 { 0 } else if i <= n { 1 } else { 2 };
        match (kind(a), kind(b)) {
            (0, 1) => {
                for h in 0..n {
                    out[1 + n + h] = self.p_block[h][b - 1].clone();
                }
            }
            (0, 2) => out[b - n] = self.identity_block.clone(),
            (1, 1) => {
                for h in 0..n {
                    out[1 + n + h] = self.t_block[h][a - 1][b - 1].clone();
                }
            }
            _ => {}
        }
        out
    }
}

/// Torsion assembled from (P, T), checked against the definition on every
/// frame pair.
pub fn torsion(s: &SodeSystem) -> Result<TorsionTensor> {
    let tt = TorsionTensor::from_split(&SplitCurvature::from_formulas(s));
    let ch = Chern::new(s);
    let residues = torsion_residues(&ch, &tt);
    let residual = crate::sode::residual_max(s, &residues, 8, 0x7051)?;
    if residual > 1e-10 {
        return Err(Error::OracleMismatch { what: "torsion".into(), residual });
    }
    Ok(tt)
}

pub(crate) fn torsion_residues(ch: &Chern<'_>, tt: &TorsionTensor) -> Vec<Expr> {
    let m = ch.dim();
    let mut out = Vec::new();
    for a in 0..m {
        for b in a + 1..m {
            let def = ch.torsion(&ch.basis(a), &ch.basis(b));
            let formula = tt.on_frame(a, b);
            out.extend(def.iter().zip(&formula).map(|(x, y)| simplify(&(x - y))));
        }
    }
    out
}

/// Curvature components: `a[h][k][j] = A^h_{kj}`, `b[h][i][j][k] = B^h_{ijk}`
/// (antisymmetric in i, j), `r[h][i][j][k] = R^h_{ijk}` (totally symmetric).
#[derive(Clone, Debug)]
pub struct CurvatureComponents {
    pub a: Vec<ExprMatrix>,
    pub b: Vec<Vec<ExprMatrix>>,
    pub r: Vec<Vec<ExprMatrix>>,
}

impl CurvatureComponents {
    /// `2A^h_{kj} = T^h_{jk} − ∂P^h_k/∂v^j − ∂P^h_j/∂v^k`,
    /// `B^h_{ijk} = −∂T^h_{ij}/∂v^k`, `R^h_{ijk} = ½ ∂³F^h/∂v^i∂v^j∂v^k`.
    pub fn from_formulas(s: &SodeSystem, k: &SplitCurvature) -> CurvatureComponents {
        let n = s.n();
        let half = Expr::ratio(1, 2);
        let dp: Vec<Vec<Vec<Expr>>> = (0..n)
            .map(|h| (0..n).map(|j| (0..n).map(|l| d(&k.p[h][j], s.v_var(l))).collect()).collect())
            .collect();
        let a = (0..n)
            .map(|h| {
                (0..n)
                    .map(|kk| {
                        (0..n)
                            .map(|j| simplify(&(&half * (&k.t[h][j][kk] - &dp[h][kk][j] - &dp[h][j][kk]))))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let mut b = vec![vec![vec![vec![Expr::zero(); n]; n]; n]; n];
        for h in 0..n {
            for i in 0..n {
                for j in i + 1..n {
                    for l in 0..n {
                        let e = simplify(&-d(&k.t[h][i][j], s.v_var(l)));
                        b[h][j][i][l] = simplify(&-&e);
                        b[h][i][j][l] = e;
                    }
                }
            }
        }
        let fvvv = &s.derivs().fvvv;
        let r = (0..n)
            .map(|h| {
                (0..n)
                    .map(|i| (0..n).map(|j| (0..n).map(|l| simplify(&(&half * &fvvv[h][i][j][l]))).collect()).collect())
                    .collect()
            })
            .collect();
        CurvatureComponents { a, b, r }
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    /// Frame components of `R(e_a, e_b) e_c` predicted by the components.
    pub fn on_frame(&self, a: usize, b: usize, c: usize) -> Field {
        let n = self.n();
        let mut out = vec![Expr::zero(); 2 * n + 1];
        if a == b || c == 0 {
            return out;
        }
        if a > b {
            return self.on_frame(b, a, c).iter().map(|e| simplify(&-e)).collect();
        }
        let (block, k) = if c <= n { (1, c - 1) } else { (1 + n, c - 1 - n) };
        let kind = |i: usize| if i == 0 { 0 } else if i <= n { 1 } else { 2 };
        for h in 0..n {
            out[block + h] = match (kind(a), kind(b)) {
                (0, 1) => self.a[h][k][b - 1].clone(),
                (1, 1) => self.b[h][a - 1][b - 1][k].clone(),
                (1, 2) => self.r[h][a - 1][b - 1 - n][k].clone(),
                _ => Expr::zero(),
            };
        }
        out
    }

    /// Holonomy generators at the symbolic level: `A_j`, `B_{ij}` (i<j),
    /// `R_{ij}` (i≤j) as n×n matrices indexed `[h][k]`.
    pub fn generator_matrices(&self) -> Vec<ExprMatrix> {
        let n = self.n();
        let mut out = Vec::new();
        for j in 0..n {
            out.push((0..n).map(|h| (0..n).map(|k| self.a[h][k][j].clone()).collect()).collect());
        }
        for i in 0..n {
            for j in i + 1..n {
                out.push((0..n).map(|h| (0..n).map(|k| self.b[h][i][j][k].clone()).collect()).collect());
            }
        }
        for i in 0..n {
            for j in i..n {
                out.push((0..n).map(|h| (0..n).map(|k| self.r[h][i][j][k].clone()).collect()).collect());
            }
        }
        out
    }
}

/// `A`, `B`, `R` by the closed formulas, checked against the curvature
/// definition on every frame triple.
pub fn curvature(s: &SodeSystem) -> Result<CurvatureComponents> {
    let g = Geometry::new(s.clone());
    let ch = Chern::new(s);
    let residues = checks::curvature_residues(&ch, &g.curvature);
    let residual = crate::sode::residual_max(s, &residues, 8, 0xc0de)?;
    if residual > 1e-10 {
        return Err(Error::OracleMismatch { what: "curvature".into(), residual });
    }
    Ok(g.curvature)
}

/// Everything the identity suites need for one SODE, computed once by the
/// closed formulas. Fields are public so tests can perturb them.
#[derive(Clone, Debug)]
pub struct Geometry {
    pub sode: SodeSystem,
    pub connection: ConnectionData,
    pub split: SplitCurvature,
    pub curvature: CurvatureComponents,
}

impl Geometry {
    pub fn new(sode: SodeSystem) -> Geometry {
        let connection = connection_data(&sode);
        let split = SplitCurvature::from_formulas(&sode);
        let curvature = CurvatureComponents::from_formulas(&sode, &split);
        Geometry { sode, connection, split, curvature }
    }

    pub fn n(&self) -> usize {
        self.sode.n()
    }

    pub fn torsion_tensor(&self) -> TorsionTensor {
        TorsionTensor::from_split(&self.split)
    }

    /// True when every P, T, A, B, R component simplifies to 0.
    pub fn is_flat(&self) -> bool {
        let c = &self.curvature;
        self.split.p.iter().flatten().all(is_zero)
            && self.split.t.iter().flatten().flatten().all(is_zero)
            && c.a.iter().flatten().flatten().all(is_zero)
            && c.b.iter().flatten().flatten().flatten().all(is_zero)
            && c.r.iter().flatten().flatten().flatten().all(is_zero)
    }
}
