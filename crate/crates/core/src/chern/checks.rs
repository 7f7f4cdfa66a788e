//! Identity suites: the characterization items, the curvature pattern, and
//! the algebraic relations between torsion and curvature components.

use super::{Chern, ConnectionData, CurvatureComponents, Geometry, TorsionTensor};
use crate::error::Result;
use crate::sode::fields::{self, Field};
use crate::sode::{endomorphism_e, lie_derivative_j, JetPoint1, SodeSystem};
use crate::symexpr::{d, eval, is_zero, simplify, Expr};

/// Largest absolute value of the expressions over the points; entries that
/// simplify to zero are skipped without evaluation.
pub fn max_abs_at(s: &SodeSystem, residues: &[Expr], points: &[JetPoint1]) -> Result<f64> {
    let open: Vec<&Expr> = residues.iter().filter(|e| !is_zero(e)).collect();
    let mut worst: f64 = 0.0;
    for p in points {
        let env = s.env(p);
        for e in &open {
            let v = eval(e, &env)?;
            worst = worst.max(if v.is_nan() { f64::INFINITY } else { v.abs() });
        }
    }
    Ok(worst)
}

/// Maximum residuals of the four characterization items:
/// `∇X^σ = 0`, `∇(L_{X^σ}J) = 0`, `∇E^σ = 0`, `Tor = T^σ`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CharacterizationResiduals {
    pub flow_parallel: f64,
    pub lxj_parallel: f64,
    pub e_parallel: f64,
    pub torsion: f64,
}

impl CharacterizationResiduals {
    pub fn max(&self) -> f64 {
        self.flow_parallel.max(self.lxj_parallel).max(self.e_parallel).max(self.torsion)
    }
}

/// Frame matrix (column b is the image of e_b) of a (1,1)-tensor given in
/// coordinates.
fn tensor_in_frame(ch: &Chern<'_>, coord: &[Vec<Expr>]) -> Vec<Field> {
    let m = ch.dim();
    (0..m)
        .map(|b| {
            let e = ch.frame_field(b);
            let img: Field = (0..m)
                .map(|r| {
                    simplify(&Expr::sum(
                        (0..m).filter(|&c| !coord[r][c].is_zero() && !e[c].is_zero()).map(|c| &coord[r][c] * &e[c]),
                    ))
                })
                .collect();
            fields::to_frame(ch.s, &img)
        })
        .collect()
}

/// Residues of `(∇_{e_a} S)(e_b) = ∇_{e_a}(S e_b) − S(∇_{e_a} e_b)`.
fn parallel_residues(ch: &Chern<'_>, cols: &[Field]) -> Vec<Expr> {
    let m = ch.dim();
    let apply = |y: &[Expr]| -> Field {
        (0..m)
            .map(|r| simplify(&Expr::sum((0..m).filter(|&c| !y[c].is_zero()).map(|c| &cols[c][r] * &y[c]))))
            .collect()
    };
    let mut out = Vec::new();
    for a in 0..m {
        for b in 0..m {
            let lhs = ch.nabla(&ch.basis(a), &cols[b]);
            let rhs = apply(&ch.nabla(&ch.basis(a), &ch.basis(b)));
            out.extend(lhs.iter().zip(&rhs).map(|(x, y)| simplify(&(x - y))));
        }
    }
    out
}

pub(crate) fn characterization_residues(ch: &Chern<'_>, tt: &TorsionTensor) -> [Vec<Expr>; 4] {
    let m = ch.dim();
    let flow: Vec<Expr> = (0..m).flat_map(|a| ch.nabla(&ch.basis(a), &ch.basis(0))).collect();
    let lxj = parallel_residues(ch, &tensor_in_frame(ch, &lie_derivative_j(ch.s)));
    let e = parallel_residues(ch, &tensor_in_frame(ch, &endomorphism_e(ch.s)));
    let tor = super::torsion_residues(ch, tt);
    [flow, lxj, e, tor]
}

pub fn verify_characterization(s: &SodeSystem, points: &[JetPoint1]) -> Result<CharacterizationResiduals> {
    let g = Geometry::new(s.clone());
    verify_characterization_with(&g, &g.connection, points)
}

/// Characterization residuals for an arbitrary connection table, compared
/// with the torsion prescribed by `g.split`.
pub fn verify_characterization_with(
    g: &Geometry,
    conn: &ConnectionData,
    points: &[JetPoint1],
) -> Result<CharacterizationResiduals> {
    let ch = Chern::with_connection(&g.sode, conn.clone());
    let [flow, lxj, e, tor] = characterization_residues(&ch, &g.torsion_tensor());
    Ok(CharacterizationResiduals {
        flow_parallel: max_abs_at(&g.sode, &flow, points)?,
        lxj_parallel: max_abs_at(&g.sode, &lxj, points)?,
        e_parallel: max_abs_at(&g.sode, &e, points)?,
        torsion: max_abs_at(&g.sode, &tor, points)?,
    })
}

/// Definition-vs-formula torsion residual over the points.
pub fn torsion_residual(g: &Geometry, points: &[JetPoint1]) -> Result<f64> {
    let ch = Chern::with_connection(&g.sode, g.connection.clone());
    max_abs_at(&g.sode, &super::torsion_residues(&ch, &g.torsion_tensor()), points)
}

pub(crate) fn curvature_residues(ch: &Chern<'_>, c: &CurvatureComponents) -> Vec<Expr> {
    let m = ch.dim();
    // nab[b][k] = ∇_{e_b} e_k; ∇ is function-linear in its first slot, so
    // ∇_{[e_a,e_b]} e_k = Σ_c [e_a,e_b]^c nab[c][k].
    let nab: Vec<Vec<Field>> = (0..m).map(|b| (0..m).map(|k| ch.nabla(&ch.basis(b), &ch.basis(k))).collect()).collect();
    let mut out = Vec::new();
    for a in 0..m {
        let ea = ch.basis(a);
        for b in a + 1..m {
            let eb = ch.basis(b);
            let br = ch.bracket(&ea, &eb);
            for k in 0..m {
                let x = ch.nabla(&ea, &nab[b][k]);
                let y = ch.nabla(&eb, &nab[a][k]);
                let formula = c.on_frame(a, b, k);
                for i in 0..m {
                    let z = Expr::sum((0..m).filter(|&q| !br[q].is_zero()).map(|q| &br[q] * &nab[q][k][i]));
                    out.push(simplify(&(&x[i] - &y[i] - z - &formula[i])));
                }
            }
        }
    }
    out
}

/// Definition-vs-components curvature residual over all frame triples,
/// covering the vanishing blocks and the equal action on both blocks.
pub fn verify_curvature_pattern(g: &Geometry, points: &[JetPoint1]) -> Result<f64> {
    let ch = Chern::with_connection(&g.sode, g.connection.clone());
    max_abs_at(&g.sode, &curvature_residues(&ch, &g.curvature), points)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StructureResiduals {
    /// `2A^h_{kj} − T^h_{jk} + ∂P^h_k/∂v^j + ∂P^h_j/∂v^k`
    pub a_identity: f64,
    /// `3T^i_{kj} − ∂P^i_j/∂v^k + ∂P^i_k/∂v^j`
    pub t_identity: f64,
}

pub(crate) fn structure_residues(g: &Geometry) -> (Vec<Expr>, Vec<Expr>) {
    let s = &g.sode;
    let n = s.n();
    let p = &g.split.p;
    let t = &g.split.t;
    let dp = |h: usize, j: usize, l: usize| d(&p[h][j], s.v_var(l));
    let mut ra = Vec::new();
    let mut rt = Vec::new();
    for h in 0..n {
        for k in 0..n {
            for j in 0..n {
                let a2 = Expr::int(2) * &g.curvature.a[h][k][j];
                ra.push(simplify(&(a2 - &t[h][j][k] + dp(h, k, j) + dp(h, j, k))));
                rt.push(simplify(&(Expr::int(3) * &t[h][k][j] - dp(h, j, k) + dp(h, k, j))));
            }
        }
    }
    (ra, rt)
}

pub fn verify_structure_identities(g: &Geometry, points: &[JetPoint1]) -> Result<StructureResiduals> {
    let (ra, rt) = structure_residues(g);
    Ok(StructureResiduals {
        a_identity: max_abs_at(&g.sode, &ra, points)?,
        t_identity: max_abs_at(&g.sode, &rt, points)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sode::random::{random_points, random_sode, SampleBox};
    use crate::sode::SplitCurvature;

    #[test]
    fn flat_is_exact() {
        let g = Geometry::new(SodeSystem::flat(2));
        let ch = Chern::new(&g.sode);
        for r in characterization_residues(&ch, &g.torsion_tensor()) {
            assert!(r.iter().all(Expr::is_zero));
        }
    }

    #[test]
    fn random_sode_identities() {
        let s = random_sode(2, 11);
        let pts = random_points(2, 5, 1, &SampleBox::default());
        let g = Geometry::new(s.clone());
        let c = verify_characterization(&s, &pts).unwrap();
        assert!(c.max() <= 1e-10, "{c:?}");
        let st = verify_structure_identities(&g, &pts).unwrap();
        assert!(st.a_identity <= 1e-10 && st.t_identity <= 1e-10, "{st:?}");
        assert!(verify_curvature_pattern(&g, &pts).unwrap() <= 1e-10);
        let (ra, rt) = structure_residues(&g);
        assert!(ra.iter().chain(&rt).all(Expr::is_zero));
    }

    #[test]
    fn one_dimensional_t_identity_is_trivial() {
        let g = Geometry::new(SodeSystem::parse(1, &["x1*v1^3 - t*v1"]).unwrap());
        let (_, rt) = structure_residues(&g);
        assert!(rt.iter().all(Expr::is_zero));
    }

    #[test]
    fn perturbation_breaks_only_torsion() {
        let s = random_sode(1, 5);
        let pts = random_points(1, 5, 2, &SampleBox::default());
        let g = Geometry::new(s);
        let mut conn = g.connection.clone();
        conn.w[0][0] = simplify(&(&conn.w[0][0] + Expr::one()));
        let r = verify_characterization_with(&g, &conn, &pts).unwrap();
        assert!(r.torsion >= 0.5, "{r:?}");
        assert!(r.flow_parallel + r.lxj_parallel + r.e_parallel <= 1e-12);
    }

    #[test]
    fn sign_flip_in_p_is_detected() {
        let s = random_sode(2, 3);
        let pts = random_points(2, 4, 9, &SampleBox::default());
        let mut g = Geometry::new(s);
        g.split = SplitCurvature {
            p: g.split.p.iter().map(|r| r.iter().map(|e| simplify(&-e)).collect()).collect(),
            t: g.split.t.clone(),
        };
        assert!(verify_structure_identities(&g, &pts).unwrap().a_identity > 1e-6);
        assert!(torsion_residual(&g, &pts).unwrap() > 1e-6);
    }

    #[test]
    fn corrupted_curvature_block_is_detected() {
        let s = random_sode(2, 4);
        let pts = random_points(2, 3, 5, &SampleBox::default());
        let mut g = Geometry::new(s);
        assert!(verify_curvature_pattern(&g, &pts).unwrap() <= 1e-10);
        g.curvature.b[0][0][1][1] = simplify(&(&g.curvature.b[0][0][1][1] + Expr::ratio(1, 10)));
        assert!(verify_curvature_pattern(&g, &pts).unwrap() >= 0.05);
    }
}
