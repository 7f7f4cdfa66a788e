//! Vertical automorphisms, their action on SODEs and jets, and the
//! naturality of the curvature mapping.

mod automorphism;
mod jets;
mod prolong;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

pub use automorphism::{
    prolong1, push_sode_symbolic, push_sode_value, random_automorphism, random_triangular_automorphism, Pushforward,
    VerticalAutomorphism,
};
pub use jets::{
    curvature_mapping, curvature_mapping_exprs, jet2_of, section_curvature_defect, CurvatureValue, JetCoordinates, JetExprs, SodeJet2,
};
pub use prolong::{
    curvature_kernel_dimension, distribution_rank, expected_distribution_rank, infinitesimal_equivariance,
    monomial_fields, prolong_vertical_field, prolong_vertical_field_to, prolongation_convergence,
    EquivarianceResiduals, KernelDimension, ProlongedField,
};

use crate::error::{Error, Result};
use crate::linalg::charpoly;
use crate::sode::{JetPoint1, SodeSystem};
use crate::symexpr::{d, eval, Expr};

/// Maximum residuals of the naturality identities over matched point pairs
/// `(p, Φ^(1)p)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct FunctorialityResiduals {
    /// first velocity derivatives of the pushed SODE
    pub first_derivative: f64,
    /// second velocity derivatives of the pushed SODE
    pub second_derivative: f64,
    pub flow_pushforward: f64,
    pub horizontal_pushforward: f64,
    pub vertical_pushforward: f64,
    pub torsion: f64,
    /// `y_P' = J y_P J⁻¹` and `y_T' = J y_T (J⁻¹ ⊗ J⁻¹)`
    pub curvature_mapping: f64,
    pub kosambi_charpoly: f64,
    /// pushed jet against the symbolic pushforward, when an inverse is known
    pub symbolic_push: Option<f64>,
}

impl FunctorialityResiduals {
    pub fn max(&self) -> f64 {
        [
            self.first_derivative,
            self.second_derivative,
            self.flow_pushforward,
            self.horizontal_pushforward,
            self.vertical_pushforward,
            self.torsion,
            self.curvature_mapping,
            self.kosambi_charpoly,
            self.symbolic_push.unwrap_or(0.0),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Adapted frame at a jet, columns `X^σ, X_1..X_n, ∂/∂v^1..∂/∂v^n`.
pub fn frame_from_jet(j: &SodeJet2) -> DMatrix<f64> {
    let n = j.n();
    let m = 2 * n + 1;
    let mut e = DMatrix::zeros(m, m);
    e[(0, 0)] = 1.0;
    for i in 0..n {
        e[(1 + i, 0)] = j.z[1 + n + i];
        e[(1 + n + i, 0)] = j.value[i];
        e[(1 + i, 1 + i)] = 1.0;
        for k in 0..n {
            e[(1 + n + k, 1 + i)] = 0.5 * j.grad[k][1 + n + i];
        }
        e[(1 + n + i, 1 + n + i)] = 1.0;
    }
    e
}

/// `tor[a][b]`: frame components of `Tor(e_a, e_b)` for the given `P`, `T`.
pub fn torsion_in_frame(p: &[Vec<f64>], t: &[Vec<Vec<f64>>]) -> Vec<Vec<DVector<f64>>> {
    let n = p.len();
    let m = 2 * n + 1;
    let mut tor = vec![vec![DVector::zeros(m); m]; m];
    for j in 0..n {
        for h in 0..n {
            tor[0][1 + j][1 + n + h] = -p[h][j];
            tor[1 + j][0][1 + n + h] = p[h][j];
        }
        tor[0][1 + n + j][1 + j] = 1.0;
        tor[1 + n + j][0][1 + j] = -1.0;
        for i in 0..n {
            for h in 0..n {
                tor[1 + i][1 + j][1 + n + h] = -t[h][i][j];
            }
        }
    }
    tor
}

/// Derivatives of φ used by the transformation laws.
struct PhiDerivs {
    /// `∂φ^h_b/∂t`
    jac_t: Vec<Vec<Expr>>,
    /// `∂φ^h_b/∂x^a`
    jac_x: Vec<Vec<Vec<Expr>>>,
}

impl PhiDerivs {
    fn new(phi: &VerticalAutomorphism, s: &SodeSystem) -> PhiDerivs {
        let jac = phi.jacobian_exprs();
        let jac_t = jac.iter().map(|r| r.iter().map(|e| d(e, s.t_var())).collect()).collect();
        let jac_x =
            jac.iter().map(|r| r.iter().map(|e| s.x_vars().iter().map(|x| d(e, x)).collect()).collect()).collect();
        PhiDerivs { jac_t, jac_x }
    }
}

fn num(e: &Expr, s: &SodeSystem, p: &JetPoint1) -> Result<f64> {
    Ok(eval(e, &s.env(p))?)
}

/// `∂F'^h/∂V^i` at the image point from the first velocity derivatives of F.
pub(crate) fn first_derivative_law(
    phi: &VerticalAutomorphism,
    s: &SodeSystem,
    p: &JetPoint1,
    j: &SodeJet2,
) -> Result<DMatrix<f64>> {
    let n = s.n();
    let dv = PhiDerivs::new(phi, s);
    let jm = phi.jacobian(p.t, &p.x)?;
    let psi = jm.clone().try_inverse().ok_or_else(|| Error::BadAutomorphism("singular Jacobian".into()))?;
    let mut inner = DMatrix::zeros(n, n);
    for h in 0..n {
        for b in 0..n {
            let mut flow = num(&dv.jac_t[h][b], s, p)?;
            for a in 0..n {
                flow += p.v[a] * num(&dv.jac_x[h][b][a], s, p)?;
            }
            let lin: f64 = (0..n).map(|a| jm[(h, a)] * j.grad[a][1 + n + b]).sum();
            inner[(h, b)] = 2.0 * flow + lin;
        }
    }
    Ok(inner * psi)
}

/// `∂²F'^h/∂V^i∂V^j` at the image point, with `hess_coeff` multiplying the
/// second derivatives of φ (the correct value is 2).
pub(crate) fn second_derivative_law(
    phi: &VerticalAutomorphism,
    s: &SodeSystem,
    p: &JetPoint1,
    j: &SodeJet2,
    hess_coeff: f64,
) -> Result<Vec<DMatrix<f64>>> {
    let n = s.n();
    let dv = PhiDerivs::new(phi, s);
    let jm = phi.jacobian(p.t, &p.x)?;
    let psi = jm.clone().try_inverse().ok_or_else(|| Error::BadAutomorphism("singular Jacobian".into()))?;
    (0..n)
        .map(|h| {
            let mut inner = DMatrix::zeros(n, n);
            for a in 0..n {
                for b in 0..n {
                    let fvv: f64 = (0..n).map(|c| jm[(h, c)] * j.hess[c][1 + n + a][1 + n + b]).sum();
                    inner[(a, b)] = hess_coeff * num(&dv.jac_x[h][a][b], s, p)? + fvv;
                }
            }
            Ok(psi.transpose() * inner * &psi)
        })
        .collect()
}

fn max_abs<'a>(xs: impl Iterator<Item = &'a f64>) -> f64 {
    xs.fold(0.0, |a, x| a.max(x.abs()))
}

fn neg(y: &[Vec<f64>]) -> Vec<Vec<f64>> {
    y.iter().map(|r| r.iter().map(|x| -x).collect()).collect()
}

fn neg3(y: &[Vec<Vec<f64>>]) -> Vec<Vec<Vec<f64>>> {
    y.iter().map(|r| neg(r)).collect()
}

/// Checks the naturality identities at each point and its image. Without an
/// inverse everything is computed from jets at the source point.
pub fn verify_functoriality(
    phi: &VerticalAutomorphism,
    s: &SodeSystem,
    points: &[JetPoint1],
) -> Result<FunctorialityResiduals> {
    let n = s.n();
    let m = 2 * n + 1;
    let pf = Pushforward::new(phi, s);
    let jets = JetExprs::new(s);
    let pushed_sys = phi.inverse.as_ref().map(|_| push_sode_symbolic(phi, s)).transpose()?;
    let pushed_jets = pushed_sys.as_ref().map(JetExprs::new);
    let mut r = FunctorialityResiduals { symbolic_push: pushed_sys.as_ref().map(|_| 0.0), ..Default::default() };
    let up = |slot: &mut f64, v: f64| *slot = slot.max(if v.is_nan() { f64::INFINITY } else { v });
    for p in points {
        let j = jets.at(s, p)?;
        let jp = pf.push_jet(p)?;
        let q = jp.point();
        let jm = phi.jacobian(p.t, &p.x)?;
        let psi = jm.clone().try_inverse().ok_or_else(|| Error::BadAutomorphism("singular Jacobian".into()))?;

        let first = first_derivative_law(phi, s, p, &j)?;
        let pushed_first = DMatrix::from_fn(n, n, |h, i| jp.grad[h][1 + n + i]);
        up(&mut r.first_derivative, max_abs((first - pushed_first).iter()));
        for (h, law) in second_derivative_law(phi, s, p, &j, 2.0)?.iter().enumerate() {
            let pushed = DMatrix::from_fn(n, n, |a, b| jp.hess[h][1 + n + a][1 + n + b]);
            up(&mut r.second_derivative, max_abs((law - pushed).iter()));
        }

        let a = pf.differential(p)?;
        let e = frame_from_jet(&j);
        let ep = frame_from_jet(&jp);
        let img = &a * &e;
        up(&mut r.flow_pushforward, max_abs((img.column(0) - ep.column(0)).iter()));
        for i in 0..n {
            let mut xh = DVector::zeros(m);
            let mut vh = DVector::zeros(m);
            for h in 0..n {
                xh += ep.column(1 + h) * jm[(h, i)];
                vh += ep.column(1 + n + h) * jm[(h, i)];
            }
            up(&mut r.horizontal_pushforward, max_abs((img.column(1 + i) - xh).iter()));
            up(&mut r.vertical_pushforward, max_abs((img.column(1 + n + i) - vh).iter()));
        }

        let y = curvature_mapping(&j);
        let yp = curvature_mapping(&jp);
        let tor = torsion_in_frame(&neg(&y.y_p), &neg3(&y.y_t));
        let torp = torsion_in_frame(&neg(&yp.y_p), &neg3(&yp.y_t));
        let ep_inv = ep.clone().try_inverse().ok_or_else(|| Error::Invalid("singular frame".into()))?;
        let c = &ep_inv * &img;
        for x in 0..m {
            for z in 0..m {
                let rhs = &img * &tor[x][z];
                let mut lhs = DVector::zeros(m);
                for u in 0..m {
                    for w in 0..m {
                        let k = c[(u, x)] * c[(w, z)];
                        if k != 0.0 {
                            lhs += &torp[u][w] * k;
                        }
                    }
                }
                up(&mut r.torsion, max_abs((&ep * lhs - rhs).iter()));
            }
        }

        let ymat = DMatrix::from_fn(n, n, |i, a| y.y_p[i][a]);
        let ypmat = DMatrix::from_fn(n, n, |i, a| yp.y_p[i][a]);
        up(&mut r.curvature_mapping, max_abs((&jm * &ymat * &psi - &ypmat).iter()));
        for k in 0..n {
            for x in 0..n {
                for z in 0..n {
                    let mut conj = 0.0;
                    for rr in 0..n {
                        for i in 0..n {
                            for l in 0..n {
                                conj += jm[(k, rr)] * y.y_t[rr][i][l] * psi[(i, x)] * psi[(l, z)];
                            }
                        }
                    }
                    up(&mut r.curvature_mapping, (conj - yp.y_t[k][x][z]).abs());
                }
            }
        }
        let cp = charpoly(&ymat);
        let cpp = charpoly(&ypmat);
        up(&mut r.kosambi_charpoly, cp.iter().zip(&cpp).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));

        if let (Some(sys), Some(je), Some(slot)) = (&pushed_sys, &pushed_jets, r.symbolic_push.as_mut()) {
            let direct = je.at(sys, &q)?;
            let diff = jp
                .to_vector(2)
                .iter()
                .zip(direct.to_vector(2))
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            *slot = slot.max(diff);
        }
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sode::random::{random_points, random_sode, SampleBox};

    #[test]
    fn identity_is_exact() {
        let s = random_sode(2, 4);
        let id = VerticalAutomorphism::identity(&s);
        let r = verify_functoriality(&id, &s, &random_points(2, 4, 3, &SampleBox::default())).unwrap();
        assert!(r.max() < 1e-12, "{r:?}");
    }

    #[test]
    fn scaling_keeps_harmonic_invariant() {
        let s = SodeSystem::parse(1, &["-x1"]).unwrap();
        let phi = VerticalAutomorphism::parse(&s, &["2*x1"], Some(&["x1/2"])).unwrap();
        let p = JetPoint1::new(0.2, vec![0.4], vec![-0.3]);
        let y = curvature_mapping(&jet2_of(&s, &p).unwrap());
        let yp = curvature_mapping(&Pushforward::new(&phi, &s).push_jet(&p).unwrap());
        assert_eq!(y.y_p, yp.y_p);
        assert_eq!(verify_functoriality(&phi, &s, &[p]).unwrap().max(), 0.0);
    }

    #[test]
    fn random_pairs() {
        let pts = random_points(2, 5, 11, &SampleBox::default());
        for seed in 0..3 {
            let s = random_sode(2, 100 + seed);
            let r = verify_functoriality(&random_automorphism(&s, seed), &s, &pts).unwrap();
            assert!(r.max() <= 1e-8, "{r:?}");
            let r = verify_functoriality(&random_triangular_automorphism(&s, seed), &s, &pts).unwrap();
            assert!(r.max() <= 1e-8 && r.symbolic_push.is_some(), "{r:?}");
        }
    }

    #[test]
    fn unit_coefficient_second_law_fails() {
        // F = 0, φ = x + x²/2: F' = V²/(1+x)², so ∂²F'/∂V² = 2/(1+x)²
        let s = SodeSystem::flat(1);
        let phi = VerticalAutomorphism::parse(&s, &["x1 + x1^2/2"], None).unwrap();
        let p = JetPoint1::new(0.0, vec![0.0], vec![1.0]);
        let j = jet2_of(&s, &p).unwrap();
        let pushed = Pushforward::new(&phi, &s).push_jet(&p).unwrap();
        assert!((pushed.hess[0][2][2] - 2.0).abs() < 1e-12);
        assert!((second_derivative_law(&phi, &s, &p, &j, 2.0).unwrap()[0][(0, 0)] - 2.0).abs() < 1e-12);
        assert!((second_derivative_law(&phi, &s, &p, &j, 1.0).unwrap()[0][(0, 0)] - 1.0).abs() < 1e-12);
    }
}
