//! Symbolic vector fields on M¹ in the coordinate basis `(t, x.., v..)`.

use crate::symexpr::{d, simplify, Expr};

use super::SodeSystem;

/// Components in the coordinate basis, length `2n+1`.
pub type Field = Vec<Expr>;

/// `X(f) = Σ X^μ ∂f/∂z^μ`.
pub fn apply(s: &SodeSystem, x: &[Expr], f: &Expr) -> Expr {
    let coords = s.coords();
    let terms = x
        .iter()
        .zip(&coords)
        .filter(|(c, _)| !c.is_zero())
        .map(|(c, z)| c * d(f, z))
        .collect::<Vec<_>>();
    simplify(&Expr::sum(terms))
}

/// Lie bracket `[X, Y]^μ = X(Y^μ) − Y(X^μ)`.
pub fn bracket(s: &SodeSystem, x: &[Expr], y: &[Expr]) -> Field {
    x.iter().zip(y).map(|(xm, ym)| simplify(&(apply(s, x, ym) - apply(s, y, xm)))).collect()
}

pub fn coordinate_field(s: &SodeSystem, mu: usize) -> Field {
    let mut f = vec![Expr::zero(); 2 * s.n() + 1];
    f[mu] = Expr::one();
    f
}

/// `X^σ = ∂/∂t + v^i ∂/∂x^i + F^i ∂/∂v^i`.
pub fn dynamical_flow(s: &SodeSystem) -> Field {
    let mut out = vec![Expr::one()];
    out.extend(s.v_vars().iter().map(|v| Expr::var(v)));
    out.extend(s.f().iter().cloned());
    out
}

/// `X_i = ∂/∂x^i + ½ ∂F^j/∂v^i ∂/∂v^j`.
pub fn horizontal_field(s: &SodeSystem, i: usize) -> Field {
    let n = s.n();
    let fv = &s.derivs().fv;
    let mut out = vec![Expr::zero(); 2 * n + 1];
    out[1 + i] = Expr::one();
    for j in 0..n {
        out[1 + n + j] = simplify(&(Expr::ratio(1, 2) * &fv[j][i]));
    }
    out
}

/// Adapted frame `(X^σ, X_1.., ∂/∂v^1..)` as coordinate fields.
pub fn frame_fields(s: &SodeSystem) -> Vec<Field> {
    let n = s.n();
    let mut out = vec![dynamical_flow(s)];
    out.extend((0..n).map(|i| horizontal_field(s, i)));
    out.extend((0..n).map(|i| coordinate_field(s, 1 + n + i)));
    out
}

/// Rows of the dual coframe `(dt, ω^i, ϖ^i)` in the basis `(dt, dx.., dv..)`.
///
/// `ω^i = dx^i − v^i dt`, `ϖ^i = dv^i − F^i dt − ½ ∂F^i/∂v^j (dx^j − v^j dt)`.
pub fn coframe_rows(s: &SodeSystem) -> Vec<Vec<Expr>> {
    let n = s.n();
    let fv = &s.derivs().fv;
    let half = Expr::ratio(1, 2);
    let mut rows = Vec::with_capacity(2 * n + 1);
    rows.push(coordinate_field(s, 0));
    for i in 0..n {
        let mut r = vec![Expr::zero(); 2 * n + 1];
        r[0] = -Expr::var(s.v_var(i));
        r[1 + i] = Expr::one();
        rows.push(r);
    }
    for i in 0..n {
        let mut r = vec![Expr::zero(); 2 * n + 1];
        let trace: Vec<Expr> = (0..n).map(|j| &fv[i][j] * Expr::var(s.v_var(j))).collect();
        r[0] = simplify(&(&half * Expr::sum(trace) - &s.f()[i]));
        for j in 0..n {
            r[1 + j] = simplify(&(-(&half * &fv[i][j])));
        }
        r[1 + n + i] = Expr::one();
        rows.push(r);
    }
    rows
}

/// Frame components of a coordinate field (pairing with the coframe).
pub fn to_frame(s: &SodeSystem, x: &[Expr]) -> Field {
    coframe_rows(s)
        .iter()
        .map(|row| {
            simplify(&Expr::sum(row.iter().zip(x).filter(|(a, b)| !a.is_zero() && !b.is_zero()).map(|(a, b)| a * b)))
        })
        .collect()
}

/// Coordinate components of a field given in frame components.
pub fn from_frame(s: &SodeSystem, c: &[Expr]) -> Field {
    let frame = frame_fields(s);
    let m = frame.len();
    (0..m)
        .map(|mu| {
            simplify(&Expr::sum(
                c.iter()
                    .zip(&frame)
                    .filter(|(a, e)| !a.is_zero() && !e[mu].is_zero())
                    .map(|(a, e)| a * &e[mu]),
            ))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::is_zero;

    #[test]
    fn flow_components() {
        let s = SodeSystem::parse(2, &["x1*v2", "0"]).unwrap();
        let x = dynamical_flow(&s);
        let want = ["1", "v1", "v2", "x1*v2", "0"];
        for (a, b) in x.iter().zip(want) {
            let b = crate::symexpr::parse(b, s.vars()).unwrap();
            assert!(is_zero(&(a - b)));
        }
    }

    #[test]
    fn coframe_is_dual() {
        let s = SodeSystem::parse(2, &["x1*v2^2 - t*v1", "x2^2*v1*v2 + 1"]).unwrap();
        let rows = coframe_rows(&s);
        for (a, e) in frame_fields(&s).iter().enumerate() {
            let c = to_frame(&s, e);
            for (b, cb) in c.iter().enumerate() {
                assert_eq!(cb.is_one(), a == b, "pair {a} {b}: {cb}");
                assert!(a == b || cb.is_zero());
            }
        }
        assert_eq!(rows.len(), 5);
    }

    #[test]
    fn frame_round_trip() {
        let s = SodeSystem::parse(1, &["x1*v1^3 - t"]).unwrap();
        let y: Field = ["x1", "v1^2", "t*x1"].iter().map(|e| crate::symexpr::parse(e, s.vars()).unwrap()).collect();
        let back = from_frame(&s, &to_frame(&s, &y));
        for (a, b) in back.iter().zip(&y) {
            assert!(is_zero(&(a - b)));
        }
    }

    #[test]
    fn bracket_of_coordinate_fields_vanishes() {
        let s = SodeSystem::flat(2);
        let b = bracket(&s, &coordinate_field(&s, 1), &coordinate_field(&s, 3));
        assert!(b.iter().all(Expr::is_zero));
    }
}
