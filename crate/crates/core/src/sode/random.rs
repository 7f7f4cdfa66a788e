//! Seeded generators for test systems and sample points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{JetPoint1, SodeSystem};
use crate::symexpr::{Expr, Rational, VarSet};

/// Sampling ranges per coordinate role.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SampleBox {
    pub t: [f64; 2],
    pub x: [f64; 2],
    pub v: [f64; 2],
}

impl Default for SampleBox {
    fn default() -> SampleBox {
        SampleBox { t: [0.0, 1.0], x: [-1.0, 1.0], v: [-1.0, 1.0] }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn uniform(rng: &mut impl Rng, r: [f64; 2]) -> f64 {
    r[0] + (r[1] - r[0]) * rng.gen::<f64>()
}

pub fn random_point(n: usize, rng: &mut impl Rng, b: &SampleBox) -> JetPoint1 {
    let t = uniform(rng, b.t);
    let x = (0..n).map(|_| uniform(rng, b.x)).collect();
    let v = (0..n).map(|_| uniform(rng, b.v)).collect();
    JetPoint1 { t, x, v }
}

pub fn random_points(n: usize, count: usize, seed: u64, b: &SampleBox) -> Vec<JetPoint1> {
    let mut r = rng(seed);
    (0..count).map(|_| random_point(n, &mut r, b)).collect()
}

/// Uniform on [−1, 1], rounded to a multiple of 1/1024 so it stays a short
/// exact rational.
pub fn coefficient(rng: &mut impl Rng) -> Rational {
    let k: i64 = rng.gen_range(-1024..=1024);
    Rational::new(k.into(), 1024.into())
}

/// All exponent vectors of length `vars` with total degree ≤ `deg`.
pub fn exponents(vars: usize, deg: u32) -> Vec<Vec<u32>> {
    if vars == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for k in 0..=deg {
        for mut rest in exponents(vars - 1, deg - k) {
            rest.insert(0, k);
            out.push(rest);
        }
    }
    out
}

pub fn monomial(names: &[&str], exps: &[u32]) -> Expr {
    Expr::product(names.iter().zip(exps).filter(|(_, k)| **k > 0).map(|(n, k)| Expr::var(n).powi(*k as i64)))
}

/// Random polynomial in the given variables: each monomial with exponents
/// bounded by the per-group degrees is kept with probability `density`.
pub fn random_polynomial(
    rng: &mut impl Rng,
    groups: &[(&[&str], u32)],
    density: f64,
) -> Expr {
    let mut mons: Vec<(Vec<&str>, Vec<u32>)> = vec![(Vec::new(), Vec::new())];
    for (names, deg) in groups {
        let mut next = Vec::new();
        for (ns, es) in &mons {
            for e in exponents(names.len(), *deg) {
                let mut ns2 = ns.clone();
                ns2.extend(names.iter().copied());
                let mut es2 = es.clone();
                es2.extend(e);
                next.push((ns2, es2));
            }
        }
        mons = next;
    }
    let mut terms = Vec::new();
    for (ns, es) in mons {
        if rng.gen::<f64>() < density {
            terms.push(Expr::rational(coefficient(rng)) * monomial(&ns, &es));
        }
    }
    crate::symexpr::simplify(&Expr::sum(terms))
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Random polynomial SODE: degree ≤ 3 in v, ≤ 2 in x, ≤ 1 in t, sparse.
pub fn random_sode(n: usize, seed: u64) -> SodeSystem {
    let mut r = rng(seed);
    let vars = VarSet::standard(n);
    let xs: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    let vs: Vec<String> = (1..=n).map(|i| format!("v{i}")).collect();
    let xs: Vec<&str> = xs.iter().map(String::as_str).collect();
    let vs: Vec<&str> = vs.iter().map(String::as_str).collect();
    // about 30 kept terms per component from n = 2 on
    let pool = 2 * binomial(n + 2, 2) * binomial(n + 3, 3);
    let density = if n == 1 { 0.5 } else { (30.0 / pool as f64).min(0.25) };
    let f = (0..n)
        .map(|_| random_polynomial(&mut r, &[(&["t"], 1), (&xs, 2), (&vs, 3)], density))
        .collect();
    SodeSystem::new(vars, f).expect("valid")
}

/// Random vertical field `u(t, x)` in the coordinates of `s`: degree ≤ 1 in
/// t and ≤ 2 in x.
pub fn random_vertical_field(s: &SodeSystem, seed: u64) -> Vec<Expr> {
    let mut r = rng(seed);
    let t = [s.t_var()];
    let xs: Vec<&str> = s.x_vars().iter().map(|x| &**x).collect();
    (0..s.n()).map(|_| random_polynomial(&mut r, &[(&t, 1), (&xs, 2)], 0.5)).collect()
}

/// Random SODE affine in the velocities: `F^i = f^i_0(t,x) + f^i_j(t,x) v^j`.
pub fn random_affine_sode(n: usize, seed: u64) -> SodeSystem {
    let mut r = rng(seed);
    let xs: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    let xs: Vec<&str> = xs.iter().map(String::as_str).collect();
    let f = (0..n)
        .map(|_| {
            let mut e = random_polynomial(&mut r, &[(&["t"], 1), (&xs, 2)], 0.5);
            for j in 1..=n {
                e = e + random_polynomial(&mut r, &[(&["t"], 1), (&xs, 2)], 0.5) * Expr::var(&format!("v{j}"));
            }
            crate::symexpr::simplify(&e)
        })
        .collect();
    SodeSystem::new(VarSet::standard(n), f).expect("valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        let a = random_sode(2, 7);
        let b = random_sode(2, 7);
        assert_eq!(a.f(), b.f());
        assert_ne!(random_sode(2, 8).f(), a.f());
        assert_eq!(random_points(2, 3, 1, &SampleBox::default()), random_points(2, 3, 1, &SampleBox::default()));
    }

    #[test]
    fn degrees() {
        let s = random_sode(2, 3);
        for e in s.f() {
            let p = crate::symexpr::to_poly(e);
            assert!(p.degree_in("v1").unwrap() <= 3);
            assert!(p.degree_in("x2").unwrap() <= 2);
            assert!(p.degree_in("t").unwrap() <= 1);
        }
        assert_eq!(exponents(2, 2).len(), 6);
    }
}
