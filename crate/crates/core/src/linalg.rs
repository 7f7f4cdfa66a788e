//! Small numeric and exact linear-algebra helpers.

use nalgebra::DMatrix;
use num_traits::{One, Zero};

use crate::symexpr::Rational;

/// Singular values in descending order.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    sv
}

/// Numeric rank with a threshold relative to the largest singular value.
#[derive(Clone, Debug, PartialEq)]
pub struct NumericRank {
    pub rank: usize,
    pub singular_values: Vec<f64>,
    /// `σ_rank / σ_{rank+1}`; infinite when nothing was discarded.
    pub gap: f64,
}

pub fn numeric_rank(m: &DMatrix<f64>, rel_tol: f64) -> NumericRank {
    let sv = singular_values(m);
    let top = sv.first().copied().unwrap_or(0.0);
    if top <= f64::MIN_POSITIVE {
        return NumericRank { rank: 0, singular_values: sv, gap: f64::INFINITY };
    }
    let rank = sv.iter().filter(|s| **s > rel_tol * top).count();
    let gap = match (rank, sv.get(rank)) {
        (0, _) => f64::INFINITY,
        (_, None) => f64::INFINITY,
        (r, Some(next)) => {
            if *next == 0.0 {
                f64::INFINITY
            } else {
                sv[r - 1] / next
            }
        }
    };
    NumericRank { rank, singular_values: sv, gap }
}

/// Exact rank by Gaussian elimination over the rationals.
pub fn exact_rank(rows: &[Vec<Rational>]) -> usize {
    let mut a: Vec<Vec<Rational>> = rows.to_vec();
    let cols = a.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(piv) = (rank..a.len()).find(|&r| !a[r][c].is_zero()) else { continue };
        a.swap(rank, piv);
        let inv = a[rank][c].recip();
        for x in a[rank].iter_mut() {
            *x *= &inv;
        }
        let pivot_row = a[rank].clone();
        for (r, row) in a.iter_mut().enumerate() {
            if r != rank && !row[c].is_zero() {
                let f = row[c].clone();
                for (x, p) in row.iter_mut().zip(&pivot_row) {
                    if !p.is_zero() {
                        *x -= &f * p;
                    }
                }
            }
        }
        rank += 1;
        if rank == a.len() {
            break;
        }
    }
    rank
}

/// Characteristic polynomial `det(λI − A)` by Faddeev–LeVerrier, coefficients
/// from `λ^n` down.
pub fn charpoly(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut coeffs = vec![1.0];
    let mut m = DMatrix::<f64>::zeros(n, n);
    let mut c = 1.0;
    for k in 1..=n {
        m = a * &m + DMatrix::identity(n, n) * c;
        c = -(a * &m).trace() / k as f64;
        coeffs.push(c);
    }
    coeffs
}

pub fn rational_identity(n: usize) -> Vec<Vec<Rational>> {
    (0..n).map(|i| (0..n).map(|j| if i == j { Rational::one() } else { Rational::zero() }).collect()).collect()
}
