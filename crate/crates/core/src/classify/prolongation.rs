use num_traits::{One, Zero};

use crate::linalg::exact_rank;
use crate::symexpr::Rational;

/// Dimension of the first prolongation of the matrix algebra spanned by
/// `basis` (each an m×m matrix of rationals, `[row][col]`).
///
/// An element of `V*⊗𝔤` is `t_α = Σ c_{α,r} basis[r]`; the kernel of the
/// symmetry conditions `t_α e_β = t_β e_α` is the prolongation.
pub fn prolongation_dim(basis: &[Vec<Vec<Rational>>]) -> usize {
    let Some(first) = basis.first() else { return 0 };
    let m = first.len();
    let r = basis.len();
    let col = |alpha: usize, k: usize| alpha * r + k;
    let mut rows = Vec::new();
    for alpha in 0..m {
        for beta in alpha + 1..m {
            for gamma in 0..m {
                let mut row = vec![Rational::zero(); m * r];
                for (k, b) in basis.iter().enumerate() {
                    row[col(alpha, k)] += &b[gamma][beta];
                    row[col(beta, k)] -= &b[gamma][alpha];
                }
                if row.iter().any(|x| !x.is_zero()) {
                    rows.push(row);
                }
            }
        }
    }
    m * r - exact_rank(&rows)
}

/// Image of `E_ij ∈ 𝔤𝔩(n)` acting diagonally on both n-blocks of `ℝ^{2n+1}`.
pub(crate) fn embedded_gl_basis(n: usize) -> Vec<Vec<Vec<Rational>>> {
    let m = 2 * n + 1;
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let mut b = vec![vec![Rational::zero(); m]; m];
            b[1 + i][1 + j] = Rational::one();
            b[1 + n + i][1 + n + j] = Rational::one();
            out.push(b);
        }
    }
    out
}

/// First prolongation dimension of the structure algebra of the adapted
/// frames in dimension `2n+1`.
pub fn first_prolongation_dim(n: usize) -> crate::Result<usize> {
    if !(1..=4).contains(&n) {
        return Err(crate::Error::Invalid(format!("first_prolongation_dim expects 1 <= n <= 4, got {n}")));
    }
    Ok(prolongation_dim(&embedded_gl_basis(n)))
}
