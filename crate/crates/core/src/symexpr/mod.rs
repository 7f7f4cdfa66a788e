//! Symbolic expressions: parsing, exact differentiation, canonical
//! simplification, evaluation, and a finite-difference oracle.

mod diff;
mod eval;
mod expr;
mod fd;
mod parse;
mod print;
mod simplify;
mod varset;

pub use diff::diff;
pub use eval::{eval, Env, Shifted};
pub use expr::{Expr, Func, Node, Num, Rational};
pub use fd::fd_diff;
pub use parse::parse;
pub use simplify::{is_zero, simplify, to_poly, Atom, Mono, Poly};
pub use varset::{Role, VarSet};

/// Derivative in canonical form.
pub fn d(e: &Expr, var: &str) -> Expr {
    simplify(&diff(e, var))
}
