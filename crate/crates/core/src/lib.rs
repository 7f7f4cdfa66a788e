//! Geometry of systems of second-order ODEs `ẍ = F(t, x, ẋ)`: the adapted
//! frame on the jet bundle, the Chern connection with its torsion and
//! curvature, Kosambi invariants, curvature-based classification, naturality
//! under vertical automorphisms, and the bridge to Riemannian sprays.
//!
//! ```
//! use sodegeom::chern::Geometry;
//! use sodegeom::sode::SodeSystem;
//!
//! let g = Geometry::new(SodeSystem::parse(1, &["-x1 - v1"]).unwrap());
//! assert_eq!(g.split.p[0][0].to_string(), "3/4");
//! ```
//!
//! The guide in `book/` walks through each module; its code blocks run as
//! doc-tests of this crate.

#![allow(clippy::needless_range_loop)]

pub mod chern;
pub mod classify;
pub mod cli;
pub mod error;
pub mod linalg;
pub mod natjets;
pub mod riemann;
pub mod sode;
pub mod symexpr;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    macro_rules! chapters {
        ($($name:ident => $file:literal),* $(,)?) => {
            $(#[doc = include_str!(concat!("../../../book/src/", $file))] mod $name {})*
        };
    }
    #[doc = include_str!("../../../README.md")]
    mod readme {}

    chapters! {
        intro => "intro.md",
        expressions => "expressions.md",
        sode => "sode.md",
        chern => "chern.md",
        classify => "classify.md",
        jets => "jets.md",
        riemann => "riemann.md",
        cli => "cli.md",
    }
}
