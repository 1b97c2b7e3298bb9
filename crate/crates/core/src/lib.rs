//! Generalized Nash equilibrium problems of polynomials.
//!
//! The crate solves GNEPPs with the proximal Gauss-Seidel method, where each
//! player's subproblem is solved globally by the Moment-SOS hierarchy, checks
//! candidate equilibria, and searches for Positivstellensatz certificates that
//! a game is a generalized potential game.
//!
//! Module map:
//!
//! * [`poly`]: sparse polynomials over per-player variable blocks.
//! * [`instance`]: problem model, text format, built-in examples, random instances.
//! * [`moment`]: truncated moment sequences, localizing matrices, relaxation assembly.
//! * [`sdp`]: dense primal-dual interior-point solver for block SDPs.
//! * [`pop`]: the Moment-SOS hierarchy driver with flat truncation and extraction.
//! * [`gs`]: the Gauss-Seidel outer loop and equilibrium verification.
//! * [`gpg`]: potential-game certificates.
//! * [`cli`]: the `gnepp` command line and benchmark harness.

pub mod cli;
pub mod error;
pub mod gpg;
pub mod gs;
pub mod instance;
mod linalg;
pub mod moment;
pub mod poly;
pub mod pop;
pub mod sdp;

pub use error::{Error, Result};
pub use poly::{BlockLayout, Monomial, Polynomial, Var};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/polynomials.md")]
    mod polynomials {}
    #[doc = include_str!("../../../book/src/instances.md")]
    mod instances {}
    #[doc = include_str!("../../../book/src/moments.md")]
    mod moments {}
    #[doc = include_str!("../../../book/src/sdp.md")]
    mod sdp {}
    #[doc = include_str!("../../../book/src/pop.md")]
    mod pop {}
    #[doc = include_str!("../../../book/src/gauss_seidel.md")]
    mod gauss_seidel {}
    #[doc = include_str!("../../../book/src/certificates.md")]
    mod certificates {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
