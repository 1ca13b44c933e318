//! Exact-arithmetic engine for Lie conformal superalgebras of type (r,s).
//!
//! The crate builds, from a lambda-bracket table on generators, the full
//! bracket calculus (sesquilinearity, skew-symmetry and Jacobi residuals),
//! the associated graded annihilation superalgebra with its geometric
//! realizations, generalized Verma modules over a PBW engine, conformal
//! duals, shift characters, and the machinery verifying that the dual of a
//! Verma module is the Verma module of the shifted dual.

// Indexed loops over small matrices stay as written; iterator rewrites make
// the linear algebra harder to read.
#![allow(clippy::needless_range_loop)]

pub mod algebras;
pub mod annihilation;
pub mod conformal;
pub mod error;
pub mod geo;
pub mod repmod;
pub mod selftest;
pub mod superpoly;

pub use annihilation::{AnnElem, AnnSpace};
pub use conformal::{GenId, GenSym, ModPoly, Mode, Presentation};
pub use error::CoreError;
pub use superpoly::{FamMono, Family, IndexSeq, Monomial, SuperPoly, VarSpec, Q};
