//! Exact arithmetic for symplectic lattices, isogeny representations, and
//! Siegel space reduction, with certified height bounds throughout.
//!
//! The crate is organized around five concerns:
//!
//! - [`scalar`] / [`matrix`]: arbitrary-precision rational scalars and dense
//!   matrices with exact heights, Bareiss determinants, Hermite normal forms
//!   and inverses;
//! - [`symplectic`]: perfect symplectic forms on `Z^2g`, the constructive
//!   symplectic-basis algorithm with per-step height certificates, and
//!   `Sp`/`GSp` membership tests;
//! - [`isogeny`]: rational representations of isogenies between polarised
//!   lattices and the bounded-representation pipeline;
//! - [`endred`]: unit reduction of symmetric positive definite elements in
//!   concrete involutive orders (integer matrix rings, quadratic orders);
//! - [`siegel`]: Siegel upper half space points at configurable precision,
//!   the Moebius action, and fundamental-domain reduction.

pub mod endred;
pub mod isogeny;
pub mod matrix;
pub mod scalar;
pub mod symplectic;

pub use matrix::{ExactMatrix, MatrixError};
pub use scalar::ExactScalar;
pub use symplectic::{
    bezout_bounded, gsp_multiplier, random_sp, standard_j, symplectic_basis, BasisMatrix,
    HeightCertificate, StepBound, SymplecticError, SymplecticForm,
};
