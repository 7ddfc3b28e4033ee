//! Numerical laboratory for the heat equation driven by a Grushin-type
//! operator with an inverse-square potential on `(-1, 1) × (0, 1)`.
//!
//! The 1D operators `A_n = −∂²ₓ + c_ν/x² + (nπ)²|x|^(2γ)` are discretized on
//! a graded Hermite basis enriched with the two singular profiles
//! `|x|^(1/2 ± ν)`; transmission conditions at `x = 0` select the self-adjoint
//! extension. On top of that sit the 1D/2D semigroups, Hardy and Carleman
//! verifiers and a penalized Gramian control solver.

pub mod cli;
pub mod control;
pub mod error;
pub mod funcspace;
pub mod inequalities;
pub mod operator1d;
pub mod quadrature;
pub mod semigroup;

pub use error::{Error, Result};
