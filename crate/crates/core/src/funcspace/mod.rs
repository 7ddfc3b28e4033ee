//! Grids, quadrature and the split regular-plus-singular representation of
//! functions in the domain of the operator.

pub mod cutoff;
pub mod function;
pub mod grid;
pub mod hermite;

pub use cutoff::Cutoff;
pub use function::{
    fit_singular_coeffs, hermite_interpolate, CutProfile, Function1D, MembershipReport,
    SingularCoeffs,
};
pub use grid::Grid1D;

/// Default grading exponent of [`Grid1D`].
pub const DEFAULT_GRADING: f64 = 2.0;

/// Supported range of `ν` for discretized operators.
pub const NU_MIN: f64 = 0.05;
pub const NU_MAX: f64 = 0.95;

pub fn build_grid(n_cells: usize, grading_exponent: f64) -> crate::Result<Grid1D> {
    Grid1D::build(n_cells, grading_exponent)
}
