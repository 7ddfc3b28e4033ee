//! Hardy inequalities and the Carleman estimate, checked by quadrature on
//! polynomial test functions.

pub mod carleman;
pub mod hardy;
pub mod poly;

pub use carleman::{
    carleman_scan, carleman_sides, family_hash, select_b, singular_coefficient_defect, standard_family,
    CarlemanParams, CarlemanQuadrature, CarlemanRow, CarlemanScan, CarlemanSides, CarlemanWeight,
    TestFunction1Plus1, DEFAULT_FAMILY_SEED, UNDERFLOW_EXPONENT,
};
pub use hardy::{
    clamped_poly, hardy_check, hardy_interval_check, random_hardy_family, HardyInterval, HardyReport,
    IntervalHardyReport, HARDY_SLACK,
};
pub use poly::Poly;
