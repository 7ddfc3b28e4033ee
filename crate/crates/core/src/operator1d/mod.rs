//! Self-adjoint extensions and the Galerkin discretization of `A_n`.

pub mod assemble;
pub mod eigen;
pub mod extension;

pub use assemble::{assemble, freq_sq, Basis1D, BasisMeta, Discretization, Operator1D, SYMMETRY_TOL};
pub use eigen::{
    coercivity_check, eigensolve, full_eigensolve, random_domain_element, CoercivityReport, EigenSystem,
    COERCIVITY_TOL,
};
pub use extension::{
    bracket_matrices, c_of_nu, coercivity_constant, decoupled_extension, designed_extension,
    nonsymmetric_transmission_search, singular_basis, transmission_map, validate_extension,
    ExtensionSpec, Transmission, TransmissionCertificate, ValidationReport,
};
