use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: String,
    },

    #[error("nu = {0} is outside the supported range [0.05, 0.95]")]
    UnsupportedNu(f64),

    #[error("value is unbounded at x = 0 (nonzero coefficient of |x|^(1/2 - nu))")]
    Unbounded,

    #[error("functions do not share the same nu or grid")]
    Mismatch,

    #[error("extension spec `{0}` is not self-adjoint")]
    InvalidSpec(String),

    #[error("extension spec `{0}` has one-sided transmission constraints")]
    InconsistentSpec(String),

    #[error("stiffness symmetry defect {defect:e} exceeds {tol:e}")]
    SymmetryDefect { defect: f64, tol: f64 },

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),

    #[error("mode mismatch: {0}")]
    ModeMismatch(String),

    #[error("insufficient spectral resolution: tail mass {tail:e}")]
    SpectralResolution { tail: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("non-finite integrand: {0}")]
    NonFinite(String),

    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn check_nu_open(nu: f64) -> Result<()> {
    if nu > 0.0 && nu < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "nu",
            value: nu,
            reason: "must lie in (0, 1)".into(),
        })
    }
}
