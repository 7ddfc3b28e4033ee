use nalgebra::{DMatrix, Matrix2, SMatrix};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_nu_open, Error, Result};
use crate::funcspace::SingularCoeffs;

pub fn c_of_nu(nu: f64) -> Result<f64> {
    check_nu_open(nu)?;
    Ok(nu * nu - 0.25)
}

pub fn coercivity_constant(nu: f64) -> Result<f64> {
    check_nu_open(nu)?;
    Ok((4.0 * nu * nu).min(1.0))
}

/// Interior conditions `M2 ([f,u],[f,v])(0⁻) + M3 ([f,u],[f,v])(0⁺) = 0`
/// plus optional Dirichlet conditions at `∓1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtensionSpec {
    pub nu: f64,
    pub m2_tilde: [[f64; 2]; 2],
    pub m3_tilde: [[f64; 2]; 2],
    pub dirichlet_at_pm1: [bool; 2],
    pub label: String,
}

fn mat(a: [[f64; 2]; 2]) -> Matrix2<f64> {
    Matrix2::new(a[0][0], a[0][1], a[1][0], a[1][1])
}

/// Maps `(c1, c2)` on each side to `([f,u], [f,v])` at `0⁻` and `0⁺`.
pub fn bracket_matrices(nu: f64) -> (Matrix2<f64>, Matrix2<f64>) {
    let (p, q) = (nu + 0.5, 0.5 - nu);
    (Matrix2::new(1.0, 1.0, -p, -q), Matrix2::new(1.0, 1.0, p, q))
}

impl ExtensionSpec {
    pub fn new(
        nu: f64,
        m2_tilde: [[f64; 2]; 2],
        m3_tilde: [[f64; 2]; 2],
        label: impl Into<String>,
    ) -> Result<Self> {
        check_nu_open(nu)?;
        Ok(Self {
            nu,
            m2_tilde,
            m3_tilde,
            dirichlet_at_pm1: [true, true],
            label: label.into(),
        })
    }

    /// `(M̂2, M̂3)` acting on `(c1m, c2m)` and `(c1p, c2p)`.
    pub fn reduced(&self) -> (Matrix2<f64>, Matrix2<f64>) {
        let (bm, bp) = bracket_matrices(self.nu);
        (mat(self.m2_tilde) * bm, mat(self.m3_tilde) * bp)
    }

    /// The two transmission constraints as rows acting on `(c1m, c2m, c1p, c2p)`.
    pub fn constraint_rows(&self) -> [[f64; 4]; 2] {
        let (a, b) = self.reduced();
        [0, 1].map(|i| [a[(i, 0)], a[(i, 1)], b[(i, 0)], b[(i, 1)]])
    }

    /// The 4×2 blocks `M1..M4` in the layout of the general boundary-condition theorem.
    pub fn boundary_matrices(&self) -> [SMatrix<f64, 4, 2>; 4] {
        let mut m = [SMatrix::<f64, 4, 2>::zeros(); 4];
        if self.dirichlet_at_pm1[0] {
            m[0][(0, 0)] = 1.0;
        }
        for i in 0..2 {
            for j in 0..2 {
                m[1][(i + 1, j)] = self.m2_tilde[i][j];
                m[2][(i + 1, j)] = self.m3_tilde[i][j];
            }
        }
        if self.dirichlet_at_pm1[1] {
            m[3][(3, 0)] = 1.0;
        }
        m
    }
}

pub fn designed_extension(nu: f64) -> Result<ExtensionSpec> {
    let id = [[1.0, 0.0], [0.0, 1.0]];
    ExtensionSpec::new(nu, id, id, "designed")
}

pub fn decoupled_extension(nu: f64) -> Result<ExtensionSpec> {
    ExtensionSpec::new(
        nu,
        [[0.0, 0.0], [0.0, 1.0]],
        [[1.0, 0.0], [0.0, 0.0]],
        "decoupled",
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Transmission {
    /// `(c1p, c2p) = T (c1m, c2m)`.
    Map(Matrix2<f64>),
    /// Constraints act on each side separately.
    Decoupled,
}

const SINGULAR_DET: f64 = 1e-12;

fn is_singular(m: &Matrix2<f64>) -> bool {
    m.determinant().abs() <= SINGULAR_DET * m.norm().powi(2).max(f64::MIN_POSITIVE)
}

pub fn transmission_map(spec: &ExtensionSpec) -> Result<Transmission> {
    let (a, b) = spec.reduced();
    match (is_singular(&a), is_singular(&b)) {
        (_, false) => {
            let inv = b.try_inverse().expect("checked nonsingular");
            Ok(Transmission::Map(-inv * a))
        }
        (true, true) => Ok(Transmission::Decoupled),
        (false, true) => Err(Error::InconsistentSpec(spec.label.clone())),
    }
}

/// A vector spanning the kernel of a rank-one 2×2 matrix.
fn rank_one_kernel(m: &Matrix2<f64>, label: &str) -> Result<[f64; 2]> {
    let r0 = m.row(0).norm();
    let r1 = m.row(1).norm();
    let r = if r0 >= r1 { m.row(0) } else { m.row(1) };
    if r0.max(r1) == 0.0 {
        return Err(Error::InconsistentSpec(label.to_string()));
    }
    Ok([r[1], -r[0]])
}

/// Two singular coefficient vectors spanning the constrained singular space.
pub fn singular_basis(spec: &ExtensionSpec) -> Result<[SingularCoeffs; 2]> {
    match transmission_map(spec)? {
        Transmission::Map(t) => Ok([0, 1].map(|k| {
            let (c1m, c2m) = if k == 0 { (1.0, 0.0) } else { (0.0, 1.0) };
            SingularCoeffs::new(c1m, c2m, t[(0, k)], t[(1, k)])
        })),
        Transmission::Decoupled => {
            let (a, b) = spec.reduced();
            let l = rank_one_kernel(&a, &spec.label)?;
            let r = rank_one_kernel(&b, &spec.label)?;
            Ok([
                SingularCoeffs::new(l[0], l[1], 0.0, 0.0),
                SingularCoeffs::new(0.0, 0.0, r[0], r[1]),
            ])
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub label: String,
    pub rank: usize,
    /// Max-abs entry of `M1 E M1ᵀ − M2 E M2ᵀ + M3 E M3ᵀ − M4 E M4ᵀ`.
    pub residual: f64,
    pub reduced_rank: usize,
    pub det_m2_tilde: f64,
    pub det_m3_tilde: f64,
    pub valid: bool,
    pub reduced_valid: bool,
}

const VALID_TOL: f64 = 1e-12;

pub fn validate_extension(spec: &ExtensionSpec) -> ValidationReport {
    let m = spec.boundary_matrices();
    let mut full = DMatrix::zeros(4, 8);
    for (k, b) in m.iter().enumerate() {
        full.view_mut((0, 2 * k), (4, 2)).copy_from(b);
    }
    let rank = full.rank(VALID_TOL);
    let e = Matrix2::new(0.0, -1.0, 1.0, 0.0);
    let form = |b: &SMatrix<f64, 4, 2>| b * e * b.transpose();
    let id = form(&m[0]) - form(&m[1]) + form(&m[2]) - form(&m[3]);
    let residual = id.amax();

    let mut red = DMatrix::zeros(2, 4);
    red.view_mut((0, 0), (2, 2)).copy_from(&mat(spec.m2_tilde));
    red.view_mut((0, 2), (2, 2)).copy_from(&mat(spec.m3_tilde));
    let reduced_rank = red.rank(VALID_TOL);
    let det_m2_tilde = mat(spec.m2_tilde).determinant();
    let det_m3_tilde = mat(spec.m3_tilde).determinant();
    ValidationReport {
        label: spec.label.clone(),
        rank,
        residual,
        reduced_rank,
        det_m2_tilde,
        det_m3_tilde,
        valid: rank == 4 && residual <= VALID_TOL,
        reduced_valid: reduced_rank == 2 && (det_m2_tilde - det_m3_tilde).abs() <= VALID_TOL,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TransmissionCertificate {
    pub trials: usize,
    pub valid_trials: usize,
    pub singular_pairs: usize,
    /// Largest `||det M̂2| − |det M̂3||` over valid trials.
    pub max_abs_det_mismatch: f64,
    /// Largest `|det M̂2 + det M̂3|`: the reduced determinants are opposite, not equal.
    pub max_signed_sum: f64,
    /// Trials where exactly one of `M̂2`, `M̂3` is invertible.
    pub one_sided: usize,
}

/// Samples random valid specs and checks that `M̂2` is invertible exactly when `M̂3` is.
///
/// Every eighth trial uses a rank-one pair so that the singular branch is exercised.
pub fn nonsymmetric_transmission_search(trials: usize, seed: u64) -> TransmissionCertificate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cert = TransmissionCertificate {
        trials,
        valid_trials: 0,
        singular_pairs: 0,
        max_abs_det_mismatch: 0.0,
        max_signed_sum: 0.0,
        one_sided: 0,
    };
    let uniform = |rng: &mut ChaCha8Rng| rng.random_range(-1.0..1.0);
    for k in 0..trials {
        let nu = rng.random_range(0.05..0.95);
        let (m2, m3) = if k % 8 == 7 {
            let outer = |rng: &mut ChaCha8Rng| {
                let a = [uniform(rng), uniform(rng)];
                let b = [uniform(rng), uniform(rng)];
                [[a[0] * b[0], a[0] * b[1]], [a[1] * b[0], a[1] * b[1]]]
            };
            (outer(&mut rng), outer(&mut rng))
        } else {
            let m2 = [[uniform(&mut rng), uniform(&mut rng)], [uniform(&mut rng), uniform(&mut rng)]];
            let mut m3 = [[uniform(&mut rng), uniform(&mut rng)], [uniform(&mut rng), uniform(&mut rng)]];
            let d3 = mat(m3).determinant();
            let d2 = mat(m2).determinant();
            if d3.abs() < 1e-3 {
                continue;
            }
            let s = d2 / d3;
            m3[0] = m3[0].map(|v| v * s);
            (m2, m3)
        };
        let spec = ExtensionSpec::new(nu, m2, m3, "random").expect("nu in range");
        if !validate_extension(&spec).valid {
            continue;
        }
        cert.valid_trials += 1;
        let (a, b) = spec.reduced();
        let (da, db) = (a.determinant(), b.determinant());
        let (sa, sb) = (is_singular(&a), is_singular(&b));
        if sa && sb {
            cert.singular_pairs += 1;
        }
        if sa != sb {
            cert.one_sided += 1;
        }
        cert.max_abs_det_mismatch = cert.max_abs_det_mismatch.max((da.abs() - db.abs()).abs());
        cert.max_signed_sum = cert.max_signed_sum.max((da + db).abs());
    }
    cert
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c_and_m_values() {
        assert_eq!(c_of_nu(0.5).unwrap(), 0.0);
        assert!((c_of_nu(0.75).unwrap() - 0.3125).abs() < 1e-16);
        assert!((c_of_nu(0.1).unwrap() + 0.24).abs() < 1e-16);
        assert_eq!(coercivity_constant(0.5).unwrap(), 1.0);
        assert!((coercivity_constant(0.3).unwrap() - 0.36).abs() < 1e-15);
        assert_eq!(coercivity_constant(0.6).unwrap(), 1.0);
        assert!(c_of_nu(1.0).is_err());
        assert!(coercivity_constant(0.0).is_err());
    }

    #[test]
    fn designed_constraints() {
        let s = designed_extension(0.5).unwrap();
        let r = s.constraint_rows();
        let c = [1.0, 0.0, 1.0, -2.0];
        for row in r {
            assert_eq!((0..4).map(|k| row[k] * c[k]).sum::<f64>(), 0.0);
        }
    }

    #[test]
    fn transmission_examples() {
        let Transmission::Map(t) = transmission_map(&designed_extension(0.5).unwrap()).unwrap() else {
            panic!("expected a map");
        };
        assert!((t - Matrix2::new(1.0, 0.0, -2.0, -1.0)).amax() < 1e-15);
        let Transmission::Map(t) = transmission_map(&designed_extension(0.25).unwrap()).unwrap() else {
            panic!("expected a map");
        };
        assert!((t - Matrix2::new(2.0, 1.0, -3.0, -2.0)).amax() < 1e-15);
        assert_eq!(
            transmission_map(&decoupled_extension(0.3).unwrap()).unwrap(),
            Transmission::Decoupled
        );
    }

    #[test]
    fn validation() {
        assert!(validate_extension(&designed_extension(0.3).unwrap()).valid);
        assert!(validate_extension(&decoupled_extension(0.3).unwrap()).valid);
        let bad = ExtensionSpec::new(0.3, [[1.0, 0.0], [0.0, 1.0]], [[2.0, 0.0], [0.0, 2.0]], "bad").unwrap();
        let r = validate_extension(&bad);
        assert!(!r.valid && !r.reduced_valid);
        let mut open = designed_extension(0.3).unwrap();
        open.dirichlet_at_pm1 = [false, true];
        assert_eq!(validate_extension(&open).rank, 3);
    }

    #[test]
    fn decoupled_basis_is_side_pure() {
        let s = decoupled_extension(0.5).unwrap();
        let [l, r] = singular_basis(&s).unwrap();
        assert_eq!((l.c1p, l.c2p), (0.0, 0.0));
        assert_eq!((r.c1m, r.c2m), (0.0, 0.0));
        assert_eq!(l.c1m, 0.0);
        assert_eq!(r.c1p, -r.c2p);
    }

    #[test]
    fn one_sided_spec_is_inconsistent() {
        let s = ExtensionSpec::new(0.3, [[1.0, 0.0], [0.0, 1.0]], [[1.0, 0.0], [0.0, 0.0]], "one").unwrap();
        assert!(matches!(transmission_map(&s), Err(Error::InconsistentSpec(_))));
    }
}
