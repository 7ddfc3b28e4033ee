use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::funcspace::hermite_interpolate;
use crate::operator1d::assemble::{freq_sq, Basis1D, Operator1D};
use crate::operator1d::extension::coercivity_constant;

/// Lowest generalized eigenpairs of `(K, M)`, `M`-orthonormal.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub eigenvalues: Vec<f64>,
    /// One column per eigenvalue.
    pub eigenvectors: DMatrix<f64>,
}

impl EigenSystem {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Largest `‖K v − λ M v‖ / ‖K v‖` over the pairs.
    pub fn max_residual(&self, op: &Operator1D) -> f64 {
        let (k, m) = (op.stiffness(), op.mass());
        let mut worst: f64 = 0.0;
        for (j, &lam) in self.eigenvalues.iter().enumerate() {
            let v = self.eigenvectors.column(j);
            let kv = k * v;
            let r = &kv - lam * (m * v);
            let nk = kv.norm();
            if nk > 0.0 {
                worst = worst.max(r.norm() / nk);
            }
        }
        worst
    }

    /// Largest normwise backward error `‖K v − λ M v‖ / ((‖K‖ + |λ| ‖M‖) ‖v‖)`.
    ///
    /// Unlike [`EigenSystem::max_residual`] this stays meaningful for
    /// eigenvalues at or near 0, where `‖K v‖` itself is roundoff.
    pub fn max_backward_error(&self, op: &Operator1D) -> f64 {
        let (k, m) = (op.stiffness(), op.mass());
        let (nk, nm) = (k.norm(), m.norm());
        let mut worst: f64 = 0.0;
        for (j, &lam) in self.eigenvalues.iter().enumerate() {
            let v = self.eigenvectors.column(j);
            let r = k * v - lam * (m * v);
            worst = worst.max(r.norm() / ((nk + lam.abs() * nm) * v.norm()));
        }
        worst
    }

    /// Largest entry of `|Vᵀ M V − I|`.
    pub fn orthonormality_defect(&self, mass: &DMatrix<f64>) -> f64 {
        let g = self.eigenvectors.transpose() * mass * &self.eigenvectors;
        let n = g.nrows();
        (g - DMatrix::<f64>::identity(n, n)).amax()
    }
}

/// Connected components of the joint sparsity pattern of `K` and `M`.
fn components(k: &DMatrix<f64>, m: &DMatrix<f64>) -> Vec<Vec<usize>> {
    let n = k.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for j in 0..n {
        for i in 0..j {
            if k[(i, j)] != 0.0 || m[(i, j)] != 0.0 {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(i);
    }
    groups
}

fn dense_generalized(k: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::LinearAlgebra("mass matrix is not positive definite".into()))?;
    let l = chol.l();
    // C = L⁻¹ K L⁻ᵀ
    let mut c = k.clone();
    l.solve_lower_triangular_mut(&mut c);
    let mut ct = c.transpose();
    l.solve_lower_triangular_mut(&mut ct);
    let c = 0.5 * (&ct + ct.transpose());
    let eig = SymmetricEigen::try_new(c, 1e-15, 0)
        .ok_or_else(|| Error::LinearAlgebra("symmetric eigensolver did not converge".into()))?;
    let mut y = eig.eigenvectors;
    l.transpose().solve_upper_triangular_mut(&mut y);
    Ok((eig.eigenvalues.iter().copied().collect(), y))
}

struct Block {
    index: Vec<usize>,
    k: DMatrix<f64>,
    m: DMatrix<f64>,
    values: Vec<f64>,
    vectors: DMatrix<f64>,
}

fn solve_blocks(op: &Operator1D) -> Result<Vec<Block>> {
    let (k, m) = (op.stiffness(), op.mass());
    components(k, m)
        .into_iter()
        .map(|index| {
            let sub_k = k.select_rows(&index).select_columns(&index);
            let sub_m = m.select_rows(&index).select_columns(&index);
            let (values, vectors) = dense_generalized(&sub_k, &sub_m)?;
            Ok(Block {
                index,
                k: sub_k,
                m: sub_m,
                values,
                vectors,
            })
        })
        .collect()
}

fn assemble_system(n: usize, mut pairs: Vec<(f64, usize, DVector<f64>)>, blocks: &[Block]) -> EigenSystem {
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let eigenvalues = pairs.iter().map(|p| p.0).collect();
    let cols: Vec<DVector<f64>> = pairs
        .into_iter()
        .map(|(_, b, local)| {
            let mut v = DVector::zeros(n);
            for (a, &i) in blocks[b].index.iter().enumerate() {
                v[i] = local[a];
            }
            v
        })
        .collect();
    EigenSystem {
        eigenvalues,
        eigenvectors: DMatrix::from_columns(&cols),
    }
}

/// Solves `(K, M)` block by block; decoupled problems keep exactly side-pure eigenvectors.
pub fn full_eigensolve(op: &Operator1D) -> Result<EigenSystem> {
    let blocks = solve_blocks(op)?;
    let mut pairs = Vec::with_capacity(op.dim());
    for (b, blk) in blocks.iter().enumerate() {
        for (j, &lam) in blk.values.iter().enumerate() {
            pairs.push((lam, b, blk.vectors.column(j).into_owned()));
        }
    }
    Ok(assemble_system(op.dim(), pairs, &blocks))
}

/// One step of shifted inverse iteration on each vector, then Rayleigh–Ritz
/// on their span. The dense solve leaves errors of order `ε‖K‖`, which on a
/// graded mesh is large next to the lowest eigenvalues.
fn refine(k: &DMatrix<f64>, m: &DMatrix<f64>, values: &[f64], vectors: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let mut w = vectors.clone();
    for (j, &lam) in values.iter().enumerate() {
        let shifted = k - lam * m;
        let rhs = m * vectors.column(j);
        let lu = shifted.lu();
        if let Some(sol) = lu.solve(&rhs) {
            if sol.iter().all(|v| v.is_finite()) {
                let nrm = sol.dot(&(m * &sol)).sqrt();
                if nrm > 0.0 {
                    w.set_column(j, &(sol / nrm));
                }
            }
        }
    }
    let h = w.transpose() * k * &w;
    let g = w.transpose() * m * &w;
    let (vals, y) = dense_generalized(&(0.5 * (&h + h.transpose())), &(0.5 * (&g + g.transpose())))?;
    Ok((vals, w * y))
}

/// The `k` lowest eigenpairs, refined to small residuals.
pub fn eigensolve(op: &Operator1D, k: usize) -> Result<EigenSystem> {
    if k > op.dim() {
        return Err(Error::InvalidParameter {
            name: "k",
            value: k as f64,
            reason: format!("exceeds the basis dimension {}", op.dim()),
        });
    }
    let blocks = solve_blocks(op)?;
    let mut all: Vec<(f64, usize, usize)> = Vec::new();
    for (b, blk) in blocks.iter().enumerate() {
        all.extend(blk.values.iter().enumerate().map(|(j, &lam)| (lam, b, j)));
    }
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    all.truncate(k);
    let mut pairs = Vec::with_capacity(k);
    for (b, blk) in blocks.iter().enumerate() {
        let cols: Vec<usize> = all.iter().filter(|p| p.1 == b).map(|p| p.2).collect();
        if cols.is_empty() {
            continue;
        }
        let values: Vec<f64> = cols.iter().map(|&j| blk.values[j]).collect();
        let vectors = blk.vectors.select_columns(&cols);
        let (values, vectors) = refine(&blk.k, &blk.m, &values, &vectors)?;
        for (j, lam) in values.into_iter().enumerate() {
            pairs.push((lam, b, vectors.column(j).into_owned()));
        }
    }
    Ok(assemble_system(op.dim(), pairs, &blocks))
}

#[derive(Debug, Clone, Serialize)]
pub struct CoercivityReport {
    pub samples: usize,
    pub m_nu: f64,
    /// Minimum of `fᵀKf − m_ν fᵀGf − (nπ)² fᵀWf`.
    pub min_margin: f64,
    /// Minimum of the margin divided by `fᵀMf` (0 for the zero sample).
    pub min_relative_margin: f64,
    pub passed: bool,
}

pub const COERCIVITY_TOL: f64 = 1e-8;

/// Random smooth element of the discrete domain: regular part
/// `x²(1 − x²) q(x)` (Hermite-interpolated, `q` a random cubic) plus a random
/// combination of the two singular elements.
pub fn random_domain_element(basis: &Basis1D, rng: &mut ChaCha8Rng) -> Result<DVector<f64>> {
    let q: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
    let a: [f64; 2] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
    let p = move |x: f64| x * x * (1.0 - x * x) * (q[0] + x * (q[1] + x * (q[2] + x * q[3])));
    let dp = move |x: f64| {
        let qq = q[0] + x * (q[1] + x * (q[2] + x * q[3]));
        let dq = q[1] + x * (2.0 * q[2] + 3.0 * x * q[3]);
        (2.0 * x - 4.0 * x * x * x) * qq + x * x * (1.0 - x * x) * dq
    };
    let raw = hermite_interpolate(basis.grid(), p, dp);
    basis.coefficients_from_parts(&raw, a)
}

/// Evaluates the coercivity margin on `samples` random smooth domain elements.
///
/// Sample 0 is the zero function, the others come from [`random_domain_element`].
pub fn coercivity_check(op: &Operator1D, samples: usize, seed: u64) -> Result<CoercivityReport> {
    let m_nu = coercivity_constant(op.nu())?;
    let basis = op.basis();
    let disc = op.discretization();
    let kappa = freq_sq(op.n());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_margin = f64::INFINITY;
    let mut min_rel = f64::INFINITY;
    let mut passed = true;
    for s in 0..samples {
        let f = if s == 0 {
            DVector::zeros(op.dim())
        } else {
            random_domain_element(basis, &mut rng)?
        };
        let quad = |m: &DMatrix<f64>| f.dot(&(m * &f));
        let kf = quad(op.stiffness());
        let mf = quad(op.mass());
        let margin = kf - m_nu * quad(disc.grad()) - kappa * quad(disc.potential());
        min_margin = min_margin.min(margin);
        let rel = if mf > 0.0 { margin / mf } else { 0.0 };
        min_rel = min_rel.min(rel);
        if margin < -COERCIVITY_TOL * mf {
            passed = false;
        }
    }
    Ok(CoercivityReport {
        samples,
        m_nu,
        min_margin,
        min_relative_margin: min_rel,
        passed,
    })
}
