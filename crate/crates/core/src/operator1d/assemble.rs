use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::funcspace::{hermite, Function1D, Grid1D, SingularCoeffs, NU_MAX, NU_MIN};
use crate::operator1d::extension::{c_of_nu, singular_basis, ExtensionSpec};

/// Regular Hermite functions with the clamped DOFs removed, followed by the two
/// cut-off singular elements. Every basis function is scaled to unit L² norm.
#[derive(Debug, Clone)]
pub struct Basis1D {
    nu: f64,
    grid: Arc<Grid1D>,
    free_dofs: Vec<usize>,
    raw_to_basis: Vec<Option<usize>>,
    singular: [SingularCoeffs; 2],
    scale: Vec<f64>,
    /// Nonzero scaled basis values at each quadrature point of the grid.
    quad_table: Vec<Vec<(usize, f64)>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BasisMeta {
    pub n_regular: usize,
    pub n_singular: usize,
    pub singular: [SingularCoeffs; 2],
    pub n_cells: usize,
    pub grading_exponent: f64,
}

impl Basis1D {
    fn new(nu: f64, grid: Arc<Grid1D>, spec: &ExtensionSpec) -> Result<Self> {
        let n_raw = 2 * grid.nodes().len();
        let last = grid.nodes().len() - 1;
        let z = grid.zero_node();
        let mut clamped = vec![false; n_raw];
        clamped[2 * z] = true;
        clamped[2 * z + 1] = true;
        clamped[0] |= spec.dirichlet_at_pm1[0];
        clamped[2 * last] |= spec.dirichlet_at_pm1[1];
        let free_dofs: Vec<usize> = (0..n_raw).filter(|&d| !clamped[d]).collect();
        let mut raw_to_basis = vec![None; n_raw];
        for (b, &d) in free_dofs.iter().enumerate() {
            raw_to_basis[d] = Some(b);
        }
        let singular = singular_basis(spec)?;
        let dim = free_dofs.len() + 2;
        Ok(Self {
            nu,
            grid,
            free_dofs,
            raw_to_basis,
            singular,
            scale: vec![1.0; dim],
            quad_table: Vec::new(),
        })
    }

    fn finish(&mut self, scale: Vec<f64>) {
        self.scale = scale;
        let g = self.grid.clone();
        self.quad_table = (0..g.quad_nodes().len())
            .map(|q| {
                let mut out = Vec::with_capacity(6);
                self.values_in_cell(g.quad_cells()[q], g.quad_nodes()[q], &mut out);
                out
            })
            .collect();
    }

    fn values_in_cell(&self, cell: usize, x: f64, out: &mut Vec<(usize, f64)>) {
        out.clear();
        let (a, b) = self.grid.cell_bounds(cell);
        let sh = hermite::shapes(a, b, x);
        for k in 0..4 {
            if let Some(i) = self.raw_to_basis[2 * cell + k] {
                if sh.value[k] != 0.0 {
                    out.push((i, self.scale[i] * sh.value[k]));
                }
            }
        }
        let nr = self.n_regular();
        for (k, s) in self.singular.iter().enumerate() {
            let v = s.cut_profile(self.nu, x).value;
            if v != 0.0 {
                out.push((nr + k, self.scale[nr + k] * v));
            }
        }
    }

    /// Basis functions that do not vanish at `x`, with their values.
    pub fn values_at(&self, x: f64, out: &mut Vec<(usize, f64)>) {
        out.clear();
        if let Some(cell) = self.grid.locate(x) {
            self.values_in_cell(cell, x, out);
        }
    }

    /// Scaled basis values at quadrature point `q` of the grid rule.
    pub fn quad_values(&self, q: usize) -> &[(usize, f64)] {
        &self.quad_table[q]
    }

    /// `∫ g φ_i` on the grid quadrature, given `g` at the quadrature points.
    pub fn load_from_samples(&self, samples: &[f64]) -> DVector<f64> {
        let w = self.grid.quad_weights();
        let mut b = DVector::zeros(self.dim());
        for (q, &gv) in samples.iter().enumerate() {
            if gv == 0.0 {
                continue;
            }
            for &(i, v) in &self.quad_table[q] {
                b[i] += w[q] * gv * v;
            }
        }
        b
    }

    /// Values of the function with coefficients `c` at the grid quadrature points.
    pub fn samples_of(&self, c: &DVector<f64>) -> Vec<f64> {
        self.quad_table
            .iter()
            .map(|row| row.iter().map(|&(i, v)| c[i] * v).sum())
            .collect()
    }

    /// `∫_a^b φ_i φ_j` computed with a rule that is exact on the clipped cells.
    pub fn interval_mass(&self, a: f64, b: f64) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        let mut vals = Vec::with_capacity(6);
        for (x, w, cell) in self.grid.interval_rule(a, b) {
            self.values_in_cell(cell, x, &mut vals);
            for &(i, vi) in &vals {
                for &(j, vj) in &vals {
                    m[(i, j)] += w * vi * vj;
                }
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.free_dofs.len() + 2
    }

    pub fn n_regular(&self) -> usize {
        self.free_dofs.len()
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn grid(&self) -> &Arc<Grid1D> {
        &self.grid
    }

    pub fn singular_elements(&self) -> [SingularCoeffs; 2] {
        self.singular
    }

    /// Multipliers turning raw Hermite/singular functions into the unit-norm basis.
    pub fn scale(&self) -> &[f64] {
        &self.scale
    }

    pub fn meta(&self) -> BasisMeta {
        BasisMeta {
            n_regular: self.n_regular(),
            n_singular: 2,
            singular: self.singular,
            n_cells: self.grid.n_cells(),
            grading_exponent: self.grid.grading_exponent(),
        }
    }

    /// The function with the given basis coefficients.
    pub fn to_function(&self, coeffs: &[f64]) -> Result<Function1D> {
        if coeffs.len() != self.dim() {
            return Err(Error::ModeMismatch(format!(
                "coefficient vector has length {}, basis has {}",
                coeffs.len(),
                self.dim()
            )));
        }
        let mut raw = vec![0.0; 2 * self.grid.nodes().len()];
        for (b, &d) in self.free_dofs.iter().enumerate() {
            raw[d] = self.scale[b] * coeffs[b];
        }
        let nr = self.n_regular();
        let sing = self.singular[0]
            .scaled(self.scale[nr] * coeffs[nr])
            .add(self.singular[1].scaled(self.scale[nr + 1] * coeffs[nr + 1]));
        Function1D::new(self.nu, self.grid.clone(), raw, sing)
    }

    /// Coefficients of `f_r + a0 ψ0 + a1 ψ1`, where `raw` holds Hermite DOFs of
    /// `f_r`; clamped DOFs of `raw` must already vanish.
    pub fn coefficients_from_parts(&self, raw: &[f64], singular: [f64; 2]) -> Result<DVector<f64>> {
        if raw.len() != self.raw_to_basis.len() {
            return Err(Error::ModeMismatch("raw Hermite vector has the wrong length".into()));
        }
        for (d, &v) in raw.iter().enumerate() {
            if self.raw_to_basis[d].is_none() && v != 0.0 {
                return Err(Error::Precondition(format!("clamped degree of freedom {d} is nonzero")));
            }
        }
        let nr = self.n_regular();
        let mut c = DVector::zeros(self.dim());
        for (b, &d) in self.free_dofs.iter().enumerate() {
            c[b] = raw[d] / self.scale[b];
        }
        c[nr] = singular[0] / self.scale[nr];
        c[nr + 1] = singular[1] / self.scale[nr + 1];
        Ok(c)
    }
}

/// Everything about `A_n` that does not depend on `n`.
#[derive(Debug, Clone)]
pub struct Discretization {
    basis: Arc<Basis1D>,
    spec: ExtensionSpec,
    gamma: f64,
    mass: DMatrix<f64>,
    mass_chol: Cholesky<f64, Dyn>,
    /// Symmetric part of `⟨A₀ φ_j, φ_i⟩`, `A₀ = −∂² + c/x²`.
    base: DMatrix<f64>,
    /// Antisymmetric part of the same.
    base_skew: DMatrix<f64>,
    potential: DMatrix<f64>,
    grad: DMatrix<f64>,
    hardy: DMatrix<f64>,
    boundary: DMatrix<f64>,
    a0_sq: DVector<f64>,
    a0_pot: DVector<f64>,
    pot_sq: DVector<f64>,
}

/// Relative symmetry tolerance of the assembled operator.
pub const SYMMETRY_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Default)]
struct Active {
    idx: usize,
    v: f64,
    a0: f64,
    r: f64,
    rp: f64,
    r_x2: f64,
}

impl Discretization {
    pub fn new(nu: f64, gamma: f64, grid: Arc<Grid1D>, spec: &ExtensionSpec) -> Result<Self> {
        if !(NU_MIN..=NU_MAX).contains(&nu) {
            return Err(Error::UnsupportedNu(nu));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "gamma",
                value: gamma,
                reason: "must be positive".into(),
            });
        }
        if spec.nu != nu {
            return Err(Error::InvalidParameter {
                name: "nu",
                value: nu,
                reason: format!("extension spec was built for nu = {}", spec.nu),
            });
        }
        let c = c_of_nu(nu)?;
        let mut basis = Basis1D::new(nu, grid.clone(), spec)?;
        let dim = basis.dim();
        let nr = basis.n_regular();

        let mut mass = DMatrix::<f64>::zeros(dim, dim);
        let mut strong = DMatrix::<f64>::zeros(dim, dim);
        let mut potential = DMatrix::<f64>::zeros(dim, dim);
        let mut grad = DMatrix::<f64>::zeros(dim, dim);
        let mut hardy = DMatrix::<f64>::zeros(dim, dim);
        let mut a0_sq = DVector::<f64>::zeros(dim);
        let mut a0_pot = DVector::<f64>::zeros(dim);
        let mut pot_sq = DVector::<f64>::zeros(dim);

        let mut act = [Active::default(); 6];
        for q in 0..grid.quad_nodes().len() {
            let x = grid.quad_nodes()[q];
            let w = grid.quad_weights()[q];
            let cell = grid.quad_cells()[q];
            let (a, b) = grid.cell_bounds(cell);
            let sh = hermite::shapes(a, b, x);
            let mut na = 0;
            for k in 0..4 {
                if let Some(idx) = basis.raw_to_basis[2 * cell + k] {
                    act[na] = Active {
                        idx,
                        v: sh.value[k],
                        a0: -sh.d2[k] + c * sh.over_x2[k],
                        r: sh.value[k],
                        rp: sh.d1[k],
                        r_x2: sh.over_x2[k],
                    };
                    na += 1;
                }
            }
            for (k, s) in basis.singular.iter().enumerate() {
                let p = s.cut_profile(nu, x);
                act[na] = Active {
                    idx: nr + k,
                    v: p.value,
                    a0: p.commutator,
                    r: p.remainder,
                    rp: p.remainder_d1,
                    r_x2: p.remainder / (x * x),
                };
                na += 1;
            }
            let pot = x.abs().powf(2.0 * gamma);
            for i in &act[..na] {
                a0_sq[i.idx] += w * i.a0 * i.a0;
                a0_pot[i.idx] += w * i.a0 * pot * i.v;
                pot_sq[i.idx] += w * pot * pot * i.v * i.v;
                for j in &act[..na] {
                    let (r, s) = (i.idx, j.idx);
                    mass[(r, s)] += w * i.v * j.v;
                    strong[(r, s)] += w * i.v * j.a0;
                    potential[(r, s)] += w * pot * i.v * j.v;
                    grad[(r, s)] += w * i.rp * j.rp;
                    hardy[(r, s)] += w * i.r * j.r_x2;
                }
            }
        }
        if !strong.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("stiffness assembly".into()));
        }

        // -(f_r g_s')(1) + (f_r g_s')(-1) with f_r = -s on the singular elements
        let mut boundary = DMatrix::<f64>::zeros(dim, dim);
        for (i, si) in basis.singular.iter().enumerate() {
            for (j, sj) in basis.singular.iter().enumerate() {
                let (vi_p, _) = si.profile(nu, 1.0);
                let (vi_m, _) = si.profile(nu, -1.0);
                let (_, dj_p) = sj.profile(nu, 1.0);
                let (_, dj_m) = sj.profile(nu, -1.0);
                boundary[(nr + i, nr + j)] = -vi_p * dj_p + vi_m * dj_m;
            }
        }
        let boundary = 0.5 * (&boundary + boundary.transpose());

        let scale: Vec<f64> = (0..dim).map(|i| 1.0 / mass[(i, i)].sqrt()).collect();
        let d = DVector::from_vec(scale.clone());
        let apply = |m: &mut DMatrix<f64>| {
            for j in 0..dim {
                for i in 0..dim {
                    m[(i, j)] *= d[i] * d[j];
                }
            }
        };
        for m in [
            &mut mass,
            &mut strong,
            &mut potential,
            &mut grad,
            &mut hardy,
        ] {
            apply(m);
        }
        let mut boundary = boundary;
        apply(&mut boundary);
        let d2 = d.component_mul(&d);
        a0_sq.component_mul_assign(&d2);
        a0_pot.component_mul_assign(&d2);
        pot_sq.component_mul_assign(&d2);
        basis.finish(scale);

        let mass_chol = mass
            .clone()
            .cholesky()
            .ok_or_else(|| Error::LinearAlgebra("mass matrix is not positive definite".into()))?;
        let base = 0.5 * (&strong + strong.transpose());
        let base_skew = 0.5 * (&strong - strong.transpose());
        Ok(Self {
            basis: Arc::new(basis),
            spec: spec.clone(),
            gamma,
            mass,
            mass_chol,
            base,
            base_skew,
            potential,
            grad,
            hardy,
            boundary,
            a0_sq,
            a0_pot,
            pot_sq,
        })
    }

    pub fn basis(&self) -> &Arc<Basis1D> {
        &self.basis
    }

    pub fn spec(&self) -> &ExtensionSpec {
        &self.spec
    }

    pub fn nu(&self) -> f64 {
        self.basis.nu
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn mass(&self) -> &DMatrix<f64> {
        &self.mass
    }

    /// Solves `M c = b`: coefficients of the L² projection whose load vector is `b`.
    pub fn solve_mass(&self, b: &DVector<f64>) -> DVector<f64> {
        self.mass_chol.solve(b)
    }

    /// L² projection of `g` (sampled at the grid quadrature points) onto the basis.
    pub fn project_samples(&self, samples: &[f64]) -> DVector<f64> {
        self.solve_mass(&self.basis.load_from_samples(samples))
    }

    /// `∫ |x|^(2γ) φ_i φ_j`.
    pub fn potential(&self) -> &DMatrix<f64> {
        &self.potential
    }

    /// `∫ ∂x f_r ∂x g_r` over the regular parts.
    pub fn grad(&self) -> &DMatrix<f64> {
        &self.grad
    }

    /// `∫ f_r g_r / x²` over the regular parts.
    pub fn hardy(&self) -> &DMatrix<f64> {
        &self.hardy
    }

    /// Symmetrized endpoint term `f_r(1) ∂x g_s(1) − f_r(−1) ∂x g_s(−1)`.
    pub fn boundary(&self) -> &DMatrix<f64> {
        &self.boundary
    }

    /// Largest relative defect `|⟨A φ_j, φ_i⟩ − ⟨φ_j, A φ_i⟩| / (‖φ_i‖‖Aφ_j‖ + ‖φ_j‖‖Aφ_i‖)`.
    pub fn symmetry_defect(&self, n: usize) -> f64 {
        let kappa = freq_sq(n);
        let an: Vec<f64> = (0..self.a0_sq.len())
            .map(|i| {
                (self.a0_sq[i] + 2.0 * kappa * self.a0_pot[i] + kappa * kappa * self.pot_sq[i])
                    .max(0.0)
                    .sqrt()
            })
            .collect();
        let mut worst: f64 = 0.0;
        let dim = an.len();
        for j in 0..dim {
            for i in 0..j {
                let skew = 2.0 * self.base_skew[(i, j)].abs();
                if skew == 0.0 {
                    continue;
                }
                let denom = an[j] + an[i];
                worst = worst.max(skew / denom);
            }
        }
        worst
    }

    pub fn operator(self: &Arc<Self>, n: usize) -> Result<Operator1D> {
        let defect = self.symmetry_defect(n);
        if !(defect <= SYMMETRY_TOL) {
            return Err(Error::SymmetryDefect {
                defect,
                tol: SYMMETRY_TOL,
            });
        }
        let stiffness = &self.base + freq_sq(n) * &self.potential;
        Ok(Operator1D {
            n,
            disc: self.clone(),
            stiffness,
            symmetry_defect: defect,
        })
    }
}

/// `(nπ)²`.
pub fn freq_sq(n: usize) -> f64 {
    let f = n as f64 * std::f64::consts::PI;
    f * f
}

/// Galerkin pair `(K, M)` for `A_n` on the constrained basis.
#[derive(Debug, Clone)]
pub struct Operator1D {
    n: usize,
    disc: Arc<Discretization>,
    stiffness: DMatrix<f64>,
    symmetry_defect: f64,
}

impl Operator1D {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nu(&self) -> f64 {
        self.disc.nu()
    }

    pub fn gamma(&self) -> f64 {
        self.disc.gamma
    }

    pub fn stiffness(&self) -> &DMatrix<f64> {
        &self.stiffness
    }

    pub fn mass(&self) -> &DMatrix<f64> {
        &self.disc.mass
    }

    pub fn spec(&self) -> &ExtensionSpec {
        &self.disc.spec
    }

    pub fn basis(&self) -> &Arc<Basis1D> {
        &self.disc.basis
    }

    pub fn discretization(&self) -> &Arc<Discretization> {
        &self.disc
    }

    pub fn dim(&self) -> usize {
        self.stiffness.nrows()
    }

    pub fn symmetry_defect(&self) -> f64 {
        self.symmetry_defect
    }

    /// The same form assembled from `∫ f_r' g_r' + c f_r g_r/x² + (nπ)²|x|^(2γ) f g` plus endpoint terms.
    pub fn weak_stiffness(&self) -> DMatrix<f64> {
        let d = &self.disc;
        let c = c_of_nu(d.nu()).expect("nu validated at assembly");
        let h = 0.5 * (&d.hardy + d.hardy.transpose());
        &d.grad + c * h + freq_sq(self.n) * &d.potential + &d.boundary
    }
}

pub fn assemble(
    n: usize,
    nu: f64,
    gamma: f64,
    grid: &Arc<Grid1D>,
    spec: &ExtensionSpec,
) -> Result<Operator1D> {
    Arc::new(Discretization::new(nu, gamma, grid.clone(), spec)?).operator(n)
}
