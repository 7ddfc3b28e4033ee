//! Penalized Gramian (HUM) control synthesis, unique-continuation
//! certificates and the one-sided control experiments.

use std::io::Write;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::funcspace::Grid1D;
use crate::operator1d::{Discretization, ExtensionSpec};
use crate::semigroup::{fourier_project, mild_solution, step_count, Field2D, Semigroup};

use std::f64::consts::PI;

/// Default number of control time samples on `[0, T]`.
pub const DEFAULT_STEPS: usize = 64;
pub const DEFAULT_CG_TOL: f64 = 1e-12;
pub const DEFAULT_CG_MAXITER: usize = 5000;
/// Eigen-coordinates with `λ dt / 2` above this are dropped from the reduced
/// Gramian; their entries are below `e^{-45}`.
pub const DECAY_CUTOFF: f64 = 45.0;

/// Axis-aligned rectangle `(x0, x1) × (y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        let ok = -1.0 <= x0 && x0 < x1 && x1 <= 1.0 && 0.0 <= y0 && y0 < y1 && y1 <= 1.0;
        if !ok {
            return Err(Error::InvalidParameter {
                name: "omega",
                value: f64::NAN,
                reason: format!("({x0}, {x1}) x ({y0}, {y1}) is not a rectangle of positive area inside the domain"),
            });
        }
        Ok(Self { x0, x1, y0, y1 })
    }

    /// `(x0, x1) × (0, 1)`, for the 1D problem.
    pub fn strip(x0: f64, x1: f64) -> Result<Self> {
        Self::new(x0, x1, 0.0, 1.0)
    }

    fn overlaps(&self, o: &Rect) -> bool {
        self.x0 < o.x1 && o.x0 < self.x1 && self.y0 < o.y1 && o.y0 < self.y1
    }

    fn full_y(&self) -> bool {
        self.y0 == 0.0 && self.y1 == 1.0
    }
}

/// `∫_{y0}^{y1} φ_n φ_m dy` with `φ_n = √2 sin(nπy)`.
///
/// Mode 0 stands for a `y`-independent 1D problem and only couples to itself,
/// on rectangles spanning all of `(0, 1)`.
pub fn y_coupling(n: usize, m: usize, y0: f64, y1: f64) -> Result<f64> {
    if n == 0 || m == 0 {
        if y0 != 0.0 || y1 != 1.0 {
            return Err(Error::Precondition("mode 0 requires omega to span all of y".into()));
        }
        return Ok(if n == m { 1.0 } else { 0.0 });
    }
    if y0 == 0.0 && y1 == 1.0 {
        return Ok(if n == m { 1.0 } else { 0.0 });
    }
    let s = |k: f64, y: f64| (k * PI * y).sin() / (k * PI);
    let (nf, mf) = (n as f64, m as f64);
    Ok(if n == m {
        (y1 - y0) - (s(2.0 * nf, y1) - s(2.0 * nf, y0))
    } else {
        let d = nf - mf;
        let p = nf + mf;
        (s(d, y1) - s(d, y0)) - (s(p, y1) - s(p, y0))
    })
}

/// Galerkin realization of multiplication by `χ_ω`: `P = Σ_r Y_r ⊗ M⁻¹ B_r`.
#[derive(Debug, Clone)]
pub struct Restrictor {
    disc: Arc<Discretization>,
    modes: Vec<usize>,
    parts: Vec<(DMatrix<f64>, DMatrix<f64>)>,
}

impl Restrictor {
    pub fn new(disc: &Arc<Discretization>, modes: &[usize], omega: &[Rect]) -> Result<Self> {
        if omega.is_empty() {
            return Err(Error::InvalidParameter {
                name: "omega",
                value: 0.0,
                reason: "at least one rectangle is required".into(),
            });
        }
        for (i, a) in omega.iter().enumerate() {
            if omega[i + 1..].iter().any(|b| a.overlaps(b)) {
                return Err(Error::InvalidParameter {
                    name: "omega",
                    value: i as f64,
                    reason: "rectangles overlap".into(),
                });
            }
        }
        let basis = disc.basis();
        let mut parts = Vec::with_capacity(omega.len());
        for r in omega {
            let k = modes.len();
            let mut y = DMatrix::zeros(k, k);
            for (a, &n) in modes.iter().enumerate() {
                for (b, &m) in modes.iter().enumerate() {
                    y[(a, b)] = y_coupling(n, m, r.y0, r.y1)?;
                }
            }
            parts.push((y, basis.interval_mass(r.x0, r.x1)));
        }
        Ok(Self {
            disc: disc.clone(),
            modes: modes.to_vec(),
            parts,
        })
    }

    pub fn parts(&self) -> &[(DMatrix<f64>, DMatrix<f64>)] {
        &self.parts
    }

    pub fn apply(&self, f: &Field2D) -> Result<Field2D> {
        if f.modes() != self.modes.as_slice() || !Arc::ptr_eq(f.discretization(), &self.disc) {
            return Err(Error::ModeMismatch("field does not match the restrictor".into()));
        }
        let mut out = Field2D::zeros(self.disc.clone(), self.modes.clone());
        for (y, bx) in &self.parts {
            let w: Vec<DVector<f64>> = f.coeffs().iter().map(|c| self.disc.solve_mass(&(bx * c))).collect();
            for (a, oa) in out.coeffs_mut().iter_mut().enumerate() {
                for (b, wb) in w.iter().enumerate() {
                    let yab = y[(a, b)];
                    if yab != 0.0 {
                        oa.axpy(yab, wb, 1.0);
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Galerkin projection of `χ_ω f` onto the field's modes and basis.
pub fn restrict_omega(f: &Field2D, omega: &[Rect]) -> Result<Field2D> {
    Restrictor::new(f.discretization(), f.modes(), omega)?.apply(f)
}

#[derive(Debug, Clone)]
pub struct ControlProblem {
    pub semigroup: Arc<Semigroup>,
    pub omega: Vec<Rect>,
    pub t_final: f64,
    pub steps: usize,
    pub f0: Field2D,
    pub f_target: Field2D,
    pub beta: f64,
    pub cg_tol: f64,
    pub cg_maxiter: usize,
}

impl ControlProblem {
    pub fn new(
        semigroup: Arc<Semigroup>,
        omega: Vec<Rect>,
        t_final: f64,
        f0: Field2D,
        f_target: Field2D,
        beta: f64,
    ) -> Result<Self> {
        let p = Self {
            semigroup,
            omega,
            t_final,
            steps: DEFAULT_STEPS,
            f0,
            f_target,
            beta,
            cg_tol: DEFAULT_CG_TOL,
            cg_maxiter: DEFAULT_CG_MAXITER,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        let mut p = self.clone();
        p.beta = beta;
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) {
            return Err(Error::InvalidParameter {
                name: "beta",
                value: self.beta,
                reason: "must be positive".into(),
            });
        }
        if !(self.t_final > 0.0) || self.steps == 0 {
            return Err(Error::InvalidParameter {
                name: "T",
                value: self.t_final,
                reason: "need T > 0 and at least one time step".into(),
            });
        }
        let modes = self.semigroup.mode_indices();
        for f in [&self.f0, &self.f_target] {
            if f.modes() != modes.as_slice() || !Arc::ptr_eq(f.discretization(), self.semigroup.discretization()) {
                return Err(Error::ModeMismatch("initial or target state does not match the semigroup".into()));
            }
        }
        if modes.contains(&0) && self.omega.iter().any(|r| !r.full_y()) {
            return Err(Error::Precondition("mode 0 requires omega to span all of y".into()));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.t_final / self.steps as f64
    }

    pub fn spec(&self) -> &ExtensionSpec {
        self.semigroup.discretization().spec()
    }

    pub fn restrictor(&self) -> Result<Restrictor> {
        Restrictor::new(self.semigroup.discretization(), &self.semigroup.mode_indices(), &self.omega)
    }

    /// Backward offsets `T − τ_j = (j + ½) dt` of the midpoint nodes.
    fn offsets(&self) -> Vec<f64> {
        let dt = self.dt();
        (0..self.steps).map(|j| (j as f64 + 0.5) * dt).collect()
    }
}

/// `Λ g = Σ_j dt S(T−τ_j) χ_ω S(T−τ_j) g`, computed directly on coefficients.
pub fn gramian_apply(g: &Field2D, problem: &ControlProblem) -> Result<Field2D> {
    let restrict = problem.restrictor()?;
    gramian_apply_with(g, problem, &restrict)
}

fn gramian_apply_with(g: &Field2D, problem: &ControlProblem, restrict: &Restrictor) -> Result<Field2D> {
    let sg = &problem.semigroup;
    let dt = problem.dt();
    let mut out = sg.zeros();
    for s in problem.offsets() {
        let v = sg.apply(&restrict.apply(&sg.apply(g, s)?)?, s)?;
        out.axpy(dt, &v)?;
    }
    Ok(out)
}

/// Dense matrix `⟨Λ b_i, b_j⟩` on the span of `basis`.
pub fn coarse_gramian(problem: &ControlProblem, basis: &[Field2D]) -> Result<DMatrix<f64>> {
    let restrict = problem.restrictor()?;
    let images: Vec<Field2D> = basis
        .iter()
        .map(|b| gramian_apply_with(b, problem, &restrict))
        .collect::<Result<_>>()?;
    let k = basis.len();
    let mut g = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            g[(i, j)] = images[i].inner(&basis[j])?;
        }
    }
    Ok(0.5 * (&g + g.transpose()))
}

/// Gramian in eigen-coordinates, restricted to coordinates that survive one half step.
#[derive(Debug, Clone)]
pub struct ReducedGramian {
    /// `(mode position, eigen index)` of each kept coordinate.
    pub kept: Vec<(usize, usize)>,
    pub matrix: DMatrix<f64>,
    pub total_dim: usize,
}

impl ReducedGramian {
    pub fn build(problem: &ControlProblem) -> Result<Self> {
        let sg = &problem.semigroup;
        let restrict = problem.restrictor()?;
        let dt = problem.dt();
        let offsets = problem.offsets();
        let spectra = sg.spectra();
        let mut kept = Vec::new();
        let mut total_dim = 0;
        for (a, ms) in spectra.iter().enumerate() {
            total_dim += ms.eig.len();
            for (k, &lam) in ms.eig.eigenvalues.iter().enumerate() {
                if lam * dt / 2.0 <= DECAY_CUTOFF {
                    kept.push((a, k));
                }
            }
        }
        Self::assemble(problem, &restrict, kept, total_dim, dt, &offsets)
    }

    /// The `dim` lowest tensor eigenstates over all modes.
    pub fn lowest(problem: &ControlProblem, dim: usize) -> Result<Self> {
        let sg = &problem.semigroup;
        let mut all: Vec<(f64, usize, usize)> = Vec::new();
        for (a, ms) in sg.spectra().iter().enumerate() {
            all.extend(ms.eig.eigenvalues.iter().enumerate().map(|(k, &l)| (l, a, k)));
        }
        if dim == 0 || dim > all.len() {
            return Err(Error::InvalidParameter {
                name: "coarse_dim",
                value: dim as f64,
                reason: format!("must lie in 1..={}", all.len()),
            });
        }
        let total_dim = all.len();
        all.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
        let kept = all.iter().take(dim).map(|&(_, a, k)| (a, k)).collect();
        Self::assemble(problem, &problem.restrictor()?, kept, total_dim, problem.dt(), &problem.offsets())
    }

    fn assemble(
        problem: &ControlProblem,
        restrict: &Restrictor,
        kept: Vec<(usize, usize)>,
        total_dim: usize,
        dt: f64,
        offsets: &[f64],
    ) -> Result<Self> {
        let spectra = problem.semigroup.spectra();
        let n_modes = spectra.len();
        // kept columns per mode
        let mut cols: Vec<Vec<usize>> = vec![Vec::new(); n_modes];
        let mut slot: Vec<Vec<usize>> = vec![Vec::new(); n_modes];
        for (i, &(a, k)) in kept.iter().enumerate() {
            cols[a].push(k);
            slot[a].push(i);
        }
        let vk: Vec<DMatrix<f64>> = (0..n_modes)
            .map(|a| spectra[a].eig.eigenvectors.select_columns(&cols[a]))
            .collect();
        let decay: Vec<Vec<f64>> = kept
            .iter()
            .map(|&(a, k)| {
                let lam = spectra[a].eig.eigenvalues[k];
                offsets.iter().map(|s| (-lam * s).exp()).collect()
            })
            .collect();
        let dim = kept.len();
        let mut mat = DMatrix::zeros(dim, dim);
        for (y, bx) in restrict.parts() {
            let bv: Vec<DMatrix<f64>> = vk.iter().map(|v| bx * v).collect();
            for a in 0..n_modes {
                for b in a..n_modes {
                    let yab = y[(a, b)];
                    if yab == 0.0 || cols[a].is_empty() || cols[b].is_empty() {
                        continue;
                    }
                    let c = vk[a].transpose() * &bv[b];
                    for (p, &i) in slot[a].iter().enumerate() {
                        for (q, &j) in slot[b].iter().enumerate() {
                            let cpq = c[(p, q)];
                            if cpq == 0.0 {
                                continue;
                            }
                            let w: f64 = decay[i].iter().zip(&decay[j]).map(|(u, v)| u * v).sum();
                            let e = yab * cpq * dt * w;
                            mat[(i, j)] += e;
                            if a != b {
                                mat[(j, i)] += e;
                            }
                        }
                    }
                }
            }
        }
        let matrix = 0.5 * (&mat + mat.transpose());
        Ok(Self {
            kept,
            matrix,
            total_dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.kept.len()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = SymmetricEigen::new(self.matrix.clone()).eigenvalues.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CgReport {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

/// Conjugate gradients for `(A + β I) x = b`.
pub fn conjugate_gradient(a: &DMatrix<f64>, beta: f64, b: &DVector<f64>, tol: f64, maxiter: usize) -> (DVector<f64>, CgReport) {
    let n = b.len();
    let mut x = DVector::zeros(n);
    let bnorm = b.norm();
    if bnorm == 0.0 {
        return (
            x,
            CgReport {
                iterations: 0,
                relative_residual: 0.0,
                converged: true,
            },
        );
    }
    let mut r = b.clone();
    let mut p = r.clone();
    let mut rr = r.norm_squared();
    let mut it = 0;
    while it < maxiter && rr.sqrt() > tol * bnorm {
        let ap = a * &p + beta * &p;
        let alpha = rr / p.dot(&ap);
        x.axpy(alpha, &p, 1.0);
        r.axpy(-alpha, &ap, 1.0);
        let rr_new = r.norm_squared();
        p = &r + (rr_new / rr) * &p;
        rr = rr_new;
        it += 1;
    }
    // true residual
    let res = (b - (a * &x + beta * &x)).norm() / bnorm;
    (
        x,
        CgReport {
            iterations: it,
            relative_residual: res,
            converged: rr.sqrt() <= tol * bnorm,
        },
    )
}

#[derive(Debug, Clone)]
pub struct ControlResult {
    pub beta: f64,
    /// `u_j` on `(j dt, (j+1) dt)`.
    pub control: Vec<Field2D>,
    pub dual_state: Field2D,
    pub final_state: Field2D,
    pub terminal_error: f64,
    pub dual_state_norm: f64,
    pub cg: CgReport,
    /// `‖f_T − f(T) − β g_T‖ / (β ‖g_T‖)`, 0 when `g_T = 0`.
    pub hum_identity_error: f64,
    /// `L²((0,T) × Ω)` norm of the control.
    pub control_norm: f64,
    /// `L²` norm of the final state on `x > 0`.
    pub right_norm: f64,
    /// Smallest eigenvalue of the Gramian on the 8 lowest eigenstates.
    pub gramian_min_eig: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ControlSummary {
    pub beta: f64,
    pub terminal_error: f64,
    pub dual_state_norm: f64,
    pub cg_iters: usize,
    pub cg_converged: bool,
    pub hum_identity_error: f64,
    pub control_norm: f64,
    pub right_norm: f64,
    pub gramian_min_eig: Option<f64>,
}

impl ControlResult {
    pub fn summary(&self) -> ControlSummary {
        ControlSummary {
            beta: self.beta,
            terminal_error: self.terminal_error,
            dual_state_norm: self.dual_state_norm,
            cg_iters: self.cg.iterations,
            cg_converged: self.cg.converged,
            hum_identity_error: self.hum_identity_error,
            control_norm: self.control_norm,
            right_norm: self.right_norm,
            gramian_min_eig: self.gramian_min_eig,
        }
    }

    /// `t,x,y,u` rows at the midpoints of the control intervals.
    pub fn write_control_csv<W: Write>(&self, mut out: W, dt: f64, xs: &[f64], ys: &[f64]) -> Result<()> {
        writeln!(out, "t,x,y,u")?;
        for (j, u) in self.control.iter().enumerate() {
            let t = (j as f64 + 0.5) * dt;
            for &x in xs {
                for &y in ys {
                    writeln!(out, "{t},{x},{y},{}", u.eval(x, y)?)?;
                }
            }
        }
        Ok(())
    }
}

/// Norm of `f` restricted to `x ∈ (a, b)`.
pub fn norm_on(f: &Field2D, a: f64, b: f64) -> f64 {
    let bx = f.discretization().basis().interval_mass(a, b);
    f.coeffs().iter().map(|c| c.dot(&(&bx * c))).sum::<f64>().max(0.0).sqrt()
}

/// Solves one problem; rebuilds the reduced Gramian.
pub fn solve_control(problem: &ControlProblem) -> Result<ControlResult> {
    let g = ReducedGramian::build(problem)?;
    solve_with(problem, &g)
}

/// Solves for each `beta`, sharing one reduced Gramian.
pub fn solve_control_sweep(problem: &ControlProblem, betas: &[f64]) -> Result<Vec<ControlResult>> {
    let g = ReducedGramian::build(problem)?;
    betas
        .iter()
        .map(|&b| solve_with(&problem.with_beta(b)?, &g))
        .collect()
}

pub fn solve_with(problem: &ControlProblem, gram: &ReducedGramian) -> Result<ControlResult> {
    problem.validate()?;
    let sg = &problem.semigroup;
    let beta = problem.beta;
    let free = sg.apply(&problem.f0, problem.t_final)?;
    let mut rhs_field = problem.f_target.clone();
    rhs_field.axpy(-1.0, &free)?;
    let rhs = sg.to_eigen(&rhs_field)?;

    // reduced solve, with the dropped coordinates decoupled: β a = r
    let kept_rhs = DVector::from_iterator(gram.dim(), gram.kept.iter().map(|&(a, k)| rhs[a][k]));
    let (sol, cg) = conjugate_gradient(&gram.matrix, beta, &kept_rhs, problem.cg_tol, problem.cg_maxiter);
    let mut dual: Vec<DVector<f64>> = rhs.iter().map(|r| r / beta).collect();
    for (i, &(a, k)) in gram.kept.iter().enumerate() {
        dual[a][k] = sol[i];
    }
    let dual_state = sg.from_eigen(&dual);

    let restrict = problem.restrictor()?;
    let control: Vec<Field2D> = problem
        .offsets()
        .iter()
        .rev()
        .map(|&s| restrict.apply(&sg.apply(&dual_state, s)?))
        .collect::<Result<_>>()?;
    let dt = problem.dt();
    step_count(problem.t_final, dt)?;
    let evo = mild_solution(&problem.f0, &control, problem.t_final, dt, sg)?;
    let final_state = evo.final_state().clone();

    let mut miss = problem.f_target.clone();
    miss.axpy(-1.0, &final_state)?;
    let target_norm = problem.f_target.norm();
    let terminal_error = if target_norm > 0.0 { miss.norm() / target_norm } else { miss.norm() };
    let dual_state_norm = dual_state.norm();
    let mut defect = miss.clone();
    defect.axpy(-beta, &dual_state)?;
    let hum_identity_error = if dual_state_norm > 0.0 {
        defect.norm() / (beta * dual_state_norm)
    } else {
        defect.norm()
    };
    let control_norm = (dt * control.iter().map(|u| u.norm().powi(2)).sum::<f64>()).sqrt();
    let right_norm = norm_on(&final_state, 0.0, 1.0);
    let coarse = gram.total_dim.min(8);
    let gramian_min_eig = ReducedGramian::lowest(problem, coarse)
        .ok()
        .and_then(|g| g.eigenvalues().first().copied());
    Ok(ControlResult {
        beta,
        control,
        dual_state,
        final_state,
        terminal_error,
        dual_state_norm,
        cg,
        hum_identity_error,
        control_norm,
        right_norm,
        gramian_min_eig,
    })
}

/// Same algorithm on a single Fourier mode `n`; `n = 0` is the 1D singular heat equation.
pub fn control_1d(
    disc: &Arc<Discretization>,
    n: usize,
    omega: (f64, f64),
    t_final: f64,
    f0: &DVector<f64>,
    f_target: &DVector<f64>,
    beta: f64,
) -> Result<ControlResult> {
    let sg = Arc::new(Semigroup::new(disc.clone(), &[n])?);
    let wrap = |c: &DVector<f64>| Field2D::from_coeffs(disc.clone(), vec![n], vec![c.clone()]);
    let problem = ControlProblem::new(
        sg,
        vec![Rect::strip(omega.0, omega.1)?],
        t_final,
        wrap(f0)?,
        wrap(f_target)?,
        beta,
    )?;
    solve_control(&problem)
}

#[derive(Debug, Clone, Serialize)]
pub struct UcReport {
    pub coarse_dim: usize,
    /// `(n, eigen index, eigenvalue)` of each subspace direction.
    pub directions: Vec<(usize, usize, f64)>,
    /// Fraction of each direction's mass in `x > 0`.
    pub right_fraction: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    pub min_eigenvalue: f64,
}

/// Gramian on the `coarse_dim` lowest tensor eigenstates and its spectrum.
pub fn uc_certificate(problem: &ControlProblem, coarse_dim: usize) -> Result<UcReport> {
    let g = ReducedGramian::lowest(problem, coarse_dim)?;
    let spectra = problem.semigroup.spectra();
    let basis = problem.semigroup.discretization().basis();
    let b_right = basis.interval_mass(0.0, 1.0);
    let mut directions = Vec::new();
    let mut right_fraction = Vec::new();
    for &(a, k) in &g.kept {
        let ms = &spectra[a];
        directions.push((ms.n(), k, ms.eig.eigenvalues[k]));
        let v = ms.eig.eigenvectors.column(k);
        right_fraction.push(v.dot(&(&b_right * v)));
    }
    let eigenvalues = g.eigenvalues();
    Ok(UcReport {
        coarse_dim,
        directions,
        right_fraction,
        min_eigenvalue: eigenvalues[0],
        eigenvalues,
    })
}

/// `(1 − ((s − c)/w)²)³` on `|s − c| < w`, else 0.
pub fn bump(s: f64, center: f64, half_width: f64) -> f64 {
    let z = (s - center) / half_width;
    if z.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - z * z).powi(3)
    }
}

/// Parameters of the standard one-sided experiment.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub nu: f64,
    pub gamma: f64,
    pub cells: usize,
    pub grading: f64,
    pub n_modes: usize,
    pub t_final: f64,
    pub omega: Rect,
    /// Center and half-width of the target bump in `x` and in `y`.
    pub target_x: (f64, f64),
    pub target_y: (f64, f64),
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            nu: 0.3,
            gamma: 1.0,
            cells: 128,
            grading: crate::funcspace::DEFAULT_GRADING,
            n_modes: 16,
            t_final: 1.0,
            omega: Rect {
                x0: -0.8,
                x1: -0.2,
                y0: 0.2,
                y1: 0.8,
            },
            target_x: (0.5, 0.3),
            target_y: (0.5, 0.3),
        }
    }
}

/// Builds the problem `f0 = 0`, `fT` a bump in `x > 0`, for the given spec.
pub fn standard_problem(cfg: &ExperimentConfig, spec: &ExtensionSpec, beta: f64) -> Result<ControlProblem> {
    let grid = Arc::new(Grid1D::build(cfg.cells, cfg.grading)?);
    let disc = Arc::new(Discretization::new(cfg.nu, cfg.gamma, grid, spec)?);
    let modes: Vec<usize> = (1..=cfg.n_modes).collect();
    let sg = Arc::new(Semigroup::new(disc.clone(), &modes)?);
    let (tx, ty) = (cfg.target_x, cfg.target_y);
    let (target, _) = fourier_project(
        |x, y| bump(x, tx.0, tx.1) * bump(y, ty.0, ty.1),
        &disc,
        cfg.n_modes,
        8 * cfg.n_modes.max(8),
    );
    let f0 = sg.zeros();
    ControlProblem::new(sg, vec![cfg.omega], cfg.t_final, f0, target, beta)
}
