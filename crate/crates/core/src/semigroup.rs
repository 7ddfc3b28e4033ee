//! Heat semigroups generated by `A_n` (one Fourier mode) and by the 2D
//! operator (a family of modes sharing one discretization), and mild
//! solutions with a source term.

use std::io::Write;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::operator1d::{full_eigensolve, Discretization, EigenSystem, Operator1D};
use crate::quadrature::LegendreRule;

/// Relative spectral tail mass above which a truncated expansion is refused.
pub const TAIL_TOL: f64 = 1e-10;

/// Fraction of `‖f0‖²_M` not captured by the eigenvectors in `eig`.
pub fn spectral_tail(op: &Operator1D, eig: &EigenSystem, f0: &DVector<f64>) -> f64 {
    let mf = op.mass() * f0;
    let total = f0.dot(&mf);
    if total == 0.0 {
        return 0.0;
    }
    let c = eig.eigenvectors.transpose() * mf;
    ((total - c.norm_squared()) / total).max(0.0)
}

/// `Σ_k e^{−λ_k t} ⟨f0, v_k⟩_M v_k`.
pub fn evolve1d(op: &Operator1D, eig: &EigenSystem, f0: &DVector<f64>, t: f64) -> Result<DVector<f64>> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "t",
            value: t,
            reason: "must be nonnegative".into(),
        });
    }
    if f0.len() != op.dim() {
        return Err(Error::ModeMismatch("initial state does not match the operator".into()));
    }
    if eig.len() < op.dim() {
        let tail = spectral_tail(op, eig, f0);
        if tail > TAIL_TOL {
            return Err(Error::SpectralResolution { tail });
        }
    }
    if t == 0.0 {
        return Ok(f0.clone());
    }
    let mut c = eig.eigenvectors.transpose() * (op.mass() * f0);
    for (ck, &lam) in c.iter_mut().zip(&eig.eigenvalues) {
        *ck *= (-lam * t).exp();
    }
    Ok(&eig.eigenvectors * c)
}

/// Trapezoidal stepping of `M f' = −K f`.
pub fn crank_nicolson(op: &Operator1D, f0: &DVector<f64>, t: f64, dt: f64) -> Result<DVector<f64>> {
    if !(dt > 0.0) || !(t >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "dt",
            value: dt,
            reason: "need dt > 0 and t >= 0".into(),
        });
    }
    let steps = (t / dt).round() as usize;
    let (k, m) = (op.stiffness(), op.mass());
    let lhs = (m + 0.5 * dt * k)
        .cholesky()
        .ok_or_else(|| Error::LinearAlgebra("M + dt/2 K is not positive definite".into()))?;
    let rhs_op: DMatrix<f64> = m - 0.5 * dt * k;
    let mut f = f0.clone();
    for _ in 0..steps {
        f = lhs.solve(&(&rhs_op * &f));
    }
    Ok(f)
}

/// Full eigendecomposition of one Fourier mode.
#[derive(Debug, Clone)]
pub struct ModeSpectrum {
    pub op: Operator1D,
    pub eig: EigenSystem,
}

impl ModeSpectrum {
    pub fn new(op: Operator1D) -> Result<Self> {
        let eig = full_eigensolve(&op)?;
        Ok(Self { op, eig })
    }

    pub fn n(&self) -> usize {
        self.op.n()
    }

    /// `Vᵀ M f`.
    pub fn to_eigen(&self, f: &DVector<f64>) -> DVector<f64> {
        self.eig.eigenvectors.transpose() * (self.op.mass() * f)
    }

    /// `V a`.
    pub fn from_eigen(&self, a: &DVector<f64>) -> DVector<f64> {
        &self.eig.eigenvectors * a
    }

    pub fn decay(&self, a: &mut DVector<f64>, t: f64) {
        for (ak, &lam) in a.iter_mut().zip(&self.eig.eigenvalues) {
            *ak *= (-lam * t).exp();
        }
    }

    pub fn propagate(&self, f: &DVector<f64>, t: f64) -> DVector<f64> {
        let mut a = self.to_eigen(f);
        self.decay(&mut a, t);
        self.from_eigen(&a)
    }
}

/// A state on `(-1,1) × (0,1)` stored as coefficients of `√2 sin(nπy)` modes.
#[derive(Debug, Clone)]
pub struct Field2D {
    disc: Arc<Discretization>,
    modes: Vec<usize>,
    coeffs: Vec<DVector<f64>>,
}

impl Field2D {
    pub fn zeros(disc: Arc<Discretization>, modes: Vec<usize>) -> Self {
        let dim = disc.basis().dim();
        let coeffs = modes.iter().map(|_| DVector::zeros(dim)).collect();
        Self { disc, modes, coeffs }
    }

    pub fn from_coeffs(disc: Arc<Discretization>, modes: Vec<usize>, coeffs: Vec<DVector<f64>>) -> Result<Self> {
        let dim = disc.basis().dim();
        if modes.len() != coeffs.len() || coeffs.iter().any(|c| c.len() != dim) {
            return Err(Error::ModeMismatch("mode list and coefficient vectors disagree".into()));
        }
        Ok(Self { disc, modes, coeffs })
    }

    pub fn discretization(&self) -> &Arc<Discretization> {
        &self.disc
    }

    pub fn modes(&self) -> &[usize] {
        &self.modes
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn coeffs(&self) -> &[DVector<f64>] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [DVector<f64>] {
        &mut self.coeffs
    }

    pub fn mode(&self, n: usize) -> Option<&DVector<f64>> {
        self.modes.iter().position(|&m| m == n).map(|i| &self.coeffs[i])
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.modes != other.modes || !Arc::ptr_eq(&self.disc, &other.disc) {
            return Err(Error::ModeMismatch("fields live on different mode sets or discretizations".into()));
        }
        Ok(())
    }

    /// `Σ_n f_nᵀ M g_n`.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.check_compatible(other)?;
        let m = self.disc.mass();
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.dot(&(m * b)))
            .sum())
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).expect("compatible with itself").max(0.0).sqrt()
    }

    pub fn axpy(&mut self, alpha: f64, x: &Self) -> Result<()> {
        self.check_compatible(x)?;
        for (a, b) in self.coeffs.iter_mut().zip(&x.coeffs) {
            a.axpy(alpha, b, 1.0);
        }
        Ok(())
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for c in &mut out.coeffs {
            *c *= s;
        }
        out
    }

    /// `‖f‖²` by tensor quadrature of the reconstructed field: Gauss–Legendre
    /// with `n_y` points in `y`, the grid rule in `x`.
    pub fn norm_sq_by_quadrature(&self, n_y: usize) -> f64 {
        let rule = LegendreRule::new(n_y);
        let (mut ys, mut wy) = (Vec::new(), Vec::new());
        rule.push_on(0.0, 1.0, &mut ys, &mut wy);
        let basis = self.disc.basis();
        let samples: Vec<Vec<f64>> = self.coeffs.iter().map(|c| basis.samples_of(c)).collect();
        let wx = basis.grid().quad_weights();
        let mut acc = 0.0;
        for (y, w) in ys.iter().zip(&wy) {
            let phis: Vec<f64> = self.modes.iter().map(|&n| sine_mode(n, *y)).collect();
            for (q, &wq) in wx.iter().enumerate() {
                let v: f64 = samples.iter().zip(&phis).map(|(s, p)| s[q] * p).sum();
                acc += w * wq * v * v;
            }
        }
        acc
    }

    /// Value at `(x, y)` for `x ≠ 0`.
    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        let basis = self.disc.basis();
        let mut vals = Vec::with_capacity(6);
        basis.values_at(x, &mut vals);
        Ok(self
            .modes
            .iter()
            .zip(&self.coeffs)
            .map(|(&n, c)| sine_mode(n, y) * vals.iter().map(|&(i, v)| c[i] * v).sum::<f64>())
            .sum())
    }

    /// `x,y,value` rows on a tensor grid.
    pub fn write_snapshot_csv<W: Write>(&self, mut out: W, xs: &[f64], ys: &[f64]) -> Result<()> {
        writeln!(out, "x,y,value")?;
        for &x in xs {
            for &y in ys {
                writeln!(out, "{x},{y},{}", self.eval(x, y)?)?;
            }
        }
        Ok(())
    }
}

/// `√2 sin(nπy)`.
pub fn sine_mode(n: usize, y: f64) -> f64 {
    std::f64::consts::SQRT_2 * (n as f64 * std::f64::consts::PI * y).sin()
}

#[derive(Debug, Clone, Serialize)]
pub struct ProjectionReport {
    pub n_y: usize,
    /// `n_y` is below four points per wavelength of the highest mode.
    pub aliasing_warning: bool,
}

/// Projects `f(x, y)` onto modes `1..=n_modes`: Gauss–Legendre in `y` with
/// `n_y` points, then L² projection of each mode onto the 1D basis.
pub fn fourier_project<F>(
    f: F,
    disc: &Arc<Discretization>,
    n_modes: usize,
    n_y: usize,
) -> (Field2D, ProjectionReport)
where
    F: Fn(f64, f64) -> f64,
{
    let rule = LegendreRule::new(n_y);
    let (mut ys, mut wy) = (Vec::new(), Vec::new());
    rule.push_on(0.0, 1.0, &mut ys, &mut wy);
    let xs = disc.basis().grid().quad_nodes();
    let modes: Vec<usize> = (1..=n_modes).collect();
    let mut samples = vec![vec![0.0; xs.len()]; n_modes];
    let phi: Vec<Vec<f64>> = ys.iter().map(|&y| modes.iter().map(|&n| sine_mode(n, y)).collect()).collect();
    for (q, &x) in xs.iter().enumerate() {
        for (j, &y) in ys.iter().enumerate() {
            let v = f(x, y);
            if v == 0.0 {
                continue;
            }
            for k in 0..n_modes {
                samples[k][q] += wy[j] * v * phi[j][k];
            }
        }
    }
    let coeffs = samples.iter().map(|s| disc.project_samples(s)).collect();
    let field = Field2D {
        disc: disc.clone(),
        modes,
        coeffs,
    };
    (
        field,
        ProjectionReport {
            n_y,
            aliasing_warning: n_y < 2 * n_modes.max(1) * 2,
        },
    )
}

/// Per-mode spectra sharing one discretization.
#[derive(Debug, Clone)]
pub struct Semigroup {
    disc: Arc<Discretization>,
    modes: Vec<ModeSpectrum>,
}

impl Semigroup {
    /// Assembles and diagonalizes `A_n` for every `n` in `modes`.
    pub fn new(disc: Arc<Discretization>, modes: &[usize]) -> Result<Self> {
        let spectra: Result<Vec<ModeSpectrum>> = modes
            .par_iter()
            .map(|&n| ModeSpectrum::new(disc.operator(n)?))
            .collect();
        Ok(Self {
            disc,
            modes: spectra?,
        })
    }

    pub fn discretization(&self) -> &Arc<Discretization> {
        &self.disc
    }

    pub fn spectra(&self) -> &[ModeSpectrum] {
        &self.modes
    }

    pub fn mode_indices(&self) -> Vec<usize> {
        self.modes.iter().map(|m| m.n()).collect()
    }

    pub fn zeros(&self) -> Field2D {
        Field2D::zeros(self.disc.clone(), self.mode_indices())
    }

    fn check(&self, f: &Field2D) -> Result<()> {
        if !Arc::ptr_eq(&self.disc, &f.disc) || f.modes != self.mode_indices() {
            return Err(Error::ModeMismatch(
                "field modes or discretization differ from the semigroup".into(),
            ));
        }
        Ok(())
    }

    /// Field in eigen-coordinates, one vector per mode.
    pub fn to_eigen(&self, f: &Field2D) -> Result<Vec<DVector<f64>>> {
        self.check(f)?;
        Ok(self.modes.iter().zip(&f.coeffs).map(|(m, c)| m.to_eigen(c)).collect())
    }

    pub fn from_eigen(&self, a: &[DVector<f64>]) -> Field2D {
        Field2D {
            disc: self.disc.clone(),
            modes: self.mode_indices(),
            coeffs: self.modes.iter().zip(a).map(|(m, c)| m.from_eigen(c)).collect(),
        }
    }

    /// `S(t) f`.
    pub fn apply(&self, f: &Field2D, t: f64) -> Result<Field2D> {
        self.check(f)?;
        if !(t >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "t",
                value: t,
                reason: "must be nonnegative".into(),
            });
        }
        let coeffs = self
            .modes
            .par_iter()
            .zip(f.coeffs.par_iter())
            .map(|(m, c)| m.propagate(c, t))
            .collect();
        Ok(Field2D {
            disc: self.disc.clone(),
            modes: f.modes.clone(),
            coeffs,
        })
    }
}

pub fn evolve2d(field0: &Field2D, sg: &Semigroup, t: f64) -> Result<Field2D> {
    sg.apply(field0, t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvolutionMethod {
    EigenExpansion,
    ImplicitStepping,
}

#[derive(Debug, Clone)]
pub struct EvolutionResult {
    pub times: Vec<f64>,
    pub states: Vec<Field2D>,
    pub norms: Vec<f64>,
    pub method: EvolutionMethod,
}

impl EvolutionResult {
    pub fn final_state(&self) -> &Field2D {
        self.states.last().expect("at least the initial state")
    }

    pub fn write_norms_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,norm")?;
        for (t, n) in self.times.iter().zip(&self.norms) {
            writeln!(out, "{t},{n}")?;
        }
        Ok(())
    }
}

/// Number of steps of size `dt` in `[0, t]`, requiring `t/dt` to be an integer up to rounding.
pub fn step_count(t: f64, dt: f64) -> Result<usize> {
    if !(t > 0.0 && dt > 0.0) {
        return Err(Error::InvalidParameter {
            name: "dt",
            value: dt,
            reason: "need T > 0 and dt > 0".into(),
        });
    }
    let steps = (t / dt).round();
    if (steps * dt - t).abs() > 1e-9 * t || steps < 1.0 {
        return Err(Error::InvalidParameter {
            name: "dt",
            value: dt,
            reason: format!("T = {t} is not an integer multiple of dt"),
        });
    }
    Ok(steps as usize)
}

/// Midpoint Duhamel recursion `f_{j+1} = S(dt) f_j + dt S(dt/2) u_j`,
/// where `u_j` is the source on `(j dt, (j+1) dt)`. An empty `source` means no source.
pub fn mild_solution(
    field0: &Field2D,
    source: &[Field2D],
    t_final: f64,
    dt: f64,
    sg: &Semigroup,
) -> Result<EvolutionResult> {
    let steps = step_count(t_final, dt)?;
    if !source.is_empty() && source.len() != steps {
        return Err(Error::InvalidParameter {
            name: "source",
            value: source.len() as f64,
            reason: format!("expected {steps} samples"),
        });
    }
    let mut a = sg.to_eigen(field0)?;
    let source_eig: Vec<Vec<DVector<f64>>> = source
        .iter()
        .map(|u| sg.to_eigen(u))
        .collect::<Result<_>>()?;
    let full_decay: Vec<Vec<f64>> = sg
        .modes
        .iter()
        .map(|m| m.eig.eigenvalues.iter().map(|&l| (-l * dt).exp()).collect())
        .collect();
    let half_decay: Vec<Vec<f64>> = sg
        .modes
        .iter()
        .map(|m| m.eig.eigenvalues.iter().map(|&l| (-l * 0.5 * dt).exp()).collect())
        .collect();
    let norm = |a: &[DVector<f64>]| a.iter().map(|v| v.norm_squared()).sum::<f64>().sqrt();
    let mut times = vec![0.0];
    let mut states = vec![field0.clone()];
    let mut norms = vec![field0.norm()];
    for j in 0..steps {
        for (k, ak) in a.iter_mut().enumerate() {
            for (i, v) in ak.iter_mut().enumerate() {
                *v *= full_decay[k][i];
                if let Some(u) = source_eig.get(j) {
                    *v += dt * half_decay[k][i] * u[k][i];
                }
            }
        }
        times.push((j + 1) as f64 * dt);
        norms.push(norm(&a));
        states.push(sg.from_eigen(&a));
    }
    Ok(EvolutionResult {
        times,
        states,
        norms,
        method: EvolutionMethod::EigenExpansion,
    })
}
