use std::io::Write;
use std::sync::Arc;

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{check_nu_open, Error, Result};
use crate::funcspace::cutoff::Cutoff;
use crate::funcspace::grid::Grid1D;
use crate::funcspace::hermite;
use crate::operator1d::ExtensionSpec;

/// Coefficients of `|x|^(ν+1/2)` and `|x|^(1/2-ν)` on `(-1,0)` (`m`) and `(0,1)` (`p`).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SingularCoeffs {
    pub c1m: f64,
    pub c2m: f64,
    pub c1p: f64,
    pub c2p: f64,
}

impl SingularCoeffs {
    pub fn new(c1m: f64, c2m: f64, c1p: f64, c2p: f64) -> Self {
        Self { c1m, c2m, c1p, c2p }
    }

    pub fn from_array(c: [f64; 4]) -> Self {
        Self::new(c[0], c[1], c[2], c[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.c1m, self.c2m, self.c1p, self.c2p]
    }

    pub fn is_zero(&self) -> bool {
        self.to_array().iter().all(|&c| c == 0.0)
    }

    pub fn scaled(self, s: f64) -> Self {
        Self::from_array(self.to_array().map(|c| c * s))
    }

    pub fn add(self, other: Self) -> Self {
        let (a, b) = (self.to_array(), other.to_array());
        Self::from_array([a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]])
    }

    /// Uncut profile `s(x)` and `s'(x)` for `x ≠ 0`.
    pub fn profile(&self, nu: f64, x: f64) -> (f64, f64) {
        let (c1, c2) = if x < 0.0 {
            (self.c1m, self.c2m)
        } else {
            (self.c1p, self.c2p)
        };
        let a = x.abs();
        let (p, q) = (nu + 0.5, 0.5 - nu);
        let (ap, aq) = (a.powf(p), a.powf(q));
        let s = c1 * ap + c2 * aq;
        let ds = (c1 * p * ap + c2 * q * aq) / a;
        (s, if x < 0.0 { -ds } else { ds })
    }

    /// Cut-off profile `χ s` with its first two derivatives.
    pub fn cut_profile(&self, nu: f64, x: f64) -> CutProfile {
        let (chi, dchi, ddchi) = Cutoff::default().eval(x);
        if x == 0.0 {
            return CutProfile {
                chi,
                ..CutProfile::default()
            };
        }
        let (s, ds) = self.profile(nu, x);
        CutProfile {
            chi,
            value: chi * s,
            d1: dchi * s + chi * ds,
            commutator: -ddchi * s - 2.0 * dchi * ds,
            remainder: (chi - 1.0) * s,
            remainder_d1: dchi * s + (chi - 1.0) * ds,
        }
    }
}

/// Pointwise data of a cut-off singular element `ψ = χ s`.
#[derive(Debug, Clone, Copy, Default)]
pub struct CutProfile {
    pub chi: f64,
    pub value: f64,
    pub d1: f64,
    /// `(-∂² + c/x²) ψ`; vanishes where `χ ≡ 1` since `s` solves the homogeneous equation.
    pub commutator: f64,
    /// `(χ - 1) s`, the part of `ψ` that is regular at 0.
    pub remainder: f64,
    pub remainder_d1: f64,
}

/// Hermite interpolant of `f` (with derivative `df`) on the grid, as raw DOFs.
pub fn hermite_interpolate<F, D>(grid: &Grid1D, f: F, df: D) -> Vec<f64>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    grid.nodes().iter().flat_map(|&x| [f(x), df(x)]).collect()
}

/// A function `f_r + χ f_s` in split form.
#[derive(Debug, Clone)]
pub struct Function1D {
    nu: f64,
    grid: Arc<Grid1D>,
    regular: Vec<f64>,
    sing: SingularCoeffs,
    cutoff: Cutoff,
}

impl Function1D {
    /// `regular` holds value and slope at every grid node (`2 * n_nodes` entries).
    pub fn new(
        nu: f64,
        grid: Arc<Grid1D>,
        regular: Vec<f64>,
        sing: SingularCoeffs,
    ) -> Result<Self> {
        check_nu_open(nu)?;
        let want = 2 * grid.nodes().len();
        if regular.len() != want {
            return Err(Error::InvalidParameter {
                name: "regular",
                value: regular.len() as f64,
                reason: format!("expected {want} Hermite coefficients"),
            });
        }
        Ok(Self {
            nu,
            grid,
            regular,
            sing,
            cutoff: Cutoff::default(),
        })
    }

    pub fn zero(nu: f64, grid: Arc<Grid1D>) -> Result<Self> {
        let n = 2 * grid.nodes().len();
        Self::new(nu, grid, vec![0.0; n], SingularCoeffs::default())
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn grid(&self) -> &Arc<Grid1D> {
        &self.grid
    }

    pub fn regular(&self) -> &[f64] {
        &self.regular
    }

    pub fn sing(&self) -> SingularCoeffs {
        self.sing
    }

    pub fn cutoff(&self) -> Cutoff {
        self.cutoff
    }

    fn regular_in_cell(&self, cell: usize, x: f64) -> (f64, f64) {
        let (a, b) = self.grid.cell_bounds(cell);
        let s = hermite::shapes(a, b, x);
        let c = &self.regular[2 * cell..2 * cell + 4];
        let v = (0..4).map(|k| c[k] * s.value[k]).sum();
        let d = (0..4).map(|k| c[k] * s.d1[k]).sum();
        (v, d)
    }

    fn value_in_cell(&self, cell: usize, x: f64) -> f64 {
        let r = self.regular_in_cell(cell, x).0;
        r + self.sing.cut_profile(self.nu, x).value
    }

    fn cell_of(&self, x: f64) -> Result<usize> {
        self.grid.locate(x).ok_or(Error::InvalidParameter {
            name: "x",
            value: x,
            reason: "outside [-1, 1]".into(),
        })
    }

    pub fn regular_value(&self, x: f64) -> Result<f64> {
        Ok(self.regular_in_cell(self.cell_of(x)?, x).0)
    }

    /// `χ(x) f_s(x)`; at 0 only defined when the `|x|^(1/2-ν)` term cannot blow up.
    pub fn singular_value(&self, x: f64) -> Result<f64> {
        if x == 0.0 {
            let has_c2 = self.sing.c2m != 0.0 || self.sing.c2p != 0.0;
            // ν < 1/2: both exponents are positive and the profile tends to 0
            return if has_c2 && self.nu >= 0.5 {
                Err(Error::Unbounded)
            } else {
                Ok(0.0)
            };
        }
        Ok(self.sing.cut_profile(self.nu, x).value)
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        Ok(self.regular_value(x)? + self.singular_value(x)?)
    }

    /// `f'(x)` for `x ≠ 0`.
    pub fn derivative(&self, x: f64) -> Result<f64> {
        if x == 0.0 && !self.sing.is_zero() {
            return Err(Error::Unbounded);
        }
        let cell = self.cell_of(x)?;
        Ok(self.regular_in_cell(cell, x).1 + self.sing.cut_profile(self.nu, x).d1)
    }

    fn compatible(&self, other: &Self) -> bool {
        self.nu == other.nu
            && (Arc::ptr_eq(&self.grid, &other.grid) || self.grid.nodes() == other.grid.nodes())
    }

    /// L²(-1, 1) pairing on the grid's quadrature.
    pub fn inner_product(&self, other: &Self) -> Result<f64> {
        if !self.compatible(other) {
            return Err(Error::Mismatch);
        }
        let g = &self.grid;
        let mut acc = 0.0;
        for ((&x, &w), &c) in g.quad_nodes().iter().zip(g.quad_weights()).zip(g.quad_cells()) {
            acc += w * self.value_in_cell(c, x) * other.value_in_cell(c, x);
        }
        Ok(acc)
    }

    pub fn norm(&self) -> f64 {
        self.inner_product(self).expect("compatible with itself").sqrt()
    }

    /// Residuals of the conditions defining the domain of the extension `spec`.
    pub fn domain_check(&self, spec: &ExtensionSpec, tol: f64) -> MembershipReport {
        let last = self.grid.nodes().len() - 1;
        let z = self.grid.zero_node();
        let dirichlet = [self.regular[0].abs(), self.regular[2 * last].abs()];
        let rows = spec.constraint_rows();
        let c = self.sing.to_array();
        let transmission = rows.map(|r| (0..4).map(|k| r[k] * c[k]).sum::<f64>().abs());
        let regular_at_zero = [self.regular[2 * z].abs(), self.regular[2 * z + 1].abs()];
        let flags = spec.dirichlet_at_pm1;
        let member = (!flags[0] || dirichlet[0] <= tol)
            && (!flags[1] || dirichlet[1] <= tol)
            && transmission.iter().all(|&r| r <= tol)
            && regular_at_zero.iter().all(|&r| r <= tol);
        MembershipReport {
            dirichlet,
            transmission,
            regular_at_zero,
            member,
        }
    }

    /// Writes `x,value,regular_value,singular_value` rows at the given points.
    pub fn write_csv<W: Write>(&self, mut out: W, xs: &[f64]) -> Result<()> {
        writeln!(out, "x,value,regular_value,singular_value")?;
        for &x in xs {
            let r = self.regular_value(x)?;
            let s = self.singular_value(x)?;
            writeln!(out, "{x},{},{r},{s}", r + s)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MembershipReport {
    /// `|f(-1)|`, `|f(1)|`.
    pub dirichlet: [f64; 2],
    pub transmission: [f64; 2],
    /// `|f_r(0)|`, `|f_r'(0)|`.
    pub regular_at_zero: [f64; 2],
    pub member: bool,
}

/// Least-squares fit of the singular coefficients on each side from samples of
/// a function assumed to equal `f_s` up to `O(x²)`.
///
/// This is a diagnostic: the split of a raw sampled function is not unique in
/// finite precision, and points should be taken close to 0.
pub fn fit_singular_coeffs(nu: f64, xs: &[f64], values: &[f64]) -> Result<SingularCoeffs> {
    check_nu_open(nu)?;
    let fit = |neg: bool| -> Result<(f64, f64)> {
        let mut ata = Matrix2::zeros();
        let mut atb = Vector2::zeros();
        for (&x, &v) in xs.iter().zip(values) {
            if x == 0.0 || (x < 0.0) != neg {
                continue;
            }
            let a = x.abs();
            let row = Vector2::new(a.powf(nu + 0.5), a.powf(0.5 - nu));
            ata += row * row.transpose();
            atb += row * v;
        }
        let sol = ata
            .lu()
            .solve(&atb)
            .ok_or_else(|| Error::LinearAlgebra("singular fit needs two distinct samples per side".into()))?;
        Ok((sol[0], sol[1]))
    };
    let (c1m, c2m) = fit(true)?;
    let (c1p, c2p) = fit(false)?;
    Ok(SingularCoeffs::new(c1m, c2m, c1p, c2p))
}
