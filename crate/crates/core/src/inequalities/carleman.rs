use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::inequalities::poly::Poly;
use crate::operator1d::c_of_nu;
use crate::quadrature::{two_sided_graded_breaks, LegendreRule};

/// Exponents below this are flushed to a weight of exactly 0.
pub const UNDERFLOW_EXPONENT: f64 = -700.0;

/// Exponent `b` of the weight `σ = θ(t) x^b`.
///
/// `2 − 2ν` for `ν > ½`; for `ν ≤ ½` any `b ∈ (0, 1)` is admissible and we fix `½`.
pub fn select_b(nu: f64) -> Result<f64> {
    if !(nu > 0.0 && nu < 1.0) {
        return Err(Error::InvalidParameter {
            name: "nu",
            value: nu,
            reason: "must lie in (0, 1)".into(),
        });
    }
    Ok(if nu <= 0.5 { 0.5 } else { 2.0 - 2.0 * nu })
}

/// `(1 − b)(3 − b) − 4 c_ν`; zero when `b = 2 − 2ν`.
pub fn singular_coefficient_defect(nu: f64, b: f64) -> Result<f64> {
    Ok((1.0 - b) * (3.0 - b) - 4.0 * c_of_nu(nu)?)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CarlemanWeight {
    pub t_final: f64,
    pub r: f64,
    pub b: f64,
}

impl CarlemanWeight {
    pub fn new(t_final: f64, r: f64, b: f64) -> Result<Self> {
        if !(t_final > 0.0 && t_final.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "T",
                value: t_final,
                reason: "must be positive".into(),
            });
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "R",
                value: r,
                reason: "must be positive".into(),
            });
        }
        if !(b > 0.0 && b < 1.0) {
            return Err(Error::InvalidParameter {
                name: "b",
                value: b,
                reason: "must lie in (0, 1)".into(),
            });
        }
        Ok(Self { t_final, r, b })
    }

    /// `1 / (t (T − t))`.
    pub fn theta(&self, t: f64) -> f64 {
        1.0 / (t * (self.t_final - t))
    }

    pub fn sigma(&self, t: f64, x: f64) -> f64 {
        self.theta(t) * x.powf(self.b)
    }

    /// `e^{−2Rσ}`, exactly 0 at and beyond the time endpoints and where the exponent underflows.
    pub fn weight(&self, t: f64, x: f64) -> f64 {
        if t <= 0.0 || t >= self.t_final {
            return 0.0;
        }
        let e = -2.0 * self.r * self.sigma(t, x);
        if e < UNDERFLOW_EXPONENT {
            0.0
        } else {
            e.exp()
        }
    }

    /// `e^{−8R x^b / T²}`, the value at `t = T/2` and an upper bound for all `t`.
    pub fn bound(&self, x: f64) -> f64 {
        let e = -8.0 * self.r * x.powf(self.b) / (self.t_final * self.t_final);
        if e < UNDERFLOW_EXPONENT {
            0.0
        } else {
            e.exp()
        }
    }
}

/// `g(t, x) = p(t) h(x)` with `h(0) = h'(0) = h(1) = 0`.
#[derive(Debug, Clone, Serialize)]
pub struct TestFunction1Plus1 {
    pub t_final: f64,
    pub p: Poly,
    pub h: Poly,
}

impl TestFunction1Plus1 {
    /// `t(T − t) r(t) · x²(1 − x) q(x)`.
    pub fn new(t_final: f64, r: &Poly, q: &Poly) -> Self {
        let p = Poly::new(vec![0.0, t_final, -1.0]).mul(r);
        let h = Poly::new(vec![0.0, 0.0, 1.0, -1.0]).mul(q);
        Self { t_final, p, h }
    }

    pub fn from_parts(t_final: f64, p: Poly, h: Poly) -> Result<Self> {
        let g = Self { t_final, p, h };
        g.check()?;
        Ok(g)
    }

    /// The boundary hypotheses `g(t,0) = g(t,1) = ∂x g(t,0) = 0`.
    pub fn check(&self) -> Result<()> {
        let s = self.h.l1().max(f64::MIN_POSITIVE);
        let c = self.h.coeffs();
        let d0 = c.get(1).copied().unwrap_or(0.0);
        if c[0].abs() > 1e-13 * s || d0.abs() > 1e-13 * s || self.h.eval(1.0).abs() > 1e-13 * s {
            return Err(Error::Precondition(
                "test function violates g(t,0) = g(t,1) = ∂x g(t,0) = 0".into(),
            ));
        }
        if !(self.t_final > 0.0) {
            return Err(Error::InvalidParameter {
                name: "T",
                value: self.t_final,
                reason: "must be positive".into(),
            });
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.p.is_zero() || self.h.is_zero()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            t_final: self.t_final,
            p: self.p.scale(s),
            h: self.h.clone(),
        }
    }

    pub fn eval(&self, t: f64, x: f64) -> f64 {
        self.p.eval(t) * self.h.eval(x)
    }
}

/// Standard family: `r(t) = r0 + r1 t`, `q(x) = q0 + q1 x + q2 x²` with
/// `r0, q0 ∈ [½, 3/2]` and the other coefficients in `[−1, 1]`.
pub fn standard_family(t_final: f64, count: usize, seed: u64) -> Vec<TestFunction1Plus1> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let r = Poly::new(vec![rng.random_range(0.5..1.5), rng.random_range(-1.0..1.0)]);
            let q = Poly::new(vec![
                rng.random_range(0.5..1.5),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            ]);
            TestFunction1Plus1::new(t_final, &r, &q)
        })
        .collect()
}

pub const DEFAULT_FAMILY_SEED: u64 = 20_240_917;

/// SHA-256 over `T` and the coefficients of every member.
pub fn family_hash(family: &[TestFunction1Plus1]) -> String {
    let mut hasher = Sha256::new();
    for g in family {
        hasher.update(g.t_final.to_le_bytes());
        for part in [&g.p, &g.h] {
            hasher.update((part.coeffs().len() as u64).to_le_bytes());
            for c in part.coeffs() {
                hasher.update(c.to_le_bytes());
            }
        }
    }
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CarlemanParams {
    pub n: usize,
    pub nu: f64,
    pub gamma: f64,
    pub t_final: f64,
}

/// Tensor quadrature settings.
///
/// Time: Gauss–Legendre panels graded geometrically toward both endpoints.
/// Space: the substitution `w = 2Rθ(t) x^b` turns the weight into `e^{−w}`;
/// panels are graded toward `w = 0` below 1, of width `w_step` up to 16 and
/// of width `4 w_step` up to `min(2Rθ, w_max)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CarlemanQuadrature {
    pub t_order: usize,
    pub t_levels: usize,
    pub x_order: usize,
    pub x_levels: usize,
    pub w_step: f64,
    pub w_max: f64,
}

impl Default for CarlemanQuadrature {
    fn default() -> Self {
        Self {
            t_order: 10,
            t_levels: 30,
            x_order: 10,
            x_levels: 40,
            w_step: 1.0,
            w_max: 400.0,
        }
    }
}

impl CarlemanQuadrature {
    /// A finer rule for resolution checks.
    pub fn refined() -> Self {
        Self {
            t_order: 14,
            t_levels: 40,
            x_order: 14,
            x_levels: 50,
            w_step: 0.5,
            w_max: 500.0,
        }
    }

    fn w_breaks(&self, top: f64) -> Vec<f64> {
        let mut br = vec![0.0];
        let first = top.min(1.0);
        for k in (1..=self.x_levels).rev() {
            br.push(first * 0.5f64.powi(k as i32));
        }
        br.push(first);
        let mut w = first;
        while w < top {
            let step = if w < 16.0 { self.w_step } else { 4.0 * self.w_step };
            w = (w + step).min(top);
            br.push(w);
        }
        br
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CarlemanSides {
    /// `∬ θ³ e^{−2Rσ} g²`.
    pub weighted_lhs: f64,
    /// `∬ |P g|² e^{−2Rσ}` with `P = ∂t − ∂²x + c_ν/x² + (nπ)² x^(2γ)`.
    pub weighted_rhs: f64,
}

/// The two weighted integrals of the Carleman estimate, without the `C₀ R³` factor.
pub fn carleman_sides(
    g: &TestFunction1Plus1,
    params: &CarlemanParams,
    r: f64,
    quad: &CarlemanQuadrature,
) -> Result<CarlemanSides> {
    g.check()?;
    let b = select_b(params.nu)?;
    let weight = CarlemanWeight::new(params.t_final, r, b)?;
    if !(params.gamma > 0.0) {
        return Err(Error::InvalidParameter {
            name: "gamma",
            value: params.gamma,
            reason: "must be positive".into(),
        });
    }
    if (g.t_final - params.t_final).abs() > 1e-15 * params.t_final {
        return Err(Error::Precondition("test function horizon differs from T".into()));
    }
    if g.is_zero() {
        return Ok(CarlemanSides {
            weighted_lhs: 0.0,
            weighted_rhs: 0.0,
        });
    }
    let c = c_of_nu(params.nu)?;
    let kappa = (params.n as f64 * std::f64::consts::PI).powi(2);
    let h = &g.h;
    let d2h = h.derivative().derivative();
    let h_over_x2 = h.shift_down(2);
    let dp = g.p.derivative();
    // k = −h'' + c h/x² + (nπ)² x^{2γ} h
    let k = |x: f64| -d2h.eval(x) + c * h_over_x2.eval(x) + kappa * x.powf(2.0 * params.gamma) * h.eval(x);

    let trule = LegendreRule::new(quad.t_order);
    let xrule = LegendreRule::new(quad.x_order);
    let (mut ts, mut wts) = (Vec::new(), Vec::new());
    let br = two_sided_graded_breaks(params.t_final, 0.5, quad.t_levels);
    for win in br.windows(2) {
        trule.push_on(win[0], win[1], &mut ts, &mut wts);
    }
    let inv_b = 1.0 / b;
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    let (mut ws, mut wws) = (Vec::new(), Vec::new());
    for (&t, &wt) in ts.iter().zip(&wts) {
        let theta = weight.theta(t);
        let a = 2.0 * r * theta;
        let top = a.min(quad.w_max);
        ws.clear();
        wws.clear();
        for win in quad.w_breaks(top).windows(2) {
            xrule.push_on(win[0], win[1], &mut ws, &mut wws);
        }
        let (mut ihh, mut ihk, mut ikk) = (0.0, 0.0, 0.0);
        for (&w, &ww) in ws.iter().zip(&wws) {
            let x = (w / a).powf(inv_b);
            // dx = x / (b w) dw
            let jac = x * inv_b / w;
            let m = ww * jac * (-w).exp();
            let (hv, kv) = (h.eval(x), k(x));
            ihh += m * hv * hv;
            ihk += m * hv * kv;
            ikk += m * kv * kv;
        }
        let (pv, dpv) = (g.p.eval(t), dp.eval(t));
        lhs += wt * theta.powi(3) * pv * pv * ihh;
        rhs += wt * (dpv * dpv * ihh + 2.0 * dpv * pv * ihk + pv * pv * ikk);
    }
    if !lhs.is_finite() || !rhs.is_finite() {
        return Err(Error::NonFinite("Carleman integrand".into()));
    }
    Ok(CarlemanSides {
        weighted_lhs: lhs,
        weighted_rhs: rhs,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CarlemanRow {
    pub r: f64,
    /// Minimum over the family of `rhs / (R³ lhs)`: the empirical `C₀(R)`.
    pub min_ratio: f64,
    pub median_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CarlemanScan {
    pub params: CarlemanParams,
    pub b: f64,
    pub members: usize,
    pub family_hash: String,
    pub rows: Vec<CarlemanRow>,
    /// `rhs / (R³ lhs)` per member (outer) and grid point (inner).
    pub member_ratios: Vec<Vec<f64>>,
    pub r0: f64,
    pub c0: f64,
}

/// Scans `R_grid` over the nonzero members of `family`.
///
/// `R₀` is the smallest grid value from which every `C₀(R)` is positive, and
/// `C₀` the minimum of `C₀(R)` over `R ≥ R₀`.
pub fn carleman_scan(
    family: &[TestFunction1Plus1],
    params: &CarlemanParams,
    r_grid: &[f64],
    quad: &CarlemanQuadrature,
) -> Result<CarlemanScan> {
    let b = select_b(params.nu)?;
    if r_grid.is_empty() || r_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter {
            name: "R_grid",
            value: r_grid.len() as f64,
            reason: "must be nonempty and strictly increasing".into(),
        });
    }
    if let Some(&bad) = r_grid.iter().find(|&&r| !(r > 0.0 && r <= 1e6)) {
        return Err(Error::InvalidParameter {
            name: "R_grid",
            value: bad,
            reason: "entries must lie in (0, 1e6]".into(),
        });
    }
    for g in family {
        g.check()?;
    }
    let members: Vec<&TestFunction1Plus1> = family.iter().filter(|g| !g.is_zero()).collect();
    if members.is_empty() {
        return Err(Error::Precondition("family has no nonzero member".into()));
    }
    let jobs: Vec<(usize, usize)> = (0..members.len())
        .flat_map(|i| (0..r_grid.len()).map(move |j| (i, j)))
        .collect();
    let sides: Vec<CarlemanSides> = jobs
        .par_iter()
        .map(|&(i, j)| carleman_sides(members[i], params, r_grid[j], quad))
        .collect::<Result<_>>()?;
    let mut member_ratios = vec![vec![0.0; r_grid.len()]; members.len()];
    for (&(i, j), s) in jobs.iter().zip(&sides) {
        member_ratios[i][j] = s.weighted_rhs / (r_grid[j].powi(3) * s.weighted_lhs);
    }
    let rows: Vec<CarlemanRow> = r_grid
        .iter()
        .enumerate()
        .map(|(j, &r)| {
            let mut col: Vec<f64> = member_ratios.iter().map(|m| m[j]).collect();
            col.sort_by(f64::total_cmp);
            let mid = col.len() / 2;
            let median = if col.len() % 2 == 1 {
                col[mid]
            } else {
                0.5 * (col[mid - 1] + col[mid])
            };
            CarlemanRow {
                r,
                min_ratio: col[0],
                median_ratio: median,
            }
        })
        .collect();
    let mut start = rows.len();
    while start > 0 && rows[start - 1].min_ratio > 0.0 {
        start -= 1;
    }
    if start == rows.len() {
        return Err(Error::Invariant(format!(
            "empirical C0 is not positive at R = {}",
            rows[rows.len() - 1].r
        )));
    }
    let c0 = rows[start..].iter().map(|r| r.min_ratio).fold(f64::INFINITY, f64::min);
    Ok(CarlemanScan {
        params: *params,
        b,
        members: members.len(),
        family_hash: family_hash(family),
        rows,
        member_ratios,
        r0: r_grid[start],
        c0,
    })
}
