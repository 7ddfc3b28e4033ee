use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::inequalities::poly::Poly;
use crate::quadrature::{JacobiUnitRule, LegendreRule};

/// Relative slack allowed when comparing the two sides.
pub const HARDY_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, Serialize)]
pub struct HardyReport {
    pub alpha: f64,
    /// `(1 − α)² / 4`.
    pub constant: f64,
    /// `∫₀¹ x^(α−2) z²`.
    pub weighted_integral: f64,
    /// `constant · weighted_integral`.
    pub lhs: f64,
    /// `∫₀¹ x^α z'²`.
    pub rhs: f64,
    pub satisfied: bool,
}

impl HardyReport {
    /// `rhs / lhs`, infinite when `lhs = 0`.
    pub fn ratio(&self) -> f64 {
        if self.lhs > 0.0 {
            self.rhs / self.lhs
        } else {
            f64::INFINITY
        }
    }
}

fn tiny(v: f64, scale: f64) -> bool {
    v.abs() <= 1e-13 * scale.max(f64::MIN_POSITIVE)
}

/// Weighted Hardy inequality on `(0, 1)` for `z` with `z(0) = z'(0) = z(1) = 0`.
///
/// Both integrands are `x^(α+2)` times a polynomial, so a Gauss–Jacobi rule
/// with that weight integrates them exactly.
pub fn hardy_check(z: &Poly, alpha: f64) -> Result<HardyReport> {
    if !(-2.0..2.0).contains(&alpha) {
        return Err(Error::InvalidParameter {
            name: "alpha",
            value: alpha,
            reason: "must lie in [-2, 2)".into(),
        });
    }
    let c = z.coeffs();
    let scale = z.l1();
    let c0 = c[0];
    let c1 = c.get(1).copied().unwrap_or(0.0);
    if !tiny(c0, scale) || !tiny(c1, scale) || !tiny(z.eval(1.0), scale) {
        return Err(Error::Precondition(
            "z must satisfy z(0) = z'(0) = z(1) = 0".into(),
        ));
    }
    let q = z.shift_down(2);
    let r = z.derivative().shift_down(1);
    let order = q.degree().max(r.degree()) + 2;
    let rule = JacobiUnitRule::new(order, alpha + 2.0);
    let weighted_integral = rule.integrate(|x| q.eval(x).powi(2));
    let rhs = rule.integrate(|x| r.eval(x).powi(2));
    if !weighted_integral.is_finite() || !rhs.is_finite() {
        return Err(Error::NonFinite("Hardy integrals".into()));
    }
    let constant = 0.25 * (1.0 - alpha).powi(2);
    let lhs = constant * weighted_integral;
    Ok(HardyReport {
        alpha,
        constant,
        weighted_integral,
        lhs,
        rhs,
        satisfied: lhs <= rhs * (1.0 + HARDY_SLACK),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum HardyInterval {
    /// `(0, 1)`.
    Half,
    /// `(−1, 1)`.
    Full,
}

#[derive(Debug, Clone, Serialize)]
pub struct IntervalHardyReport {
    /// `∫ z² / x²`.
    pub lhs: f64,
    /// `4 ∫ z'²`.
    pub rhs: f64,
    pub satisfied: bool,
}

/// `∫ z²/x² ≤ 4 ∫ z'²` for `z(0) = 0`.
pub fn hardy_interval_check(z: &Poly, interval: HardyInterval) -> Result<IntervalHardyReport> {
    if !tiny(z.coeffs()[0], z.l1()) {
        return Err(Error::Precondition("z must vanish at 0".into()));
    }
    let zx = z.shift_down(1);
    let dz = z.derivative();
    let rule = LegendreRule::new(z.degree() + 1);
    let a = match interval {
        HardyInterval::Half => 0.0,
        HardyInterval::Full => -1.0,
    };
    let lhs = rule.integrate(a, 1.0, |x| zx.eval(x).powi(2));
    let rhs = 4.0 * rule.integrate(a, 1.0, |x| dz.eval(x).powi(2));
    Ok(IntervalHardyReport {
        lhs,
        rhs,
        satisfied: lhs <= rhs * (1.0 + HARDY_SLACK),
    })
}

/// `x²(1 − x) q(x)`.
pub fn clamped_poly(q: &Poly) -> Poly {
    Poly::new(vec![0.0, 0.0, 1.0, -1.0]).mul(q)
}

/// `count` polynomials `x²(1 − x) q(x)` with `q` of degree ≤ 3 and
/// coefficients uniform in `[−1, 1]`.
pub fn random_hardy_family(count: usize, seed: u64) -> Vec<Poly> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let q: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            clamped_poly(&Poly::new(q))
        })
        .collect()
}
