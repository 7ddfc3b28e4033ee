//! Gauss rules and the composite rules built from them.
//!
//! Nodes and weights come from `gauss-quad`; this module only maps them onto
//! intervals and builds the geometrically graded composite rules needed for
//! integrands with algebraic singularities at an endpoint.

use std::num::NonZeroUsize;

use gauss_quad::{FiniteAboveNegOneF64, GaussJacobi, GaussLegendre};

/// A Gauss–Legendre rule on [-1, 1] with exactly mirrored nodes.
#[derive(Debug, Clone)]
pub struct LegendreRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl LegendreRule {
    pub fn new(order: usize) -> Self {
        let order = NonZeroUsize::new(order.max(1)).expect("nonzero");
        let pairs = GaussLegendre::new(order).as_node_weight_pairs().to_vec();
        let m = pairs.len();
        let mut nodes = vec![0.0; m];
        let mut weights = vec![0.0; m];
        for i in 0..m {
            let j = m - 1 - i;
            // the library's nodes are symmetric only to rounding
            nodes[i] = 0.5 * (pairs[i].0 - pairs[j].0);
            weights[i] = 0.5 * (pairs[i].1 + pairs[j].1);
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Appends the mapped rule on `[a, b]` to `xs`/`ws`.
    pub fn push_on(&self, a: f64, b: f64, xs: &mut Vec<f64>, ws: &mut Vec<f64>) {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (t, w) in self.nodes.iter().zip(&self.weights) {
            xs.push(mid + half * t);
            ws.push(half * w);
        }
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(t, w)| w * f(mid + half * t))
            .sum::<f64>()
            * half
    }
}

/// Gauss–Jacobi rule for `∫₀¹ x^β F(x) dx`, exact for polynomial `F` of degree `2m-1`
/// (`m` is rounded up to even).
#[derive(Debug, Clone)]
pub struct JacobiUnitRule {
    beta: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl JacobiUnitRule {
    pub fn new(order: usize, beta: f64) -> Self {
        assert!(beta > -1.0, "Jacobi exponent must exceed -1");
        // gauss-quad puts a node at exactly 0 for odd orders, which is only
        // right for symmetric weights
        let order = NonZeroUsize::new(order.max(2).next_multiple_of(2)).expect("nonzero");
        let rule = GaussJacobi::new(
            order,
            FiniteAboveNegOneF64::new(0.0).expect("finite"),
            FiniteAboveNegOneF64::new(beta).expect("checked above"),
        );
        // (1 + t)^β on [-1, 1] becomes (2x)^β on [0, 1]; dt = 2 dx
        let scale = 0.5f64.powf(beta + 1.0);
        let (nodes, weights) = rule
            .as_node_weight_pairs()
            .iter()
            .map(|&(t, w)| (0.5 * (t + 1.0), w * scale))
            .unzip();
        Self {
            beta,
            nodes,
            weights,
        }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `∫₀¹ x^β f(x) dx`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Composite rule on `[0, h]` graded geometrically toward 0:
/// subintervals `[h q^(k+1), h q^k]` for `k < levels`, plus `[0, h q^levels]`.
pub fn push_graded_toward_zero(
    rule: &LegendreRule,
    h: f64,
    ratio: f64,
    levels: usize,
    xs: &mut Vec<f64>,
    ws: &mut Vec<f64>,
) {
    let mut hi = h;
    for _ in 0..levels {
        let lo = hi * ratio;
        rule.push_on(lo, hi, xs, ws);
        hi = lo;
    }
    rule.push_on(0.0, hi, xs, ws);
}

/// Breakpoints of `(0, len)` graded geometrically toward both ends, ascending.
pub fn two_sided_graded_breaks(len: f64, ratio: f64, levels: usize) -> Vec<f64> {
    let half = 0.5 * len;
    let mut left = vec![0.0];
    left.extend((0..levels).map(|k| half * ratio.powi((levels - k) as i32)));
    left.push(half);
    let mut out = left.clone();
    for &b in left.iter().rev().skip(1) {
        out.push(len - b);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_is_mirror_symmetric_and_exact() {
        let r = LegendreRule::new(7);
        for i in 0..7 {
            assert_eq!(r.nodes[i], -r.nodes[6 - i]);
        }
        let v = r.integrate(0.0, 2.0, |x| x.powi(13));
        assert!((v - 2f64.powi(14) / 14.0).abs() < 1e-10);
    }

    #[test]
    fn jacobi_unit_integrates_weighted_polynomials() {
        for beta in [-0.9, -0.3, 0.0, 0.5, 3.9] {
            let r = JacobiUnitRule::new(6, beta);
            let v = r.integrate(|x| x * x * (1.0 - x));
            let exact = 1.0 / (beta + 3.0) - 1.0 / (beta + 4.0);
            assert!((v - exact).abs() < 1e-13 * exact.abs().max(1.0), "beta={beta}");
        }
    }

    #[test]
    fn jacobi_odd_orders_stay_exact() {
        for order in [1, 3, 5, 7] {
            let r = JacobiUnitRule::new(order, 2.0);
            for k in 0..2 * order {
                let v = r.integrate(|x| x.powi(k as i32));
                assert!((v - 1.0 / (k as f64 + 3.0)).abs() < 1e-14, "order={order} k={k}");
            }
        }
    }

    #[test]
    fn graded_rule_handles_weak_singularity() {
        let r = LegendreRule::new(24);
        let (mut xs, mut ws) = (vec![], vec![]);
        push_graded_toward_zero(&r, 1.0, 0.1, 100, &mut xs, &mut ws);
        let v: f64 = xs.iter().zip(&ws).map(|(x, w)| w * x.powf(-0.9)).sum();
        assert!((v - 10.0).abs() / 10.0 < 1e-9, "{v}");
    }

    #[test]
    fn two_sided_breaks_are_symmetric() {
        let b = two_sided_graded_breaks(1.0, 0.5, 4);
        assert_eq!(b.first(), Some(&0.0));
        assert_eq!(b.last(), Some(&1.0));
        for w in b.windows(2) {
            assert!(w[1] > w[0]);
        }
        let n = b.len();
        for i in 0..n {
            assert!((b[i] + b[n - 1 - i] - 1.0).abs() < 1e-15);
        }
    }
}
