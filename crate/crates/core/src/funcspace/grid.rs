use std::ops::Range;

use crate::error::{Error, Result};
use crate::funcspace::cutoff::Cutoff;
use crate::quadrature::{push_graded_toward_zero, LegendreRule};

/// Gauss points per ordinary cell (or per piece when a cell straddles a cutoff breakpoint).
const CELL_ORDER: usize = 20;
/// Gauss points per geometric sub-cell of the two cells touching the origin.
const ZERO_CELL_ORDER: usize = 24;
const ZERO_CELL_RATIO: f64 = 0.1;
/// Innermost sub-cell ends at `h * 1e-96`; the dropped mass of `x^(1-2ν)` is then below 1e-9 for ν ≤ 0.95.
const ZERO_CELL_LEVELS: usize = 96;

/// Symmetric partition of [-1, 1] graded toward the origin, with a composite
/// quadrature rule that resolves algebraic singularities at `x = 0`.
#[derive(Debug, Clone)]
pub struct Grid1D {
    nodes: Vec<f64>,
    grading_exponent: f64,
    quad_nodes: Vec<f64>,
    quad_weights: Vec<f64>,
    quad_cells: Vec<usize>,
    cell_ranges: Vec<Range<usize>>,
}

impl Grid1D {
    /// Builds a grid with `n_cells` cells; right-half nodes sit at `(j/m)^p`, `m = n_cells/2`.
    pub fn build(n_cells: usize, grading_exponent: f64) -> Result<Self> {
        if n_cells < 2 || !n_cells.is_multiple_of(2) {
            return Err(Error::InvalidParameter {
                name: "n_cells",
                value: n_cells as f64,
                reason: "must be a positive even integer".into(),
            });
        }
        if !(grading_exponent >= 1.0) || !grading_exponent.is_finite() {
            return Err(Error::InvalidParameter {
                name: "grading_exponent",
                value: grading_exponent,
                reason: "must be finite and >= 1".into(),
            });
        }
        let m = n_cells / 2;
        let right: Vec<f64> = (0..=m)
            .map(|j| match j {
                0 => 0.0,
                j if j == m => 1.0,
                j => (j as f64 / m as f64).powf(grading_exponent),
            })
            .collect();
        let mut nodes: Vec<f64> = right.iter().rev().map(|x| -x).collect();
        nodes[m] = 0.0;
        nodes.extend_from_slice(&right[1..]);

        let cell_rule = LegendreRule::new(CELL_ORDER);
        let zero_rule = LegendreRule::new(ZERO_CELL_ORDER);
        let cutoff = Cutoff::default();
        let breaks = cutoff.breakpoints();

        // Right-half rule per cell, then mirrored onto the left half.
        let mut right_cells: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(m);
        for j in 0..m {
            let (a, b) = (right[j], right[j + 1]);
            let (mut xs, mut ws) = (Vec::new(), Vec::new());
            if j == 0 {
                push_graded_toward_zero(
                    &zero_rule,
                    b,
                    ZERO_CELL_RATIO,
                    ZERO_CELL_LEVELS,
                    &mut xs,
                    &mut ws,
                );
                // graded pieces were emitted from the outside in
                let mut pairs: Vec<(f64, f64)> = xs.into_iter().zip(ws).collect();
                pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
                (xs, ws) = pairs.into_iter().unzip();
            } else {
                let mut pieces = vec![a];
                pieces.extend(breaks.iter().copied().filter(|&t| t > a && t < b));
                pieces.push(b);
                for w in pieces.windows(2) {
                    cell_rule.push_on(w[0], w[1], &mut xs, &mut ws);
                }
            }
            right_cells.push((xs, ws));
        }

        let mut quad_nodes = Vec::new();
        let mut quad_weights = Vec::new();
        let mut quad_cells = Vec::new();
        let mut cell_ranges = Vec::with_capacity(n_cells);
        for (c, (xs, ws)) in right_cells.iter().enumerate().rev() {
            let start = quad_nodes.len();
            for (x, w) in xs.iter().zip(ws).rev() {
                quad_nodes.push(-x);
                quad_weights.push(*w);
                quad_cells.push(m - 1 - c);
            }
            cell_ranges.push(start..quad_nodes.len());
        }
        for (c, (xs, ws)) in right_cells.iter().enumerate() {
            let start = quad_nodes.len();
            quad_nodes.extend_from_slice(xs);
            quad_weights.extend_from_slice(ws);
            quad_cells.extend(std::iter::repeat_n(m + c, xs.len()));
            cell_ranges.push(start..quad_nodes.len());
        }

        Ok(Self {
            nodes,
            grading_exponent,
            quad_nodes,
            quad_weights,
            quad_cells,
            cell_ranges,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn n_cells(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Index of the node at the origin.
    pub fn zero_node(&self) -> usize {
        self.n_cells() / 2
    }

    pub fn grading_exponent(&self) -> f64 {
        self.grading_exponent
    }

    pub fn quad_nodes(&self) -> &[f64] {
        &self.quad_nodes
    }

    pub fn quad_weights(&self) -> &[f64] {
        &self.quad_weights
    }

    pub fn quad_cells(&self) -> &[usize] {
        &self.quad_cells
    }

    pub fn cell_quadrature(&self, cell: usize) -> Range<usize> {
        self.cell_ranges[cell].clone()
    }

    pub fn cell_bounds(&self, cell: usize) -> (f64, f64) {
        (self.nodes[cell], self.nodes[cell + 1])
    }

    /// Cell containing `x`; nodes belong to the cell on their right (the last node to the last cell).
    pub fn locate(&self, x: f64) -> Option<usize> {
        if !(-1.0..=1.0).contains(&x) {
            return None;
        }
        let k = self.nodes.partition_point(|&t| t <= x);
        Some(k.saturating_sub(1).min(self.n_cells() - 1))
    }

    /// `Σ w f(x)` over the whole rule.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.quad_nodes
            .iter()
            .zip(&self.quad_weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// `Σ w f(x)` restricted to quadrature points in `[a, b]`.
    ///
    /// Exact sub-interval integration needs `a` and `b` among the rule's
    /// breakpoints; see [`Grid1D::interval_rule`] for arbitrary bounds.
    pub fn integrate_where<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.quad_nodes
            .iter()
            .zip(&self.quad_weights)
            .filter(|(&x, _)| x >= a && x <= b)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// Quadrature points and weights for `[a, b] ∩ [-1, 1]`, honoring cell
    /// boundaries, cutoff breakpoints and the graded treatment of the origin.
    pub fn interval_rule(&self, a: f64, b: f64) -> Vec<(f64, f64, usize)> {
        let a = a.max(-1.0);
        let b = b.min(1.0);
        let mut out = Vec::new();
        if b <= a {
            return out;
        }
        let cell_rule = LegendreRule::new(CELL_ORDER);
        let breaks = Cutoff::default().breakpoints();
        let zero = self.zero_node();
        for c in 0..self.n_cells() {
            let (lo, hi) = self.cell_bounds(c);
            if hi <= a || lo >= b {
                continue;
            }
            let touches_zero = c + 1 == zero || c == zero;
            if lo >= a && hi <= b {
                // whole cell: reuse the cell rule
                for q in self.cell_quadrature(c) {
                    out.push((self.quad_nodes[q], self.quad_weights[q], c));
                }
                continue;
            }
            let (ca, cb) = (lo.max(a), hi.min(b));
            if touches_zero && (ca == 0.0 || cb == 0.0) {
                // clipped piece still touches the origin: graded rule again
                let zero_rule = LegendreRule::new(ZERO_CELL_ORDER);
                let (mut xs, mut ws) = (Vec::new(), Vec::new());
                let len = if cb == 0.0 { -ca } else { cb };
                push_graded_toward_zero(
                    &zero_rule,
                    len,
                    ZERO_CELL_RATIO,
                    ZERO_CELL_LEVELS,
                    &mut xs,
                    &mut ws,
                );
                let sign = if cb == 0.0 { -1.0 } else { 1.0 };
                out.extend(xs.into_iter().zip(ws).map(|(x, w)| (sign * x, w, c)));
                continue;
            }
            let mut pieces = vec![ca];
            pieces.extend(
                breaks
                    .iter()
                    .copied()
                    .filter(|&t| t > ca && t < cb),
            );
            pieces.push(cb);
            let (mut xs, mut ws) = (Vec::new(), Vec::new());
            for w in pieces.windows(2) {
                cell_rule.push_on(w[0], w[1], &mut xs, &mut ws);
            }
            out.extend(xs.into_iter().zip(ws).map(|(x, w)| (x, w, c)));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_partition() {
        let g = Grid1D::build(4, 1.0).unwrap();
        assert_eq!(g.nodes(), &[-1.0, -0.5, 0.0, 0.5, 1.0]);
    }

    #[test]
    fn graded_first_node() {
        let g = Grid1D::build(8, 2.0).unwrap();
        assert_eq!(g.nodes()[5], 0.0625);
        assert_eq!(g.nodes()[3], -0.0625);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Grid1D::build(7, 2.0).is_err());
        assert!(Grid1D::build(0, 2.0).is_err());
        assert!(Grid1D::build(8, 0.5).is_err());
    }

    #[test]
    fn nodes_symmetric_and_increasing() {
        let g = Grid1D::build(30, 2.5).unwrap();
        let n = g.nodes();
        for w in n.windows(2) {
            assert!(w[1] > w[0]);
        }
        for i in 0..n.len() {
            assert_eq!(n[i], -n[n.len() - 1 - i]);
        }
        let q = g.quad_nodes();
        for i in 0..q.len() {
            assert_eq!(q[i], -q[q.len() - 1 - i]);
        }
        for w in q.windows(2) {
            assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn singular_power_integrates() {
        let g = Grid1D::build(200, 2.0).unwrap();
        for nu in [0.05, 0.1, 0.25, 0.3, 0.5, 0.75, 0.9, 0.95] {
            let a = 1.0 - 2.0 * nu;
            let v = g.integrate_where(0.0, 1.0, |x| x.powf(a));
            let exact = 1.0 / (2.0 - 2.0 * nu);
            assert!(((v - exact) / exact).abs() < 1e-8, "nu={nu}: {v} vs {exact}");
        }
    }

    #[test]
    fn interval_rule_is_exact_on_clipped_cells() {
        let g = Grid1D::build(16, 2.0).unwrap();
        let r = g.interval_rule(-0.8, -0.2);
        let v: f64 = r.iter().map(|&(x, w, _)| w * x * x).sum();
        let exact = (0.8f64.powi(3) - 0.2f64.powi(3)) / 3.0;
        assert!((v - exact).abs() < 1e-14);
        let r = g.interval_rule(-0.3, 0.4);
        let v: f64 = r.iter().map(|&(x, w, _)| w * x.abs().powf(-0.5)).sum();
        let exact = 2.0 * (0.3f64.sqrt() + 0.4f64.sqrt());
        assert!((v - exact).abs() < 1e-9, "{v} {exact}");
    }

    #[test]
    fn locate_finds_cells() {
        let g = Grid1D::build(4, 1.0).unwrap();
        assert_eq!(g.locate(-1.0), Some(0));
        assert_eq!(g.locate(-0.25), Some(1));
        assert_eq!(g.locate(0.0), Some(2));
        assert_eq!(g.locate(1.0), Some(3));
        assert_eq!(g.locate(1.5), None);
    }
}
