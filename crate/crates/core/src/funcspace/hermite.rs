//! Cubic Hermite shape functions on one cell.
//!
//! Local ordering: value at the left node, slope at the left node, value at
//! the right node, slope at the right node. Global raw DOF `2k` is the value
//! at node `k`, `2k + 1` the slope.

#[derive(Debug, Clone, Copy, Default)]
pub struct Shapes {
    pub value: [f64; 4],
    pub d1: [f64; 4],
    pub d2: [f64; 4],
    /// `φ / x²`, evaluated without cancellation on the two cells touching 0.
    /// Entries for shapes that do not vanish to second order at 0 are set to 0
    /// there; those DOFs are clamped anyway.
    pub over_x2: [f64; 4],
}

/// Shapes on the cell `[a, b]` at `x`.
pub fn shapes(a: f64, b: f64, x: f64) -> Shapes {
    let h = b - a;
    let t = (x - a) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let value = [
        2.0 * t3 - 3.0 * t2 + 1.0,
        h * (t3 - 2.0 * t2 + t),
        -2.0 * t3 + 3.0 * t2,
        h * (t3 - t2),
    ];
    let d1 = [
        (6.0 * t2 - 6.0 * t) / h,
        3.0 * t2 - 4.0 * t + 1.0,
        (-6.0 * t2 + 6.0 * t) / h,
        3.0 * t2 - 2.0 * t,
    ];
    let d2 = [
        (12.0 * t - 6.0) / (h * h),
        (6.0 * t - 4.0) / h,
        (-12.0 * t + 6.0) / (h * h),
        (6.0 * t - 2.0) / h,
    ];
    let over_x2 = if a == 0.0 {
        // x = h t: h01 = t²(3 - 2t), h h11 = h t²(t - 1)
        [0.0, 0.0, (3.0 - 2.0 * t) / (h * h), (t - 1.0) / h]
    } else if b == 0.0 {
        // x = -h (1 - t): h00 = (1 - t)²(1 + 2t), h h10 = h t (1 - t)²
        [(1.0 + 2.0 * t) / (h * h), t / h, 0.0, 0.0]
    } else {
        let x2 = x * x;
        value.map(|v| v / x2)
    };
    Shapes {
        value,
        d1,
        d2,
        over_x2,
    }
}
