/// Even C² cutoff: 1 on `[-inner, inner]`, 0 outside `(-outer, outer)`,
/// quintic smoothstep in between.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cutoff {
    inner: f64,
    outer: f64,
}

impl Default for Cutoff {
    fn default() -> Self {
        Self {
            inner: 0.5,
            outer: 0.75,
        }
    }
}

fn smoothstep(t: f64) -> (f64, f64, f64) {
    let t2 = t * t;
    let s = t2 * t * (10.0 - 15.0 * t + 6.0 * t2);
    let s1 = 30.0 * t2 * (1.0 - t) * (1.0 - t);
    let s2 = 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t);
    (s, s1, s2)
}

impl Cutoff {
    pub fn inner(&self) -> f64 {
        self.inner
    }

    pub fn outer(&self) -> f64 {
        self.outer
    }

    /// Points where the piecewise definition changes, in ascending order.
    pub fn breakpoints(&self) -> [f64; 4] {
        [-self.outer, -self.inner, self.inner, self.outer]
    }

    /// `(χ, χ', χ'')` at `x`.
    pub fn eval(&self, x: f64) -> (f64, f64, f64) {
        let a = x.abs();
        if a <= self.inner {
            return (1.0, 0.0, 0.0);
        }
        if a >= self.outer {
            return (0.0, 0.0, 0.0);
        }
        let w = self.outer - self.inner;
        let (s, s1, s2) = smoothstep((a - self.inner) / w);
        (1.0 - s, -x.signum() * s1 / w, -s2 / (w * w))
    }

    pub fn value(&self, x: f64) -> f64 {
        self.eval(x).0
    }
}
