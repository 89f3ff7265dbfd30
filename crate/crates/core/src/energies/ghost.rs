use alloc::vec::Vec;

use crate::error::{config_err, Result};
use crate::math::{self, jb};

/// The ghost weight `q(y) = int_{-inf}^{y} <s>^{-1-delta} ds`, tabulated once
/// and evaluated by cubic Hermite interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct GhostWeightSpec {
    delta: f64,
    q_total: f64,
    table: Vec<f64>,
}

impl GhostWeightSpec {
    pub const DEFAULT_DELTA: f64 = 0.05;
    /// Table half-width; beyond it the asymptotic tail is used.
    pub const Y_MAX: f64 = 400.0;
    /// Table spacing.
    pub const H: f64 = 0.005;

    /// Weight with `delta` in `(0, 0.1]`.
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta <= 0.1) {
            return Err(config_err("ghost.delta", "delta must lie in (0, 0.1]"));
        }
        Ok(Self::tabulate(delta))
    }

    /// Builds the table for any `delta > 0` (no range check).
    pub fn tabulate(delta: f64) -> Self {
        assert!(delta > 0.0, "delta must be positive");
        let n = libm::round(2.0 * Self::Y_MAX / Self::H) as usize;
        let g = |s: f64| math::powf(jb(s), -1.0 - delta);
        let mut table = Vec::with_capacity(n + 1);
        let mut q = tail(Self::Y_MAX, delta);
        let mut carry = 0.0;
        table.push(q);
        for k in 0..n {
            let a = -Self::Y_MAX + k as f64 * Self::H;
            let y = math::adaptive_simpson(&g, a, a + Self::H, 1e-17) - carry;
            let next = q + y;
            carry = (next - q) - y;
            q = next;
            table.push(q);
        }
        let q_total = table[n] + tail(Self::Y_MAX, delta);
        Self { delta, q_total, table }
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `q(+inf)`.
    pub fn q_total(&self) -> f64 {
        self.q_total
    }

    /// `q'(y) = <y>^{-1-delta}`.
    pub fn dq(&self, y: f64) -> f64 {
        math::powf(jb(y), -1.0 - self.delta)
    }

    pub fn q(&self, y: f64) -> f64 {
        if y <= -Self::Y_MAX {
            return tail(-y, self.delta);
        }
        if y >= Self::Y_MAX {
            return self.q_total - tail(y, self.delta);
        }
        let x = (y + Self::Y_MAX) / Self::H;
        let k = (libm::floor(x) as usize).min(self.table.len() - 2);
        let u = x - k as f64;
        let y0 = -Self::Y_MAX + k as f64 * Self::H;
        let (q0, q1) = (self.table[k], self.table[k + 1]);
        let (m0, m1) = (self.dq(y0) * Self::H, self.dq(y0 + Self::H) * Self::H);
        let u2 = u * u;
        let u3 = u2 * u;
        (2.0 * u3 - 3.0 * u2 + 1.0) * q0 + (u3 - 2.0 * u2 + u) * m0 + (-2.0 * u3 + 3.0 * u2) * q1 + (u3 - u2) * m1
    }
}

/// `int_{y}^{inf} <s>^{-1-delta} ds` for large `y` from the expansion of
/// `(1 + s^{-2})^{-(1+delta)/2}`.
fn tail(y: f64, delta: f64) -> f64 {
    let a = 1.0 + delta;
    let p = |k: f64| math::powf(y, -k - delta) / (k + delta);
    p(0.0) - 0.5 * a * p(2.0) + a * (a + 2.0) / 8.0 * p(4.0) - a * (a + 2.0) * (a + 4.0) / 48.0 * p(6.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_one_matches_arctangent() {
        let g = GhostWeightSpec::tabulate(1.0);
        assert!((g.q_total() - math::PI).abs() < 1e-10);
        for k in 0..=2000 {
            let y = -500.0 + k as f64 * 0.5 + 0.0123;
            let exact = 0.5 * math::PI + libm::atan(y);
            assert!((g.q(y) - exact).abs() < 1e-10, "y {y}: {} vs {exact}", g.q(y));
        }
    }

    #[test]
    fn default_weight_is_monotone_and_symmetric() {
        let g = GhostWeightSpec::new(0.05).unwrap();
        assert!((g.q(0.0) - 0.5 * g.q_total()).abs() < 1e-9);
        let mut prev = 0.0;
        for k in 0..=4000 {
            let y = -1000.0 + k as f64 * 0.5;
            let q = g.q(y);
            assert!(q > prev && q < g.q_total(), "y {y}");
            prev = q;
        }
        assert!(GhostWeightSpec::new(0.2).is_err());
        assert!(GhostWeightSpec::new(0.0).is_err());
    }
}
