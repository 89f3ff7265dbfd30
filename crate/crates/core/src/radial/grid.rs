use alloc::vec::Vec;

use crate::error::{config_err, Error, Result};

/// Uniform staggered radial grid with nodes at `r_i = (i + 1/2) dr`.
///
/// Staggering keeps every node off the origin, so `1/r` factors stay finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialGrid {
    nr: usize,
    dr: f64,
}

impl RadialGrid {
    pub const MIN_NODES: usize = 16;

    pub fn new(nr: usize, dr: f64) -> Result<Self> {
        if !(dr > 0.0) || !dr.is_finite() {
            return Err(config_err("grid.dr", "spacing must be positive and finite"));
        }
        if nr < Self::MIN_NODES {
            return Err(config_err("grid.nr", "at least 16 nodes are required"));
        }
        Ok(Self { nr, dr })
    }

    /// Smallest grid with spacing `dr` whose outer radius is at least `radius`.
    pub fn with_radius(radius: f64, dr: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(config_err("grid.radius", "outer radius must be positive"));
        }
        let nr = libm::ceil(radius / dr - 1e-9) as usize;
        Self::new(nr.max(Self::MIN_NODES), dr)
    }

    #[inline]
    pub fn nr(&self) -> usize {
        self.nr
    }

    #[inline]
    pub fn dr(&self) -> f64 {
        self.dr
    }

    #[inline]
    pub fn r(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dr
    }

    /// Outer radius `R = nr * dr`.
    pub fn outer_radius(&self) -> f64 {
        self.nr as f64 * self.dr
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.nr).map(|i| self.r(i)).collect()
    }

    /// Samples `f` at every node.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..self.nr).map(|i| f(self.r(i))).collect()
    }

    pub fn check_len(&self, values: &[f64]) -> Result<()> {
        if values.len() == self.nr {
            Ok(())
        } else {
            Err(Error::Mismatch("array length differs from grid node count"))
        }
    }
}
