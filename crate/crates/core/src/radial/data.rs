use crate::error::{config_err, Result};
use crate::math;
use crate::radial::grid::RadialGrid;
use crate::radial::norms::smallness_norm;
use crate::radial::window::RadialState;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFamily {
    /// `exp(-(r - r_c)^2 / sigma^2)`, cut off beyond eight widths.
    Gaussian,
    /// `exp(1 - 1 / (1 - rho^2))` for `|rho| < 1`, `rho = (r - r_c) / sigma`; zero otherwise.
    CompactBump,
}

impl DataFamily {
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "gaussian" => Some(Self::Gaussian),
            "bump" | "compact-bump" | "smooth-bump-compact" => Some(Self::CompactBump),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Gaussian => "gaussian",
            Self::CompactBump => "bump",
        }
    }
}

/// Initial data `(E0, E1, n0, n1) = eps * amplitudes * profile(r)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialDataSpec {
    pub family: DataFamily,
    pub eps: f64,
    pub sigma: f64,
    pub center: f64,
    /// Multipliers for `E0`, `E1`, `n0`, `n1`.
    pub amplitudes: [f64; 4],
}

impl Default for InitialDataSpec {
    fn default() -> Self {
        Self {
            family: DataFamily::Gaussian,
            eps: 0.01,
            sigma: 1.0,
            center: 0.0,
            amplitudes: [1.0, 0.0, 1.0, 0.0],
        }
    }
}

impl InitialDataSpec {
    /// Gaussian profiles are cut to zero beyond this many widths
    /// (`exp(-64)` is below double-precision resolution of the peak).
    pub const GAUSSIAN_CUTOFF: f64 = 8.0;

    pub fn profile(&self, r: f64) -> f64 {
        let rho = (r - self.center) / self.sigma;
        match self.family {
            DataFamily::Gaussian => {
                if rho.abs() > Self::GAUSSIAN_CUTOFF {
                    0.0
                } else {
                    math::exp(-rho * rho)
                }
            }
            DataFamily::CompactBump => {
                if rho.abs() >= 1.0 {
                    0.0
                } else {
                    math::exp(1.0 - 1.0 / (1.0 - rho * rho))
                }
            }
        }
    }

    /// Radius beyond which the data are negligible (exactly zero for the bump).
    pub fn support_radius(&self) -> f64 {
        match self.family {
            DataFamily::Gaussian => self.center + Self::GAUSSIAN_CUTOFF * self.sigma,
            DataFamily::CompactBump => self.center + self.sigma,
        }
    }

    pub fn validate(&self, grid: &RadialGrid) -> Result<()> {
        if !(self.eps >= 0.0) || !self.eps.is_finite() {
            return Err(config_err("data.eps", "amplitude must be finite and non-negative"));
        }
        if !(self.sigma > 0.0) {
            return Err(config_err("data.sigma", "width must be positive"));
        }
        if !(self.center >= 0.0) {
            return Err(config_err("data.center", "center must be non-negative"));
        }
        if self.sigma / grid.dr() < 8.0 {
            return Err(config_err("data.sigma", "width is resolved by fewer than 8 nodes"));
        }
        Ok(())
    }

    /// The sampled component `k` (0: `E0`, 1: `E1`, 2: `n0`, 3: `n1`).
    pub fn sample(&self, grid: &RadialGrid, k: usize) -> alloc::vec::Vec<f64> {
        let a = self.eps * self.amplitudes[k];
        grid.sample(|r| a * self.profile(r))
    }

    /// Truncated smallness functional of the sampled data.
    pub fn smallness(&self, grid: &RadialGrid, n_trunc: usize) -> Result<f64> {
        smallness_norm(
            grid,
            &self.sample(grid, 0),
            &self.sample(grid, 1),
            &self.sample(grid, 2),
            &self.sample(grid, 3),
            n_trunc,
        )
    }
}

/// Samples the data into the four components `(e, n, n0, nD)` at time `t0`.
/// `n` and `n0` carry the `n` data; `nD` starts from rest at zero.
pub fn make_initial_state(spec: &InitialDataSpec, grid: &RadialGrid, t0: f64) -> Result<[RadialState; 4]> {
    spec.validate(grid)?;
    let e = RadialState {
        grid: *grid,
        t: t0,
        w: spec.sample(grid, 0),
        wt: spec.sample(grid, 1),
    };
    let n = RadialState {
        grid: *grid,
        t: t0,
        w: spec.sample(grid, 2),
        wt: spec.sample(grid, 3),
    };
    Ok([e, n.clone(), n, RadialState::zero(*grid, t0)])
}
