//! Leapfrog evolution of radial wave and Klein-Gordon equations.
//!
//! Every component solves `-Box w + m^2 w = f` with the radial Laplacian
//! written as `(1/r) d_rr (r w)`. In terms of `U = r w` the update is the
//! classical three-level scheme
//!
//! ```text
//! U^{n+1} = 2 U^n - U^{n-1} + dt^2 (D_rr U^n - m^2 U^n + r f^n)
//! ```
//!
//! with `U` continued oddly through the origin. [`Evolution`] advances the
//! equivalent form on `w` with a backward-difference velocity, which lets a
//! checkpoint hold exactly the state needed to resume bit for bit.

mod driver;
mod systems;
mod trajectory;

pub use driver::{Evolution, Frame, Observer, SolverState};
pub use systems::{Component, ExternalSource, FreeSystem, KgzDirect, KgzReformulated, SourceModel};
pub(crate) use trajectory::solve_system;
pub use trajectory::{recompose_n, solve_kgz, solve_kgz_reformulated, KgzTrajectory, Snapshot, TrajectoryRecorder};

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{config_err, Error, Result};
use crate::radial::grid::RadialGrid;
use crate::radial::stencil::{second_difference_into, Parity};

/// Grid, time step and run length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub grid: RadialGrid,
    /// `dt = cfl * dr`.
    pub cfl: f64,
    pub t0: f64,
    pub t_max: f64,
    /// Steps between stored snapshots.
    pub snapshot_stride: usize,
}

impl SolverConfig {
    pub const DEFAULT_CFL: f64 = 0.9;

    pub fn new(grid: RadialGrid, t0: f64, t_max: f64) -> Self {
        Self {
            grid,
            cfl: Self::DEFAULT_CFL,
            t0,
            t_max,
            snapshot_stride: 4,
        }
    }

    pub fn dt(&self) -> f64 {
        self.cfl * self.grid.dr()
    }

    /// Number of steps from `t0` to (at least) `t_max`.
    pub fn steps(&self) -> usize {
        libm::ceil((self.t_max - self.t0) / self.dt() - 1e-9) as usize
    }

    pub fn time(&self, level: i64) -> f64 {
        self.t0 + level as f64 * self.dt()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(config_err("time.cfl", "CFL number must lie in (0, 1]"));
        }
        if !(self.t_max > self.t0) || !self.t_max.is_finite() {
            return Err(config_err("time.t_max", "final time must exceed the start time"));
        }
        if self.snapshot_stride == 0 {
            return Err(config_err("time.snapshot_stride", "stride must be at least 1"));
        }
        Ok(())
    }

    /// Checks `R >= support + (t_max - t0) + 2`.
    pub fn check_causal(&self, support: f64) -> Result<()> {
        let need = support + (self.t_max - self.t0) + 2.0;
        if self.grid.outer_radius() < need {
            return Err(config_err(
                "grid.nr",
                alloc::format!(
                    "outer radius {} is inside the causal bound {need}",
                    self.grid.outer_radius()
                ),
            ));
        }
        Ok(())
    }

    /// Smallest grid with spacing `dr` that passes [`Self::check_causal`],
    /// with room for the numerical front (one node per step).
    pub fn causal_grid(support: f64, duration: f64, dr: f64, cfl: f64) -> Result<RadialGrid> {
        let physical = support + duration + 2.0;
        let numerical = support + duration / cfl + 3.0;
        RadialGrid::with_radius(physical.max(numerical), dr)
    }
}

/// Nodes kept clear of any signal at the outer edge.
pub(crate) fn boundary_margin(grid: &RadialGrid) -> usize {
    (libm::ceil(2.0 / grid.dr()) as usize).min(grid.nr() / 4)
}

/// One step of the three-level scheme on `U = r w`.
///
/// `source` holds `f` (not `r f`). `step` only labels a divergence error.
pub fn step_linear(
    u_prev: &[f64],
    u_curr: &[f64],
    mass: f64,
    source: &[f64],
    dt: f64,
    grid: &RadialGrid,
    step: usize,
) -> Result<Vec<f64>> {
    if dt > grid.dr() {
        return Err(config_err("time.cfl", "dt exceeds dr (CFL violation)"));
    }
    grid.check_len(u_prev)?;
    grid.check_len(u_curr)?;
    grid.check_len(source)?;
    let mut out = vec![0.0; grid.nr()];
    second_difference_into(u_curr, Parity::Odd, grid.dr(), &mut out);
    let dt2 = dt * dt;
    for i in 0..grid.nr() {
        let lu = out[i] - mass * mass * u_curr[i] + grid.r(i) * source[i];
        out[i] = 2.0 * u_curr[i] - u_prev[i] + dt2 * lu;
        if !out[i].is_finite() {
            return Err(Error::Divergence { step });
        }
    }
    Ok(out)
}

/// The radial Laplacian `(1/r_i)(r_{i+1} w_{i+1} - 2 r_i w_i + r_{i-1} w_{i-1}) / dr^2`,
/// i.e. the three-point second difference of `r w` divided by `r`.
#[derive(Debug, Clone)]
pub struct DiscreteLaplacian {
    up: Vec<f64>,
    down: Vec<f64>,
    diag: f64,
}

impl DiscreteLaplacian {
    pub fn new(grid: &RadialGrid) -> Self {
        let h2 = grid.dr() * grid.dr();
        let n = grid.nr();
        let mut up = vec![0.0; n];
        let mut down = vec![0.0; n];
        for i in 0..n {
            let r = grid.r(i);
            up[i] = if i + 1 < n { grid.r(i + 1) / (r * h2) } else { 0.0 };
            // odd continuation of r w: r_{-1} w_{-1} = -r_0 w_0
            down[i] = if i > 0 { grid.r(i - 1) / (r * h2) } else { -1.0 / h2 };
        }
        Self {
            up,
            down,
            diag: -2.0 / h2,
        }
    }

    /// `out_i = Lap_h(w)_i` for `i < upto`.
    #[inline]
    pub fn apply(&self, w: &[f64], upto: usize, out: &mut [f64]) {
        let n = w.len();
        let upto = upto.min(n);
        if upto == 0 {
            return;
        }
        out[0] = self.up[0] * at(w, 1) + self.diag * w[0] + self.down[0] * w[0];
        for i in 1..upto {
            let next = if i + 1 < n { w[i + 1] } else { 0.0 };
            out[i] = self.up[i] * next + self.diag * w[i] + self.down[i] * w[i - 1];
        }
    }
}

#[inline]
fn at(w: &[f64], i: usize) -> f64 {
    w.get(i).copied().unwrap_or(0.0)
}
