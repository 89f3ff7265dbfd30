//! The solution map `T`, the truncated X-norm and Picard iteration.
//!
//! `T(Psi, phi)` solves the linear system
//!
//! ```text
//! -Box e + e = -phi Psi,    -Box n = Lap(Psi^2)
//! ```
//!
//! with the original data, the sources frozen from the input pair at every
//! solver level. Iterating `T` from the free solutions converges to the
//! direct nonlinear solve when the data are small.

mod history;
mod iterate;
mod xnorm;

pub use history::FieldHistory;
pub use iterate::{
    contraction_scaling, find_eps0, limit_check, picard_iterate, Eps0Search, LimitCheck, PicardRun, ScalingRow,
    ScalingTable, CONTRACTION_TARGET, RATIO_FLOOR,
};
pub use xnorm::{x_norm, XNormReport};

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{config_err, Error, Result};
use crate::evolve::{solve_system, Component, DiscreteLaplacian, Evolution, KgzTrajectory, SolverConfig, SourceModel};
use crate::radial::data::{make_initial_state, InitialDataSpec};
use crate::radial::window::RadialState;
use history::HistoryRecorder;

/// Grid, horizon, data and iteration settings of a Picard experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardConfig {
    pub dr: f64,
    pub cfl: f64,
    pub t0: f64,
    pub t_max: f64,
    pub snapshot_stride: usize,
    pub data: InitialDataSpec,
    /// Last iterate index; iterates `0 ..= k_max` are computed.
    pub k_max: usize,
    /// Derivative tier `K` of the X-norm.
    pub tier: usize,
    /// Ghost-weight and decay-tier exponent.
    pub delta: f64,
    /// Levels between X-norm samples.
    pub norm_stride: usize,
}

impl Default for PicardConfig {
    fn default() -> Self {
        Self {
            dr: 0.02,
            cfl: SolverConfig::DEFAULT_CFL,
            t0: 2.0,
            t_max: 20.0,
            snapshot_stride: 10,
            data: InitialDataSpec::default(),
            k_max: 7,
            tier: 1,
            delta: 0.05,
            norm_stride: 4,
        }
    }
}

impl PicardConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_max < 3 {
            return Err(config_err("picard.k_max", "at least three iterations are required"));
        }
        if self.tier > 2 {
            return Err(Error::UnsupportedTier(self.tier));
        }
        if self.norm_stride == 0 {
            return Err(config_err("picard.norm_stride", "stride must be at least 1"));
        }
        self.solver()?.validate()
    }

    /// Causal solver configuration for the data support and horizon.
    pub fn solver(&self) -> Result<SolverConfig> {
        let grid = SolverConfig::causal_grid(self.data.support_radius(), self.t_max - self.t0, self.dr, self.cfl)?;
        let mut cfg = SolverConfig::new(grid, self.t0, self.t_max);
        cfg.cfl = self.cfl;
        cfg.snapshot_stride = self.snapshot_stride;
        Ok(cfg)
    }

    pub fn with_eps(&self, eps: f64) -> Self {
        let mut c = *self;
        c.data.eps = eps;
        c
    }
}

/// Sources `-phi Psi` and `Lap(Psi^2)` read from a stored pair.
struct FrozenSources<'a> {
    psi: &'a FieldHistory,
    phi: &'a FieldHistory,
    t0: f64,
    dt: f64,
    scratch: Vec<f64>,
}

impl SourceModel for FrozenSources<'_> {
    fn components(&self) -> Vec<Component> {
        vec![Component::new("e", 1.0), Component::new("n", 0.0)]
    }

    fn has_source(&self, _c: usize) -> bool {
        true
    }

    fn confined(&self) -> bool {
        false
    }

    fn sources(&mut self, t: f64, _w: &[&[f64]], upto: usize, lap: &DiscreteLaplacian, out: &mut [Vec<f64>]) {
        let l = libm::round((t - self.t0) / self.dt) as i64;
        let (e, n) = (self.psi.level(l), self.phi.level(l));
        let at = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
        for i in 0..upto {
            out[0][i] = -at(n, i) * at(e, i);
        }
        self.scratch.clear();
        self.scratch.resize(out[1].len(), 0.0);
        for (i, x) in e.iter().enumerate() {
            self.scratch[i] = x * x;
        }
        lap.apply(&self.scratch, upto, &mut out[1]);
    }
}

/// Sources of `T(Psi, phi) - T(Psi - dPsi, phi - dphi)`, expanded so that
/// rounding scales with the increment:
/// `-(dphi Psi + (phi - dphi) dPsi)` and `Lap(dPsi (2 Psi - dPsi))`.
struct IncrementSources<'a> {
    psi: &'a FieldHistory,
    phi: &'a FieldHistory,
    dpsi: &'a FieldHistory,
    dphi: &'a FieldHistory,
    t0: f64,
    dt: f64,
    scratch: Vec<f64>,
}

impl SourceModel for IncrementSources<'_> {
    fn components(&self) -> Vec<Component> {
        vec![Component::new("e", 1.0), Component::new("n", 0.0)]
    }

    fn has_source(&self, _c: usize) -> bool {
        true
    }

    fn confined(&self) -> bool {
        false
    }

    fn sources(&mut self, t: f64, _w: &[&[f64]], upto: usize, lap: &DiscreteLaplacian, out: &mut [Vec<f64>]) {
        let l = libm::round((t - self.t0) / self.dt) as i64;
        let (e, n) = (self.psi.level(l), self.phi.level(l));
        let (de, dn) = (self.dpsi.level(l), self.dphi.level(l));
        let at = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
        for i in 0..upto {
            out[0][i] = -(at(dn, i) * at(e, i) + (at(n, i) - at(dn, i)) * at(de, i));
        }
        self.scratch.clear();
        self.scratch.resize(out[1].len(), 0.0);
        for (i, x) in self.scratch.iter_mut().enumerate().take(de.len()) {
            *x = at(de, i) * (2.0 * at(e, i) - at(de, i));
        }
        lap.apply(&self.scratch, upto, &mut out[1]);
    }
}

/// `T(Psi, phi) - T(Psi - dPsi, phi - dphi)`: the linear solves with zero
/// data and the increment sources.
pub(crate) fn apply_increment(
    psi: &FieldHistory,
    phi: &FieldHistory,
    dpsi: &FieldHistory,
    dphi: &FieldHistory,
    config: SolverConfig,
) -> Result<(FieldHistory, FieldHistory)> {
    config.validate()?;
    for h in [psi, phi, dpsi, dphi] {
        if !h.is_empty() && h.config != config {
            return Err(Error::Mismatch(
                "input history grid or steps differ from the configuration",
            ));
        }
    }
    let zero = RadialState::zero(config.grid, config.t0);
    let sys = IncrementSources {
        psi,
        phi,
        dpsi,
        dphi,
        t0: config.t0,
        dt: config.dt(),
        scratch: Vec::new(),
    };
    let mut ev = Evolution::start(config, sys, &[zero.clone(), zero])?;
    let mut rec = HistoryRecorder::new(vec![0, 1]);
    ev.run(&mut [&mut rec])?;
    let mut h = rec.finish(config, &[1.0, 0.0])?;
    let dphi_new = h.pop().ok_or(Error::InsufficientData("no history recorded"))?;
    let dpsi_new = h.pop().ok_or(Error::InsufficientData("no history recorded"))?;
    Ok((dpsi_new, dphi_new))
}

/// One application of `T` with the run's snapshots kept.
pub(crate) fn apply_map(
    psi: &FieldHistory,
    phi: &FieldHistory,
    data: &InitialDataSpec,
    config: SolverConfig,
) -> Result<(FieldHistory, FieldHistory, KgzTrajectory)> {
    config.validate()?;
    for h in [psi, phi] {
        if !h.is_empty() && h.config != config {
            return Err(Error::Mismatch(
                "input history grid or steps differ from the configuration",
            ));
        }
    }
    config.check_causal(data.support_radius())?;
    let [e, n, _, _] = make_initial_state(data, &config.grid, config.t0)?;
    let eps = data.smallness(&config.grid, 1)?;
    let sys = FrozenSources {
        psi,
        phi,
        t0: config.t0,
        dt: config.dt(),
        scratch: Vec::new(),
    };
    let mut rec = HistoryRecorder::new(vec![0, 1]);
    let traj = solve_system(config, sys, &[e, n], eps, &mut [&mut rec])?;
    let mut h = rec.finish(config, &[1.0, 0.0])?;
    let phi_new = h.pop().ok_or(Error::InsufficientData("no history recorded"))?;
    let psi_new = h.pop().ok_or(Error::InsufficientData("no history recorded"))?;
    Ok((psi_new, phi_new, traj))
}

/// `T(Psi, phi)`: the linear solves with sources frozen from the inputs.
pub fn solution_map(
    psi: &FieldHistory,
    phi: &FieldHistory,
    data: &InitialDataSpec,
    config: SolverConfig,
) -> Result<(FieldHistory, FieldHistory)> {
    let (a, b, _) = apply_map(psi, phi, data, config)?;
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::solve_kgz;

    fn small() -> PicardConfig {
        PicardConfig {
            dr: 0.05,
            t_max: 6.0,
            ..Default::default()
        }
    }

    #[test]
    fn zero_data_maps_zero_to_zero() {
        let pc = small().with_eps(0.0);
        let cfg = pc.solver().unwrap();
        let z = FieldHistory::zero(cfg, 1.0);
        let (a, b) = solution_map(&z, &z, &pc.data, cfg).unwrap();
        assert!(a.is_zero() && b.is_zero());
        assert_eq!(a.len(), cfg.steps() + 5);
    }

    #[test]
    fn seed_is_the_free_solution() {
        let pc = small().with_eps(0.3);
        let cfg = pc.solver().unwrap();
        let z = FieldHistory::zero(cfg, 1.0);
        let (_, _, tr) = apply_map(&z, &z, &pc.data, cfg).unwrap();
        let free = crate::evolve::FreeSystem::new(vec![Component::new("e", 1.0), Component::new("n", 0.0)]);
        let [e, n, _, _] = make_initial_state(&pc.data, &cfg.grid, cfg.t0).unwrap();
        let f = solve_system(cfg, free, &[e, n], 0.0, &mut []).unwrap();
        assert_eq!(tr.final_state.w, f.final_state.w);
    }

    #[test]
    fn fixed_point_reproduces_the_direct_solve() {
        let pc = small().with_eps(0.3);
        let cfg = pc.solver().unwrap();
        let mut rec = HistoryRecorder::new(vec![0, 1]);
        solve_kgz(cfg, &pc.data, &mut [&mut rec]).unwrap();
        let h = rec.finish(cfg, &[1.0, 0.0]).unwrap();
        let (a, b) = solution_map(&h[0], &h[1], &pc.data, cfg).unwrap();
        let scale = h[0].max_abs_diff(&FieldHistory::zero(cfg, 1.0)).unwrap();
        let err = a.max_abs_diff(&h[0]).unwrap().max(b.max_abs_diff(&h[1]).unwrap());
        assert!(err <= 1e-12 * scale, "err {err} scale {scale}");
    }

    #[test]
    fn increments_match_differenced_maps() {
        let pc = small().with_eps(0.3);
        let cfg = pc.solver().unwrap();
        let z = FieldHistory::zero(cfg, 1.0);
        let (p0, f0) = solution_map(&z, &z, &pc.data, cfg).unwrap();
        let (p1, f1) = solution_map(&p0, &f0, &pc.data, cfg).unwrap();
        let (p2, f2) = solution_map(&p1, &f1, &pc.data, cfg).unwrap();
        let (dp1, df1) = apply_increment(&p0, &f0, &p0, &f0, cfg).unwrap();
        assert!(dp1.max_abs_diff(&p1.difference(&p0).unwrap()).unwrap() < 1e-14);
        let (dp, df) = (p1.difference(&p0).unwrap(), f1.difference(&f0).unwrap());
        let (dp2, df2) = apply_increment(&p1, &f1, &dp, &df, cfg).unwrap();
        let scale = dp2.max_abs_diff(&z).unwrap();
        assert!(scale > 0.0);
        assert!(dp2.max_abs_diff(&p2.difference(&p1).unwrap()).unwrap() < 1e-10 * scale);
        assert!(df2.max_abs_diff(&f2.difference(&f1).unwrap()).unwrap() < 1e-10 * scale);
        assert!(df1.max_abs_diff(&f1.difference(&f0).unwrap()).unwrap() < 1e-14);
    }

    #[test]
    fn mismatched_histories_are_rejected() {
        let pc = small();
        let cfg = pc.solver().unwrap();
        let other = PicardConfig { t_max: 5.0, ..pc }.solver().unwrap();
        let z = FieldHistory::zero(cfg, 1.0);
        let h = FieldHistory::from_levels(other, 1.0, vec![Vec::new(); other.steps() + 5]).unwrap();
        assert!(matches!(solution_map(&h, &z, &pc.data, cfg), Err(Error::Mismatch(_))));
    }
}
