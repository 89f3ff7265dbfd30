use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::systems::{Component, SourceModel};
use super::{boundary_margin, DiscreteLaplacian, SolverConfig};
use crate::error::{Error, Result};
use crate::radial::grid::RadialGrid;
use crate::radial::stencil::{self, Parity};
use crate::radial::window::{time_derivative_into, DerivativeWindow, RadialState};

/// Everything needed to continue a run: the newest level and the backward
/// velocity `(w^n - w^{n-1}) / dt` per component.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub grid: RadialGrid,
    pub dt: f64,
    pub t: f64,
    pub level: i64,
    pub names: Vec<String>,
    pub w: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

/// Receives every time level once five levels around it exist.
pub trait Observer {
    fn observe(&mut self, frame: &Frame<'_>) -> Result<()>;
}

/// Borrowed view of all components around one time level.
pub struct Frame<'a> {
    /// Level index of the center (`t = t0 + step * dt`).
    pub step: i64,
    pub t: f64,
    pub dt: f64,
    pub grid: RadialGrid,
    /// `true` for the final observed level of the run.
    pub last: bool,
    pub comps: &'a [Component],
    levels: Vec<[&'a [f64]; 5]>,
    sources: Vec<&'a [f64]>,
    support: usize,
}

impl<'a> Frame<'a> {
    /// A frame over stored levels, for replaying a finished run.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_parts(
        step: i64,
        t: f64,
        dt: f64,
        grid: RadialGrid,
        last: bool,
        comps: &'a [Component],
        levels: Vec<[&'a [f64]; 5]>,
        sources: Vec<&'a [f64]>,
        support: usize,
    ) -> Self {
        Self {
            step,
            t,
            dt,
            grid,
            last,
            comps,
            levels,
            sources,
            support,
        }
    }

    pub fn component(&self, name: &str) -> Option<usize> {
        self.comps.iter().position(|c| c.name == name)
    }

    pub fn len(&self) -> usize {
        self.comps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.comps.is_empty()
    }

    /// Amplitude at the center level.
    pub fn w(&self, c: usize) -> &'a [f64] {
        self.levels[c][2]
    }

    /// Amplitude at `center + offset`, `|offset| <= 2`.
    pub fn level(&self, c: usize, offset: i32) -> &'a [f64] {
        self.levels[c][(offset + 2) as usize]
    }

    /// Source `f_c` at the center level.
    pub fn source(&self, c: usize) -> &'a [f64] {
        self.sources[c]
    }

    pub fn window(&self, c: usize) -> DerivativeWindow<'a> {
        DerivativeWindow {
            grid: self.grid,
            t: self.t,
            dt: self.dt,
            levels: self.levels[c],
        }
    }

    /// Upper bound (exclusive) on the nodes where any component is non-zero,
    /// padded for stencils.
    pub fn support(&self) -> usize {
        (self.support + 4).min(self.grid.nr())
    }

    /// Fourth-order centered `d_t w` at the center.
    pub fn wt(&self, c: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.nr()];
        time_derivative_into(&self.levels[c], self.dt, 1, self.support(), &mut out);
        out
    }

    /// Fourth-order `d_r w` at the center.
    pub fn wr(&self, c: usize) -> Vec<f64> {
        stencil::d1(self.w(c), Parity::Even, self.grid.dr())
    }

    /// The center level as a state with centered time derivative.
    pub fn state(&self, c: usize) -> RadialState {
        RadialState {
            grid: self.grid,
            t: self.t,
            w: self.w(c).to_vec(),
            wt: self.wt(c),
        }
    }
}

/// Leapfrog integrator for a [`SourceModel`].
pub struct Evolution<S: SourceModel> {
    cfg: SolverConfig,
    sys: S,
    comps: Vec<Component>,
    sourced: Vec<bool>,
    confined: bool,
    lap: DiscreteLaplacian,
    level: i64,
    w: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    ring_w: Vec<Vec<Vec<f64>>>,
    ring_f: Vec<Vec<Vec<f64>>>,
    ring_start: i64,
    support: usize,
    margin: usize,
    scratch: Vec<f64>,
    last_observed: Option<i64>,
}

const RING: usize = 5;

fn slot(level: i64) -> usize {
    level.rem_euclid(RING as i64) as usize
}

impl<S: SourceModel> Evolution<S> {
    /// Sets up levels `-2..=1` from data at `t0` (Taylor start forward and
    /// backward, then one backward leapfrog step).
    pub fn start(cfg: SolverConfig, sys: S, data: &[RadialState]) -> Result<Self> {
        cfg.validate()?;
        let mut ev = Self::empty(cfg, sys)?;
        if data.len() != ev.comps.len() {
            return Err(Error::Mismatch("data and component counts differ"));
        }
        for d in data {
            if d.grid != cfg.grid {
                return Err(Error::Mismatch("data grid differs from solver grid"));
            }
            d.validate()?;
        }
        let nr = cfg.grid.nr();
        let dt = cfg.dt();
        let w0: Vec<Vec<f64>> = data.iter().map(|d| d.w.clone()).collect();
        ev.support = data
            .iter()
            .map(|d| stencil::active_len(&d.w).max(stencil::active_len(&d.wt)))
            .max()
            .unwrap_or(0);
        ev.check_boundary(0)?;
        let upto = ev.upto();

        let f0 = ev.eval_sources(cfg.time(0), &w0, upto);
        let mut acc = vec![vec![0.0; nr]; w0.len()];
        for c in 0..w0.len() {
            ev.accel(c, &w0[c], &f0[c], upto, &mut acc[c]);
        }
        let mut w1 = w0.clone();
        let mut wm1 = w0.clone();
        for c in 0..w0.len() {
            for i in 0..upto {
                let half = 0.5 * dt * dt * acc[c][i];
                w1[c][i] = w0[c][i] + dt * data[c].wt[i] + half;
                wm1[c][i] = w0[c][i] - dt * data[c].wt[i] + half;
            }
        }
        let fm1 = ev.eval_sources(cfg.time(-1), &wm1, upto);
        let mut wm2 = wm1.clone();
        for c in 0..w0.len() {
            ev.accel(c, &wm1[c], &fm1[c], upto, &mut acc[c]);
            for i in 0..upto {
                wm2[c][i] = 2.0 * wm1[c][i] - w0[c][i] + dt * dt * acc[c][i];
            }
        }
        let fm2 = ev.eval_sources(cfg.time(-2), &wm2, upto);
        for c in 0..w0.len() {
            ev.ring_w[c][slot(-2)] = wm2[c].clone();
            ev.ring_w[c][slot(-1)] = wm1[c].clone();
            ev.ring_w[c][slot(0)] = w0[c].clone();
            ev.ring_w[c][slot(1)] = w1[c].clone();
            ev.ring_f[c][slot(-2)] = fm2[c].clone();
            ev.ring_f[c][slot(-1)] = fm1[c].clone();
            ev.ring_f[c][slot(0)] = f0[c].clone();
            ev.v[c] = (0..nr).map(|i| (w1[c][i] - w0[c][i]) / dt).collect();
        }
        ev.w = w1;
        ev.level = 1;
        ev.ring_start = -2;
        ev.refresh_support();
        ev.check_boundary(1)?;
        Ok(ev)
    }

    /// Continues from a saved state; observation resumes two levels later.
    pub fn resume(cfg: SolverConfig, sys: S, state: SolverState) -> Result<Self> {
        cfg.validate()?;
        let mut ev = Self::empty(cfg, sys)?;
        if state.grid != cfg.grid || state.dt != cfg.dt() {
            return Err(Error::Mismatch("checkpoint grid or step differs from configuration"));
        }
        if state.w.len() != ev.comps.len() || state.v.len() != ev.comps.len() {
            return Err(Error::Mismatch("checkpoint component count differs"));
        }
        for (c, name) in state.names.iter().enumerate() {
            if *name != ev.comps[c].name {
                return Err(Error::Mismatch("checkpoint component names differ"));
            }
        }
        ev.level = state.level;
        ev.ring_start = state.level;
        for c in 0..ev.comps.len() {
            cfg.grid.check_len(&state.w[c])?;
            cfg.grid.check_len(&state.v[c])?;
            ev.ring_w[c][slot(state.level)] = state.w[c].clone();
        }
        ev.w = state.w;
        ev.v = state.v;
        ev.refresh_support();
        Ok(ev)
    }

    fn empty(cfg: SolverConfig, sys: S) -> Result<Self> {
        let comps = sys.components();
        let nr = cfg.grid.nr();
        let sourced = (0..comps.len()).map(|c| sys.has_source(c)).collect();
        let k = comps.len();
        let confined = sys.confined();
        Ok(Self {
            lap: DiscreteLaplacian::new(&cfg.grid),
            margin: boundary_margin(&cfg.grid),
            cfg,
            sys,
            sourced,
            confined,
            level: 0,
            w: vec![vec![0.0; nr]; k],
            v: vec![vec![0.0; nr]; k],
            ring_w: vec![vec![vec![0.0; nr]; RING]; k],
            ring_f: vec![vec![vec![0.0; nr]; RING]; k],
            ring_start: 0,
            support: 0,
            scratch: vec![0.0; nr],
            last_observed: None,
            comps,
        })
    }

    pub fn components(&self) -> &[Component] {
        &self.comps
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn level(&self) -> i64 {
        self.level
    }

    pub fn time(&self) -> f64 {
        self.cfg.time(self.level)
    }

    /// Current amplitude of component `c`.
    pub fn current(&self, c: usize) -> &[f64] {
        &self.w[c]
    }

    pub fn state(&self) -> SolverState {
        SolverState {
            grid: self.cfg.grid,
            dt: self.cfg.dt(),
            t: self.time(),
            level: self.level,
            names: self.comps.iter().map(|c| c.name.clone()).collect(),
            w: self.w.clone(),
            v: self.v.clone(),
        }
    }

    fn upto(&self) -> usize {
        if !self.confined {
            return self.cfg.grid.nr();
        }
        (self.support + 3).min(self.cfg.grid.nr())
    }

    fn refresh_support(&mut self) {
        let nr = self.cfg.grid.nr();
        let from = (self.support + 4).min(nr);
        let mut s = 0;
        for c in 0..self.w.len() {
            let w = &self.w[c];
            let mut a = from;
            while a > 0 && w[a - 1] == 0.0 {
                a -= 1;
            }
            if a == from && from < nr {
                a = stencil::active_len(w);
            }
            s = s.max(a);
        }
        self.support = self.support.max(s);
    }

    fn check_boundary(&self, step: i64) -> Result<()> {
        if self.support + self.margin > self.cfg.grid.nr() {
            return Err(Error::BoundaryReached {
                step: step.max(0) as usize,
            });
        }
        Ok(())
    }

    fn eval_sources(&mut self, t: f64, w: &[Vec<f64>], upto: usize) -> Vec<Vec<f64>> {
        let nr = self.cfg.grid.nr();
        let mut out = vec![vec![0.0; nr]; w.len()];
        let views: Vec<&[f64]> = w.iter().map(|x| x.as_slice()).collect();
        self.sys.sources(t, &views, upto, &self.lap, &mut out);
        out
    }

    /// `Lap_h w - m^2 w + f` on `0..upto`.
    fn accel(&mut self, c: usize, w: &[f64], f: &[f64], upto: usize, out: &mut [f64]) {
        self.lap.apply(w, upto, out);
        let m2 = self.comps[c].mass * self.comps[c].mass;
        for i in 0..upto {
            out[i] += f[i] - m2 * w[i];
        }
    }

    /// Advances one level.
    pub fn advance(&mut self) -> Result<()> {
        let dt = self.cfg.dt();
        let upto = self.upto();
        let t = self.time();
        let k = self.comps.len();
        let cur = slot(self.level);
        {
            let views: Vec<&[f64]> = self.w.iter().map(|x| x.as_slice()).collect();
            let mut fs: Vec<Vec<f64>> = (0..k).map(|c| core::mem::take(&mut self.ring_f[c][cur])).collect();
            self.sys.sources(t, &views, upto, &self.lap, &mut fs);
            for (c, f) in fs.into_iter().enumerate() {
                self.ring_f[c][cur] = f;
            }
        }
        let step = (self.level + 1).max(0) as usize;
        for c in 0..k {
            let mut acc = core::mem::take(&mut self.scratch);
            self.lap.apply(&self.w[c], upto, &mut acc);
            let m2 = self.comps[c].mass * self.comps[c].mass;
            let f = &self.ring_f[c][cur];
            let w = &mut self.w[c];
            let v = &mut self.v[c];
            let sourced = self.sourced[c];
            for i in 0..upto {
                let mut a = acc[i] - m2 * w[i];
                if sourced {
                    a += f[i];
                }
                v[i] += dt * a;
                w[i] += dt * v[i];
                if !w[i].is_finite() {
                    self.scratch = acc;
                    return Err(Error::Divergence { step });
                }
            }
            self.scratch = acc;
        }
        self.level += 1;
        let next = slot(self.level);
        for c in 0..k {
            let (ring, w) = (&mut self.ring_w[c][next], &self.w[c]);
            ring[..upto].copy_from_slice(&w[..upto]);
            for x in &mut ring[upto..] {
                if *x == 0.0 {
                    break;
                }
                *x = 0.0;
            }
        }
        self.refresh_support();
        self.check_boundary(self.level)?;
        Ok(())
    }

    /// Advances without observing until `level` is the newest level.
    pub fn advance_to(&mut self, level: i64) -> Result<()> {
        while self.level < level {
            self.advance()?;
        }
        Ok(())
    }

    fn frame(&self, center: i64, last: bool) -> Frame<'_> {
        let levels = (0..self.comps.len())
            .map(|c| core::array::from_fn(|j| self.ring_w[c][slot(center - 2 + j as i64)].as_slice()))
            .collect();
        let sources = (0..self.comps.len())
            .map(|c| self.ring_f[c][slot(center)].as_slice())
            .collect();
        Frame {
            step: center,
            t: self.cfg.time(center),
            dt: self.cfg.dt(),
            grid: self.cfg.grid,
            last,
            comps: &self.comps,
            levels,
            sources,
            support: self.support,
        }
    }

    /// Runs until the level closest to `t_max` has been observed.
    pub fn run(&mut self, observers: &mut [&mut dyn Observer]) -> Result<()> {
        let last = self.cfg.steps() as i64;
        loop {
            let c = self.level - 2;
            if c - 2 >= self.ring_start && self.last_observed.is_none_or(|l| c > l) {
                if !observers.is_empty() {
                    let frame = self.frame(c, c >= last);
                    for o in observers.iter_mut() {
                        o.observe(&frame)?;
                    }
                }
                self.last_observed = Some(c);
            }
            if c >= last {
                return Ok(());
            }
            self.advance()?;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::systems::FreeSystem;

    fn gaussian_state(grid: RadialGrid, amp: f64) -> RadialState {
        RadialState {
            grid,
            t: 0.0,
            w: grid.sample(|r| amp * libm::exp(-r * r)),
            wt: vec![0.0; grid.nr()],
        }
    }

    struct Count(usize, f64);
    impl Observer for Count {
        fn observe(&mut self, f: &Frame<'_>) -> Result<()> {
            self.0 += 1;
            self.1 = f.t;
            Ok(())
        }
    }

    #[test]
    fn observes_every_level_from_t0() {
        let grid = RadialGrid::new(800, 0.05).unwrap();
        let cfg = SolverConfig::new(grid, 0.0, 2.0);
        let sys = FreeSystem::new(vec![Component::new("u", 1.0)]);
        let mut ev = Evolution::start(cfg, sys, &[gaussian_state(grid, 1.0)]).unwrap();
        let mut obs = Count(0, 0.0);
        ev.run(&mut [&mut obs]).unwrap();
        assert_eq!(obs.0, cfg.steps() + 1);
        assert!((obs.1 - cfg.time(cfg.steps() as i64)).abs() < 1e-12);
    }

    #[test]
    fn resume_is_bit_exact() {
        let grid = RadialGrid::new(800, 0.05).unwrap();
        let cfg = SolverConfig::new(grid, 0.0, 3.0);
        let sys = || FreeSystem::new(vec![Component::new("u", 1.0), Component::new("n", 0.0)]);
        let data = [gaussian_state(grid, 1.0), gaussian_state(grid, 0.5)];
        let mut a = Evolution::start(cfg, sys(), &data).unwrap();
        a.run(&mut []).unwrap();
        let mut b = Evolution::start(cfg, sys(), &data).unwrap();
        b.advance_to(20).unwrap();
        let mut c = Evolution::resume(cfg, sys(), b.state()).unwrap();
        c.run(&mut []).unwrap();
        assert_eq!(a.state(), c.state());
    }

    #[test]
    fn boundary_touch_is_reported() {
        let grid = RadialGrid::new(200, 0.05).unwrap();
        let cfg = SolverConfig::new(grid, 0.0, 20.0);
        let sys = FreeSystem::new(vec![Component::new("u", 0.0)]);
        let err = Evolution::start(cfg, sys, &[gaussian_state(grid, 1.0)])
            .and_then(|mut e| e.run(&mut []))
            .unwrap_err();
        assert!(matches!(err, Error::BoundaryReached { .. }));
    }
}
