use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::driver::{Evolution, Frame, Observer, SolverState};
use super::systems::{KgzDirect, KgzReformulated, SourceModel};
use super::SolverConfig;
use crate::error::{Error, Result};
use crate::radial::data::{make_initial_state, InitialDataSpec};
use crate::radial::stencil::laplacian4;
use crate::radial::window::RadialState;

/// Stored fields at one time, truncated to their support.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: i64,
    pub t: f64,
    /// `(w, d_t w)` per recorded component.
    pub fields: Vec<(Vec<f64>, Vec<f64>)>,
}

impl Snapshot {
    /// Amplitude of field `k` at node `i` (zero past the stored support).
    #[inline]
    pub fn w(&self, k: usize, i: usize) -> f64 {
        self.fields[k].0.get(i).copied().unwrap_or(0.0)
    }

    #[inline]
    pub fn wt(&self, k: usize, i: usize) -> f64 {
        self.fields[k].1.get(i).copied().unwrap_or(0.0)
    }
}

/// Observer that keeps every `stride`-th level (and the last one).
#[derive(Debug, Clone)]
pub struct TrajectoryRecorder {
    pub stride: usize,
    /// Recorded components (indices into the frame), all when `None`.
    pub select: Option<Vec<usize>>,
    pub snapshots: Vec<Snapshot>,
}

impl TrajectoryRecorder {
    pub fn new(stride: usize) -> Self {
        Self {
            stride: stride.max(1),
            select: None,
            snapshots: Vec::new(),
        }
    }
}

impl Observer for TrajectoryRecorder {
    fn observe(&mut self, frame: &Frame<'_>) -> Result<()> {
        if frame.step % self.stride as i64 != 0 && !frame.last {
            return Ok(());
        }
        let n = frame.support();
        let comps: Vec<usize> = match &self.select {
            Some(s) => s.clone(),
            None => (0..frame.len()).collect(),
        };
        let fields = comps
            .iter()
            .map(|&c| {
                let mut wt = frame.wt(c);
                wt.truncate(n);
                (frame.w(c)[..n].to_vec(), wt)
            })
            .collect();
        self.snapshots.push(Snapshot {
            step: frame.step,
            t: frame.t,
            fields,
        });
        Ok(())
    }
}

/// Output of a coupled solve.
#[derive(Debug, Clone)]
pub struct KgzTrajectory {
    pub config: SolverConfig,
    pub names: Vec<String>,
    pub snapshots: Vec<Snapshot>,
    pub final_state: SolverState,
    /// Truncated smallness functional of the data (`n_trunc = 1`).
    pub eps_label: f64,
    /// Formal accuracy of the scheme in `dt` and `dr`.
    pub scheme_order: u8,
}

impl KgzTrajectory {
    pub fn component(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    /// Full-length state of component `k` at snapshot `j`.
    pub fn state(&self, j: usize, k: usize) -> RadialState {
        let g = self.config.grid;
        let s = &self.snapshots[j];
        let mut w = vec![0.0; g.nr()];
        let mut wt = vec![0.0; g.nr()];
        let (a, b) = &s.fields[k];
        w[..a.len()].copy_from_slice(a);
        wt[..b.len()].copy_from_slice(b);
        RadialState { grid: g, t: s.t, w, wt }
    }
}

pub(crate) fn solve_system<S: SourceModel>(
    config: SolverConfig,
    sys: S,
    data: &[RadialState],
    eps_label: f64,
    observers: &mut [&mut dyn Observer],
) -> Result<KgzTrajectory> {
    let mut ev = Evolution::start(config, sys, data)?;
    let mut rec = TrajectoryRecorder::new(config.snapshot_stride);
    {
        let mut all: Vec<&mut dyn Observer> = Vec::with_capacity(observers.len() + 1);
        all.push(&mut rec);
        for o in observers.iter_mut() {
            all.push(&mut **o);
        }
        ev.run(&mut all)?;
    }
    Ok(KgzTrajectory {
        config,
        names: ev.components().iter().map(|c| c.name.clone()).collect(),
        snapshots: rec.snapshots,
        final_state: ev.state(),
        eps_label,
        scheme_order: 2,
    })
}

/// Solves the coupled system for `(e, n)` with `f_n = (1/r) D_rr (r e^2)`.
pub fn solve_kgz(
    config: SolverConfig,
    data: &InitialDataSpec,
    observers: &mut [&mut dyn Observer],
) -> Result<KgzTrajectory> {
    config.validate()?;
    config.check_causal(data.support_radius())?;
    let [e, n, _, _] = make_initial_state(data, &config.grid, config.t0)?;
    let eps = data.smallness(&config.grid, 1)?;
    solve_system(config, KgzDirect::default(), &[e, n], eps, observers)
}

/// Solves the divergence-form system for `(e, n0, nD)`.
pub fn solve_kgz_reformulated(
    config: SolverConfig,
    data: &InitialDataSpec,
    observers: &mut [&mut dyn Observer],
) -> Result<KgzTrajectory> {
    config.validate()?;
    config.check_causal(data.support_radius())?;
    let [e, _, n0, nd] = make_initial_state(data, &config.grid, config.t0)?;
    let eps = data.smallness(&config.grid, 1)?;
    solve_system(config, KgzReformulated::default(), &[e, n0, nd], eps, observers)
}

/// `n = n0 + Lap nD` with the fourth-order Laplacian.
pub fn recompose_n(n0: &RadialState, nd: &RadialState) -> Result<RadialState> {
    if n0.grid != nd.grid {
        return Err(Error::Mismatch("component grids differ"));
    }
    if n0.t != nd.t {
        return Err(Error::Mismatch("component times differ"));
    }
    let dr = n0.grid.dr();
    let lw = laplacian4(&nd.w, dr);
    let lwt = laplacian4(&nd.wt, dr);
    Ok(RadialState {
        grid: n0.grid,
        t: n0.t,
        w: n0.w.iter().zip(&lw).map(|(a, b)| a + b).collect(),
        wt: n0.wt.iter().zip(&lwt).map(|(a, b)| a + b).collect(),
    })
}
