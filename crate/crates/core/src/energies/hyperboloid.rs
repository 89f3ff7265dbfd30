use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::evolve::{Frame, KgzTrajectory, Observer, SolverConfig};
use crate::math;
use crate::radial::grid::RadialGrid;
use crate::radial::stencil::{self, Parity};

/// Largest spacing between stored snapshots accepted for cubic
/// interpolation in time.
pub const MAX_SNAPSHOT_GAP: f64 = 0.5;

/// A field sampled on `H_s = {t^2 = r^2 + s^2}` at the grid nodes inside the
/// cone `r <= t - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperboloidSlice {
    pub s: f64,
    pub dr: f64,
    pub r: Vec<f64>,
    /// `t = sqrt(s^2 + r^2)` per node.
    pub t: Vec<f64>,
    pub phi: Vec<f64>,
    pub phi_t: Vec<f64>,
    pub phi_r: Vec<f64>,
    /// Source samples, empty when not recorded.
    pub source: Vec<f64>,
}

impl HyperboloidSlice {
    /// Number of nodes `r_i <= (s^2 - 1) / 2` (equivalently `r_i <= t - 1`),
    /// checking that the slice stays below `t_end`.
    pub fn cone_nodes(grid: &RadialGrid, s: f64, t_end: f64) -> Result<usize> {
        if !(s >= 2.0) {
            return Err(Error::ConeSupport("hyperboloids start at s = 2"));
        }
        let r_max = 0.5 * (s * s - 1.0);
        let n = (0..grid.nr()).take_while(|&i| grid.r(i) <= r_max).count();
        if n == grid.nr() {
            return Err(Error::Interpolation("hyperboloid leaves the grid"));
        }
        let rl = grid.r(n.saturating_sub(1));
        let t_last = math::sqrt(s * s + rl * rl);
        if n > 0 && t_last > t_end + 1e-12 {
            return Err(Error::Interpolation("hyperboloid leaves the computed time range"));
        }
        Ok(n)
    }

    fn empty(grid: &RadialGrid, s: f64, n: usize, with_source: bool) -> Self {
        let r: Vec<f64> = (0..n).map(|i| grid.r(i)).collect();
        let t = r.iter().map(|r| math::sqrt(s * s + r * r)).collect();
        Self {
            s,
            dr: grid.dr(),
            r,
            t,
            phi: vec![0.0; n],
            phi_t: vec![0.0; n],
            phi_r: vec![0.0; n],
            source: if with_source { vec![0.0; n] } else { Vec::new() },
        }
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// `max_i |t_i^2 - r_i^2 - s^2|`.
    pub fn shell_defect(&self) -> f64 {
        self.r
            .iter()
            .zip(&self.t)
            .map(|(r, t)| (t * t - r * r - self.s * self.s).abs())
            .fold(0.0, f64::max)
    }

    /// `int_{H_s} (g_i)` for per-node densities `g`.
    pub fn integrate(&self, g: impl Fn(usize) -> f64) -> f64 {
        let mut acc = 0.0;
        for (i, r) in self.r.iter().enumerate() {
            acc += r * r * g(i);
        }
        math::FOUR_PI * self.dr * acc
    }
}

/// `||v||_{L^2_f(H_s)}` of per-node values on a slice.
pub fn slice_l2(slice: &HyperboloidSlice, values: &[f64]) -> f64 {
    math::sqrt(slice.integrate(|i| values[i] * values[i]))
}

/// Hyperboloidal energy of a radial slice by expression `1`, `2` or `3`:
///
/// 1. `phi_t^2 + phi_r^2 + 2 (r/t) phi_t phi_r + m^2 phi^2`
/// 2. `((s/t) phi_t)^2 + ((r/t) phi_t + phi_r)^2 + m^2 phi^2`
/// 3. `(phi_t + (r/t) phi_r)^2 + ((s/t) phi_r)^2 + m^2 phi^2`
pub fn hyperboloidal_energy(slice: &HyperboloidSlice, mass: f64, expression: u8) -> Result<f64> {
    let m2 = mass * mass;
    let s = slice.s;
    let dens = |i: usize| -> f64 {
        let (t, r) = (slice.t[i], slice.r[i]);
        let (p, pt, pr) = (slice.phi[i], slice.phi_t[i], slice.phi_r[i]);
        let rt = r / t;
        let st = s / t;
        let core = match expression {
            1 => pt * pt + pr * pr + 2.0 * rt * pt * pr,
            2 => st * st * pt * pt + (rt * pt + pr) * (rt * pt + pr),
            _ => (pt + rt * pr) * (pt + rt * pr) + st * st * pr * pr,
        };
        core + m2 * p * p
    };
    if !(1..=3).contains(&expression) {
        return Err(Error::Domain("hyperboloidal energy expression must be 1, 2 or 3"));
    }
    Ok(slice.integrate(dens))
}

/// Lagrange weights for nodes `ts` at `t`.
fn lagrange4(ts: [f64; 4], t: f64) -> [f64; 4] {
    core::array::from_fn(|j| {
        let mut l = 1.0;
        for (k, tk) in ts.iter().enumerate() {
            if k != j {
                l *= (t - tk) / (ts[j] - tk);
            }
        }
        l
    })
}

/// Samples component `comp` of a stored trajectory on `H_s` by cubic
/// interpolation in time between snapshots.
pub fn interpolate_hyperboloid(traj: &KgzTrajectory, comp: usize, s: f64) -> Result<HyperboloidSlice> {
    let snaps = &traj.snapshots;
    if snaps.len() < 4 {
        return Err(Error::InsufficientData("need at least four snapshots"));
    }
    if comp >= traj.names.len() {
        return Err(Error::Mismatch("component index out of range"));
    }
    let grid = traj.config.grid;
    let t_first = snaps[0].t;
    let t_last = snaps[snaps.len() - 1].t;
    let n = HyperboloidSlice::cone_nodes(&grid, s, t_last)?;
    if n > 0 && s < t_first - 1e-12 {
        return Err(Error::Interpolation("hyperboloid starts before the first snapshot"));
    }
    let mut slice = HyperboloidSlice::empty(&grid, s, n, false);
    let mut derivs: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for i in 0..n {
        let t = slice.t[i];
        let j = snaps.partition_point(|sn| sn.t <= t).saturating_sub(1);
        let j0 = j.saturating_sub(1).min(snaps.len() - 4);
        let ts: [f64; 4] = core::array::from_fn(|k| snaps[j0 + k].t);
        if ts[3] - ts[0] > 3.0 * MAX_SNAPSHOT_GAP {
            return Err(Error::Interpolation("snapshots too sparse for cubic interpolation"));
        }
        let l = lagrange4(ts, t);
        derivs.retain(|k, _| *k >= j0);
        let (mut p, mut pt, mut pr) = (0.0, 0.0, 0.0);
        for k in 0..4 {
            let sn = &snaps[j0 + k];
            let d = derivs
                .entry(j0 + k)
                .or_insert_with(|| stencil::d1(&sn.fields[comp].0, Parity::Even, grid.dr()));
            p += l[k] * sn.w(comp, i);
            pt += l[k] * sn.wt(comp, i);
            pr += l[k] * d.get(i).copied().unwrap_or(0.0);
        }
        slice.phi[i] = p;
        slice.phi_t[i] = pt;
        slice.phi_r[i] = pr;
    }
    Ok(slice)
}

struct Level {
    step: i64,
    w: Vec<f64>,
    wt: Vec<f64>,
    wr: Vec<f64>,
    f: Vec<f64>,
}

/// Observer that fills hyperboloid slices while a run proceeds, by cubic
/// interpolation over four consecutive levels.
pub struct HyperboloidSampler {
    comp: usize,
    t0: f64,
    dt: f64,
    steps: i64,
    with_source: bool,
    nmax: usize,
    /// `(t, slice, node)` sorted by `t`.
    targets: Vec<(f64, u32, u32)>,
    next: usize,
    hist: VecDeque<Level>,
    pub slices: Vec<HyperboloidSlice>,
}

impl HyperboloidSampler {
    pub fn new(cfg: &SolverConfig, comp: usize, s_values: &[f64], with_source: bool) -> Result<Self> {
        let grid = cfg.grid;
        let steps = cfg.steps() as i64;
        if steps < 3 {
            return Err(Error::InsufficientData("run too short for cubic interpolation"));
        }
        let t_end = cfg.time(steps);
        let mut slices = Vec::with_capacity(s_values.len());
        let mut targets = Vec::new();
        let mut nmax = 0;
        for (k, &s) in s_values.iter().enumerate() {
            let n = HyperboloidSlice::cone_nodes(&grid, s, t_end)?;
            if n > 0 && s < cfg.t0 {
                return Err(Error::Interpolation("hyperboloid starts before the initial time"));
            }
            let sl = HyperboloidSlice::empty(&grid, s, n, with_source);
            for (i, t) in sl.t.iter().enumerate() {
                targets.push((*t, k as u32, i as u32));
            }
            nmax = nmax.max(n);
            slices.push(sl);
        }
        targets.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self {
            comp,
            t0: cfg.t0,
            dt: cfg.dt(),
            steps,
            with_source,
            nmax,
            targets,
            next: 0,
            hist: VecDeque::with_capacity(5),
            slices,
        })
    }

    pub fn is_complete(&self) -> bool {
        self.next == self.targets.len()
    }

    fn first_level(&self, t: f64) -> i64 {
        let j = libm::floor((t - self.t0) / self.dt + 1e-9) as i64;
        (j - 1).clamp(0, self.steps - 3)
    }
}

impl Observer for HyperboloidSampler {
    fn observe(&mut self, frame: &Frame<'_>) -> Result<()> {
        if self.next == self.targets.len() {
            return Ok(());
        }
        let c = self.comp;
        let n = self.nmax;
        let w = frame.w(c);
        let mut wt = frame.wt(c);
        wt.truncate(n);
        let head = (n + 2).min(w.len());
        let mut wr = stencil::d1(&w[..head], Parity::Even, frame.grid.dr());
        wr.truncate(n);
        let f = if self.with_source {
            frame.source(c)[..n].to_vec()
        } else {
            Vec::new()
        };
        self.hist.push_back(Level {
            step: frame.step,
            w: w[..n].to_vec(),
            wt,
            wr,
            f,
        });
        if self.hist.len() > 4 {
            self.hist.pop_front();
        }
        if self.hist.len() < 4 {
            if frame.last {
                return Err(Error::InsufficientData("run too short for cubic interpolation"));
            }
            return Ok(());
        }
        let newest = frame.step;
        while self.next < self.targets.len() {
            let (t, k, i) = self.targets[self.next];
            let mut j0 = self.first_level(t);
            if frame.last {
                j0 = j0.min(newest - 3);
            }
            if j0 + 3 > newest {
                break;
            }
            if j0 != self.hist[0].step {
                return Err(Error::Interpolation("hyperboloid sampler missed a level"));
            }
            let ts: [f64; 4] = core::array::from_fn(|m| self.t0 + (j0 + m as i64) as f64 * self.dt);
            let l = lagrange4(ts, t);
            let (k, i) = (k as usize, i as usize);
            let sl = &mut self.slices[k];
            let mut acc = [0.0; 4];
            for (m, lv) in self.hist.iter().enumerate() {
                acc[0] += l[m] * lv.w[i];
                acc[1] += l[m] * lv.wt[i];
                acc[2] += l[m] * lv.wr[i];
                if self.with_source {
                    acc[3] += l[m] * lv.f[i];
                }
            }
            sl.phi[i] = acc[0];
            sl.phi_t[i] = acc[1];
            sl.phi_r[i] = acc[2];
            if self.with_source {
                sl.source[i] = acc[3];
            }
            self.next += 1;
        }
        if frame.last && self.next < self.targets.len() {
            return Err(Error::Interpolation("hyperboloid extends past the final time"));
        }
        Ok(())
    }
}

/// One row of the hyperboloidal energy estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperboloidalEstimate {
    pub s: f64,
    /// `E~_m(s)^{1/2}`.
    pub energy_half: f64,
    /// `E~_m(s0)^{1/2} + int_{s0}^{s} ||h||_{L^2_f(H_s')} ds'`.
    pub rhs: f64,
}

impl HyperboloidalEstimate {
    pub fn slack(&self) -> f64 {
        self.rhs - self.energy_half
    }
}

/// Evaluates both sides of the hyperboloidal energy estimate along slices
/// ordered by increasing `s` (source integral by the trapezoid rule).
pub fn hyperboloidal_estimate_check(slices: &[HyperboloidSlice], mass: f64) -> Result<Vec<HyperboloidalEstimate>> {
    let mut out = Vec::with_capacity(slices.len());
    let mut integral = 0.0;
    let mut prev: Option<(f64, f64)> = None;
    let mut e0 = None;
    for sl in slices {
        let e = math::sqrt(hyperboloidal_energy(sl, mass, 1)?);
        let h = if sl.source.is_empty() {
            0.0
        } else {
            slice_l2(sl, &sl.source)
        };
        if let Some((sp, hp)) = prev {
            if !(sl.s > sp) {
                return Err(Error::Mismatch("slices must have increasing s"));
            }
            integral += 0.5 * (sl.s - sp) * (h + hp);
        }
        prev = Some((sl.s, h));
        let e0 = *e0.get_or_insert(e);
        out.push(HyperboloidalEstimate {
            s: sl.s,
            energy_half: e,
            rhs: e0 + integral,
        });
    }
    Ok(out)
}
