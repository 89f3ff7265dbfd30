use alloc::vec;
use alloc::vec::Vec;

use crate::energies::{slice_l2, HyperboloidSampler, HyperboloidSlice};
use crate::error::{config_err, Error, Result};
use crate::evolve::{Component, Evolution, Frame, FreeSystem, Observer, SolverConfig};
use crate::math;
use crate::radial::data::{DataFamily, InitialDataSpec};
use crate::radial::window::RadialState;

/// Largest relative increase of an integral over its last decade that still
/// counts as bounded.
pub const BOUNDED_INCREASE: f64 = 0.05;
/// Largest RMS residual of the logarithmic fit, relative to the fitted range.
pub const LOG_FIT_RMS: f64 = 0.05;
/// Required separation of `c1` from zero in standard errors.
pub const LOG_SIGMAS: f64 = 3.0;
/// Fits use abscissae with coordinate time at least this.
pub const FIT_T_MIN: f64 = 5.0;

/// Quadratic nonlinearities `Q(u, v)` of a wave `u` and a Klein-Gordon
/// field `v`. Products of derivatives use `|d w| = (w_t^2 + w_r^2)^{1/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum QKind {
    DvSq,
    VSq,
    VDv,
    DuV,
    UV,
    DuDv,
    UDv,
    DuSq,
    UDu,
    USq,
    /// `d_alpha u d^alpha v = -u_t v_t + u_r v_r`
    NullUV,
    /// `d_alpha u d^alpha u`
    NullUU,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Growth {
    Bounded,
    Logarithmic,
    /// Neither test passed.
    Unclassified,
}

impl Growth {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Bounded => "bounded",
            Self::Logarithmic => "logarithmic",
            Self::Unclassified => "unclassified",
        }
    }
}

impl QKind {
    pub const ALL: [QKind; 12] = [
        Self::DvSq,
        Self::VSq,
        Self::VDv,
        Self::DuV,
        Self::UV,
        Self::DuDv,
        Self::UDv,
        Self::DuSq,
        Self::UDu,
        Self::USq,
        Self::NullUV,
        Self::NullUU,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::DvSq => "dv^2",
            Self::VSq => "v^2",
            Self::VDv => "v*dv",
            Self::DuV => "du*v",
            Self::UV => "u*v",
            Self::DuDv => "du*dv",
            Self::UDv => "u*dv",
            Self::DuSq => "du^2",
            Self::UDu => "u*du",
            Self::USq => "u^2",
            Self::NullUV => "null(u,v)",
            Self::NullUU => "null(u,u)",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|q| q.name() == name)
    }

    /// Growth of the integrals predicted by the energy-method estimates.
    pub fn expected(&self) -> Growth {
        match self {
            Self::DvSq | Self::VSq | Self::VDv | Self::DuV | Self::UV | Self::NullUV | Self::NullUU => Growth::Bounded,
            _ => Growth::Logarithmic,
        }
    }

    /// `Q` at one point from `(w, w_t, w_r)` of both fields.
    pub fn eval(&self, u: [f64; 3], v: [f64; 3]) -> f64 {
        let du = math::sqrt(u[1] * u[1] + u[2] * u[2]);
        let dv = math::sqrt(v[1] * v[1] + v[2] * v[2]);
        match self {
            Self::DvSq => dv * dv,
            Self::VSq => v[0] * v[0],
            Self::VDv => v[0].abs() * dv,
            Self::DuV => du * v[0].abs(),
            Self::UV => (u[0] * v[0]).abs(),
            Self::DuDv => du * dv,
            Self::UDv => u[0].abs() * dv,
            Self::DuSq => du * du,
            Self::UDu => u[0].abs() * du,
            Self::USq => u[0] * u[0],
            Self::NullUV => -u[1] * v[1] + u[2] * v[2],
            Self::NullUU => -u[1] * u[1] + u[2] * u[2],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Foliation {
    /// Constant-`t` slices.
    Flat,
    /// The hyperboloids `H_s`.
    Hyperboloidal,
}

impl Foliation {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Flat => "flat",
            Self::Hyperboloidal => "hyperboloidal",
        }
    }
}

/// One nonlinearity in one foliation: the running integral and its
/// classification.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthRow {
    pub q: QKind,
    pub foliation: Foliation,
    /// `t` (flat) or `s` (hyperboloidal).
    pub x: Vec<f64>,
    pub integral: Vec<f64>,
    /// Fit `I = c0 + c1 ln x` over `x` with coordinate time `>= 5`.
    pub c0: f64,
    pub c1: f64,
    pub se_c1: f64,
    /// RMS fit residual relative to the range of `I` in the fit window.
    pub fit_rms_rel: f64,
    /// `(I(end) - I(x_lo)) / I(end)` over the last decade.
    pub last_decade_increase: f64,
    pub classification: Growth,
}

impl GrowthRow {
    fn classify(q: QKind, foliation: Foliation, x: Vec<f64>, integral: Vec<f64>, x_lo: f64, x_fit: f64) -> Self {
        let end = integral.last().copied().unwrap_or(0.0);
        let at_lo = interp(&x, &integral, x_lo);
        let last_decade_increase = if end > 0.0 { (end - at_lo) / end } else { 0.0 };
        let (mut lx, mut ly) = (Vec::new(), Vec::new());
        for (a, b) in x.iter().zip(&integral) {
            if *a >= x_fit {
                lx.push(math::ln(*a));
                ly.push(*b);
            }
        }
        let range =
            ly.iter().copied().fold(f64::NEG_INFINITY, f64::max) - ly.iter().copied().fold(f64::INFINITY, f64::min);
        let (c0, c1, se_c1, rms) = math::linear_fit(&lx, &ly).unwrap_or((0.0, 0.0, 0.0, 0.0));
        let fit_rms_rel = if range > 0.0 { rms / range } else { f64::INFINITY };
        let classification = if end > 0.0 && last_decade_increase < BOUNDED_INCREASE {
            Growth::Bounded
        } else if fit_rms_rel < LOG_FIT_RMS && c1 > LOG_SIGMAS * se_c1 {
            Growth::Logarithmic
        } else {
            Growth::Unclassified
        };
        Self {
            q,
            foliation,
            x,
            integral,
            c0,
            c1,
            se_c1,
            fit_rms_rel,
            last_decade_increase,
            classification,
        }
    }
}

fn interp(x: &[f64], y: &[f64], at: f64) -> f64 {
    let j = x.partition_point(|a| *a <= at);
    if j == 0 {
        return y.first().copied().unwrap_or(0.0);
    }
    if j == x.len() {
        return y[j - 1];
    }
    let th = (at - x[j - 1]) / (x[j] - x[j - 1]);
    y[j - 1] + th * (y[j] - y[j - 1])
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GrowthTable {
    pub rows: Vec<GrowthRow>,
}

impl GrowthTable {
    pub fn row(&self, q: QKind, foliation: Foliation) -> Option<&GrowthRow> {
        self.rows.iter().find(|r| r.q == q && r.foliation == foliation)
    }
}

/// Setup of the two-field comparison run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoliationConfig {
    pub dr: f64,
    pub cfl: f64,
    /// Start time; the cone `r <= t - 1` must contain the data.
    pub t0: f64,
    pub t_max: f64,
    /// `u` takes the `(n0, n1)` data, `v` the `(E0, E1)` data.
    pub data: InitialDataSpec,
    /// Spacing of the sampled hyperboloids.
    pub ds: f64,
}

impl Default for FoliationConfig {
    fn default() -> Self {
        Self {
            dr: 0.02,
            cfl: SolverConfig::DEFAULT_CFL,
            t0: 2.0,
            t_max: 100.0,
            data: InitialDataSpec {
                family: DataFamily::CompactBump,
                eps: 1.0,
                sigma: 0.9,
                center: 0.0,
                amplitudes: [1.0, 0.0, 1.0, 0.0],
            },
            ds: 0.1,
        }
    }
}

impl FoliationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.data.family != DataFamily::CompactBump {
            return Err(Error::ConeSupport("data must be compactly supported"));
        }
        if !(self.t0 >= 2.0) {
            return Err(Error::ConeSupport("the run must start at t >= 2"));
        }
        if !(self.data.support_radius() <= self.t0 - 1.0) {
            return Err(Error::ConeSupport("data leave the cone r <= t - 1"));
        }
        if !(self.ds > 0.0) {
            return Err(config_err("foliation.ds", "hyperboloid spacing must be positive"));
        }
        if !(self.t_max >= 10.0 * FIT_T_MIN.max(self.t0)) {
            return Err(config_err(
                "foliation.t_max",
                "run must cover a decade past the fit start",
            ));
        }
        Ok(())
    }

    /// Last hyperboloid fully inside the run: its cone tip
    /// `t = (s^2 + 1) / 2` stays below `t_max`.
    pub fn s_max(&self) -> f64 {
        math::sqrt(2.0 * self.t_max - 1.0)
    }

    pub fn s_values(&self) -> Vec<f64> {
        let s_end = self.s_max() - 1e-9;
        let n = libm::floor((s_end - 2.0) / self.ds) as usize;
        let mut s: Vec<f64> = (0..=n).map(|k| 2.0 + k as f64 * self.ds).collect();
        if s_end - s[n] > 1e-6 {
            s.push(s_end);
        }
        s
    }

    /// `s` whose hyperboloid tip is at coordinate time `t`.
    fn s_at(t: f64) -> f64 {
        math::sqrt((2.0 * t - 1.0).max(4.0))
    }
}

/// Per-level `||Q||_{L^2(R^3)}` for every kind, integrated by the trapezoid
/// rule.
struct FlatIntegrator {
    kinds: Vec<QKind>,
    t: Vec<f64>,
    integrals: Vec<Vec<f64>>,
    prev: Vec<f64>,
}

impl FlatIntegrator {
    fn new(kinds: &[QKind]) -> Self {
        Self {
            kinds: kinds.to_vec(),
            t: Vec::new(),
            integrals: vec![Vec::new(); kinds.len()],
            prev: Vec::new(),
        }
    }
}

impl Observer for FlatIntegrator {
    fn observe(&mut self, frame: &Frame<'_>) -> Result<()> {
        let n = frame.support();
        let (uw, vw) = (frame.w(0), frame.w(1));
        let (ut, vt) = (frame.wt(0), frame.wt(1));
        let (ur, vr) = (frame.wr(0), frame.wr(1));
        let g = frame.grid;
        let mut acc = vec![0.0; self.kinds.len()];
        for i in 0..n {
            let r = g.r(i);
            let u = [uw[i], ut[i], ur[i]];
            let v = [vw[i], vt[i], vr[i]];
            for (a, q) in acc.iter_mut().zip(&self.kinds) {
                let x = q.eval(u, v);
                *a += r * r * x * x;
            }
        }
        let norms: Vec<f64> = acc.iter().map(|a| math::sqrt(math::FOUR_PI * g.dr() * a)).collect();
        for (k, nm) in norms.iter().enumerate() {
            let prev_i = self.integrals[k].last().copied().unwrap_or(0.0);
            let inc = if self.prev.is_empty() {
                0.0
            } else {
                0.5 * frame.dt * (nm + self.prev[k])
            };
            self.integrals[k].push(prev_i + inc);
        }
        self.prev = norms;
        self.t.push(frame.t);
        Ok(())
    }
}

fn slice_q(q: QKind, u: &HyperboloidSlice, v: &HyperboloidSlice) -> f64 {
    let vals: Vec<f64> = (0..u.len())
        .map(|i| q.eval([u.phi[i], u.phi_t[i], u.phi_r[i]], [v.phi[i], v.phi_t[i], v.phi_r[i]]))
        .collect();
    slice_l2(u, &vals)
}

/// Evolves the wave `u` and the Klein-Gordon field `v` once and classifies
/// `int ||Q||` in both foliations for every kind in `kinds`.
pub fn foliation_sweep(cfg: &FoliationConfig, kinds: &[QKind]) -> Result<GrowthTable> {
    cfg.validate()?;
    let duration = cfg.t_max - cfg.t0;
    let grid = SolverConfig::causal_grid(cfg.data.support_radius(), duration, cfg.dr, cfg.cfl)?;
    let mut sc = SolverConfig::new(grid, cfg.t0, cfg.t_max);
    sc.cfl = cfg.cfl;
    sc.validate()?;
    cfg.data.validate(&grid)?;
    let u = RadialState {
        grid,
        t: cfg.t0,
        w: cfg.data.sample(&grid, 2),
        wt: cfg.data.sample(&grid, 3),
    };
    let v = RadialState {
        grid,
        t: cfg.t0,
        w: cfg.data.sample(&grid, 0),
        wt: cfg.data.sample(&grid, 1),
    };
    let sys = FreeSystem::new(vec![Component::new("u", 0.0), Component::new("v", 1.0)]);
    let s_values = cfg.s_values();
    let mut flat = FlatIntegrator::new(kinds);
    let mut hu = HyperboloidSampler::new(&sc, 0, &s_values, false)?;
    let mut hv = HyperboloidSampler::new(&sc, 1, &s_values, false)?;
    let mut ev = Evolution::start(sc, sys, &[u, v])?;
    ev.run(&mut [&mut flat, &mut hu, &mut hv])?;
    if !hu.is_complete() || !hv.is_complete() {
        return Err(Error::Interpolation("hyperboloid sampling incomplete"));
    }
    let t_end = *flat.t.last().ok_or(Error::InsufficientData("empty run"))?;
    let mut rows = Vec::with_capacity(2 * kinds.len());
    for (k, &q) in kinds.iter().enumerate() {
        rows.push(GrowthRow::classify(
            q,
            Foliation::Flat,
            flat.t.clone(),
            flat.integrals[k].clone(),
            (0.1 * t_end).max(cfg.t0),
            FIT_T_MIN,
        ));
        let norms: Vec<f64> = hu
            .slices
            .iter()
            .zip(&hv.slices)
            .map(|(a, b)| slice_q(q, a, b))
            .collect();
        let mut integral = vec![0.0; norms.len()];
        for j in 1..norms.len() {
            integral[j] = integral[j - 1] + 0.5 * (s_values[j] - s_values[j - 1]) * (norms[j] + norms[j - 1]);
        }
        rows.push(GrowthRow::classify(
            q,
            Foliation::Hyperboloidal,
            s_values.clone(),
            integral,
            FoliationConfig::s_at(0.1 * cfg.t_max),
            FoliationConfig::s_at(FIT_T_MIN),
        ));
    }
    Ok(GrowthTable { rows })
}

/// Flat and hyperboloidal rows for a single nonlinearity.
pub fn foliation_comparison(q: QKind, cfg: &FoliationConfig) -> Result<(GrowthRow, GrowthRow)> {
    let mut t = foliation_sweep(cfg, &[q])?;
    let hyp = t.rows.pop().ok_or(Error::InsufficientData("empty table"))?;
    let flat = t.rows.pop().ok_or(Error::InsufficientData("empty table"))?;
    Ok((flat, hyp))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for q in QKind::ALL {
            assert_eq!(QKind::from_name(q.name()), Some(q));
        }
        assert_eq!(QKind::from_name("dw"), None);
    }

    #[test]
    fn null_form_vanishes_on_outgoing_profiles() {
        // u_t = -u_r, v_t = -v_r: d_alpha u d^alpha v = 0
        assert_eq!(QKind::NullUV.eval([0.3, 2.0, -2.0], [1.0, -0.5, 0.5]), 0.0);
        assert_eq!(QKind::DuDv.eval([0.0, 3.0, 4.0], [0.0, 0.0, 2.0]), 10.0);
    }

    #[test]
    fn classification_of_synthetic_integrals() {
        let x: Vec<f64> = (0..=400).map(|k| 2.0 + 0.245 * k as f64).collect();
        let log: Vec<f64> = x.iter().map(|t| math::ln(*t / 2.0)).collect();
        let sat: Vec<f64> = x.iter().map(|t| 1.0 - 1.0 / (t * t)).collect();
        let row = GrowthRow::classify(QKind::DuDv, Foliation::Flat, x.clone(), log, 10.0, FIT_T_MIN);
        assert_eq!(row.classification, Growth::Logarithmic);
        assert!((row.c1 - 1.0).abs() < 1e-12);
        let row = GrowthRow::classify(QKind::DvSq, Foliation::Flat, x, sat, 10.0, FIT_T_MIN);
        assert_eq!(row.classification, Growth::Bounded);
    }

    #[test]
    fn gaussian_data_violate_cone_support() {
        let mut cfg = FoliationConfig::default();
        cfg.data.family = DataFamily::Gaussian;
        assert!(matches!(foliation_sweep(&cfg, &QKind::ALL), Err(Error::ConeSupport(_))));
        let mut cfg = FoliationConfig::default();
        cfg.data.center = 0.5;
        assert!(matches!(cfg.validate(), Err(Error::ConeSupport(_))));
    }

    #[test]
    fn s_values_end_inside_the_run() {
        let cfg = FoliationConfig::default();
        let s = cfg.s_values();
        assert_eq!(s[0], 2.0);
        let last = *s.last().unwrap();
        assert!(last < cfg.s_max() && last > cfg.s_max() - 1e-6);
    }
}
