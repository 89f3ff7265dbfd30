//! Energy functionals of radial fields and the observers that track them
//! along a run.
//!
//! All integrals over `R^3` reduce to `4 pi int r^2 (...) dr` evaluated by
//! the midpoint rule on the staggered grid.

mod ghost;
mod hyperboloid;
mod trackers;

pub use ghost::GhostWeightSpec;
pub use hyperboloid::{
    hyperboloidal_energy, hyperboloidal_estimate_check, interpolate_hyperboloid, slice_l2, HyperboloidSampler,
    HyperboloidSlice, HyperboloidalEstimate, MAX_SNAPSHOT_GAP,
};
pub use trackers::{
    conformal_energy, ConformalSample, ConformalTracker, GammaGhostSample, GammaGhostTracker, GhostSample, GhostTracker,
};

use alloc::string::String;
use alloc::vec::Vec;

use crate::math;
use crate::radial::grid::RadialGrid;
use crate::radial::stencil::{self, Parity};
use crate::radial::window::{DerivativeWindow, RadialState};

/// `4 pi sum_i r_i^2 g(r_i) (wt^2 + wr^2 + m^2 w^2) dr` over `0..upto`.
pub(crate) fn energy_integral(
    grid: &RadialGrid,
    w: &[f64],
    wt: &[f64],
    wr: &[f64],
    mass: f64,
    upto: usize,
    weight: impl Fn(f64) -> f64,
) -> f64 {
    let m2 = mass * mass;
    let mut acc = 0.0;
    for i in 0..upto.min(w.len()) {
        let r = grid.r(i);
        acc += r * r * weight(r) * (wt[i] * wt[i] + wr[i] * wr[i] + m2 * w[i] * w[i]);
    }
    math::FOUR_PI * grid.dr() * acc
}

/// `int (|d_t w|^2 + sum_a |d_a w|^2 + m^2 w^2) dx` at the window center.
pub fn natural_energy(window: &DerivativeWindow<'_>, mass: f64) -> f64 {
    let wt = window.time_derivative(1);
    let wr = stencil::d1(window.center(), Parity::Even, window.grid.dr());
    energy_integral(
        &window.grid,
        window.center(),
        &wt,
        &wr,
        mass,
        window.active_len(),
        |_| 1.0,
    )
}

/// Natural energy of a state using its stored `d_t w`.
pub fn natural_energy_of_state(state: &RadialState, mass: f64) -> f64 {
    let wr = stencil::d1(&state.w, Parity::Even, state.grid.dr());
    energy_integral(&state.grid, &state.w, &state.wt, &wr, mass, state.grid.nr(), |_| 1.0)
}

/// Columns of `energies.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EnergyKind {
    Natural,
    GhostDirect,
    GhostMassAcc,
    GhostGoodAcc,
    Conformal,
    Hyperboloidal(u8),
}

impl EnergyKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Natural => "natural",
            Self::GhostDirect => "ghost_direct",
            Self::GhostMassAcc => "ghost_mass_acc",
            Self::GhostGoodAcc => "ghost_good_acc",
            Self::Conformal => "conformal",
            Self::Hyperboloidal(1) => "hyperboloidal_1",
            Self::Hyperboloidal(2) => "hyperboloidal_2",
            Self::Hyperboloidal(_) => "hyperboloidal_3",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LedgerEntry {
    /// `t`, or `s` for hyperboloidal entries.
    pub time: f64,
    pub component: String,
    pub kind: EnergyKind,
    pub value: f64,
}

/// Time series of energies with the accumulated source integrals
/// `int ||f|| dt'` and `int ||<t'+r> f|| dt'` per component.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnergyLedger {
    pub entries: Vec<LedgerEntry>,
    /// `(component, t, int ||f||, int ||<t'+r> f||)`.
    pub source_integrals: Vec<(String, f64, f64, f64)>,
}

impl EnergyLedger {
    pub fn push(&mut self, time: f64, component: &str, kind: EnergyKind, value: f64) {
        self.entries.push(LedgerEntry {
            time,
            component: String::from(component),
            kind,
            value,
        });
    }

    /// `(time, value)` pairs of one series in insertion order.
    pub fn series(&self, component: &str, kind: EnergyKind) -> Vec<(f64, f64)> {
        self.entries
            .iter()
            .filter(|e| e.kind == kind && e.component == component)
            .map(|e| (e.time, e.value))
            .collect()
    }

    /// Adds the samples of a ghost tracker.
    pub fn record_ghost(&mut self, component: &str, tracker: &GhostTracker<'_>) {
        for s in &tracker.samples {
            self.push(s.t, component, EnergyKind::Natural, s.natural);
            self.push(s.t, component, EnergyKind::GhostDirect, s.natural);
            self.push(s.t, component, EnergyKind::GhostMassAcc, s.a_mass);
            self.push(s.t, component, EnergyKind::GhostGoodAcc, s.a_good);
            self.source_integrals
                .push((String::from(component), s.t, s.source_l2_int, s.source_weighted_int));
        }
    }

    pub fn record_conformal(&mut self, component: &str, tracker: &ConformalTracker) {
        for s in &tracker.samples {
            self.push(s.t, component, EnergyKind::Conformal, s.energy);
        }
    }

    /// Adds all three hyperboloidal expressions of each slice.
    pub fn record_hyperboloidal(&mut self, component: &str, mass: f64, slices: &[HyperboloidSlice]) {
        for sl in slices {
            for k in 1..=3u8 {
                let e = hyperboloidal_energy(sl, mass, k).unwrap_or(f64::NAN);
                self.push(sl.s, component, EnergyKind::Hyperboloidal(k), e);
            }
        }
    }

    /// Entries in a canonical order: by component, kind, then time.
    pub fn sorted(&self) -> Vec<LedgerEntry> {
        let mut v = self.entries.clone();
        v.sort_by(|a, b| {
            (a.component.as_str(), a.kind)
                .cmp(&(b.component.as_str(), b.kind))
                .then(a.time.total_cmp(&b.time))
        });
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn window_levels(grid: RadialGrid, dt: f64, f: impl Fn(f64, f64) -> f64) -> Vec<Vec<f64>> {
        (0..5).map(|j| grid.sample(|r| f((j as f64 - 2.0) * dt, r))).collect()
    }

    #[test]
    fn zero_state_has_zero_energy() {
        let g = RadialGrid::new(64, 0.1).unwrap();
        assert_eq!(natural_energy_of_state(&RadialState::zero(g, 0.0), 1.0), 0.0);
    }

    #[test]
    fn energy_is_quadratic() {
        let g = RadialGrid::with_radius(12.0, 0.05).unwrap();
        let lv = window_levels(g, 0.04, |t, r| libm::cos(t) * libm::exp(-r * r));
        let lv3: Vec<Vec<f64>> = lv.iter().map(|l| l.iter().map(|x| 3.0 * x).collect()).collect();
        let win = |l: &Vec<Vec<f64>>| {
            natural_energy(
                &DerivativeWindow::new(g, 0.0, 0.04, [&l[0], &l[1], &l[2], &l[3], &l[4]]).unwrap(),
                1.0,
            )
        };
        let (a, b) = (win(&lv), win(&lv3));
        assert!((b - 9.0 * a).abs() < 1e-12 * b);
    }

    #[test]
    fn energy_of_a_gaussian_matches_closed_form() {
        // w = exp(-r^2) at rest: 4 pi int r^2 (4 r^2 + 1) exp(-2 r^2) dr
        let g = RadialGrid::with_radius(12.0, 0.02).unwrap();
        let s = RadialState {
            grid: g,
            t: 0.0,
            w: g.sample(|r| libm::exp(-r * r)),
            wt: alloc::vec![0.0; g.nr()],
        };
        let sqrt_half_pi = libm::sqrt(math::PI / 2.0);
        let exact = math::FOUR_PI * (4.0 * 3.0 / 32.0 + 1.0 / 8.0) * sqrt_half_pi;
        assert!((natural_energy_of_state(&s, 1.0) - exact).abs() < 1e-6 * exact);
    }
}
