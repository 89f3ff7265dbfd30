use alloc::vec::Vec;

use crate::error::{config_err, Error, Result};
use crate::evolve::{recompose_n, KgzTrajectory};
use crate::math;
use crate::radial::norms::{weighted_sup, WeightKind};
use crate::radial::stencil::{self, laplacian4, Parity};

/// Earliest admissible fit start.
pub const MIN_T_LO: f64 = 5.0;
/// Fewest samples accepted inside a fit window.
pub const MIN_POINTS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitStatus {
    Fitted,
    /// Some sup in the window vanished or was not finite; no exponent.
    Degenerate,
}

/// Power law `sup ~ A t^{-p}` fitted to `ln sup` against `ln t`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    pub weight: WeightKind,
    pub t_lo: f64,
    pub t_hi: f64,
    pub status: FitStatus,
    pub exponent: f64,
    pub amplitude: f64,
    pub exponent_se: f64,
    /// RMS residual of the fit in `ln sup`.
    pub rms: f64,
    pub points: usize,
    /// Largest sup in the window.
    pub window_max: f64,
    pub window_median: f64,
}

impl DecayFit {
    /// `window_max / window_median`, the boundedness measure for weighted
    /// sups.
    pub fn max_over_median(&self) -> f64 {
        if self.window_median > 0.0 {
            self.window_max / self.window_median
        } else {
            0.0
        }
    }
}

/// `(t, values)` of a named component at every snapshot. On a divergence-form
/// run `n` is recomposed from `n0` and `nD`.
pub fn component_series(traj: &KgzTrajectory, name: &str) -> Result<Vec<(f64, Vec<f64>)>> {
    if let Some(k) = traj.component(name) {
        return Ok(traj.snapshots.iter().map(|s| (s.t, s.fields[k].0.clone())).collect());
    }
    if name == "n" {
        let (a, b) = match (traj.component("n0"), traj.component("nD")) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::Mismatch("trajectory has no `n` component")),
        };
        return (0..traj.snapshots.len())
            .map(|j| {
                let n = recompose_n(&traj.state(j, a), &traj.state(j, b))?;
                let m = stencil::active_len(&n.w);
                Ok((n.t, n.w[..m].to_vec()))
            })
            .collect();
    }
    Err(Error::Mismatch("unknown component"))
}

/// `(t, sup_x omega |w|)` per snapshot.
pub fn sup_series(traj: &KgzTrajectory, name: &str, weight: WeightKind) -> Result<Vec<(f64, f64)>> {
    let g = traj.config.grid;
    Ok(component_series(traj, name)?
        .into_iter()
        .map(|(t, w)| (t, weighted_sup(&w, &g, t, weight)))
        .collect())
}

/// Fits a power law to the samples of `series` inside `[t_lo, t_hi]`.
pub fn fit_power_law(series: &[(f64, f64)], weight: WeightKind, t_lo: f64, t_hi: f64) -> Result<DecayFit> {
    if !(t_lo >= MIN_T_LO) {
        return Err(config_err("decay.t_lo", "fit window must start at t >= 5"));
    }
    if !(t_hi >= 10.0 * t_lo) {
        return Err(config_err("decay.t_hi", "fit window must span a decade"));
    }
    let pts: Vec<(f64, f64)> = series
        .iter()
        .copied()
        .filter(|(t, _)| *t >= t_lo && *t <= t_hi)
        .collect();
    if pts.len() < MIN_POINTS {
        return Err(Error::InsufficientData("fewer than 20 samples in the fit window"));
    }
    let mut sorted: Vec<f64> = pts.iter().map(|p| p.1).collect();
    sorted.sort_by(f64::total_cmp);
    let window_max = *sorted.last().unwrap_or(&0.0);
    let window_median = sorted[sorted.len() / 2];
    let mut fit = DecayFit {
        weight,
        t_lo,
        t_hi,
        status: FitStatus::Degenerate,
        exponent: 0.0,
        amplitude: 0.0,
        exponent_se: 0.0,
        rms: 0.0,
        points: pts.len(),
        window_max,
        window_median,
    };
    if pts.iter().any(|(_, y)| !(*y > 0.0) || !y.is_finite()) {
        return Ok(fit);
    }
    let xs: Vec<f64> = pts.iter().map(|p| math::ln(p.0)).collect();
    let ys: Vec<f64> = pts.iter().map(|p| math::ln(p.1)).collect();
    if let Some((c0, c1, se, rms)) = math::linear_fit(&xs, &ys) {
        fit.status = FitStatus::Fitted;
        fit.exponent = -c1;
        fit.amplitude = math::exp(c0);
        fit.exponent_se = se;
        fit.rms = rms;
    }
    Ok(fit)
}

/// Decay fit of `sup_x omega |component|` over the snapshots of a run.
pub fn decay_fit(traj: &KgzTrajectory, component: &str, weight: WeightKind, window: (f64, f64)) -> Result<DecayFit> {
    let series = sup_series(traj, component, weight)?;
    fit_power_law(&series, weight, window.0, window.1)
}

/// Weights of the three pointwise wave bounds: interior, exterior, global.
pub const WAVE_BOUND_WEIGHTS: [WeightKind; 3] = [
    WeightKind::TPlusRHalfTMinusR,
    WeightKind::RTMinusRHalf,
    WeightKind::TPlusRTMinusRHalf,
];

/// Time series of `sup_x omega_k |Gamma^I n|`, `|I| <= 1`, for the three
/// weights of [`WAVE_BOUND_WEIGHTS`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WaveBoundSeries {
    pub t: Vec<f64>,
    pub sups: [Vec<f64>; 3],
}

impl WaveBoundSeries {
    /// `max / median` of bound `k` over samples with `t` in `[t_lo, t_hi]`.
    pub fn max_over_median(&self, k: usize, t_lo: f64, t_hi: f64) -> f64 {
        let mut v: Vec<f64> = self
            .t
            .iter()
            .zip(&self.sups[k])
            .filter(|(t, _)| **t >= t_lo && **t <= t_hi)
            .map(|(_, s)| *s)
            .collect();
        if v.is_empty() {
            return 0.0;
        }
        v.sort_by(f64::total_cmp);
        let med = v[v.len() / 2];
        if med > 0.0 {
            v[v.len() - 1] / med
        } else {
            0.0
        }
    }
}

/// `max |Gamma n|` over `Gamma in {1, d_t, d_a, L_a, Omega_ab}` and over
/// directions, for radial `n`: `max(|n|, |n_t|, |n_r|, |r n_t + t n_r|)`.
fn gamma1_pointwise(t: f64, r: f64, n: f64, nt: f64, nr: f64) -> f64 {
    n.abs().max(nt.abs()).max(nr.abs()).max((r * nt + t * nr).abs())
}

/// The three weighted sups of `Gamma^I n`, `|I| <= 1`, on a divergence-form
/// run.
pub fn pointwise_wave_bounds(traj: &KgzTrajectory) -> Result<WaveBoundSeries> {
    let (a, b) = match (traj.component("n0"), traj.component("nD")) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::Mismatch("pointwise wave bounds need a divergence-form run")),
    };
    let g = traj.config.grid;
    let mut out = WaveBoundSeries::default();
    for j in 0..traj.snapshots.len() {
        let n = recompose_n(&traj.state(j, a), &traj.state(j, b))?;
        let m = (stencil::active_len(&n.w).max(stencil::active_len(&n.wt)) + 3).min(g.nr());
        let nr = stencil::d1(&n.w[..(m + 3).min(g.nr())], Parity::Even, g.dr());
        let mut best = [0.0f64; 3];
        for i in 0..m {
            let r = g.r(i);
            let p = gamma1_pointwise(n.t, r, n.w[i], n.wt[i], nr[i]);
            for (k, w) in WAVE_BOUND_WEIGHTS.iter().enumerate() {
                best[k] = best[k].max(w.eval(n.t, r) * p);
            }
        }
        out.t.push(n.t);
        for k in 0..3 {
            out.sups[k].push(best[k]);
        }
    }
    Ok(out)
}

/// `sup_x <r> <t-r> |d d nD| / eps^2` per snapshot of a divergence-form run,
/// with `d_t^2 nD = Lap nD + e^2` from the equation. Zero when `eps = 0`.
pub fn kubota_bound_check(traj: &KgzTrajectory) -> Result<Vec<(f64, f64)>> {
    let (e, d) = match (traj.component("e"), traj.component("nD")) {
        (Some(e), Some(d)) => (e, d),
        _ => return Err(Error::Mismatch("Kubota check needs a divergence-form run")),
    };
    let g = traj.config.grid;
    let eps2 = traj.eps_label * traj.eps_label;
    let mut out = Vec::with_capacity(traj.snapshots.len());
    for j in 0..traj.snapshots.len() {
        let t = traj.snapshots[j].t;
        if eps2 == 0.0 {
            out.push((t, 0.0));
            continue;
        }
        let nd = traj.state(j, d);
        let es = traj.state(j, e);
        let lap = laplacian4(&nd.w, g.dr());
        let ndr = stencil::d1(&nd.w, Parity::Even, g.dr());
        let ndrr = stencil::d2(&nd.w, Parity::Even, g.dr());
        let ndtr = stencil::d1(&nd.wt, Parity::Even, g.dr());
        let m = (stencil::active_len(&nd.w).max(stencil::active_len(&es.w)) + 3).min(g.nr());
        let mut best = 0.0f64;
        for i in 0..m {
            let r = g.r(i);
            let ndtt = lap[i] + es.w[i] * es.w[i];
            let dd = ndtt.abs().max(ndtr[i].abs()).max(ndrr[i].abs()).max((ndr[i] / r).abs());
            best = best.max(math::jb(r) * math::jb(t - r) * dd);
        }
        out.push((t, best / eps2));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::{apply_vf, AnalyticFamily, SpacetimePoint, VectorFieldKind};

    fn series(p: f64) -> Vec<(f64, f64)> {
        (0..200)
            .map(|k| {
                let t = 5.0 + 0.5 * k as f64;
                (t, 3.0 * math::powf(t, -p))
            })
            .collect()
    }

    #[test]
    fn exact_power_law_is_recovered() {
        let f = fit_power_law(&series(1.5), WeightKind::Unit, 5.0, 100.0).unwrap();
        assert_eq!(f.status, FitStatus::Fitted);
        assert!((f.exponent - 1.5).abs() < 1e-12);
        assert!((f.amplitude - 3.0).abs() < 1e-10);
    }

    #[test]
    fn zero_series_is_degenerate() {
        let s: Vec<(f64, f64)> = series(1.5).into_iter().map(|(t, _)| (t, 0.0)).collect();
        let f = fit_power_law(&s, WeightKind::Unit, 5.0, 100.0).unwrap();
        assert_eq!(f.status, FitStatus::Degenerate);
        assert_eq!(f.max_over_median(), 0.0);
    }

    #[test]
    fn short_windows_are_rejected() {
        assert!(fit_power_law(&series(1.5), WeightKind::Unit, 2.0, 100.0).is_err());
        assert!(fit_power_law(&series(1.5), WeightKind::Unit, 20.0, 100.0).is_err());
        let sparse: Vec<(f64, f64)> = series(1.5).into_iter().step_by(20).collect();
        assert!(matches!(
            fit_power_law(&sparse, WeightKind::Unit, 5.0, 100.0),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn gamma_sup_matches_jets_on_a_radial_field() {
        let fam = AnalyticFamily::radial_gaussian(1.0, 1.3, 0.0, 1.0);
        let p = SpacetimePoint::new(2.5, [0.8, 0.0, 0.0]);
        let j = fam.jet(&p, 2);
        let kinds = [
            VectorFieldKind::Partial(0),
            VectorFieldKind::Partial(1),
            VectorFieldKind::Boost(1),
            VectorFieldKind::Rotation(1, 2),
        ];
        let mut best = j.value.abs();
        for k in kinds {
            best = best.max(apply_vf(k, &j, &p).unwrap().value.abs());
        }
        let g = gamma1_pointwise(2.5, 0.8, j.value, j.d1[0], j.d1[1]);
        assert!((g - best).abs() < 1e-12, "{g} {best}");
    }
}
