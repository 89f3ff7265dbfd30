use alloc::vec::Vec;

use super::history::{FieldHistory, HistoryRecorder};
use super::xnorm::{x_norm, XNormReport};
use super::{apply_increment, apply_map, PicardConfig};
use crate::error::{config_err, Error, Result};
use crate::evolve::{solve_kgz, KgzTrajectory, Snapshot, SolverState};
use crate::math;
use crate::radial::window::time_derivative_into;

/// Distances at or below `RATIO_FLOOR * ||seed||_X` end the iteration and
/// leave the following ratio undefined.
pub const RATIO_FLOOR: f64 = 1e-14;

/// Contraction target for every ratio.
pub const CONTRACTION_TARGET: f64 = 0.5;

/// Outcome of Picard iteration from the free-solution seed.
#[derive(Debug, Clone)]
pub struct PicardRun {
    pub config: PicardConfig,
    /// Smallness functional of the data.
    pub eps_label: f64,
    /// `||(Psi^0, phi^0)||_X`.
    pub seed_norm: XNormReport,
    /// Snapshots of `Psi^k, phi^k` (components `e`, `n`).
    pub iterates: Vec<KgzTrajectory>,
    /// `d_k = ||(Psi^{k+1} - Psi^k, phi^{k+1} - phi^k)||_X`.
    pub distances: Vec<XNormReport>,
    /// Set when the map diverged while computing iterate `k`.
    pub diverged_at: Option<usize>,
    /// Every level of the newest iterate.
    pub limit: (FieldHistory, FieldHistory),
}

impl PicardRun {
    pub fn floor(&self) -> f64 {
        RATIO_FLOOR * self.seed_norm.total()
    }

    pub fn d(&self) -> Vec<f64> {
        self.distances.iter().map(|x| x.total()).collect()
    }

    /// `rho_k = d_{k+1} / d_k`, defined while `d_k` is above the floor.
    pub fn ratios(&self) -> Vec<Option<f64>> {
        let d = self.d();
        let floor = self.floor();
        d.windows(2)
            .map(|w| (w[0] > floor && w[0] > 0.0).then(|| w[1] / w[0]))
            .collect()
    }

    pub fn max_ratio(&self) -> Option<f64> {
        self.ratios().into_iter().flatten().reduce(f64::max)
    }

    /// All measured ratios are at most 1/2 and the map never diverged.
    pub fn contracted(&self) -> bool {
        self.diverged_at.is_none() && self.ratios().into_iter().flatten().all(|r| r <= CONTRACTION_TARGET)
    }
}

/// Snapshots of a stored pair every `snapshot_stride` levels (and the last).
fn snapshot_trajectory(psi: &FieldHistory, phi: &FieldHistory, eps_label: f64) -> Result<KgzTrajectory> {
    let cfg = psi.config;
    let last = cfg.steps() as i64;
    let dt = cfg.dt();
    let mut buf: [Vec<f64>; 5] = Default::default();
    let mut snapshots = Vec::new();
    let mut steps: Vec<i64> = (0..=last).step_by(cfg.snapshot_stride).collect();
    if steps.last() != Some(&last) {
        steps.push(last);
    }
    for &s in &steps {
        let mut fields = Vec::with_capacity(2);
        for h in [psi, phi] {
            h.padded_window(s, &mut buf);
            let n = buf
                .iter()
                .map(|l| crate::radial::stencil::active_len(l))
                .max()
                .unwrap_or(0);
            let mut wt = alloc::vec![0.0; n];
            let levels: [&[f64]; 5] = core::array::from_fn(|j| buf[j].as_slice());
            time_derivative_into(&levels, dt, 1, n, &mut wt);
            fields.push((buf[2][..n].to_vec(), wt));
        }
        snapshots.push(Snapshot {
            step: s,
            t: cfg.time(s),
            fields,
        });
    }
    let nr = cfg.grid.nr();
    let full = |h: &FieldHistory, l: i64| {
        let mut v = alloc::vec![0.0; nr];
        let src = h.level(l);
        v[..src.len()].copy_from_slice(src);
        v
    };
    // the newest level of a run is last + 2
    let (w, wm): (Vec<Vec<f64>>, Vec<Vec<f64>>) = [psi, phi]
        .iter()
        .map(|h| (full(h, last + 2), full(h, last + 1)))
        .unzip();
    let v = w
        .iter()
        .zip(&wm)
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y) / dt).collect())
        .collect();
    Ok(KgzTrajectory {
        config: cfg,
        names: alloc::vec!["e".into(), "n".into()],
        snapshots,
        final_state: SolverState {
            grid: cfg.grid,
            dt,
            t: cfg.time(last + 2),
            level: last + 2,
            names: alloc::vec!["e".into(), "n".into()],
            w,
            v,
        },
        eps_label,
        scheme_order: 2,
    })
}

/// Iterates `T` from the free solutions up to `k_max` times, stopping early
/// once a distance drops to the floor.
pub fn picard_iterate(config: &PicardConfig) -> Result<PicardRun> {
    config.validate()?;
    let cfg = config.solver()?;
    let data = &config.data;
    let eps_label = data.smallness(&cfg.grid, 1)?;
    let zero = (FieldHistory::zero(cfg, 1.0), FieldHistory::zero(cfg, 0.0));
    let (mut psi, mut phi, seed) = apply_map(&zero.0, &zero.1, data, cfg)?;
    let seed_norm = x_norm(&psi, &phi, config.tier, config.delta, config.norm_stride)?;
    let floor = RATIO_FLOOR * seed_norm.total();
    let mut run = PicardRun {
        config: *config,
        eps_label,
        seed_norm,
        iterates: alloc::vec![seed],
        distances: Vec::new(),
        diverged_at: None,
        limit: zero,
    };
    // Psi^{-1} = 0, so the first increment is taken against the seed itself
    let (mut dpsi, mut dphi) = (psi.clone(), phi.clone());
    for k in 1..=config.k_max {
        let (dp, df) = match apply_increment(&psi, &phi, &dpsi, &dphi, cfg) {
            Ok(x) => x,
            Err(Error::Divergence { .. } | Error::BoundaryReached { .. }) => {
                run.diverged_at = Some(k);
                break;
            }
            Err(e) => return Err(e),
        };
        let d = x_norm(&dp, &df, config.tier, config.delta, config.norm_stride)?;
        let done = d.total() <= floor;
        psi = psi.combine(1.0, &dp, 1.0)?;
        phi = phi.combine(1.0, &df, 1.0)?;
        run.distances.push(d);
        run.iterates.push(snapshot_trajectory(&psi, &phi, eps_label)?);
        dpsi = dp;
        dphi = df;
        if done {
            break;
        }
    }
    run.limit = (psi, phi);
    Ok(run)
}

/// Worst ratio of one data size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingRow {
    pub eps: f64,
    pub eps_label: f64,
    pub max_ratio: Option<f64>,
    pub contracted: bool,
}

impl ScalingRow {
    pub fn of(run: &PicardRun) -> Self {
        Self {
            eps: run.config.data.eps,
            eps_label: run.eps_label,
            max_ratio: run.max_ratio(),
            contracted: run.contracted(),
        }
    }
}

/// Worst contraction ratio against data size, with the fit
/// `log rho = intercept + slope log eps`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingTable {
    pub rows: Vec<ScalingRow>,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
}

impl ScalingTable {
    pub fn from_rows(mut rows: Vec<ScalingRow>) -> Self {
        rows.sort_by(|a, b| a.eps.total_cmp(&b.eps));
        let (xs, ys): (Vec<f64>, Vec<f64>) = rows
            .iter()
            .filter_map(|r| match r.max_ratio {
                Some(x) if x > 0.0 && r.eps > 0.0 => Some((math::ln(r.eps), math::ln(x))),
                _ => None,
            })
            .unzip();
        let (slope, intercept) = match math::linear_fit(&xs, &ys) {
            Some((c0, c1, _, _)) => (Some(c1), Some(c0)),
            None => (None, None),
        };
        Self { rows, slope, intercept }
    }

    /// `rho` does not grow as `eps` decreases (rows sorted by `eps`).
    pub fn nonincreasing(&self) -> bool {
        self.rows.windows(2).all(|w| match (w[0].max_ratio, w[1].max_ratio) {
            (Some(a), Some(b)) => a <= b,
            (None, _) => true,
            (Some(_), None) => false,
        })
    }
}

/// Runs [`picard_iterate`] for every `eps` (ascending, at least four).
pub fn contraction_scaling(eps_list: &[f64], config: &PicardConfig) -> Result<ScalingTable> {
    if eps_list.len() < 4 {
        return Err(config_err("picard.eps_list", "at least four data sizes are required"));
    }
    if !eps_list.windows(2).all(|w| w[0] < w[1]) {
        return Err(config_err("picard.eps_list", "data sizes must be strictly ascending"));
    }
    let rows = eps_list
        .iter()
        .map(|&e| picard_iterate(&config.with_eps(e)).map(|r| ScalingRow::of(&r)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScalingTable::from_rows(rows))
}

/// Bisection for the largest contracting data size.
#[derive(Debug, Clone, PartialEq)]
pub struct Eps0Search {
    /// Largest tested size that contracted.
    pub eps0: f64,
    /// Smallest tested size that did not, when one was found.
    pub failed: Option<f64>,
    pub evaluations: Vec<ScalingRow>,
}

/// Geometric bisection on `[lo, hi]`; `lo` must contract.
pub fn find_eps0(config: &PicardConfig, lo: f64, hi: f64, rounds: usize) -> Result<Eps0Search> {
    if !(lo > 0.0 && hi > lo) {
        return Err(config_err("picard.eps0", "bracket must satisfy 0 < lo < hi"));
    }
    let mut evals = Vec::new();
    let mut probe = |e: f64| -> Result<bool> {
        let row = ScalingRow::of(&picard_iterate(&config.with_eps(e))?);
        evals.push(row);
        Ok(row.contracted)
    };
    if !probe(lo)? {
        return Err(Error::Domain("the lower end of the eps0 bracket does not contract"));
    }
    if probe(hi)? {
        return Ok(Eps0Search {
            eps0: hi,
            failed: None,
            evaluations: evals,
        });
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..rounds {
        let m = math::sqrt(a * b);
        if probe(m)? {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(Eps0Search {
        eps0: a,
        failed: Some(b),
        evaluations: evals,
    })
}

/// Picard limit against the direct solve, with the self-convergence
/// estimate `max |u_h - u_3h| / (3^2 - 1)` on the shared nodes and levels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitCheck {
    pub picard_error: f64,
    pub self_convergence: f64,
}

impl LimitCheck {
    pub fn within(&self, factor: f64) -> bool {
        self.picard_error <= factor * self.self_convergence
    }
}

fn direct_histories(config: &PicardConfig) -> Result<Vec<FieldHistory>> {
    let cfg = config.solver()?;
    let mut rec = HistoryRecorder::new(alloc::vec![0, 1]);
    solve_kgz(cfg, &config.data, &mut [&mut rec])?;
    rec.finish(cfg, &[1.0, 0.0])
}

pub fn limit_check(run: &PicardRun) -> Result<LimitCheck> {
    let fine = direct_histories(&run.config)?;
    let picard_error = run
        .limit
        .0
        .max_abs_diff(&fine[0])?
        .max(run.limit.1.max_abs_diff(&fine[1])?);
    let coarse_cfg = PicardConfig {
        dr: 3.0 * run.config.dr,
        ..run.config
    };
    let coarse = direct_histories(&coarse_cfg)?;
    let steps = fine[0].config.steps() as i64;
    let mut diff = 0.0f64;
    let mut m = 0i64;
    while 3 * m <= steps {
        for (f, c) in fine.iter().zip(&coarse) {
            let (lf, lc) = (f.level(3 * m), c.level(m));
            for (j, x) in lc.iter().enumerate() {
                let y = lf.get(3 * j + 1).copied().unwrap_or(0.0);
                diff = diff.max((x - y).abs());
            }
            for j in lc.len()..lf.len().div_ceil(3) {
                diff = diff.max(lf.get(3 * j + 1).copied().unwrap_or(0.0).abs());
            }
        }
        m += 1;
    }
    Ok(LimitCheck {
        picard_error,
        self_convergence: diff / 8.0,
    })
}
