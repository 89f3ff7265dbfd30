//! The experiments behind each subcommand, as plain functions returning
//! results and tables. Nothing here touches the filesystem.

use kgz_core::diagnostics::{
    fit_power_law, foliation_sweep, klainerman_sobolev_check, kubota_bound_check, partition_check, sup_series,
    FitStatus, FoliationConfig, GeorgievTracker, GrowthTable, KsTracker, PartitionSpec, QKind,
};
use kgz_core::energies::{ConformalTracker, EnergyLedger, GhostTracker, GhostWeightSpec};
use kgz_core::evolve::{
    solve_kgz_reformulated, Component, Evolution, FreeSystem, KgzDirect, SolverConfig, SolverState,
};
use kgz_core::jets::{
    apply_vf, commutator_residual, hyperboloidal_densities, null_form_flat_residual, null_form_hyperboloidal,
    scaling_identity_residual, AnalyticFamily, SpacetimePoint, VectorFieldKind,
};
use kgz_core::picard::{
    find_eps0, limit_check, picard_iterate, Eps0Search, LimitCheck, PicardConfig, PicardRun, ScalingRow, ScalingTable,
};
use kgz_core::radial::{make_initial_state, DataFamily, InitialDataSpec, RadialState, WeightKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::checkpoint::Checkpoint;
use crate::config::ExperimentConfig;
use crate::error::{Context, LabResult};
use crate::output::{num, opt, Table};

/// Relative tolerance of every identity check.
pub const IDENTITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityRow {
    pub check: &'static str,
    pub samples: usize,
    /// Absolute residual of the worst sample (relative to its scale).
    pub max_residual: f64,
    /// Scale of that sample.
    pub scale: f64,
    pub pass: bool,
}

impl IdentityRow {
    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.max_residual / self.scale
        } else {
            self.max_residual
        }
    }
}

const TRUNCATION_KINDS: [VectorFieldKind; 15] = [
    VectorFieldKind::Partial(0),
    VectorFieldKind::Partial(1),
    VectorFieldKind::Partial(2),
    VectorFieldKind::Partial(3),
    VectorFieldKind::Boost(1),
    VectorFieldKind::Boost(2),
    VectorFieldKind::Boost(3),
    VectorFieldKind::Rotation(1, 2),
    VectorFieldKind::Rotation(1, 3),
    VectorFieldKind::Rotation(2, 3),
    VectorFieldKind::Scaling,
    VectorFieldKind::Good(1),
    VectorFieldKind::Good(3),
    VectorFieldKind::SemiHyperboloidal(2),
    VectorFieldKind::SemiHyperboloidal(3),
];

type Check = fn(&mut ChaCha8Rng) -> kgz_core::Result<(f64, f64)>;

fn pair(rng: &mut ChaCha8Rng, order: u8) -> (SpacetimePoint, kgz_core::jets::Jet, kgz_core::jets::Jet) {
    let p = SpacetimePoint::random_in_cone(rng);
    let tu = rng.gen_range(0..3);
    let tv = rng.gen_range(0..3);
    let u = AnalyticFamily::random_near(rng, tu, &p).jet(&p, order);
    let v = AnalyticFamily::random_near(rng, tv, &p).jet(&p, order);
    (p, u, v)
}

fn single(rng: &mut ChaCha8Rng, order: u8) -> (SpacetimePoint, kgz_core::jets::Jet) {
    let p = SpacetimePoint::random_in_cone(rng);
    let tag = rng.gen_range(0..3);
    let j = AnalyticFamily::random_near(rng, tag, &p).jet(&p, order);
    (p, j)
}

/// `(|residual|, scale)` per check; scales are the size of the largest term.
const CHECKS: [(&str, Check); 7] = [
    ("vf_truncation", |rng| {
        let (p, j) = single(rng, 3);
        let kind = TRUNCATION_KINDS[rng.gen_range(0..TRUNCATION_KINDS.len())];
        let order = rng.gen_range(1..=3u8);
        let a = apply_vf(kind, &j.truncate(order), &p)?;
        let b = apply_vf(kind, &j, &p)?.truncate(order - 1);
        let r = (0..4)
            .map(|m| (a.d1[m] - b.d1[m]).abs())
            .fold((a.value - b.value).abs(), f64::max);
        Ok((r, j.magnitude() * (1.0 + p.t)))
    }),
    ("scaling_identity", |rng| {
        let (p, j) = single(rng, 1);
        let (rt, ra) = scaling_identity_residual(&j, &p)?;
        let r = ra.iter().fold(rt.abs(), |m, x| m.max(x.abs()));
        Ok((r, j.magnitude() * p.t * p.t))
    }),
    ("null_form_flat", |rng| {
        let (p, u, v) = pair(rng, 1);
        Ok((
            null_form_flat_residual(&u, &v, &p)?.max_abs(),
            u.magnitude() * v.magnitude(),
        ))
    }),
    ("null_form_hyperboloidal", |rng| {
        let (p, u, v) = pair(rng, 1);
        Ok((
            null_form_hyperboloidal(&u, &v, &p)?.residual().abs(),
            u.magnitude() * v.magnitude(),
        ))
    }),
    ("null_form_hyperboloidal_bound", |rng| {
        let (p, u, v) = pair(rng, 1);
        let h = null_form_hyperboloidal(&u, &v, &p)?;
        Ok(((h.lhs.abs() - h.bound).max(0.0), u.magnitude() * v.magnitude()))
    }),
    ("commutator", |rng| {
        let (p, j) = single(rng, 3);
        let k = rng.gen_range(0..=VectorFieldKind::COMMUTING.len());
        let kind = VectorFieldKind::COMMUTING
            .get(k)
            .copied()
            .unwrap_or(VectorFieldKind::Scaling);
        Ok((commutator_residual(kind, &j, &p)?.abs(), j.magnitude() * (1.0 + p.t)))
    }),
    ("hyperboloidal_energy", |rng| {
        let (p, j) = single(rng, 1);
        let m = rng.gen_range(0.0..2.0);
        let [a, b, c] = hyperboloidal_densities(&j, &p, m)?;
        Ok(((a - b).abs().max((a - c).abs()), j.magnitude().powi(2) * (1.0 + m * m)))
    }),
];

/// Every identity check on `samples` seeded analytic samples each.
pub fn identities(seed: u64, samples: usize) -> LabResult<Vec<IdentityRow>> {
    let mut rows = Vec::with_capacity(CHECKS.len());
    for (k, (name, check)) in CHECKS.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        let (mut worst, mut at) = ((0.0f64, 0.0f64), f64::NEG_INFINITY);
        for _ in 0..samples {
            let (r, s) = check(&mut rng).context(name)?;
            let rel = if s > 0.0 { r / s } else { r };
            if rel > at {
                at = rel;
                worst = (r, s);
            }
        }
        rows.push(IdentityRow {
            check: name,
            samples,
            max_residual: worst.0,
            scale: worst.1,
            pass: at <= IDENTITY_TOL,
        });
    }
    Ok(rows)
}

pub fn identity_table(rows: &[IdentityRow]) -> Table {
    let mut t = Table::new(
        "identity_report.csv",
        &["check_name", "samples", "max_residual", "scale", "pass"],
    );
    for r in rows {
        t.push(vec![
            r.check.to_string(),
            r.samples.to_string(),
            num(r.max_residual),
            num(r.scale),
            r.pass.to_string(),
        ]);
    }
    t
}

/// Result of a direct KGZ solve with ghost-weight bookkeeping.
#[derive(Debug, Clone)]
pub struct SolveOutput {
    pub ledger: EnergyLedger,
    pub final_state: SolverState,
    pub max_balance_residual: [f64; 2],
}

/// Direct solve of `(e, n)` over the configured horizon, optionally stopping
/// early at `stop_at` or continuing from a checkpoint.
pub fn solve(cfg: &ExperimentConfig, stop_at: Option<f64>, resume: Option<&Checkpoint>) -> LabResult<SolveOutput> {
    let sc = cfg.solver_config().context("solve")?;
    let data = cfg.data_spec();
    sc.validate().context("solve")?;
    sc.check_causal(data.support_radius()).context("solve")?;
    data.validate(&sc.grid).context("solve")?;
    let mut run_cfg = sc;
    if let Some(t) = stop_at {
        run_cfg.t_max = t.clamp(sc.t0 + sc.dt(), sc.t_max);
    }
    let spec = GhostWeightSpec::new(cfg.ghost.delta).context("solve")?;
    let stride = sc.snapshot_stride;
    let mut ge = GhostTracker::new(&spec, 0, stride);
    let mut gn = GhostTracker::new(&spec, 1, stride);
    let mut ev = match resume {
        Some(ck) => Evolution::resume(run_cfg, KgzDirect::default(), ck.to_state(&sc)?).context("solve: resume")?,
        None => {
            let [e, n, _, _] = make_initial_state(&data, &sc.grid, sc.t0).context("solve")?;
            Evolution::start(run_cfg, KgzDirect::default(), &[e, n]).context("solve")?
        }
    };
    ev.run(&mut [&mut ge, &mut gn]).context("solve")?;
    let mut ledger = EnergyLedger::default();
    ledger.record_ghost("e", &ge);
    ledger.record_ghost("n", &gn);
    Ok(SolveOutput {
        ledger,
        final_state: ev.state(),
        max_balance_residual: [ge.max_relative_residual(), gn.max_relative_residual()],
    })
}

pub fn energy_table(ledger: &EnergyLedger) -> Table {
    let mut t = Table::new("energies.csv", &["t", "component", "kind", "value"]);
    for e in ledger.sorted() {
        t.push(vec![
            num(e.time),
            e.component.clone(),
            e.kind.name().to_string(),
            num(e.value),
        ]);
    }
    t
}

/// Upper end of the bracket searched for the largest contracting size.
pub const EPS0_HI: f64 = 4.0;
pub const EPS0_ROUNDS: usize = 5;

#[derive(Debug, Clone)]
pub struct PicardSweep {
    pub runs: Vec<(f64, PicardRun)>,
    /// Picard limit against the direct solve, per run.
    pub limits: Vec<LimitCheck>,
    pub eps0: Option<Eps0Search>,
}

/// Picard runs for each size, in the given order, on the current pool.
pub fn picard_sweep(pc: &PicardConfig, eps_list: &[f64]) -> LabResult<Vec<(f64, PicardRun)>> {
    eps_list
        .par_iter()
        .map(|&e| {
            picard_iterate(&pc.with_eps(e))
                .map(|r| (e, r))
                .context(&format!("picard eps={e}"))
        })
        .collect()
}

/// The sweep plus limit checks and, when `search_eps0` is set, a bisection
/// for the contraction threshold starting from the largest listed size.
pub fn picard_full(pc: &PicardConfig, eps_list: &[f64], search_eps0: bool) -> LabResult<PicardSweep> {
    let runs = picard_sweep(pc, eps_list)?;
    let limits = runs
        .par_iter()
        .map(|(e, r)| limit_check(r).context(&format!("picard limit eps={e}")))
        .collect::<LabResult<Vec<_>>>()?;
    let lo = runs
        .iter()
        .filter(|(_, r)| r.contracted())
        .map(|(e, _)| *e)
        .reduce(f64::max);
    let eps0 = match lo {
        Some(lo) if search_eps0 && lo < EPS0_HI => {
            Some(find_eps0(pc, lo, EPS0_HI, EPS0_ROUNDS).context("picard eps0")?)
        }
        _ => None,
    };
    Ok(PicardSweep { runs, limits, eps0 })
}

pub fn picard_table(runs: &[(f64, PicardRun)]) -> Table {
    let mut t = Table::new(
        "picard.csv",
        &[
            "eps",
            "k",
            "d_k",
            "rho_k",
            "x_norm_total",
            "tier_energy",
            "tier_sup_psi",
            "tier_sup_phi",
        ],
    );
    for (eps, run) in runs {
        let ratios = run.ratios();
        for (k, x) in run.distances.iter().enumerate() {
            t.push(vec![
                num(*eps),
                k.to_string(),
                num(x.total()),
                opt(ratios.get(k).copied().flatten()),
                num(x.total()),
                num(x.energy),
                num(x.sup_psi()),
                num(x.sup_phi),
            ]);
        }
    }
    t
}

/// Contraction summary; the power-law fit needs four sizes or more.
pub fn contraction_table(sweep: &PicardSweep) -> (Table, Option<ScalingTable>) {
    let rows: Vec<ScalingRow> = sweep.runs.iter().map(|(_, r)| ScalingRow::of(r)).collect();
    let mut t = Table::new(
        "contraction.csv",
        &[
            "eps",
            "eps_label",
            "max_rho",
            "contracted",
            "diverged_at",
            "limit_error",
            "self_convergence",
        ],
    );
    for (((_, run), row), lim) in sweep.runs.iter().zip(&rows).zip(&sweep.limits) {
        t.push(vec![
            num(row.eps),
            num(row.eps_label),
            opt(row.max_ratio),
            row.contracted.to_string(),
            run.diverged_at.map(|k| k.to_string()).unwrap_or_default(),
            num(lim.picard_error),
            num(lim.self_convergence),
        ]);
    }
    let fit = (rows.len() >= 4).then(|| ScalingTable::from_rows(rows));
    (t, fit)
}

/// Every size probed by the threshold search.
pub fn eps0_table(search: &Eps0Search) -> Table {
    let mut t = Table::new("eps0.csv", &["eps", "max_rho", "contracted"]);
    for r in &search.evaluations {
        t.push(vec![num(r.eps), opt(r.max_ratio), r.contracted.to_string()]);
    }
    t
}

pub fn foliation(cfg: &FoliationConfig) -> LabResult<GrowthTable> {
    foliation_sweep(cfg, &QKind::ALL).context("compare-foliations")
}

pub fn growth_tables(table: &GrowthTable) -> (Table, Table) {
    let mut summary = Table::new(
        "growth.csv",
        &["Q", "foliation", "t_or_s", "integral", "c0", "c1", "classification"],
    );
    let mut curves = Table::new("growth_curves.csv", &["Q", "foliation", "t_or_s", "integral"]);
    for r in &table.rows {
        let (x, i) = (
            r.x.last().copied().unwrap_or(0.0),
            r.integral.last().copied().unwrap_or(0.0),
        );
        summary.push(vec![
            r.q.name().to_string(),
            r.foliation.name().to_string(),
            num(x),
            num(i),
            num(r.c0),
            num(r.c1),
            r.classification.name().to_string(),
        ]);
        for (x, i) in r.x.iter().zip(&r.integral) {
            curves.push(vec![
                r.q.name().to_string(),
                r.foliation.name().to_string(),
                num(*x),
                num(*i),
            ]);
        }
    }
    (summary, curves)
}

/// Series recorded by the `decay` subcommand.
pub const DECAY_SERIES: [(&str, WeightKind); 4] = [
    ("e", WeightKind::Unit),
    ("e", WeightKind::TPlusR32),
    ("n", WeightKind::Unit),
    ("n", WeightKind::TPlusRTMinusRHalf),
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayRow {
    pub component: &'static str,
    pub weight: &'static str,
    pub t_lo: f64,
    pub t_hi: f64,
    pub status: &'static str,
    pub exponent: Option<f64>,
    pub exponent_se: Option<f64>,
    pub max_over_median: Option<f64>,
}

/// Weighted sups of the divergence-form run and power-law fits on
/// `[10, t_max]` (or `[5, t_max]` for short runs).
pub fn decay(cfg: &ExperimentConfig) -> LabResult<(Table, Vec<DecayRow>)> {
    let sc = cfg.solver_config().context("decay")?;
    let data = cfg.data_spec();
    data.validate(&sc.grid).context("decay")?;
    let traj = solve_kgz_reformulated(sc, &data, &mut []).context("decay")?;
    let mut t = Table::new("decay.csv", &["t", "component", "weight_kind", "weighted_sup"]);
    let mut fits = Vec::new();
    let t_hi = sc.t_max;
    let t_lo = if t_hi >= 20.0 { 10.0 } else { 5.0 };
    for (comp, w) in DECAY_SERIES {
        let series = sup_series(&traj, comp, w).context("decay")?;
        for (tt, v) in &series {
            t.push(vec![num(*tt), comp.to_string(), w.name().to_string(), num(*v)]);
        }
        let row = match fit_power_law(&series, w, t_lo, t_hi) {
            Ok(f) => DecayRow {
                component: comp,
                weight: w.name(),
                t_lo,
                t_hi,
                status: if f.status == FitStatus::Fitted {
                    "fitted"
                } else {
                    "degenerate"
                },
                exponent: (f.status == FitStatus::Fitted).then_some(f.exponent),
                exponent_se: (f.status == FitStatus::Fitted).then_some(f.exponent_se),
                max_over_median: Some(f.max_over_median()),
            },
            Err(_) => DecayRow {
                component: comp,
                weight: w.name(),
                t_lo,
                t_hi,
                status: "insufficient",
                exponent: None,
                exponent_se: None,
                max_over_median: None,
            },
        };
        fits.push(row);
    }
    Ok((t, fits))
}

pub fn decay_fit_table(rows: &[DecayRow]) -> Table {
    let mut t = Table::new(
        "decay_fits.csv",
        &[
            "component",
            "weight_kind",
            "t_lo",
            "t_hi",
            "status",
            "exponent",
            "exponent_se",
            "max_over_median",
        ],
    );
    for r in rows {
        t.push(vec![
            r.component.to_string(),
            r.weight.to_string(),
            num(r.t_lo),
            num(r.t_hi),
            r.status.to_string(),
            opt(r.exponent),
            opt(r.exponent_se),
            opt(r.max_over_median),
        ]);
    }
    t
}

/// Measured inequality constants.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityConstants {
    /// Largest `C_KS(t)` over the evaluation times.
    pub ks: f64,
    pub ks_rows: Vec<(f64, f64)>,
    /// Conformal estimate constant on `t >= 5`.
    pub conformal: f64,
    /// `max sup <r><t-r>|dd nD| / eps^2` on `t >= 5`.
    pub kubota: f64,
    /// Largest Georgiev ratio on `t >= 5`.
    pub georgiev: f64,
    pub partition_defect: f64,
    /// `(check, t, value)` series.
    pub series: Vec<(&'static str, f64, f64)>,
}

pub const CONSTANT_T_LO: f64 = 5.0;
/// Horizon of the free wave used for the Klainerman-Sobolev constant.
pub const KS_HORIZON: f64 = 80.0;
pub const KS_TIMES: [f64; 3] = [10.0, 20.0, 40.0];

fn ks_constant(dr: f64, cfl: f64) -> kgz_core::Result<Vec<(f64, f64)>> {
    let data = InitialDataSpec {
        family: DataFamily::Gaussian,
        eps: 1.0,
        sigma: 1.0,
        center: 4.0,
        amplitudes: [1.0, 0.0, 0.0, 0.0],
    };
    let grid = SolverConfig::causal_grid(data.support_radius(), KS_HORIZON, dr, cfl)?;
    let mut sc = SolverConfig::new(grid, 0.0, KS_HORIZON);
    sc.cfl = cfl;
    let u = RadialState {
        grid,
        t: 0.0,
        w: data.sample(&grid, 0),
        wt: data.sample(&grid, 1),
    };
    let mut ks = KsTracker::new(0, (0.5 / sc.dt()).round() as usize)?;
    let mut ev = Evolution::start(sc, FreeSystem::new(vec![Component::new("u", 0.0)]), &[u])?;
    ev.run(&mut [&mut ks])?;
    let rep = klainerman_sobolev_check(&ks.samples, &KS_TIMES)?;
    Ok(rep.rows.into_iter().filter_map(|(t, c)| c.map(|c| (t, c))).collect())
}

/// Klainerman-Sobolev on a free wave; conformal, Kubota and Georgiev on the
/// divergence-form run of the configured data over `[time.t0, time.t_max]`.
pub fn inequalities(cfg: &ExperimentConfig) -> LabResult<InequalityConstants> {
    let dr = cfg.grid.dr;
    let cfl = cfg.time.cfl;
    let (ks_rows, kgz) = rayon::join(
        || ks_constant(dr, cfl).context("inequalities: klainerman-sobolev"),
        || -> LabResult<_> {
            let mut sc = cfg.solver_config().context("inequalities")?;
            let data = cfg.data_spec();
            data.validate(&sc.grid).context("inequalities")?;
            sc.snapshot_stride = ((0.25 / sc.dt()).round() as usize).max(1);
            let stride = ((0.5 / sc.dt()).round() as usize).max(1);
            let mut conf = ConformalTracker::new(2, stride);
            let mut geo = GeorgievTracker::new(0, stride).context("inequalities")?;
            let traj = solve_kgz_reformulated(sc, &data, &mut [&mut conf, &mut geo]).context("inequalities")?;
            let kub = kubota_bound_check(&traj).context("inequalities: kubota")?;
            Ok((conf, geo, kub))
        },
    );
    let ks_rows = ks_rows?;
    let (conf, geo, kub) = kgz?;
    let mut series = Vec::new();
    for (t, c) in &ks_rows {
        series.push(("ks", *t, *c));
    }
    for (t, _, _, r) in conf.estimate() {
        series.push(("conformal", t, r));
    }
    for (t, v) in &kub {
        series.push(("kubota", *t, *v));
    }
    for (t, _, _, r) in geo.report() {
        series.push(("georgiev", t, r));
    }
    let partition_defect = partition_check(&PartitionSpec, 12);
    series.push(("partition_defect", 0.0, partition_defect));
    Ok(InequalityConstants {
        ks: ks_rows.iter().map(|r| r.1).fold(0.0, f64::max),
        ks_rows,
        conformal: conf.constant(CONSTANT_T_LO),
        kubota: kub
            .iter()
            .filter(|r| r.0 >= CONSTANT_T_LO)
            .map(|r| r.1)
            .fold(0.0, f64::max),
        georgiev: geo.max_ratio(CONSTANT_T_LO),
        partition_defect,
        series,
    })
}

pub fn constants_table(c: &InequalityConstants) -> Table {
    let mut t = Table::new("constants.csv", &["check", "t", "value"]);
    for (name, tt, v) in &c.series {
        t.push(vec![name.to_string(), num(*tt), num(*v)]);
    }
    for (name, v) in [
        ("ks_max", c.ks),
        ("conformal_max", c.conformal),
        ("kubota_max", c.kubota),
        ("georgiev_max", c.georgiev),
    ] {
        t.push(vec![name.to_string(), num(CONSTANT_T_LO), num(v)]);
    }
    t
}
