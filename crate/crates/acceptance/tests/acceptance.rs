//! Acceptance criteria 1-8, one pass/fail line each.
//!
//! Runs without the libtest harness so every line is printed whether the
//! criterion passes or not. Arguments select criteria by substring
//! (`cargo test --test acceptance -- AC6`); the process fails if any
//! selected criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use kgz_core::diagnostics::{fit_power_law, foliation_sweep, sup_series, FoliationConfig, Growth, QKind};
use kgz_core::energies::{natural_energy, GammaGhostTracker, GhostTracker, GhostWeightSpec};
use kgz_core::evolve::{solve_kgz, Component, Evolution, Frame, FreeSystem, Observer, SolverConfig};
use kgz_core::picard::{limit_check, CONTRACTION_TARGET};
use kgz_core::radial::norms::GammaTable;
use kgz_core::radial::{word_label, InitialDataSpec, RadialState, WeightKind};
use kgz_lab::config::ExperimentConfig;
use kgz_lab::experiments::{identities, inequalities, picard_sweep, IDENTITY_TOL};

type Outcome = Result<String, String>;

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn sci(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(", ")
}

fn within_budget(start: Instant, budget: Duration) -> (bool, String) {
    let e = start.elapsed();
    (
        e <= budget,
        format!("{:.1} s of {} s", e.as_secs_f64(), budget.as_secs()),
    )
}

fn causal(data: &InitialDataSpec, dr: f64, t0: f64, t_max: f64) -> SolverConfig {
    let grid = SolverConfig::causal_grid(data.support_radius(), t_max - t0, dr, SolverConfig::DEFAULT_CFL).unwrap();
    SolverConfig::new(grid, t0, t_max)
}

fn ac1() -> Outcome {
    let start = Instant::now();
    let rows = identities(20_241_015, 1000).map_err(|e| e.to_string())?;
    let worst = rows.iter().map(|r| r.relative()).fold(0.0, f64::max);
    let failing: Vec<_> = rows
        .iter()
        .filter(|r| r.relative() > IDENTITY_TOL)
        .map(|r| r.check)
        .collect();
    let (fast, time) = within_budget(start, Duration::from_secs(10));
    verdict(
        failing.is_empty() && fast && rows.iter().all(|r| r.samples >= 1000),
        format!(
            "{} checks x 1000 samples, worst relative residual {worst:.2e}, failing {failing:?}, {time}",
            rows.len()
        ),
    )
}

/// Largest deviation from the d'Alembert solution with odd extension,
/// `r w(r, t) = (G(r + t) + G(r - t)) / 2`, `G(x) = x f(|x|)`.
struct DAlembert<F: Fn(f64) -> f64> {
    f: F,
    worst: f64,
}

impl<F: Fn(f64) -> f64> Observer for DAlembert<F> {
    fn observe(&mut self, frame: &Frame<'_>) -> kgz_core::Result<()> {
        let t = frame.t;
        let g = |x: f64| x * (self.f)(x.abs());
        for (i, w) in frame.w(0).iter().enumerate() {
            let r = frame.grid.r(i);
            let exact = (g(r + t) + g(r - t)) / (2.0 * r);
            self.worst = self.worst.max((w - exact).abs());
        }
        Ok(())
    }
}

struct NaturalEnergy(Vec<f64>);

impl Observer for NaturalEnergy {
    fn observe(&mut self, frame: &Frame<'_>) -> kgz_core::Result<()> {
        self.0.push(natural_energy(&frame.window(0), frame.comps[0].mass));
        Ok(())
    }
}

struct FinalLevel(Vec<Vec<f64>>);

impl Observer for FinalLevel {
    fn observe(&mut self, frame: &Frame<'_>) -> kgz_core::Result<()> {
        if frame.last {
            self.0 = (0..frame.len()).map(|c| frame.w(c).to_vec()).collect();
        }
        Ok(())
    }
}

/// Gaussian cut to exactly zero past eight widths.
fn gaussian(r: f64, c: f64, s: f64) -> f64 {
    let x = (r - c) / s;
    if x.abs() > 8.0 {
        0.0
    } else {
        (-x * x).exp()
    }
}

fn free_run(dr: f64, t_max: f64, mass: f64, w0: impl Fn(f64) -> f64, support: f64, obs: &mut dyn Observer) {
    let grid = SolverConfig::causal_grid(support, t_max, dr, SolverConfig::DEFAULT_CFL).unwrap();
    let cfg = SolverConfig::new(grid, 0.0, t_max);
    let u = RadialState {
        grid,
        t: 0.0,
        w: grid.sample(&w0),
        wt: vec![0.0; grid.nr()],
    };
    let mut ev = Evolution::start(cfg, FreeSystem::new(vec![Component::new("u", mass)]), &[u]).unwrap();
    ev.run(&mut [obs]).unwrap();
}

/// `max |u_coarse(i) - u_fine(3 i + 1)|`; with 3:1 refinement of the
/// staggered grid the coarse nodes are fine nodes.
fn coarse_diff(coarse: &[Vec<f64>], fine: &[Vec<f64>]) -> f64 {
    let mut d = 0.0f64;
    for (c, f) in coarse.iter().zip(fine) {
        for (i, x) in c.iter().enumerate() {
            d = d.max((x - f.get(3 * i + 1).copied().unwrap_or(0.0)).abs());
        }
    }
    d
}

fn ac2() -> Outcome {
    let start = Instant::now();
    let (dr, c, s) = (0.05, 6.0, 1.0);
    let f = move |r: f64| gaussian(r, c, s);
    let mut da = DAlembert { f, worst: 0.0 };
    free_run(dr, 12.0, 0.0, f, c + 8.0 * s, &mut da);
    let wave_tol = 5.0 * dr * dr;
    let wave_ok = da.worst <= wave_tol;

    let mut en = NaturalEnergy(Vec::new());
    free_run(0.02, 50.0, 1.0, |r| gaussian(r, 3.0, 1.0), 11.0, &mut en);
    let e0 = en.0[0];
    let drift = en.0.iter().map(|e| (e - e0).abs() / e0).fold(0.0, f64::max);
    let drift_ok = drift < 1e-4;

    // dt_coarse * 100 = t_max so all three runs end on the same level time.
    let data = InitialDataSpec {
        eps: 0.3,
        ..Default::default()
    };
    let drs = [0.1125, 0.0375, 0.0125];
    let t_max = 100.0 * SolverConfig::DEFAULT_CFL * drs[0];
    let finals: Vec<Vec<Vec<f64>>> = drs
        .iter()
        .map(|&h| {
            let mut fl = FinalLevel(Vec::new());
            solve_kgz(causal(&data, h, 0.0, t_max), &data, &mut [&mut fl]).unwrap();
            fl.0
        })
        .collect();
    let (d1, d2) = (coarse_diff(&finals[0], &finals[1]), coarse_diff(&finals[1], &finals[2]));
    let order = (d1 / d2).ln() / 3f64.ln();
    let (fast, time) = within_budget(start, Duration::from_secs(120));
    verdict(
        wave_ok && drift_ok && order >= 1.9 && fast,
        format!(
            "d'Alembert error {:.2e} (<= {wave_tol:.2e}), KG energy drift {drift:.2e} (< 1e-4), \
             self-convergence order {order:.3} (>= 1.9), {time}",
            da.worst
        ),
    )
}

/// `|| Gamma^I n ||` for each class with `|I| <= 1`.
struct WaveGammaNorms {
    comp: usize,
    stride: i64,
    table: GammaTable,
    samples: Vec<(f64, Vec<f64>)>,
}

impl Observer for WaveGammaNorms {
    fn observe(&mut self, frame: &Frame<'_>) -> kgz_core::Result<()> {
        if frame.step % self.stride == 0 {
            let d = frame.window(self.comp).derivs(1)?;
            self.samples.push((frame.t, self.table.class_norms(&d)?));
        }
        Ok(())
    }
}

/// `(max / min - 1, |slope per log10 t| / mean)` of a series.
fn variation(series: &[(f64, f64)]) -> (f64, f64) {
    let (lo, hi) = series
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), p| (a.min(p.1), b.max(p.1)));
    let n = series.len() as f64;
    let xs: Vec<f64> = series.iter().map(|p| p.0.log10()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / n, series.iter().map(|p| p.1).sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(series).map(|(x, p)| (x - mx) * (p.1 - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    (hi / lo - 1.0, (sxy / sxx).abs() / my)
}

fn ac3() -> Outcome {
    let start = Instant::now();
    let data = InitialDataSpec::default();
    let cfg = causal(&data, 0.02, 0.0, 100.0);
    let stride = (0.5 / cfg.dt()).round() as usize;
    let spec = GhostWeightSpec::new(0.05).unwrap();
    let mut ghost = GammaGhostTracker::new(&spec, 0, 1, stride).unwrap();
    let mut waves = WaveGammaNorms {
        comp: 1,
        stride: stride as i64,
        table: GammaTable::new(1).unwrap(),
        samples: Vec::new(),
    };
    solve_kgz(cfg, &data, &mut [&mut ghost, &mut waves]).unwrap();
    let window = |t: f64| (5.0..=100.0).contains(&t);
    // (variation, slope, label) of the worst series per field
    let worst = |series: Vec<(String, Vec<(f64, f64)>)>| {
        series
            .into_iter()
            .fold((0.0f64, 0.0f64, String::new()), |acc, (label, s)| {
                let (v, sl) = variation(&s);
                if v > acc.0 {
                    (v, acc.1.max(sl), label)
                } else {
                    (acc.0, acc.1.max(sl), acc.2)
                }
            })
    };
    let e = worst(
        ghost
            .classes()
            .iter()
            .enumerate()
            .map(|(k, (w, _))| {
                let s = ghost
                    .samples
                    .iter()
                    .filter(|s| window(s.t))
                    .map(|s| (s.t, s.total(k).sqrt()))
                    .collect();
                (word_label(w), s)
            })
            .collect(),
    );
    let n = worst(
        waves
            .table
            .classes()
            .iter()
            .enumerate()
            .map(|(k, (w, _, _))| {
                let s = waves
                    .samples
                    .iter()
                    .filter(|s| window(s.0))
                    .map(|s| (s.0, s.1[k]))
                    .collect();
                (word_label(w), s)
            })
            .collect(),
    );
    let (fast, time) = within_budget(start, Duration::from_secs(300));
    verdict(
        e.0.max(n.0) < 0.10 && e.1.max(n.1) < 0.01 && fast,
        format!(
            "E_gst,1(Gamma^I E)^(1/2): variation {:.1}% (worst word {}), |slope| {:.2}%/decade; \
             ||Gamma^I n||: variation {:.1}% (worst word {}), |slope| {:.2}%/decade (limits 10%, 1%), {time}",
            100.0 * e.0,
            e.2,
            100.0 * e.1,
            100.0 * n.0,
            n.2,
            100.0 * n.1
        ),
    )
}

fn ac4() -> Outcome {
    let start = Instant::now();
    let data = InitialDataSpec::default();
    let mut cfg = causal(&data, 0.02, 0.0, 100.0);
    cfg.snapshot_stride = (0.25 / cfg.dt()).round() as usize;
    let traj = solve_kgz(cfg, &data, &mut []).unwrap();
    let e = sup_series(&traj, "e", WeightKind::Unit).unwrap();
    let fit = fit_power_law(&e, WeightKind::Unit, 10.0, 100.0).unwrap();
    let p_ok = (fit.exponent - 1.5).abs() <= 0.15;
    let mut n: Vec<f64> = sup_series(&traj, "n", WeightKind::TPlusRTMinusRHalf)
        .unwrap()
        .into_iter()
        .filter(|p| (5.0..=100.0).contains(&p.0))
        .map(|p| p.1)
        .collect();
    n.sort_by(f64::total_cmp);
    let median = if n.len() % 2 == 1 {
        n[n.len() / 2]
    } else {
        0.5 * (n[n.len() / 2 - 1] + n[n.len() / 2])
    };
    let ratio = n.last().unwrap() / median;
    let (fast, time) = within_budget(start, Duration::from_secs(300));
    verdict(
        p_ok && ratio < 3.0 && fast,
        format!(
            "sup|E| exponent {:.3} +- {:.3} (1.5 +- 0.15), <t+r><t-r>^(1/2)|n| max/median {ratio:.3} (< 3), {time}",
            fit.exponent, fit.exponent_se
        ),
    )
}

fn ac5() -> Outcome {
    let start = Instant::now();
    let table = foliation_sweep(&FoliationConfig::default(), &QKind::ALL).unwrap();
    let want = [
        ("du*dv", Growth::Logarithmic),
        ("dv^2", Growth::Bounded),
        ("du*v", Growth::Bounded),
        ("null(u,v)", Growth::Bounded),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (q, g) in want {
        for r in table.rows.iter().filter(|r| r.q.name() == q) {
            ok &= r.classification == g;
            parts.push(format!("{q}/{}={}", r.foliation.name(), r.classification.name()));
        }
    }
    let (fast, time) = within_budget(start, Duration::from_secs(600));
    ok &= parts.len() == 8;
    verdict(
        ok && fast,
        format!("{} (want du*dv logarithmic, others bounded), {time}", parts.join(" ")),
    )
}

fn ac6() -> Outcome {
    let start = Instant::now();
    let pc = ExperimentConfig::default().picard_config();
    let eps = [0.04, 0.02, 0.01, 0.005];
    let runs = picard_sweep(&pc, &eps).map_err(|e| e.to_string())?;
    let at = &runs[2].1;
    let ratios: Vec<f64> = at.ratios().into_iter().take(6).flatten().collect();
    let rho_ok = !ratios.is_empty() && ratios.iter().all(|r| *r <= CONTRACTION_TARGET) && at.diverged_at.is_none();
    let lim = limit_check(at).unwrap();
    let maxes: Vec<f64> = runs
        .iter()
        .map(|(_, r)| r.max_ratio().unwrap_or(f64::INFINITY))
        .collect();
    let mono = maxes.windows(2).all(|w| w[1] <= w[0]);
    let (fast, time) = within_budget(start, Duration::from_secs(900));
    verdict(
        rho_ok && lim.within(5.0) && mono && fast,
        format!(
            "eps=0.01 max rho_k(k<=5) {:.3e} (<= 0.5), limit error {:.2e} vs 5x self-convergence {:.2e}, \
             rho(eps) over {eps:?} = [{}] nonincreasing={mono}, {time}",
            ratios.iter().copied().fold(0.0, f64::max),
            lim.picard_error,
            5.0 * lim.self_convergence,
            sci(&maxes)
        ),
    )
}

fn ac7() -> Outcome {
    let data = InitialDataSpec::default();
    let residuals: Vec<[f64; 2]> = [0.04, 0.02, 0.01]
        .iter()
        .map(|&dr| {
            let cfg = causal(&data, dr, 0.0, 20.0);
            let spec = GhostWeightSpec::new(0.05).unwrap();
            let stride = (0.36 / cfg.dt()).round() as usize;
            let mut ge = GhostTracker::new(&spec, 0, stride);
            let mut gn = GhostTracker::new(&spec, 1, stride);
            solve_kgz(cfg, &data, &mut [&mut ge, &mut gn]).unwrap();
            [ge.max_relative_residual(), gn.max_relative_residual()]
        })
        .collect();
    let mut order = f64::INFINITY;
    for c in 0..2 {
        for w in residuals.windows(2) {
            order = order.min((w[0][c] / w[1][c]).log2());
        }
    }
    verdict(
        order >= 1.8,
        format!(
            "relative balance residuals e [{}], n [{}] at dr 0.04/0.02/0.01, observed order {order:.3} (>= 1.8)",
            sci(&residuals.iter().map(|r| r[0]).collect::<Vec<_>>()),
            sci(&residuals.iter().map(|r| r[1]).collect::<Vec<_>>())
        ),
    )
}

fn ac8() -> Outcome {
    let coarse = ExperimentConfig::default();
    let mut fine = coarse.clone();
    fine.grid.dr /= 2.0;
    let a = inequalities(&coarse).map_err(|e| e.to_string())?;
    let b = inequalities(&fine).map_err(|e| e.to_string())?;
    let mut ok = a.partition_defect < 1e-12 && b.partition_defect < 1e-12;
    let mut parts = Vec::new();
    for (name, x, y) in [
        ("C_KS", a.ks, b.ks),
        ("conformal", a.conformal, b.conformal),
        ("Kubota", a.kubota, b.kubota),
        ("Georgiev", a.georgiev, b.georgiev),
    ] {
        let change = (y / x - 1.0).abs();
        ok &= x.is_finite() && y.is_finite() && x > 0.0 && change <= 0.2;
        parts.push(format!("{name} {x:.4e} -> {y:.4e} ({:.2}%)", 100.0 * change));
    }
    verdict(
        ok,
        format!(
            "dr 0.02 -> 0.01: {}; partition defect {:.1e} (< 1e-12)",
            parts.join(", "),
            a.partition_defect
        ),
    )
}

type Criterion = (&'static str, &'static str, fn() -> Outcome);

const CRITERIA: [Criterion; 8] = [
    ("AC1", "identity suite", ac1),
    ("AC2", "solver verification", ac2),
    ("AC3", "uniform energy bound", ac3),
    ("AC4", "decay exponents", ac4),
    ("AC5", "foliation comparison", ac5),
    ("AC6", "Picard contraction", ac6),
    ("AC7", "ghost-weight energy balance", ac7),
    ("AC8", "inequality constants", ac8),
];

fn main() -> ExitCode {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if std::env::args().any(|a| a == "--list") {
        for (id, name, _) in CRITERIA {
            println!("{id} {name}: test");
        }
        return ExitCode::SUCCESS;
    }
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    let mut ran = 0;
    for (id, name, f) in CRITERIA {
        let label = format!("{id} {name}");
        if !filters.is_empty() && !filters.iter().any(|p| label.contains(p.as_str())) {
            continue;
        }
        ran += 1;
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(d) => println!("{label}: PASS: {d}"),
            Err(d) => {
                failed += 1;
                println!("{label}: FAIL: {d}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", ran - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
