use kgz_core::diagnostics::{partition_check, PartitionSpec};
use kgz_core::evolve::SolverConfig;
use kgz_core::picard::{solution_map, x_norm, FieldHistory, PicardConfig};
use kgz_core::radial::{weighted_sup, InitialDataSpec, RadialGrid, WeightKind};
use proptest::prelude::*;

fn small_config() -> SolverConfig {
    SolverConfig::new(RadialGrid::new(160, 0.05).unwrap(), 2.0, 3.0)
}

/// `a exp(-(r - c)^2 / s^2 - b t)` sampled on every level of `cfg`, cut
/// to zero beyond `r = 8`.
fn history(cfg: SolverConfig, mass: f64, [a, c, s, b]: [f64; 4]) -> FieldHistory {
    let levels = (0..cfg.steps() + 5)
        .map(|j| {
            let t = cfg.time(j as i64 - 2);
            cfg.grid.sample(|r| {
                if r > 8.0 {
                    0.0
                } else {
                    a * (-(r - c) * (r - c) / (s * s) - b * t).exp()
                }
            })
        })
        .collect();
    FieldHistory::from_levels(cfg, mass, levels).unwrap()
}

fn params() -> impl Strategy<Value = [f64; 4]> {
    (-1.0f64..1.0, 0.0f64..3.0, 0.8f64..1.6, 0.0f64..0.3).prop_map(|(a, c, s, b)| [a, c, s, b])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn x_norm_tiers_satisfy_the_triangle_inequality(p1 in params(), p2 in params(), f1 in params(), f2 in params()) {
        let cfg = small_config();
        let (a, b) = (history(cfg, 1.0, p1), history(cfg, 1.0, p2));
        let (u, v) = (history(cfg, 0.0, f1), history(cfg, 0.0, f2));
        let xa = x_norm(&a, &u, 1, 0.05, 3).unwrap();
        let xb = x_norm(&b, &v, 1, 0.05, 3).unwrap();
        let sum = x_norm(&a.combine(1.0, &b, 1.0).unwrap(), &u.combine(1.0, &v, 1.0).unwrap(), 1, 0.05, 3).unwrap();
        let slack = 1e-12 * (xa.total() + xb.total());
        prop_assert!(sum.energy <= xa.energy + xb.energy + slack);
        prop_assert!(sum.sup_psi_decay <= xa.sup_psi_decay + xb.sup_psi_decay + slack);
        prop_assert!(sum.sup_psi_sharp <= xa.sup_psi_sharp + xb.sup_psi_sharp + slack);
        prop_assert!(sum.sup_phi <= xa.sup_phi + xb.sup_phi + slack);
    }

    #[test]
    fn x_norm_is_absolutely_homogeneous(p in params(), f in params(), c in -4.0f64..4.0) {
        let cfg = small_config();
        let (a, u) = (history(cfg, 1.0, p), history(cfg, 0.0, f));
        let x = x_norm(&a, &u, 1, 0.05, 3).unwrap().total();
        let y = x_norm(&a.scaled(c), &u.scaled(c), 1, 0.05, 3).unwrap().total();
        prop_assert!((c.abs() * x - y).abs() <= 1e-12 * (1.0 + y));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn weighted_sup_is_monotone_under_domination(
        vals in proptest::collection::vec(-1.0f64..1.0, 64),
        shrink in proptest::collection::vec(0.0f64..=1.0, 64),
        t in 2.0f64..50.0,
        k in 0usize..4,
    ) {
        let grid = RadialGrid::new(64, 0.1).unwrap();
        let small: Vec<f64> = vals.iter().zip(&shrink).map(|(v, s)| v * s).collect();
        let kind = [
            WeightKind::Unit,
            WeightKind::TPlusR32,
            WeightKind::TPlusR32Delta(0.05),
            WeightKind::TPlusRTMinusRHalf,
        ][k];
        prop_assert!(weighted_sup(&small, &grid, t, kind) <= weighted_sup(&vals, &grid, t, kind));
    }

    #[test]
    fn partition_sums_to_one_at_any_point(s in 0.0f64..1000.0) {
        let p = PartitionSpec;
        let j_max = p.levels_for(s.max(1.0)) + 1;
        let mut sum = 0.0;
        for j in 0..=j_max {
            let v = p.p(j, s);
            prop_assert!((-1e-15..=1.0 + 1e-15).contains(&v));
            sum += v;
        }
        prop_assert!((sum - 1.0).abs() < 1e-12);
    }
}

#[test]
fn partition_defect_over_twelve_levels() {
    assert!(partition_check(&PartitionSpec, 12) < 1e-12);
}

fn picard_small() -> PicardConfig {
    PicardConfig {
        dr: 0.05,
        t_max: 4.0,
        data: InitialDataSpec {
            eps: 0.0,
            ..Default::default()
        },
        ..Default::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    // with zero data, e~ is linear in phi for fixed Psi and n~ ignores phi
    #[test]
    fn solution_map_is_linear_in_phi(p in params(), f1 in params(), f2 in params(), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let pc = picard_small();
        let cfg = pc.solver().unwrap();
        let psi = history(cfg, 1.0, p);
        let (u, v) = (history(cfg, 0.0, f1), history(cfg, 0.0, f2));
        let (e1, n1) = solution_map(&psi, &u, &pc.data, cfg).unwrap();
        let (e2, _) = solution_map(&psi, &v, &pc.data, cfg).unwrap();
        let mix = u.combine(a, &v, b).unwrap();
        let (e, n) = solution_map(&psi, &mix, &pc.data, cfg).unwrap();
        let want = e1.combine(a, &e2, b).unwrap();
        let scale = want.max_abs_diff(&FieldHistory::zero(cfg, 1.0)).unwrap().max(1e-300);
        prop_assert!(e.max_abs_diff(&want).unwrap() <= 1e-11 * scale);
        prop_assert_eq!(n.max_abs_diff(&n1).unwrap(), 0.0);
    }
}

#[test]
fn zero_inputs_and_zero_data_give_zero() {
    let pc = picard_small();
    let cfg = pc.solver().unwrap();
    let (e, n) = solution_map(
        &FieldHistory::zero(cfg, 1.0),
        &FieldHistory::zero(cfg, 0.0),
        &pc.data,
        cfg,
    )
    .unwrap();
    assert!(e.is_zero() && n.is_zero());
}
