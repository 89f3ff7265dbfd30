use kgz_core::energies::natural_energy;
use kgz_core::evolve::{solve_kgz, Component, Evolution, Frame, FreeSystem, Observer, SolverConfig};
use kgz_core::radial::{InitialDataSpec, RadialState};
use kgz_core::Result;

fn kgz_config(dr: f64, t_max: f64, data: &InitialDataSpec) -> SolverConfig {
    let grid = SolverConfig::causal_grid(data.support_radius(), t_max, dr, 0.9).unwrap();
    let mut cfg = SolverConfig::new(grid, 0.0, t_max);
    cfg.snapshot_stride = 7;
    cfg
}

#[test]
fn identical_inputs_give_bit_identical_trajectories() {
    let data = InitialDataSpec {
        eps: 0.3,
        amplitudes: [1.0, -0.5, 0.7, 0.2],
        ..Default::default()
    };
    let cfg = kgz_config(0.05, 6.0, &data);
    let a = solve_kgz(cfg, &data, &mut []).unwrap();
    let b = solve_kgz(cfg, &data, &mut []).unwrap();
    assert_eq!(a.snapshots.len(), b.snapshots.len());
    for (x, y) in a.snapshots.iter().zip(&b.snapshots) {
        assert_eq!(x.t.to_bits(), y.t.to_bits());
        for (f, g) in x.fields.iter().zip(&y.fields) {
            assert!(f.0.iter().zip(&g.0).all(|(p, q)| p.to_bits() == q.to_bits()));
            assert!(f.1.iter().zip(&g.1).all(|(p, q)| p.to_bits() == q.to_bits()));
        }
    }
    assert_eq!(a.final_state.w, b.final_state.w);
    assert_eq!(a.final_state.v, b.final_state.v);
}

/// Largest `|w|` on nodes with `r >= R - 2` over every level.
struct OuterShell {
    first: usize,
    worst: f64,
    frames: usize,
}

impl Observer for OuterShell {
    fn observe(&mut self, frame: &Frame<'_>) -> Result<()> {
        for c in 0..frame.len() {
            for x in &frame.w(c)[self.first..] {
                self.worst = self.worst.max(x.abs());
            }
        }
        self.frames += 1;
        Ok(())
    }
}

#[test]
fn fields_vanish_near_the_outer_boundary() {
    let data = InitialDataSpec {
        eps: 0.5,
        ..Default::default()
    };
    let cfg = kgz_config(0.04, 12.0, &data);
    let margin = (2.0 / cfg.grid.dr()).ceil() as usize;
    let mut shell = OuterShell {
        first: cfg.grid.nr() - margin,
        worst: 0.0,
        frames: 0,
    };
    solve_kgz(cfg, &data, &mut [&mut shell]).unwrap();
    assert_eq!(shell.frames, cfg.steps() + 1);
    assert_eq!(shell.worst, 0.0);
}

struct Energies(Vec<f64>);

impl Observer for Energies {
    fn observe(&mut self, frame: &Frame<'_>) -> Result<()> {
        self.0.push(natural_energy(&frame.window(0), frame.comps[0].mass));
        Ok(())
    }
}

fn free_drift(dr: f64, mass: f64) -> f64 {
    let data = InitialDataSpec {
        eps: 1.0,
        center: 3.0,
        ..Default::default()
    };
    let cfg = kgz_config(dr, 20.0, &data);
    let u = RadialState {
        grid: cfg.grid,
        t: 0.0,
        w: data.sample(&cfg.grid, 0),
        wt: data.sample(&cfg.grid, 1),
    };
    let sys = FreeSystem::new(vec![Component::new("u", mass)]);
    let mut ev = Evolution::start(cfg, sys, &[u]).unwrap();
    let mut e = Energies(Vec::new());
    ev.run(&mut [&mut e]).unwrap();
    let e0 = e.0[0];
    e.0.iter().map(|x| (x - e0).abs() / e0).fold(0.0, f64::max)
}

#[test]
fn free_energy_drift_falls_like_dt_squared() {
    for mass in [0.0, 1.0] {
        let coarse = free_drift(0.08, mass);
        let fine = free_drift(0.04, mass);
        let order = (coarse / fine).log2();
        assert!(fine < 1e-3, "m = {mass}: drift {fine}");
        assert!(order > 1.8, "m = {mass}: drift {coarse} -> {fine}, order {order}");
    }
}
