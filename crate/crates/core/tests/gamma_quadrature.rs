//! `||Gamma^I w||` from the symbolic radial tables against a full 3-D
//! evaluation: jets at the 26 Lebedev nodes of each sphere, Simpson in `r`.

use kgz_core::jets::{apply_vf, AnalyticFamily, SpacetimePoint};
use kgz_core::radial::{gamma_l2_table, word_label, RadialDerivs, RadialGrid};

fn lebedev26() -> Vec<([f64; 3], f64)> {
    let mut out = Vec::new();
    for a in 0..3 {
        for s in [-1.0, 1.0] {
            let mut v = [0.0; 3];
            v[a] = s;
            out.push((v, 1.0 / 21.0));
        }
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for (a, b) in [(0, 1), (0, 2), (1, 2)] {
        for sa in [-h, h] {
            for sb in [-h, h] {
                let mut v = [0.0; 3];
                v[a] = sa;
                v[b] = sb;
                out.push((v, 4.0 / 105.0));
            }
        }
    }
    let c = 1.0 / 3f64.sqrt();
    for sx in [-c, c] {
        for sy in [-c, c] {
            for sz in [-c, c] {
                out.push(([sx, sy, sz], 9.0 / 280.0));
            }
        }
    }
    out
}

fn word_value(fam: &AnalyticFamily, word: &[kgz_core::jets::VectorFieldKind], p: &SpacetimePoint) -> f64 {
    let mut j = fam.jet(p, word.len() as u8);
    for k in word.iter().rev() {
        j = apply_vf(*k, &j, p).unwrap();
    }
    j.value
}

#[test]
fn gamma_table_matches_lebedev_simpson() {
    let nodes = lebedev26();
    let wsum: f64 = nodes.iter().map(|n| n.1).sum();
    assert!((wsum - 1.0).abs() < 1e-15);
    let t = 2.5;
    let fam = AnalyticFamily::radial_gaussian(1.3, 1.4, 1.0, 3.0);
    let grid = RadialGrid::with_radius(14.0, 0.05).unwrap();
    let derivs = RadialDerivs::from_fn(grid, t, 2, |k, l, r| {
        let j = fam.jet(&SpacetimePoint::new(t, [r, 0.0, 0.0]), 2);
        match (k, l) {
            (0, 0) => j.value,
            (1, 0) => j.d1[0],
            (0, 1) => j.d1[1],
            (2, 0) => j.d2[0][0],
            (1, 1) => j.d2[0][1],
            (0, 2) => j.d2[1][1],
            _ => unreachable!(),
        }
    });
    let table = gamma_l2_table(&derivs, 2).unwrap();
    assert_eq!(table.len(), 1 + 10 + 100);
    let (n, r_max) = (2800usize, 14.0);
    let h = r_max / n as f64;
    let base = table[0].1;
    let mut worst = 0.0f64;
    for (word, got) in &table {
        let mut acc = 0.0;
        for i in 0..=n {
            let r = i as f64 * h;
            let simpson = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let mut sphere = 0.0;
            if r > 0.0 {
                for (dir, wt) in &nodes {
                    let p = SpacetimePoint::new(t, [r * dir[0], r * dir[1], r * dir[2]]);
                    sphere += wt * word_value(&fam, word, &p).powi(2);
                }
            }
            acc += simpson * r * r * sphere;
        }
        let want = (4.0 * std::f64::consts::PI * acc * h / 3.0).sqrt();
        // words that vanish on radial fields leave rounding noise only
        let rel = (got - want).abs() / want.max(1e-4 * base);
        assert!(rel <= 1e-10, "{}: table {got} quadrature {want}", word_label(word));
        worst = worst.max(rel);
    }
    assert!(worst <= 1e-10);
}
