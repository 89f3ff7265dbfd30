//! Exact sphere averages of monomials in the unit normal `n = x / r`.

use alloc::vec::Vec;

use crate::math;

fn double_factorial_odd(k: i32) -> f64 {
    // (k)!! for odd k >= -1
    let mut acc = 1.0;
    let mut j = k;
    while j > 1 {
        acc *= j as f64;
        j -= 2;
    }
    acc
}

/// Average of `n1^e1 n2^e2 n3^e3` over the unit sphere.
///
/// Vanishes unless every exponent is even; otherwise equals
/// `(e1-1)!! (e2-1)!! (e3-1)!! / (e1+e2+e3+1)!!`.
pub fn sphere_moment(e: [u32; 3]) -> f64 {
    if e.iter().any(|k| k % 2 == 1) {
        return 0.0;
    }
    let num: f64 = e.iter().map(|&k| double_factorial_odd(k as i32 - 1)).product();
    num / double_factorial_odd((e[0] + e[1] + e[2]) as i32 + 1)
}

/// The low-order moments used throughout the radial reductions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngularMomentTable {
    /// `<n_a^2>`
    pub second: f64,
    /// `<n_a n_b>`, `a != b`
    pub mixed_second: f64,
    /// `<n_a^4>`
    pub fourth: f64,
    /// `<n_a^2 n_b^2>`, `a != b`
    pub mixed_fourth: f64,
}

impl AngularMomentTable {
    pub const EXACT: AngularMomentTable = AngularMomentTable {
        second: 1.0 / 3.0,
        mixed_second: 0.0,
        fourth: 1.0 / 5.0,
        mixed_fourth: 1.0 / 15.0,
    };
}

/// A finite set of unit directions closed under coordinate permutations and
/// sign changes, used to approximate suprema over the sphere.
pub fn symmetric_directions() -> Vec<[f64; 3]> {
    let mut seeds: Vec<[i32; 3]> = Vec::new();
    for base in [
        [1, 0, 0],
        [1, 1, 0],
        [1, 1, 1],
        [1, 2, 0],
        [1, 1, 2],
        [1, 2, 3],
        [1, 2, 2],
        [1, 3, 0],
    ] {
        for perm in PERMS {
            let v = [base[perm[0]], base[perm[1]], base[perm[2]]];
            for signs in 0..8 {
                let mut w = v;
                for (k, c) in w.iter_mut().enumerate() {
                    if signs & (1 << k) != 0 {
                        *c = -*c;
                    }
                }
                if !seeds.contains(&w) {
                    seeds.push(w);
                }
            }
        }
    }
    seeds
        .into_iter()
        .map(|v| {
            let n = math::sqrt((v[0] * v[0] + v[1] * v[1] + v[2] * v[2]) as f64);
            [v[0] as f64 / n, v[1] as f64 / n, v[2] as f64 / n]
        })
        .collect()
}

pub(crate) const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
