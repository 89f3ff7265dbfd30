//! Centered finite-difference stencils on the staggered radial grid.
//!
//! Values beyond the last node are zero (the causal outer boundary keeps
//! every field compactly supported inside the grid). Across the origin the
//! array is continued by parity: radial amplitudes `w` are even, while
//! `U = r w` and first radial derivatives of even fields are odd.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn flip(self) -> Self {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }

    fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }
}

#[inline]
fn at(f: &[f64], j: isize, parity: Parity) -> f64 {
    if j < 0 {
        // staggered mirror: node -1-i sits at -r_i
        parity.sign() * f[(-1 - j) as usize]
    } else if (j as usize) < f.len() {
        f[j as usize]
    } else {
        0.0
    }
}

/// Applies the centered stencil `coeffs` (offsets `-h..=h`) scaled by `scale`.
fn apply(f: &[f64], parity: Parity, coeffs: &[f64], scale: f64, out: &mut [f64]) {
    let n = f.len();
    let h = coeffs.len() / 2;
    let edge = |i: usize, out: &mut [f64]| {
        let mut acc = 0.0;
        for (k, c) in coeffs.iter().enumerate() {
            acc += c * at(f, i as isize + k as isize - h as isize, parity);
        }
        out[i] = acc * scale;
    };
    if n <= 2 * h {
        for i in 0..n {
            edge(i, out);
        }
        return;
    }
    for i in 0..h {
        edge(i, out);
    }
    for i in h..(n - h) {
        let window = &f[i - h..=i + h];
        let mut acc = 0.0;
        for (c, v) in coeffs.iter().zip(window) {
            acc += c * v;
        }
        out[i] = acc * scale;
    }
    for i in (n - h)..n {
        edge(i, out);
    }
}

const D1: [f64; 5] = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];
const D2: [f64; 5] = [-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0];
const D3: [f64; 7] = [1.0 / 8.0, -1.0, 13.0 / 8.0, 0.0, -13.0 / 8.0, 1.0, -1.0 / 8.0];
const SECOND_DIFF: [f64; 3] = [1.0, -2.0, 1.0];

/// Fourth-order first derivative.
pub fn d1(f: &[f64], parity: Parity, dr: f64) -> Vec<f64> {
    let mut out = vec![0.0; f.len()];
    apply(f, parity, &D1, 1.0 / dr, &mut out);
    out
}

/// Fourth-order second derivative.
pub fn d2(f: &[f64], parity: Parity, dr: f64) -> Vec<f64> {
    let mut out = vec![0.0; f.len()];
    apply(f, parity, &D2, 1.0 / (dr * dr), &mut out);
    out
}

/// Fourth-order third derivative.
pub fn d3(f: &[f64], parity: Parity, dr: f64) -> Vec<f64> {
    let mut out = vec![0.0; f.len()];
    apply(f, parity, &D3, 1.0 / (dr * dr * dr), &mut out);
    out
}

/// Standard three-point second difference `(f_{i+1} - 2 f_i + f_{i-1}) / dr^2`.
pub fn second_difference_into(f: &[f64], parity: Parity, dr: f64, out: &mut [f64]) {
    apply(f, parity, &SECOND_DIFF, 1.0 / (dr * dr), out);
}

pub fn second_difference(f: &[f64], parity: Parity, dr: f64) -> Vec<f64> {
    let mut out = vec![0.0; f.len()];
    second_difference_into(f, parity, dr, &mut out);
    out
}

/// Laplacian of a radial function, `(1/r) d_rr (r w)`, second order.
pub fn laplacian2(w: &[f64], dr: f64) -> Vec<f64> {
    let u: Vec<f64> = w.iter().enumerate().map(|(i, x)| (i as f64 + 0.5) * dr * x).collect();
    let mut out = second_difference(&u, Parity::Odd, dr);
    for (i, o) in out.iter_mut().enumerate() {
        *o /= (i as f64 + 0.5) * dr;
    }
    out
}

/// Laplacian of a radial function, `(1/r) d_rr (r w)`, fourth order.
pub fn laplacian4(w: &[f64], dr: f64) -> Vec<f64> {
    let u: Vec<f64> = w.iter().enumerate().map(|(i, x)| (i as f64 + 0.5) * dr * x).collect();
    let mut out = d2(&u, Parity::Odd, dr);
    for (i, o) in out.iter_mut().enumerate() {
        *o /= (i as f64 + 0.5) * dr;
    }
    out
}

/// Index one past the last non-zero entry.
pub fn active_len(f: &[f64]) -> usize {
    f.iter().rposition(|x| *x != 0.0).map_or(0, |i| i + 1)
}
