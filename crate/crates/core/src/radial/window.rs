use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::radial::grid::RadialGrid;
use crate::radial::stencil::{self, Parity};

/// One radial component at one time: amplitude `w` and `d_t w`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialState {
    pub grid: RadialGrid,
    pub t: f64,
    pub w: Vec<f64>,
    pub wt: Vec<f64>,
}

impl RadialState {
    pub fn zero(grid: RadialGrid, t: f64) -> Self {
        Self {
            grid,
            t,
            w: vec![0.0; grid.nr()],
            wt: vec![0.0; grid.nr()],
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.check_len(&self.w)?;
        self.grid.check_len(&self.wt)?;
        if self.w.iter().chain(&self.wt).any(|x| !x.is_finite()) {
            return Err(Error::Domain("state contains non-finite samples"));
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.w.iter().chain(&self.wt).all(|x| *x == 0.0)
    }
}

/// Five consecutive, equally spaced time levels of one amplitude, centered
/// on the evaluation time.
#[derive(Debug, Clone, Copy)]
pub struct DerivativeWindow<'a> {
    pub grid: RadialGrid,
    /// Time of the middle level.
    pub t: f64,
    pub dt: f64,
    pub levels: [&'a [f64]; 5],
}

impl<'a> DerivativeWindow<'a> {
    pub fn new(grid: RadialGrid, t: f64, dt: f64, levels: [&'a [f64]; 5]) -> Result<Self> {
        for l in &levels {
            grid.check_len(l)?;
        }
        if !(dt > 0.0) {
            return Err(Error::Domain("window spacing must be positive"));
        }
        Ok(Self { grid, t, dt, levels })
    }

    pub fn center(&self) -> &'a [f64] {
        self.levels[2]
    }

    /// Support of the window: one past the last node where any level is
    /// non-zero, padded by the widest stencil half-width.
    pub fn active_len(&self) -> usize {
        let a = self.levels.iter().map(|l| stencil::active_len(l)).max().unwrap_or(0);
        if a == 0 {
            0
        } else {
            (a + 3).min(self.grid.nr())
        }
    }

    /// Centered `d_t^k w` at the center, `k <= 3`: fourth order for
    /// `k <= 2`, second order for `k = 3`.
    pub fn time_derivative(&self, k: u8) -> Vec<f64> {
        let n = self.grid.nr();
        let mut out = vec![0.0; n];
        time_derivative_into(&self.levels, self.dt, k, self.active_len(), &mut out);
        out
    }

    /// All mixed derivatives `d_t^k d_r^l w` with `k + l <= order`
    /// (order at most 3).
    pub fn derivs(&self, order: u8) -> Result<RadialDerivs> {
        if order > 3 {
            return Err(Error::UnsupportedTier(order as usize));
        }
        let mut d = RadialDerivs::empty(self.grid, self.t, self.active_len());
        for k in 0..=order {
            let wk = self.time_derivative(k);
            for l in 0..=(order - k) {
                let v = radial_derivative(&wk, l, self.grid.dr());
                d.set(k, l, v);
            }
        }
        Ok(d)
    }
}

/// Five-level centered time differences on nodes `0..upto`.
pub fn time_derivative_into(levels: &[&[f64]; 5], dt: f64, k: u8, upto: usize, out: &mut [f64]) {
    let [m2, m1, c, p1, p2] = *levels;
    for i in 0..upto {
        out[i] = match k {
            0 => c[i],
            1 => (-p2[i] + 8.0 * p1[i] - 8.0 * m1[i] + m2[i]) / (12.0 * dt),
            2 => (-p2[i] + 16.0 * p1[i] - 30.0 * c[i] + 16.0 * m1[i] - m2[i]) / (12.0 * dt * dt),
            _ => (p2[i] - 2.0 * p1[i] + 2.0 * m1[i] - m2[i]) / (2.0 * dt * dt * dt),
        };
    }
}

fn radial_derivative(w: &[f64], l: u8, dr: f64) -> Vec<f64> {
    match l {
        0 => w.to_vec(),
        1 => stencil::d1(w, Parity::Even, dr),
        2 => stencil::d2(w, Parity::Even, dr),
        3 => stencil::d3(w, Parity::Even, dr),
        _ => {
            let inner = stencil::d2(w, Parity::Even, dr);
            radial_derivative(&inner, l - 2, dr)
        }
    }
}

/// Arrays of `d_t^k d_r^l w` at one time, indexed by `(k, l)` with
/// `k + l <= 4`. Missing entries are empty.
#[derive(Debug, Clone)]
pub struct RadialDerivs {
    grid: RadialGrid,
    t: f64,
    active: usize,
    data: Vec<Vec<f64>>,
}

impl RadialDerivs {
    pub const MAX_ORDER: u8 = 4;

    pub fn empty(grid: RadialGrid, t: f64, active: usize) -> Self {
        Self {
            grid,
            t,
            active: active.min(grid.nr()),
            data: vec![Vec::new(); Self::slot(0, Self::MAX_ORDER) + 1],
        }
    }

    /// Derivatives from closed-form expressions `f(k, l, r)`.
    pub fn from_fn(grid: RadialGrid, t: f64, order: u8, f: impl Fn(u8, u8, f64) -> f64) -> Self {
        let mut d = Self::empty(grid, t, grid.nr());
        for k in 0..=order {
            for l in 0..=(order - k) {
                d.set(k, l, grid.sample(|r| f(k, l, r)));
            }
        }
        d
    }

    /// Derivatives to `order <= 3` of a source-free field `-Box w + m^2 w = 0`
    /// from `(w, w_t)` at one time, with `d_t^2 w = Lap w - m^2 w` so that
    /// only fourth-order spatial stencils enter.
    pub fn free_field(grid: RadialGrid, t: f64, w: &[f64], wt: &[f64], mass: f64, order: u8) -> Result<Self> {
        grid.check_len(w)?;
        grid.check_len(wt)?;
        if order > 3 {
            return Err(Error::UnsupportedTier(order as usize));
        }
        let a = stencil::active_len(w).max(stencil::active_len(wt));
        let mut d = Self::empty(grid, t, if a == 0 { 0 } else { (a + 3).min(grid.nr()) });
        let m2 = mass * mass;
        let next = |v: &[f64], prev: &[f64]| -> Vec<f64> {
            stencil::laplacian4(v, grid.dr())
                .iter()
                .zip(prev)
                .map(|(l, p)| l - m2 * p)
                .collect()
        };
        let mut levels = vec![w.to_vec(), wt.to_vec()];
        if order >= 2 {
            levels.push(next(w, w));
        }
        if order >= 3 {
            levels.push(next(wt, wt));
        }
        for (k, wk) in levels.iter().enumerate().take(order as usize + 1) {
            for l in 0..=(order - k as u8) {
                d.set(k as u8, l, radial_derivative(wk, l, grid.dr()));
            }
        }
        Ok(d)
    }

    /// Spatial derivatives `d_r^l w`, `l <= order <= 4`, of one time level.
    pub fn spatial(grid: RadialGrid, t: f64, w: &[f64], order: u8) -> Result<Self> {
        grid.check_len(w)?;
        if order > Self::MAX_ORDER {
            return Err(Error::UnsupportedTier(order as usize));
        }
        let a = stencil::active_len(w);
        let mut d = Self::empty(grid, t, if a == 0 { 0 } else { a + 3 });
        for l in 0..=order {
            d.set(0, l, radial_derivative(w, l, grid.dr()));
        }
        Ok(d)
    }

    #[inline]
    pub fn slot(k: u8, l: u8) -> usize {
        let n = (k + l) as usize;
        n * (n + 1) / 2 + l as usize
    }

    pub fn set(&mut self, k: u8, l: u8, v: Vec<f64>) {
        let s = Self::slot(k, l);
        self.data[s] = v;
    }

    pub fn get(&self, k: u8, l: u8) -> Option<&[f64]> {
        self.data
            .get(Self::slot(k, l))
            .filter(|v| !v.is_empty())
            .map(|v| v.as_slice())
    }

    #[inline]
    pub(crate) fn slot_values(&self, slot: usize) -> &[f64] {
        &self.data[slot]
    }

    pub(crate) fn has_slot(&self, slot: usize) -> bool {
        self.data.get(slot).is_some_and(|v| !v.is_empty())
    }

    pub fn grid(&self) -> RadialGrid {
        self.grid
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn active_len(&self) -> usize {
        self.active
    }

    /// Scales every derivative array by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut d = self.clone();
        for v in &mut d.data {
            for x in v.iter_mut() {
                *x *= c;
            }
        }
        d
    }

    /// Entrywise `self - other` (shared grid and time).
    pub fn difference(&self, other: &RadialDerivs) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::Mismatch("derivative grids differ"));
        }
        let mut d = self.clone();
        d.active = self.active.max(other.active);
        for (a, b) in d.data.iter_mut().zip(&other.data) {
            if a.is_empty() || b.is_empty() {
                a.clear();
                continue;
            }
            for (x, y) in a.iter_mut().zip(b) {
                *x -= y;
            }
        }
        Ok(d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_derivatives_of_a_separable_field() {
        // w = cos(t) exp(-r^2)
        let grid = RadialGrid::new(400, 0.02).unwrap();
        let dt = 0.01;
        let t0 = 0.7;
        let lv: Vec<Vec<f64>> = (0..5)
            .map(|j| {
                let t = t0 + (j as f64 - 2.0) * dt;
                grid.sample(|r| libm::cos(t) * libm::exp(-r * r))
            })
            .collect();
        let win = DerivativeWindow::new(grid, t0, dt, [&lv[0], &lv[1], &lv[2], &lv[3], &lv[4]]).unwrap();
        let d = win.derivs(3).unwrap();
        let exact = |k: u8, l: u8, r: f64| {
            let tp = [libm::cos(t0), -libm::sin(t0), -libm::cos(t0), libm::sin(t0)][k as usize];
            let e = libm::exp(-r * r);
            let rp = [
                e,
                -2.0 * r * e,
                (4.0 * r * r - 2.0) * e,
                (12.0 * r - 8.0 * r * r * r) * e,
            ][l as usize];
            tp * rp
        };
        for k in 0..=3u8 {
            for l in 0..=(3 - k) {
                let v = d.get(k, l).unwrap();
                let err = (0..grid.nr())
                    .map(|i| (v[i] - exact(k, l, grid.r(i))).abs())
                    .fold(0.0, f64::max);
                assert!(err < 2e-4, "({k},{l}) err {err}");
            }
        }
        assert!(d.get(0, 4).is_none());
    }

    #[test]
    fn free_field_derivatives_are_fourth_order() {
        // outgoing wave w = g(r - t) / r, g(x) = exp(-(x - 6)^2)
        let g = |k: u8, x: f64| {
            let y = x - 6.0;
            let e = libm::exp(-y * y);
            [
                e,
                -2.0 * y * e,
                (4.0 * y * y - 2.0) * e,
                (12.0 * y - 8.0 * y * y * y) * e,
            ][k as usize]
        };
        let exact = |k: u8, t: f64, r: f64| {
            // d_t^k w = (-1)^k g^(k)(r - t) / r
            let s = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
            s * g(k, r - t) / r
        };
        let t = 1.0;
        let mut errs = [0.0f64; 2];
        for (n, dr) in [0.04, 0.02].into_iter().enumerate() {
            let grid = RadialGrid::with_radius(16.0, dr).unwrap();
            let w = grid.sample(|r| exact(0, t, r));
            let wt = grid.sample(|r| exact(1, t, r));
            let d = RadialDerivs::free_field(grid, t, &w, &wt, 0.0, 3).unwrap();
            for k in 2..=3u8 {
                let v = d.get(k, 0).unwrap();
                for i in 0..grid.nr() {
                    let r = grid.r(i);
                    if r > 2.0 {
                        errs[n] = errs[n].max((v[i] - exact(k, t, r)).abs());
                    }
                }
            }
        }
        assert!(errs[1] < 1e-4 && libm::log2(errs[0] / errs[1]) > 3.5, "{errs:?}");
    }

    #[test]
    fn slots_are_distinct() {
        let mut seen = Vec::new();
        for n in 0..=4u8 {
            for l in 0..=n {
                let s = RadialDerivs::slot(n - l, l);
                assert!(!seen.contains(&s));
                seen.push(s);
            }
        }
        assert_eq!(seen.len(), 15);
    }
}
