use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{config_err, Error, Result};
use crate::jets::VectorFieldKind;
use crate::math::{self, jb};
use crate::radial::gamma::{canonical, canonical_classes, words_up_to, RadialExpr, Word};
use crate::radial::grid::RadialGrid;
use crate::radial::window::RadialDerivs;

/// `sqrt(4 pi sum_i r_i^2 weight(r_i) w_i^2 dr)`, the `L^2(R^3)` norm of a
/// radial function by the composite midpoint rule.
pub fn l2_norm(values: &[f64], grid: &RadialGrid, weight: Option<&dyn Fn(f64) -> f64>) -> f64 {
    let mut acc = 0.0;
    for (i, w) in values.iter().enumerate() {
        let r = grid.r(i);
        let wt = weight.map_or(1.0, |f| f(r));
        acc += r * r * wt * w * w;
    }
    math::sqrt(math::FOUR_PI * grid.dr() * acc)
}

/// Pointwise weights `omega(t, r)` used by the sup-norm tiers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightKind {
    Unit,
    /// `<t+r>^{3/2}`
    TPlusR32,
    /// `<t+r>^{3/2 - delta}`
    TPlusR32Delta(f64),
    /// `<t+r> <t-r>^{1/2}`
    TPlusRTMinusRHalf,
    /// `<t+r>^{1/2} <t-r>`
    TPlusRHalfTMinusR,
    /// `<r> <t-r>^{1/2}`
    RTMinusRHalf,
    /// `<r> <t-r>`
    RTMinusR,
}

impl WeightKind {
    pub const NAMES: [&'static str; 7] = [
        "unit",
        "tpr_3/2",
        "tpr_3/2-delta",
        "tpr_tmr_1/2",
        "tpr_1/2_tmr",
        "r_tmr_1/2",
        "r_tmr",
    ];

    pub fn from_name(name: &str, delta: f64) -> Result<Self> {
        Ok(match name {
            "unit" => Self::Unit,
            "tpr_3/2" => Self::TPlusR32,
            "tpr_3/2-delta" => Self::TPlusR32Delta(delta),
            "tpr_tmr_1/2" => Self::TPlusRTMinusRHalf,
            "tpr_1/2_tmr" => Self::TPlusRHalfTMinusR,
            "r_tmr_1/2" => Self::RTMinusRHalf,
            "r_tmr" => Self::RTMinusR,
            other => {
                return Err(config_err(
                    "weight_kind",
                    alloc::format!("unknown weight kind `{other}`"),
                ))
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Unit => Self::NAMES[0],
            Self::TPlusR32 => Self::NAMES[1],
            Self::TPlusR32Delta(_) => Self::NAMES[2],
            Self::TPlusRTMinusRHalf => Self::NAMES[3],
            Self::TPlusRHalfTMinusR => Self::NAMES[4],
            Self::RTMinusRHalf => Self::NAMES[5],
            Self::RTMinusR => Self::NAMES[6],
        }
    }

    pub fn eval(&self, t: f64, r: f64) -> f64 {
        match *self {
            Self::Unit => 1.0,
            Self::TPlusR32 => math::powf(jb(t + r), 1.5),
            Self::TPlusR32Delta(d) => math::powf(jb(t + r), 1.5 - d),
            Self::TPlusRTMinusRHalf => jb(t + r) * math::sqrt(jb(t - r)),
            Self::TPlusRHalfTMinusR => math::sqrt(jb(t + r)) * jb(t - r),
            Self::RTMinusRHalf => jb(r) * math::sqrt(jb(t - r)),
            Self::RTMinusR => jb(r) * jb(t - r),
        }
    }
}

/// `max_i omega(t, r_i) |w_i|`.
pub fn weighted_sup(values: &[f64], grid: &RadialGrid, t: f64, kind: WeightKind) -> f64 {
    values
        .iter()
        .enumerate()
        .map(|(i, w)| kind.eval(t, grid.r(i)) * w.abs())
        .fold(0.0, f64::max)
}

/// Human-readable form of a word, e.g. `L1.d0`; the empty word is `1`.
pub fn word_label(word: &[VectorFieldKind]) -> String {
    use core::fmt::Write;
    if word.is_empty() {
        return String::from("1");
    }
    let mut s = String::new();
    for (j, k) in word.iter().enumerate() {
        if j > 0 {
            s.push('.');
        }
        let _ = match k {
            VectorFieldKind::Partial(a) => write!(s, "d{a}"),
            VectorFieldKind::Boost(a) => write!(s, "L{a}"),
            VectorFieldKind::Rotation(a, b) => write!(s, "O{a}{b}"),
            VectorFieldKind::Scaling => write!(s, "L0"),
            VectorFieldKind::Good(a) => write!(s, "G{a}"),
            VectorFieldKind::SemiHyperboloidal(a) => write!(s, "H{a}"),
        };
    }
    s
}

/// Caches compiled `Gamma^I` expressions per canonical class for one tier.
#[derive(Debug, Clone)]
pub struct GammaTable {
    tier: usize,
    classes: Vec<(Word, usize, RadialExpr)>,
}

impl GammaTable {
    /// Tiers up to 3; the third tier serves the Klainerman-Sobolev norms.
    pub fn new(tier: usize) -> Result<Self> {
        if tier > 3 {
            return Err(Error::UnsupportedTier(tier));
        }
        let classes = canonical_classes(tier)
            .into_iter()
            .map(|(w, m)| {
                let e = RadialExpr::of_word(&w)?;
                Ok((w, m, e))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { tier, classes })
    }

    pub fn tier(&self) -> usize {
        self.tier
    }

    /// Canonical classes with multiplicities and their expressions.
    pub fn classes(&self) -> &[(Word, usize, RadialExpr)] {
        &self.classes
    }

    /// `|| Gamma^I w ||` for every canonical class.
    pub fn class_norms(&self, d: &RadialDerivs) -> Result<Vec<f64>> {
        self.classes
            .iter()
            .map(|(_, _, e)| e.compile(d.t()).l2_norm(d))
            .collect()
    }

    /// `sum_{|I| <= tier} || Gamma^I w ||` over all words.
    pub fn norm_sum(&self, d: &RadialDerivs) -> Result<f64> {
        Ok(self
            .class_norms(d)?
            .iter()
            .zip(&self.classes)
            .map(|(n, c)| n * c.1 as f64)
            .sum())
    }
}

/// `|| Gamma^I w ||` for every word `I` with `|I| <= tier`.
pub fn gamma_l2_table(d: &RadialDerivs, tier: usize) -> Result<Vec<(Word, f64)>> {
    let table = GammaTable::new(tier)?;
    let norms = table.class_norms(d)?;
    let by_class: BTreeMap<&Word, f64> = table.classes.iter().zip(&norms).map(|(c, n)| (&c.0, *n)).collect();
    Ok(words_up_to(tier)
        .into_iter()
        .map(|w| {
            let n = by_class.get(&canonical(&w)).copied().unwrap_or(0.0);
            (w, n)
        })
        .collect())
}

fn multi_index_word(a: [usize; 3]) -> Word {
    let mut w = Vec::new();
    for (axis, &count) in a.iter().enumerate() {
        for _ in 0..count {
            w.push(VectorFieldKind::Partial(axis as u8 + 1));
        }
    }
    w
}

/// `sum_{|alpha| <= order} || <x>^{|alpha| + shift} d_x^alpha w ||` over
/// spatial multi-indices.
pub fn weighted_derivative_sum(d: &RadialDerivs, order: usize, shift: i32) -> Result<f64> {
    let mut total = 0.0;
    for n in 0..=order {
        for a1 in 0..=n {
            for a2 in 0..=(n - a1) {
                let word = multi_index_word([a1, a2, n - a1 - a2]);
                let e = RadialExpr::of_word(&word)?.compile(d.t());
                let p = (n as i32 + shift) as f64;
                let sq = e.weighted_l2_sq(d, |r| math::powf(jb(r), 2.0 * p))?;
                total += math::sqrt(sq);
            }
        }
    }
    Ok(total)
}

/// The small-data size functional with `N` replaced by
/// `n_trunc <= 2` and only spatial derivatives:
///
/// ```text
/// sum_{|I|<=N+2} ||<x>^{|I|+1} d^I E0|| + sum_{|I|<=N+1} ||<x>^{|I|+2} d^I E1||
///   + sum_{|I|<=N+1} ||<x>^{|I|} n0|| + sum_{|I|<=N} ||<x>^{|I|+1} n1||
/// ```
///
/// The `n0`, `n1` sums carry no derivative on the field.
pub fn smallness_norm(
    grid: &RadialGrid,
    e0: &[f64],
    e1: &[f64],
    n0: &[f64],
    n1: &[f64],
    n_trunc: usize,
) -> Result<f64> {
    if n_trunc > 2 {
        return Err(Error::UnsupportedTier(n_trunc));
    }
    let d0 = RadialDerivs::spatial(*grid, 0.0, e0, (n_trunc + 2) as u8)?;
    let d1 = RadialDerivs::spatial(*grid, 0.0, e1, (n_trunc + 1) as u8)?;
    let mut total = weighted_derivative_sum(&d0, n_trunc + 2, 1)?;
    total += weighted_derivative_sum(&d1, n_trunc + 1, 2)?;
    let underived = |w: &[f64], order: usize, shift: i32| {
        let mut acc = 0.0;
        for n in 0..=order {
            let p = (n as i32 + shift) as f64;
            let count = ((n + 1) * (n + 2) / 2) as f64;
            acc += count * l2_norm(w, grid, Some(&|r| math::powf(jb(r), 2.0 * p)));
        }
        acc
    };
    total += underived(n0, n_trunc + 1, 0);
    total += underived(n1, n_trunc, 1);
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::angular::AngularMomentTable;

    /// Adaptive Simpson on [a, b].
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        #[allow(clippy::too_many_arguments)]
        fn rec(
            f: &dyn Fn(f64) -> f64,
            a: f64,
            b: f64,
            fa: f64,
            fm: f64,
            fb: f64,
            whole: f64,
            tol: f64,
            depth: u32,
        ) -> f64 {
            let m = 0.5 * (a + b);
            let lm = 0.5 * (a + m);
            let rm = 0.5 * (m + b);
            let flm = f(lm);
            let frm = f(rm);
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() < 15.0 * tol {
                return left + right + (left + right - whole) / 15.0;
            }
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
        let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
        rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 40)
    }

    #[test]
    fn gaussian_norm_matches_quadrature() {
        let exact = libm::sqrt(4.0 * math::PI * simpson(&|r| r * r * libm::exp(-2.0 * r * r), 0.0, 12.0, 1e-14));
        let closed = libm::sqrt(4.0 * math::PI * 0.125 * libm::sqrt(math::PI / 2.0));
        assert!((exact - closed).abs() < 1e-12);
        let g = RadialGrid::with_radius(12.0, 0.05).unwrap();
        let w = g.sample(|r| libm::exp(-r * r));
        assert!((l2_norm(&w, &g, None) - exact).abs() < 1e-10);
        assert_eq!(l2_norm(&[0.0; 20], &RadialGrid::new(20, 0.1).unwrap(), None), 0.0);
    }

    #[test]
    fn midpoint_norm_converges_at_order_two_or_better() {
        // int_0^inf r^2 exp(-2r) dr = 1/4
        let exact = libm::sqrt(math::PI);
        let mut errs = Vec::new();
        for dr in [0.2, 0.1, 0.05] {
            let g = RadialGrid::with_radius(40.0, dr).unwrap();
            let w = g.sample(|r| libm::exp(-r));
            errs.push((l2_norm(&w, &g, None) - exact).abs());
        }
        assert!(libm::log2(errs[0] / errs[1]) >= 1.9);
        assert!(libm::log2(errs[1] / errs[2]) >= 1.9);
    }

    #[test]
    fn unknown_weight_is_rejected() {
        assert!(WeightKind::from_name("bogus", 0.05).is_err());
        for n in WeightKind::NAMES {
            assert_eq!(WeightKind::from_name(n, 0.05).unwrap().name(), n);
        }
    }

    #[test]
    fn reciprocal_weight_gives_one() {
        let g = RadialGrid::new(2000, 0.05).unwrap();
        let t = 7.0;
        let w = g.sample(|r| math::powf(jb(t + r), -1.5));
        let s = weighted_sup(&w, &g, t, WeightKind::TPlusR32);
        assert!((s - 1.0).abs() < 1e-12);
    }

    /// `w(t, r) = t f(r)` with closed-form derivatives.
    fn linear_in_t(grid: RadialGrid, t: f64) -> RadialDerivs {
        RadialDerivs::from_fn(grid, t, 3, |k, l, r| {
            let e = libm::exp(-r * r);
            let f = [
                e,
                -2.0 * r * e,
                (4.0 * r * r - 2.0) * e,
                (12.0 * r - 8.0 * r * r * r) * e,
            ][l as usize];
            match k {
                0 => t * f,
                1 => f,
                _ => 0.0,
            }
        })
    }

    #[test]
    fn gamma_table_examples() {
        let grid = RadialGrid::new(600, 0.02).unwrap();
        let t = 2.5;
        let d = linear_in_t(grid, t);
        let table = gamma_l2_table(&d, 2).unwrap();
        assert_eq!(table.len(), 111);
        let f = grid.sample(|r| libm::exp(-r * r));
        let fnorm = l2_norm(&f, &grid, None);
        for (w, n) in &table {
            if matches!(w.last(), Some(VectorFieldKind::Rotation(..))) {
                assert_eq!(*n, 0.0);
            }
            if w.as_slice() == [VectorFieldKind::Partial(0)] {
                assert!((n - fnorm).abs() < 1e-12);
            }
        }
        // sum_a ||L_a w||^2 = 4 pi int r^2 (r w_t + t w_r)^2
        let la: f64 = table
            .iter()
            .filter(|(w, _)| matches!(w.as_slice(), [VectorFieldKind::Boost(_)]))
            .map(|(_, n)| n * n)
            .sum();
        let radial: Vec<f64> = (0..grid.nr())
            .map(|i| {
                let r = grid.r(i);
                r * d.get(1, 0).unwrap()[i] + t * d.get(0, 1).unwrap()[i]
            })
            .collect();
        let rn = l2_norm(&radial, &grid, None);
        assert!((la - rn * rn).abs() < 1e-12 * rn * rn);
        let one = table
            .iter()
            .find(|(w, _)| w.as_slice() == [VectorFieldKind::Boost(2)])
            .unwrap()
            .1;
        assert!((one * one - AngularMomentTable::EXACT.second * rn * rn).abs() < 1e-12 * rn * rn);
    }

    #[test]
    fn gamma_tiers_stop_at_three() {
        let grid = RadialGrid::new(32, 0.1).unwrap();
        let d = linear_in_t(grid, 1.0);
        assert_eq!(gamma_l2_table(&d, 3).unwrap().len(), 1111);
        assert_eq!(gamma_l2_table(&d, 4).unwrap_err(), Error::UnsupportedTier(4));
        let low = RadialDerivs::from_fn(grid, 1.0, 2, |_, _, r| r);
        assert_eq!(gamma_l2_table(&low, 3).unwrap_err(), Error::UnsupportedTier(3));
    }

    #[test]
    fn smallness_norm_is_linear() {
        let grid = RadialGrid::with_radius(20.0, 0.05).unwrap();
        let g = grid.sample(|r| libm::exp(-r * r));
        let z = alloc::vec![0.0; grid.nr()];
        assert_eq!(smallness_norm(&grid, &z, &z, &z, &z, 1).unwrap(), 0.0);
        let a = smallness_norm(&grid, &g, &z, &g, &z, 1).unwrap();
        let g3: Vec<f64> = g.iter().map(|x| 3.0 * x).collect();
        let b = smallness_norm(&grid, &g3, &z, &g3, &z, 1).unwrap();
        assert!((b - 3.0 * a).abs() < 1e-12 * b);
    }
}
