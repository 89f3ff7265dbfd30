//! Symbolic action of vector fields on radial fields.
//!
//! For a radial amplitude `w(t, r)`, every expression `Gamma^I w` built from
//! `d_alpha`, `L_a`, `Omega_ab`, `L_0` (and the good / semi-hyperboloidal
//! derivatives) is a finite sum of terms
//!
//! ```text
//! c * t^i * r^j * n1^p1 n2^p2 n3^p3 * d_t^k d_r^l w
//! ```
//!
//! with `n = x / r`. [`RadialExpr`] stores such sums exactly and evaluates
//! them against finite-difference derivative arrays. `L^2(R^3)` norms then
//! reduce to radial integrals weighted by exact sphere moments.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::jets::VectorFieldKind;
use crate::math;
use crate::radial::angular::{sphere_moment, PERMS};
use crate::radial::window::RadialDerivs;

/// One monomial `t^i r^j n^p d_t^k d_r^l w` (coefficient kept separately).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial {
    pub n: [u8; 3],
    pub t_pow: i8,
    pub r_pow: i8,
    pub dt: u8,
    pub dr: u8,
}

impl Monomial {
    fn with_n(mut self, a: usize, delta: i8) -> Self {
        self.n[a] = (self.n[a] as i8 + delta) as u8;
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RadialExpr {
    terms: BTreeMap<Monomial, f64>,
}

impl RadialExpr {
    /// The field `w` itself.
    pub fn field() -> Self {
        let mut e = Self::default();
        e.add(
            Monomial {
                n: [0; 3],
                t_pow: 0,
                r_pow: 0,
                dt: 0,
                dr: 0,
            },
            1.0,
        );
        e
    }

    fn add(&mut self, m: Monomial, c: f64) {
        if c == 0.0 {
            return;
        }
        let entry = self.terms.entry(m).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            self.terms.remove(&m);
        }
    }

    fn merge(mut self, other: RadialExpr) -> RadialExpr {
        for (m, c) in other.terms {
            self.add(m, c);
        }
        self
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &f64)> {
        self.terms.iter()
    }

    /// Highest `d_t^k d_r^l` order appearing.
    pub fn derivative_order(&self) -> u8 {
        self.terms.keys().map(|m| m.dt + m.dr).max().unwrap_or(0)
    }

    fn map_terms(&self, mut f: impl FnMut(Monomial, f64, &mut RadialExpr)) -> RadialExpr {
        let mut out = RadialExpr::default();
        for (m, c) in &self.terms {
            f(*m, *c, &mut out);
        }
        out
    }

    /// Multiplies by `t^dt_pow r^dr_pow n_a` (`a = None` for no normal factor).
    fn times(&self, t_pow: i8, r_pow: i8, a: Option<usize>, c: f64) -> RadialExpr {
        self.map_terms(|mut m, k, out| {
            m.t_pow += t_pow;
            m.r_pow += r_pow;
            if let Some(a) = a {
                m = m.with_n(a, 1);
            }
            out.add(m, k * c);
        })
    }

    pub fn partial_t(&self) -> RadialExpr {
        self.map_terms(|m, c, out| {
            if m.t_pow != 0 {
                let mut d = m;
                d.t_pow -= 1;
                out.add(d, c * m.t_pow as f64);
            }
            let mut d = m;
            d.dt += 1;
            out.add(d, c);
        })
    }

    /// `d_a` for a space index `a` in `0..3`.
    pub fn partial_space(&self, a: usize) -> RadialExpr {
        self.map_terms(|m, c, out| {
            let deg: i32 = m.n.iter().map(|&p| p as i32).sum();
            let mut lower = m;
            lower.r_pow -= 1;
            // d_a r^j + the -|p| n_a n^p / r part of d_a n^p
            out.add(lower.with_n(a, 1), c * (m.r_pow as i32 - deg) as f64);
            if m.n[a] > 0 {
                out.add(lower.with_n(a, -1), c * m.n[a] as f64);
            }
            let mut d = m.with_n(a, 1);
            d.dr += 1;
            out.add(d, c);
        })
    }

    /// Applies one vector field.
    pub fn apply(&self, kind: VectorFieldKind) -> Result<RadialExpr> {
        Ok(match kind {
            VectorFieldKind::Partial(0) => self.partial_t(),
            VectorFieldKind::Partial(a) if a <= 3 => self.partial_space(a as usize - 1),
            VectorFieldKind::Boost(a) if (1..=3).contains(&a) => {
                let a = a as usize - 1;
                self.partial_t()
                    .times(0, 1, Some(a), 1.0)
                    .merge(self.partial_space(a).times(1, 0, None, 1.0))
            }
            VectorFieldKind::Rotation(a, b) if a < b && b <= 3 && a >= 1 => {
                let (a, b) = (a as usize - 1, b as usize - 1);
                self.partial_space(b)
                    .times(0, 1, Some(a), 1.0)
                    .merge(self.partial_space(a).times(0, 1, Some(b), -1.0))
            }
            VectorFieldKind::Scaling => self.map_terms(|m, c, out| {
                out.add(m, c * (m.t_pow as f64 + m.r_pow as f64));
                let mut d = m;
                d.dt += 1;
                d.t_pow += 1;
                out.add(d, c);
                let mut d = m;
                d.dr += 1;
                d.r_pow += 1;
                out.add(d, c);
            }),
            VectorFieldKind::Good(a) if (1..=3).contains(&a) => {
                let a = a as usize - 1;
                self.partial_t().times(0, 0, Some(a), 1.0).merge(self.partial_space(a))
            }
            VectorFieldKind::SemiHyperboloidal(a) if (1..=3).contains(&a) => {
                let a = a as usize - 1;
                self.partial_t().times(-1, 1, Some(a), 1.0).merge(self.partial_space(a))
            }
            _ => return Err(Error::Domain("vector field index out of range")),
        })
    }

    /// `Gamma^I w` with the word applied right to left (last entry acts first).
    pub fn of_word(word: &[VectorFieldKind]) -> Result<RadialExpr> {
        let mut e = RadialExpr::field();
        for k in word.iter().rev() {
            e = e.apply(*k)?;
        }
        Ok(e)
    }

    /// Terms grouped by their angular monomial, ready for node-wise evaluation.
    pub fn compile(&self, t: f64) -> CompiledExpr {
        let mut groups: Vec<([u8; 3], Vec<(f64, i8, usize)>)> = Vec::new();
        for (m, c) in &self.terms {
            let coef = c * ipow(t, m.t_pow);
            let slot = RadialDerivs::slot(m.dt, m.dr);
            match groups.last_mut() {
                Some((n, list)) if *n == m.n => list.push((coef, m.r_pow, slot)),
                _ => groups.push((m.n, vec![(coef, m.r_pow, slot)])),
            }
        }
        let g = groups.len();
        let mut moments = vec![0.0; g * g];
        for i in 0..g {
            for j in 0..g {
                let e = [
                    (groups[i].0[0] + groups[j].0[0]) as u32,
                    (groups[i].0[1] + groups[j].0[1]) as u32,
                    (groups[i].0[2] + groups[j].0[2]) as u32,
                ];
                moments[i * g + j] = sphere_moment(e);
            }
        }
        CompiledExpr {
            groups,
            moments,
            order: self.derivative_order(),
        }
    }
}

pub(crate) fn ipow(x: f64, k: i8) -> f64 {
    let mut acc = 1.0;
    for _ in 0..k.unsigned_abs() {
        acc *= x;
    }
    if k < 0 {
        1.0 / acc
    } else {
        acc
    }
}

/// A [`RadialExpr`] with time powers folded in, grouped by angular monomial.
#[derive(Debug, Clone)]
pub struct CompiledExpr {
    groups: Vec<([u8; 3], Vec<(f64, i8, usize)>)>,
    moments: Vec<f64>,
    order: u8,
}

impl CompiledExpr {
    pub fn is_zero(&self) -> bool {
        self.groups.is_empty()
    }

    /// Highest derivative order the expression needs.
    pub fn order(&self) -> u8 {
        self.order
    }

    fn check(&self, d: &RadialDerivs) -> Result<()> {
        let ok = self
            .groups
            .iter()
            .all(|(_, list)| list.iter().all(|&(_, _, slot)| d.has_slot(slot)));
        if ok {
            Ok(())
        } else {
            Err(Error::UnsupportedTier(self.order as usize))
        }
    }

    fn group_values(&self, d: &RadialDerivs, i: usize, r: f64, out: &mut [f64]) {
        for (g, (_, list)) in self.groups.iter().enumerate() {
            let mut acc = 0.0;
            for &(c, rp, slot) in list {
                acc += c * ipow(r, rp) * d.slot_values(slot)[i];
            }
            out[g] = acc;
        }
    }

    /// Sphere average of the squared expression at node `i`.
    pub fn angular_mean_square(&self, d: &RadialDerivs, i: usize, buf: &mut Vec<f64>) -> f64 {
        let g = self.groups.len();
        buf.resize(g, 0.0);
        self.group_values(d, i, d.grid().r(i), buf);
        let mut acc = 0.0;
        for a in 0..g {
            for b in 0..g {
                acc += self.moments[a * g + b] * buf[a] * buf[b];
            }
        }
        acc
    }

    /// `|| weight^{1/2} expr ||^2_{L^2(R^3)}` with `weight` a function of `r`.
    pub fn weighted_l2_sq(&self, d: &RadialDerivs, weight: impl Fn(f64) -> f64) -> Result<f64> {
        if self.is_zero() {
            return Ok(0.0);
        }
        self.check(d)?;
        let grid = d.grid();
        let mut buf = Vec::new();
        let mut acc = 0.0;
        for i in 0..d.active_len() {
            let r = grid.r(i);
            acc += r * r * weight(r) * self.angular_mean_square(d, i, &mut buf);
        }
        Ok(math::FOUR_PI * grid.dr() * acc)
    }

    pub fn l2_norm(&self, d: &RadialDerivs) -> Result<f64> {
        Ok(math::sqrt(self.weighted_l2_sq(d, |_| 1.0)?))
    }

    /// `max_{x} weight(r) |expr|`, the angular maximum taken over `dirs`.
    pub fn weighted_sup(&self, d: &RadialDerivs, weight: impl Fn(f64) -> f64, dirs: &[[f64; 3]]) -> Result<f64> {
        if self.is_zero() {
            return Ok(0.0);
        }
        self.check(d)?;
        let grid = d.grid();
        let g = self.groups.len();
        let mut vals = vec![0.0; g];
        // angular factors per direction and group
        let mut ang = vec![0.0; dirs.len() * g];
        for (k, n) in dirs.iter().enumerate() {
            for (j, (p, _)) in self.groups.iter().enumerate() {
                ang[k * g + j] = ipow(n[0], p[0] as i8) * ipow(n[1], p[1] as i8) * ipow(n[2], p[2] as i8);
            }
        }
        let radial_only = g == 1 && self.groups[0].0 == [0, 0, 0];
        let mut best = 0.0f64;
        for i in 0..d.active_len() {
            let r = grid.r(i);
            self.group_values(d, i, r, &mut vals);
            let m = if radial_only {
                vals[0].abs()
            } else {
                let mut m = 0.0f64;
                for k in 0..dirs.len() {
                    let mut acc = 0.0;
                    for j in 0..g {
                        acc += ang[k * g + j] * vals[j];
                    }
                    m = m.max(acc.abs());
                }
                m
            };
            best = best.max(weight(r) * m);
        }
        Ok(best)
    }
}

pub type Word = Vec<VectorFieldKind>;

/// All words of length at most `k` over `{d_alpha, L_a, Omega_ab}`.
pub fn words_up_to(k: usize) -> Vec<Word> {
    let mut out: Vec<Word> = vec![Vec::new()];
    let mut frontier: Vec<Word> = vec![Vec::new()];
    for _ in 0..k {
        let mut next = Vec::new();
        for w in &frontier {
            for f in VectorFieldKind::COMMUTING {
                let mut v = w.clone();
                v.push(f);
                next.push(v);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

fn relabel(kind: VectorFieldKind, perm: &[usize; 3]) -> VectorFieldKind {
    let m = |a: u8| perm[a as usize - 1] as u8 + 1;
    match kind {
        VectorFieldKind::Partial(0) => kind,
        VectorFieldKind::Partial(a) => VectorFieldKind::Partial(m(a)),
        VectorFieldKind::Boost(a) => VectorFieldKind::Boost(m(a)),
        VectorFieldKind::Rotation(a, b) => {
            let (x, y) = (m(a), m(b));
            VectorFieldKind::Rotation(x.min(y), x.max(y))
        }
        VectorFieldKind::Good(a) => VectorFieldKind::Good(m(a)),
        VectorFieldKind::SemiHyperboloidal(a) => VectorFieldKind::SemiHyperboloidal(m(a)),
        VectorFieldKind::Scaling => kind,
    }
}

/// Representative of a word under relabeling of the space axes.
///
/// For radial fields `|| Gamma^I w ||` and `sup |Gamma^I w|` depend only on
/// this class (up to sign for rotations).
pub fn canonical(word: &[VectorFieldKind]) -> Word {
    PERMS
        .iter()
        .map(|p| word.iter().map(|k| relabel(*k, p)).collect::<Word>())
        .min()
        .unwrap_or_default()
}

/// Canonical classes of words of length `<= k` with their multiplicities.
/// Words whose first-acting field is a rotation vanish on radial fields and
/// are dropped.
pub fn canonical_classes(k: usize) -> Vec<(Word, usize)> {
    let mut map: BTreeMap<Word, usize> = BTreeMap::new();
    for w in words_up_to(k) {
        if matches!(w.last(), Some(VectorFieldKind::Rotation(..))) {
            continue;
        }
        *map.entry(canonical(&w)).or_insert(0) += 1;
    }
    map.into_iter().collect()
}
