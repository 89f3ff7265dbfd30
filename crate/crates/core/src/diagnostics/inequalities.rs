use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::evolve::{Frame, Observer};
use crate::math::{self, jb};
use crate::radial::gamma::CompiledExpr;
use crate::radial::norms::GammaTable;
use crate::radial::window::{DerivativeWindow, RadialDerivs};

/// Smooth dyadic partition of unity built from the cutoff
/// `chi(s) = psi(2 - s) / (psi(2 - s) + psi(s - 1))`, `psi(x) = exp(-1/x)`
/// for `x > 0`, so that `chi = 1` on `s <= 1` and `chi = 0` on `s >= 2`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PartitionSpec;

fn psi(x: f64) -> f64 {
    if x > 0.0 {
        math::exp(-1.0 / x)
    } else {
        0.0
    }
}

impl PartitionSpec {
    pub fn chi(&self, s: f64) -> f64 {
        if s <= 1.0 {
            1.0
        } else if s >= 2.0 {
            0.0
        } else {
            let a = psi(2.0 - s);
            a / (a + psi(s - 1.0))
        }
    }

    /// `p_0 = chi`, `p_j(s) = chi(s / 2^j) - chi(s / 2^{j-1})`.
    pub fn p(&self, j: u32, s: f64) -> f64 {
        if j == 0 {
            return self.chi(s);
        }
        let h = libm::ldexp(1.0, j as i32);
        self.chi(s / h) - self.chi(2.0 * s / h)
    }

    /// Smallest `J` with `p_j(s) = 0` for all `j > J` and `0 <= s <= s_max`.
    pub fn levels_for(&self, s_max: f64) -> u32 {
        let mut j = 0;
        while libm::ldexp(1.0, j as i32 - 1) < s_max {
            j += 1;
        }
        j
    }
}

pub fn paley_littlewood(spec: &PartitionSpec, j: u32, s: f64) -> f64 {
    spec.p(j, s)
}

/// `max |1 - sum_{j <= j_max} p_j(s)|` over a dense sample of
/// `[0, 2^{j_max - 1}]` that includes every dyadic point.
pub fn partition_check(spec: &PartitionSpec, j_max: u32) -> f64 {
    let top = libm::ldexp(1.0, j_max as i32 - 1);
    let mut worst = 0.0f64;
    let mut check = |s: f64| {
        let sum: f64 = (0..=j_max).map(|j| spec.p(j, s)).sum();
        worst = worst.max((1.0 - sum).abs());
    };
    let n = 1usize << 16;
    for k in 0..=n {
        check(top * k as f64 / n as f64);
    }
    for j in 0..j_max {
        let lo = libm::ldexp(1.0, j as i32 - 1);
        for k in 0..=256 {
            check(lo * (1.0 + k as f64 / 256.0));
        }
    }
    worst
}

/// Largest `|Gamma^I w|` norm over the classes of a table.
fn max_class_norm(table: &GammaTable, d: &RadialDerivs) -> Result<f64> {
    Ok(table.class_norms(d)?.into_iter().fold(0.0, f64::max))
}

/// One sample of the Klainerman-Sobolev tracker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsSample {
    pub t: f64,
    /// `sup_x <t+r> |u|`.
    pub weighted_sup: f64,
    /// `max_{|I| <= 3} ||Gamma^I u||`.
    pub gamma_norm: f64,
}

/// Records the two sides of the Klainerman-Sobolev inequality every
/// `stride` levels for a source-free component. Time derivatives of order
/// two and three come from the field equation.
pub struct KsTracker {
    comp: usize,
    stride: usize,
    table: GammaTable,
    pub samples: Vec<KsSample>,
}

impl KsTracker {
    pub fn new(comp: usize, stride: usize) -> Result<Self> {
        Ok(Self {
            comp,
            stride: stride.max(1),
            table: GammaTable::new(3)?,
            samples: Vec::new(),
        })
    }
}

impl Observer for KsTracker {
    fn observe(&mut self, frame: &Frame<'_>) -> Result<()> {
        if frame.step % self.stride as i64 != 0 && !frame.last {
            return Ok(());
        }
        let c = self.comp;
        let n = frame.support();
        if frame.source(c)[..n].iter().any(|x| *x != 0.0) {
            return Err(Error::Domain(
                "Klainerman-Sobolev tracker needs a source-free component",
            ));
        }
        let w = frame.w(c);
        let d = RadialDerivs::free_field(frame.grid, frame.t, w, &frame.wt(c), frame.comps[c].mass, 3)?;
        let ws = (0..n)
            .map(|i| jb(frame.t + frame.grid.r(i)) * w[i].abs())
            .fold(0.0, f64::max);
        self.samples.push(KsSample {
            t: frame.t,
            weighted_sup: ws,
            gamma_norm: max_class_norm(&self.table, &d)?,
        });
        Ok(())
    }
}

/// `C_KS(t) = sup_x <t+r>|u(t)| / sup_{s <= 2t} max_I ||Gamma^I u(s)||` at
/// each evaluation time; `None` where the denominator vanishes.
#[derive(Debug, Clone, PartialEq)]
pub struct KsReport {
    pub rows: Vec<(f64, Option<f64>)>,
}

impl KsReport {
    /// Largest measured constant.
    pub fn constant(&self) -> Option<f64> {
        self.rows.iter().filter_map(|r| r.1).reduce(f64::max)
    }
}

pub fn klainerman_sobolev_check(samples: &[KsSample], eval_times: &[f64]) -> Result<KsReport> {
    let t_last = samples.last().map_or(f64::NEG_INFINITY, |s| s.t);
    let mut rows = Vec::with_capacity(eval_times.len());
    for &te in eval_times {
        if 2.0 * te > t_last + 1e-9 {
            return Err(Error::InsufficientData("run does not reach twice the evaluation time"));
        }
        let at = samples
            .iter()
            .min_by(|a, b| (a.t - te).abs().total_cmp(&(b.t - te).abs()))
            .ok_or(Error::InsufficientData("no samples"))?;
        let den = samples
            .iter()
            .filter(|s| s.t <= 2.0 * te + 1e-9)
            .map(|s| s.gamma_norm)
            .fold(0.0, f64::max);
        rows.push((te, if den > 0.0 { Some(at.weighted_sup / den) } else { None }));
    }
    Ok(KsReport { rows })
}

/// One sample of the Georgiev tracker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeorgievSample {
    pub t: f64,
    /// `sup_x <t+r>^{3/2} |w|`.
    pub lhs: f64,
    /// `sum_{|I| <= 2} ||<t+r> Gamma^I f(t)||`.
    pub source_norm: f64,
}

/// Records both sides of the Georgiev estimate with `|I| <= 2` for a
/// Klein-Gordon component and its recorded source.
pub struct GeorgievTracker {
    comp: usize,
    stride: usize,
    table: GammaTable,
    partition: PartitionSpec,
    ring: VecDeque<(i64, Vec<f64>, Vec<f64>)>,
    /// `sum_j sum_{|I| <= 2} ||<r> p_j(r) Gamma^I w(t0)||`.
    pub data_term: f64,
    pub samples: Vec<GeorgievSample>,
}

impl GeorgievTracker {
    pub const TIER: usize = 2;

    pub fn new(comp: usize, stride: usize) -> Result<Self> {
        Ok(Self {
            comp,
            stride: stride.max(1),
            table: GammaTable::new(Self::TIER)?,
            partition: PartitionSpec,
            ring: VecDeque::with_capacity(5),
            data_term: 0.0,
            samples: Vec::new(),
        })
    }

    fn weighted_sum(&self, d: &RadialDerivs, weight: &dyn Fn(f64) -> f64) -> Result<f64> {
        let t = d.t();
        let mut acc = 0.0;
        for (_, mult, e) in self.table.classes() {
            let c: CompiledExpr = e.compile(t);
            acc += *mult as f64 * math::sqrt(c.weighted_l2_sq(d, weight)?);
        }
        Ok(acc)
    }

    /// `(t, lhs, rhs, lhs / rhs)` with the sup over `s <= t` taken inside each
    /// dyadic piece before summing over `j`.
    pub fn report(&self) -> Vec<(f64, f64, f64, f64)> {
        let t_max = self.samples.last().map_or(0.0, |s| s.t);
        let jn = self.partition.levels_for(t_max.max(1.0)) as usize;
        let mut best = vec![0.0f64; jn + 1];
        let mut out = Vec::with_capacity(self.samples.len());
        for s in &self.samples {
            for (j, b) in best.iter_mut().enumerate() {
                *b = b.max(self.partition.p(j as u32, s.t) * s.source_norm);
            }
            let rhs = best.iter().sum::<f64>() + self.data_term;
            let ratio = if rhs > 0.0 { s.lhs / rhs } else { 0.0 };
            out.push((s.t, s.lhs, rhs, ratio));
        }
        out
    }

    /// Largest `lhs / rhs` over samples with `t >= t_lo`.
    pub fn max_ratio(&self, t_lo: f64) -> f64 {
        self.report()
            .into_iter()
            .filter(|r| r.0 >= t_lo)
            .map(|r| r.3)
            .fold(0.0, f64::max)
    }
}

impl Observer for GeorgievTracker {
    fn observe(&mut self, frame: &Frame<'_>) -> Result<()> {
        let c = self.comp;
        let g = frame.grid;
        if self.samples.is_empty() && self.ring.is_empty() {
            let d = frame.window(c).derivs(Self::TIER as u8)?;
            let top = g.outer_radius();
            let jn = self.partition.levels_for(top);
            let mut acc = 0.0;
            for j in 0..=jn {
                let p = self.partition;
                acc += self.weighted_sum(&d, &|r| {
                    let x = jb(r) * p.p(j, r);
                    x * x
                })?;
            }
            self.data_term = acc;
        }
        let n = frame.support();
        self.ring.push_back((
            frame.step,
            frame.source(c)[..n].to_vec(),
            frame.level(c, 0)[..n].to_vec(),
        ));
        if self.ring.len() > 5 {
            self.ring.pop_front();
        }
        if self.ring.len() < 5 {
            return Ok(());
        }
        let center = frame.step - 2;
        if center % self.stride as i64 != 0 && !frame.last {
            return Ok(());
        }
        let nr = g.nr();
        let pad = |v: &Vec<f64>| {
            let mut x = vec![0.0; nr];
            x[..v.len()].copy_from_slice(v);
            x
        };
        let f: Vec<Vec<f64>> = self.ring.iter().map(|l| pad(&l.1)).collect();
        let t = frame.t - 2.0 * frame.dt;
        let win = DerivativeWindow::new(g, t, frame.dt, [&f[0], &f[1], &f[2], &f[3], &f[4]])?;
        let d = win.derivs(Self::TIER as u8)?;
        let source_norm = self.weighted_sum(&d, &|r| {
            let x = jb(t + r);
            x * x
        })?;
        let w = &self.ring[2].2;
        let lhs = w
            .iter()
            .enumerate()
            .map(|(i, x)| math::powf(jb(t + g.r(i)), 1.5) * x.abs())
            .fold(0.0, f64::max);
        self.samples.push(GeorgievSample { t, lhs, source_norm });
        Ok(())
    }
}
