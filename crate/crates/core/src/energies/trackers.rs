use alloc::vec;
use alloc::vec::Vec;

use super::ghost::GhostWeightSpec;
use crate::error::Result;
use crate::evolve::{Frame, Observer};
use crate::jets::VectorFieldKind;
use crate::math;
use crate::radial::gamma::{canonical_classes, CompiledExpr, RadialExpr, Word};
use crate::radial::stencil::{self, Parity};
use crate::radial::window::{DerivativeWindow, RadialDerivs};

/// Ghost-weight bookkeeping of one component at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GhostSample {
    pub t: f64,
    /// `int (|d_t v|^2 + |d_x v|^2 + m^2 v^2) dx`, the direct part.
    pub natural: f64,
    /// The same density weighted by `e^q`.
    pub weighted: f64,
    /// `m^2 int int v^2 / <r - t'>^{1+delta}`.
    pub a_mass: f64,
    /// `sum_a int int |G_a v|^2 / <r - t'>^{1+delta}`.
    pub a_good: f64,
    /// `int int 2 e^q f d_t v`.
    pub source_work: f64,
    /// `int int q' e^q ((d_t v + d_r v)^2 + m^2 v^2)`.
    pub weight_loss: f64,
    /// `weighted(t) - weighted(t0) - source_work + weight_loss`.
    pub residual: f64,
    /// `int ||f|| dt'`.
    pub source_l2_int: f64,
    /// `int ||<t' + r> f|| dt'`.
    pub source_weighted_int: f64,
}

impl GhostSample {
    /// `E_gst,m(t, v)`.
    pub fn total(&self) -> f64 {
        self.natural + self.a_mass + self.a_good
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Rates {
    mass: f64,
    good: f64,
    work: f64,
    loss: f64,
    f: f64,
    fw: f64,
}

impl Rates {
    fn trapezoid(&self, o: &Rates, h: f64) -> Rates {
        let m = |a: f64, b: f64| 0.5 * h * (a + b);
        Rates {
            mass: m(self.mass, o.mass),
            good: m(self.good, o.good),
            work: m(self.work, o.work),
            loss: m(self.loss, o.loss),
            f: m(self.f, o.f),
            fw: m(self.fw, o.fw),
        }
    }

    fn add(&mut self, o: &Rates) {
        self.mass += o.mass;
        self.good += o.good;
        self.work += o.work;
        self.loss += o.loss;
        self.f += o.f;
        self.fw += o.fw;
    }
}

/// Observer accumulating the ghost-weight energy and the `e^q` energy
/// balance of one component, every level, by the trapezoid rule in time.
#[derive(Debug, Clone)]
pub struct GhostTracker<'a> {
    spec: &'a GhostWeightSpec,
    comp: usize,
    stride: usize,
    prev: Option<(f64, Rates)>,
    acc: Rates,
    weighted0: Option<f64>,
    pub samples: Vec<GhostSample>,
}

impl<'a> GhostTracker<'a> {
    /// Records a sample every `stride` levels (and at the last one).
    pub fn new(spec: &'a GhostWeightSpec, comp: usize, stride: usize) -> Self {
        Self {
            spec,
            comp,
            stride: stride.max(1),
            prev: None,
            acc: Rates::default(),
            weighted0: None,
            samples: Vec::new(),
        }
    }

    pub fn last(&self) -> Option<&GhostSample> {
        self.samples.last()
    }

    /// Largest `|residual|` over the recorded samples.
    pub fn max_residual(&self) -> f64 {
        self.samples.iter().map(|s| s.residual.abs()).fold(0.0, f64::max)
    }

    /// [`Self::max_residual`] relative to the initial `e^q` energy (zero when
    /// that energy vanishes).
    pub fn max_relative_residual(&self) -> f64 {
        match self.samples.first() {
            Some(s) if s.weighted > 0.0 => self.max_residual() / s.weighted,
            _ => 0.0,
        }
    }
}

impl Observer for GhostTracker<'_> {
    fn observe(&mut self, frame: &Frame<'_>) -> Result<()> {
        let c = self.comp;
        let grid = frame.grid;
        let upto = frame.support();
        let t = frame.t;
        let mass = frame.comps[c].mass;
        let m2 = mass * mass;
        let w = frame.w(c);
        let wt = frame.wt(c);
        let wr = stencil::d1(w, Parity::Even, grid.dr());
        let f = frame.source(c);
        let mut natural = 0.0;
        let mut weighted = 0.0;
        let mut now = Rates::default();
        for i in 0..upto {
            let r = grid.r(i);
            let r2 = r * r;
            let y = r - t;
            let dq = self.spec.dq(y);
            let eq = math::exp(self.spec.q(y));
            let dens = wt[i] * wt[i] + wr[i] * wr[i] + m2 * w[i] * w[i];
            let good = (wt[i] + wr[i]) * (wt[i] + wr[i]);
            natural += r2 * dens;
            weighted += r2 * eq * dens;
            now.mass += r2 * m2 * w[i] * w[i] * dq;
            now.good += r2 * good * dq;
            now.work += r2 * 2.0 * eq * f[i] * wt[i];
            now.loss += r2 * dq * eq * (good + m2 * w[i] * w[i]);
            now.f += r2 * f[i] * f[i];
            now.fw += r2 * (1.0 + (t + r) * (t + r)) * f[i] * f[i];
        }
        let scale = math::FOUR_PI * grid.dr();
        natural *= scale;
        weighted *= scale;
        now.mass *= scale;
        now.good *= scale;
        now.work *= scale;
        now.loss *= scale;
        now.f = math::sqrt(scale * now.f);
        now.fw = math::sqrt(scale * now.fw);
        if let Some((tp, p)) = self.prev {
            let inc = p.trapezoid(&now, t - tp);
            self.acc.add(&inc);
        }
        self.prev = Some((t, now));
        let w0 = *self.weighted0.get_or_insert(weighted);
        if frame.step % self.stride as i64 == 0 || frame.last {
            self.samples.push(GhostSample {
                t,
                natural,
                weighted,
                a_mass: self.acc.mass,
                a_good: self.acc.good,
                source_work: self.acc.work,
                weight_loss: self.acc.loss,
                residual: weighted - w0 - self.acc.work + self.acc.loss,
                source_l2_int: self.acc.f,
                source_weighted_int: self.acc.fw,
            });
        }
        Ok(())
    }
}

/// `E_gst,m(t, Gamma^I v)` for one canonical word class.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaGhostSample {
    pub t: f64,
    /// Per class: `(natural, a_mass, a_good)`.
    pub parts: Vec<(f64, f64, f64)>,
}

impl GammaGhostSample {
    /// `E_gst,m(t, Gamma^I v)` of class `k`.
    pub fn total(&self, k: usize) -> f64 {
        let (a, b, c) = self.parts[k];
        a + b + c
    }
}

struct ClassExprs {
    base: RadialExpr,
    dt: RadialExpr,
    dx: [RadialExpr; 3],
    good: [RadialExpr; 3],
}

/// Ghost-weight energies of `Gamma^I v` for every canonical class of words
/// with `|I| <= tier`, evaluated every `stride` levels.
pub struct GammaGhostTracker<'a> {
    spec: &'a GhostWeightSpec,
    comp: usize,
    stride: usize,
    tier: usize,
    classes: Vec<(Word, usize)>,
    exprs: Vec<ClassExprs>,
    prev: Option<(f64, Vec<(f64, f64)>)>,
    acc: Vec<(f64, f64)>,
    pub samples: Vec<GammaGhostSample>,
}

impl<'a> GammaGhostTracker<'a> {
    pub fn new(spec: &'a GhostWeightSpec, comp: usize, tier: usize, stride: usize) -> Result<Self> {
        if tier > 2 {
            return Err(crate::Error::UnsupportedTier(tier));
        }
        let classes = canonical_classes(tier);
        let exprs = classes
            .iter()
            .map(|(w, _)| {
                let base = RadialExpr::of_word(w)?;
                let space = |a: usize| base.partial_space(a);
                let good = |a: u8| base.apply(VectorFieldKind::Good(a));
                Ok(ClassExprs {
                    dt: base.partial_t(),
                    dx: [space(0), space(1), space(2)],
                    good: [good(1)?, good(2)?, good(3)?],
                    base,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let n = classes.len();
        Ok(Self {
            spec,
            comp,
            stride: stride.max(1),
            tier,
            classes,
            exprs,
            prev: None,
            acc: vec![(0.0, 0.0); n],
            samples: Vec::new(),
        })
    }

    /// Canonical words with their multiplicities, in sample order.
    pub fn classes(&self) -> &[(Word, usize)] {
        &self.classes
    }

    fn evaluate(&self, d: &RadialDerivs, t: f64, mass: f64) -> Result<(Vec<f64>, Vec<(f64, f64)>)> {
        let m2 = mass * mass;
        let ghost = |r: f64| self.spec.dq(r - t);
        let sq = |e: &RadialExpr, wt: &dyn Fn(f64) -> f64| -> Result<f64> {
            let c: CompiledExpr = e.compile(t);
            if c.is_zero() {
                return Ok(0.0);
            }
            c.weighted_l2_sq(d, wt)
        };
        let one = |_r: f64| 1.0;
        let mut nat = Vec::with_capacity(self.exprs.len());
        let mut rates = Vec::with_capacity(self.exprs.len());
        for e in &self.exprs {
            let mut n = sq(&e.dt, &one)? + m2 * sq(&e.base, &one)?;
            let mut good = 0.0;
            for a in 0..3 {
                n += sq(&e.dx[a], &one)?;
                good += sq(&e.good[a], &ghost)?;
            }
            nat.push(n);
            let mass_rate = if m2 > 0.0 { m2 * sq(&e.base, &ghost)? } else { 0.0 };
            rates.push((mass_rate, good));
        }
        Ok((nat, rates))
    }
}

impl Observer for GammaGhostTracker<'_> {
    fn observe(&mut self, frame: &Frame<'_>) -> Result<()> {
        if frame.step % self.stride as i64 != 0 && !frame.last {
            return Ok(());
        }
        let c = self.comp;
        let d = frame.window(c).derivs(self.tier as u8 + 1)?;
        let (nat, rates) = self.evaluate(&d, frame.t, frame.comps[c].mass)?;
        if let Some((tp, prev)) = &self.prev {
            let h = frame.t - tp;
            for (k, (a, b)) in self.acc.iter_mut().enumerate() {
                *a += 0.5 * h * (prev[k].0 + rates[k].0);
                *b += 0.5 * h * (prev[k].1 + rates[k].1);
            }
        }
        self.prev = Some((frame.t, rates));
        self.samples.push(GammaGhostSample {
            t: frame.t,
            parts: nat.iter().zip(&self.acc).map(|(n, (a, b))| (*n, *a, *b)).collect(),
        });
        Ok(())
    }
}

/// `||u||^2 + ||L_0 u||^2 + sum_{a<b} ||Omega_ab u||^2 + sum_a ||L_a u||^2`.
pub fn conformal_energy(window: &DerivativeWindow<'_>) -> Result<f64> {
    let d = window.derivs(1)?;
    conformal_from_derivs(&d)
}

fn conformal_words() -> [Word; 8] {
    use VectorFieldKind::*;
    [
        vec![],
        vec![Scaling],
        vec![Rotation(1, 2)],
        vec![Rotation(1, 3)],
        vec![Rotation(2, 3)],
        vec![Boost(1)],
        vec![Boost(2)],
        vec![Boost(3)],
    ]
}

fn conformal_from_derivs(d: &RadialDerivs) -> Result<f64> {
    let mut e = 0.0;
    for w in conformal_words() {
        let c = RadialExpr::of_word(&w)?.compile(d.t());
        if !c.is_zero() {
            e += c.weighted_l2_sq(d, |_| 1.0)?;
        }
    }
    Ok(e)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConformalSample {
    pub t: f64,
    pub energy: f64,
    /// `int_{t0}^t ||<t' + |x|> f|| dt'`.
    pub source_weighted_int: f64,
}

impl ConformalSample {
    pub fn lhs(&self) -> f64 {
        math::sqrt(self.energy)
    }
}

/// Conformal energy of one component every `stride` levels, with the
/// weighted source integral accumulated every level.
#[derive(Debug, Clone)]
pub struct ConformalTracker {
    comp: usize,
    stride: usize,
    prev: Option<(f64, f64)>,
    acc: f64,
    pub samples: Vec<ConformalSample>,
}

impl ConformalTracker {
    pub fn new(comp: usize, stride: usize) -> Self {
        Self {
            comp,
            stride: stride.max(1),
            prev: None,
            acc: 0.0,
            samples: Vec::new(),
        }
    }

    /// `(t, lhs, rhs, lhs / rhs)` with `rhs = E_con(t0)^{1/2} + int ||<t'+r> f||`.
    pub fn estimate(&self) -> Vec<(f64, f64, f64, f64)> {
        let Some(first) = self.samples.first() else {
            return Vec::new();
        };
        let e0 = first.lhs();
        self.samples
            .iter()
            .map(|s| {
                let rhs = e0 + s.source_weighted_int;
                let ratio = if rhs > 0.0 { s.lhs() / rhs } else { 0.0 };
                (s.t, s.lhs(), rhs, ratio)
            })
            .collect()
    }

    /// `max lhs / rhs` over samples with `t >= t_lo`.
    pub fn constant(&self, t_lo: f64) -> f64 {
        self.estimate()
            .iter()
            .filter(|e| e.0 >= t_lo)
            .map(|e| e.3)
            .fold(0.0, f64::max)
    }
}

impl Observer for ConformalTracker {
    fn observe(&mut self, frame: &Frame<'_>) -> Result<()> {
        let c = self.comp;
        let grid = frame.grid;
        let t = frame.t;
        let f = frame.source(c);
        let mut fw = 0.0;
        for i in 0..frame.support() {
            let r = grid.r(i);
            fw += r * r * (1.0 + (t + r) * (t + r)) * f[i] * f[i];
        }
        let fw = math::sqrt(math::FOUR_PI * grid.dr() * fw);
        if let Some((tp, p)) = self.prev {
            self.acc += 0.5 * (t - tp) * (p + fw);
        }
        self.prev = Some((t, fw));
        if frame.step % self.stride as i64 == 0 || frame.last {
            let d = frame.window(c).derivs(1)?;
            self.samples.push(ConformalSample {
                t,
                energy: conformal_from_derivs(&d)?,
                source_weighted_int: self.acc,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::grid::RadialGrid;

    #[test]
    fn conformal_energy_at_rest_reduces_to_scaling_term() {
        // t = 0, u_t = 0: E_con = ||u||^2 + ||r u_r||^2
        let g = RadialGrid::with_radius(12.0, 0.02).unwrap();
        let dt = 0.01;
        let lv: Vec<Vec<f64>> = (0..5)
            .map(|j| {
                let t = (j as f64 - 2.0) * dt;
                g.sample(|r| libm::cos(t) * libm::exp(-r * r))
            })
            .collect();
        let win = DerivativeWindow::new(g, 0.0, dt, [&lv[0], &lv[1], &lv[2], &lv[3], &lv[4]]).unwrap();
        let e = conformal_energy(&win).unwrap();
        // int r^2 (1 + 4 r^4) exp(-2 r^2): moments 1/8 and 15/128 times sqrt(pi/2)
        let exact = math::FOUR_PI * (1.0 / 8.0 + 4.0 * 15.0 / 128.0) * libm::sqrt(math::PI / 2.0);
        assert!((e - exact).abs() < 1e-6 * exact, "{e} vs {exact}");
    }
}
