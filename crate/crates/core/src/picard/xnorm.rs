use alloc::vec;
use alloc::vec::Vec;

use super::history::FieldHistory;
use crate::energies::{GammaGhostTracker, GhostWeightSpec};
use crate::error::{Error, Result};
use crate::evolve::{Component, Frame, Observer};
use crate::math;
use crate::radial::angular::symmetric_directions;
use crate::radial::norms::{GammaTable, WeightKind};
use crate::radial::stencil;

/// The truncated X-norm split into its tiers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XNormReport {
    pub tier: usize,
    pub delta: f64,
    /// `sup_t sum_{|I|<=K} (E_gst,1(t, Gamma^I Psi)^{1/2} + ||Gamma^I phi||)`.
    pub energy: f64,
    /// `sum_{|I|<=K-1} sup <t+r>^{3/2-delta} |Gamma^I Psi|`.
    pub sup_psi_decay: f64,
    /// `sum_{|I|<=K-2} sup <t+r>^{3/2} |Gamma^I Psi|`.
    pub sup_psi_sharp: f64,
    /// `sum_{|I|<=K-2} sup <t+r> <t-r>^{1/2} |Gamma^I phi|`.
    pub sup_phi: f64,
    /// Sampled time levels.
    pub samples: usize,
}

impl XNormReport {
    pub fn sup_psi(&self) -> f64 {
        self.sup_psi_decay + self.sup_psi_sharp
    }

    pub fn total(&self) -> f64 {
        self.energy + self.sup_psi() + self.sup_phi
    }
}

/// Running `sum_I mult * sup |weight Gamma^I w|` for one tier.
struct SupTier {
    table: GammaTable,
    weight: WeightKind,
    best: Vec<f64>,
}

impl SupTier {
    fn new(tier: usize, weight: WeightKind) -> Result<Self> {
        let table = GammaTable::new(tier)?;
        let best = vec![0.0; table.classes().len()];
        Ok(Self { table, weight, best })
    }

    fn update(&mut self, d: &crate::radial::window::RadialDerivs, dirs: &[[f64; 3]]) -> Result<()> {
        let t = d.t();
        for (k, (_, _, e)) in self.table.classes().iter().enumerate() {
            let s = e.compile(t).weighted_sup(d, |r| self.weight.eval(t, r), dirs)?;
            self.best[k] = self.best[k].max(s);
        }
        Ok(())
    }

    fn value(&self) -> f64 {
        self.table
            .classes()
            .iter()
            .zip(&self.best)
            .map(|((_, m, _), b)| *m as f64 * b)
            .sum()
    }
}

/// The X-norm of `(Psi, phi)` sampled every `stride` levels (and at the last).
pub fn x_norm(psi: &FieldHistory, phi: &FieldHistory, tier: usize, delta: f64, stride: usize) -> Result<XNormReport> {
    if tier > 2 {
        return Err(Error::UnsupportedTier(tier));
    }
    if psi.config != phi.config {
        return Err(Error::Mismatch("X-norm pair uses different grids or steps"));
    }
    let spec = GhostWeightSpec::new(delta)?;
    let cfg = psi.config;
    let last = cfg.steps() as i64;
    let stride = stride.max(1) as i64;
    let low = tier.saturating_sub(1);
    let lowest = tier.saturating_sub(2);
    let dirs = symmetric_directions();
    let phi_table = GammaTable::new(tier)?;
    let mut decay = SupTier::new(low, WeightKind::TPlusR32Delta(delta))?;
    let mut sharp = SupTier::new(lowest, WeightKind::TPlusR32)?;
    let mut phi_sup = SupTier::new(lowest, WeightKind::TPlusRTMinusRHalf)?;
    let mut ghost = GammaGhostTracker::new(&spec, 0, tier, 1)?;
    let comps = [Component::new("e", psi.mass)];
    let zeros = vec![0.0; cfg.grid.nr()];
    let mut pbuf: [Vec<f64>; 5] = Default::default();
    let mut fbuf: [Vec<f64>; 5] = Default::default();
    let mut phi_sums = Vec::new();
    let mut centers: Vec<i64> = (0..=last).step_by(stride as usize).collect();
    if centers.last() != Some(&last) {
        centers.push(last);
    }
    for &c in &centers {
        psi.padded_window(c, &mut pbuf);
        phi.padded_window(c, &mut fbuf);
        let support = pbuf.iter().map(|l| stencil::active_len(l)).max().unwrap_or(0);
        let frame = Frame::from_parts(
            c,
            cfg.time(c),
            cfg.dt(),
            cfg.grid,
            c == last,
            &comps,
            vec![core::array::from_fn(|j| pbuf[j].as_slice())],
            vec![zeros.as_slice()],
            support,
        );
        ghost.observe(&frame)?;
        let dp = psi.window(c, &pbuf)?.derivs(low as u8)?;
        decay.update(&dp, &dirs)?;
        sharp.update(&dp, &dirs)?;
        let df = phi.window(c, &fbuf)?.derivs(tier as u8)?;
        phi_sums.push(phi_table.norm_sum(&df)?);
        phi_sup.update(&df, &dirs)?;
    }
    let mults: Vec<f64> = ghost.classes().iter().map(|(_, m)| *m as f64).collect();
    let energy = ghost
        .samples
        .iter()
        .zip(&phi_sums)
        .map(|(s, f)| {
            let e: f64 = mults
                .iter()
                .enumerate()
                .map(|(k, m)| m * math::sqrt(s.total(k).max(0.0)))
                .sum();
            e + f
        })
        .fold(0.0, f64::max);
    Ok(XNormReport {
        tier,
        delta,
        energy,
        sup_psi_decay: decay.value(),
        sup_psi_sharp: sharp.value(),
        sup_phi: phi_sup.value(),
        samples: centers.len(),
    })
}
