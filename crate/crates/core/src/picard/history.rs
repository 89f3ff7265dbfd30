use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::evolve::{Frame, Observer, SolverConfig};
use crate::radial::stencil;
use crate::radial::window::DerivativeWindow;

/// Every time level `-2 ..= steps + 2` of one component, each truncated to
/// its support. An empty history is the zero field.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldHistory {
    pub config: SolverConfig,
    pub mass: f64,
    levels: Vec<Vec<f64>>,
}

impl FieldHistory {
    pub fn zero(config: SolverConfig, mass: f64) -> Self {
        Self {
            config,
            mass,
            levels: Vec::new(),
        }
    }

    /// `levels[j]` is level `j - 2`; the count must be `steps + 5`.
    pub fn from_levels(config: SolverConfig, mass: f64, mut levels: Vec<Vec<f64>>) -> Result<Self> {
        if levels.len() != config.steps() + 5 {
            return Err(Error::Mismatch("history level count differs from the step count"));
        }
        for l in &mut levels {
            if l.len() > config.grid.nr() {
                return Err(Error::Mismatch("history level longer than the grid"));
            }
            l.truncate(stencil::active_len(l));
        }
        Ok(Self { config, mass, levels })
    }

    /// Number of stored levels (`steps + 5`, or 0 for the zero field).
    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.levels.iter().all(|l| l.is_empty())
    }

    /// Level `l` truncated to its support; empty outside the stored range.
    pub fn level(&self, l: i64) -> &[f64] {
        usize::try_from(l + 2)
            .ok()
            .and_then(|j| self.levels.get(j))
            .map_or(&[], |v| v.as_slice())
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.config != other.config {
            return Err(Error::Mismatch("histories use different grids or steps"));
        }
        Ok(())
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        self.check_compatible(other)?;
        let n = self.config.steps() + 5;
        let levels = (0..n as i64)
            .map(|j| {
                let (x, y) = (self.level(j - 2), other.level(j - 2));
                let mut out = vec![0.0; x.len().max(y.len())];
                for (i, o) in out.iter_mut().enumerate() {
                    *o = a * x.get(i).copied().unwrap_or(0.0) + b * y.get(i).copied().unwrap_or(0.0);
                }
                out
            })
            .collect();
        Self::from_levels(self.config, self.mass, levels)
    }

    pub fn difference(&self, other: &Self) -> Result<Self> {
        self.combine(1.0, other, -1.0)
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        for l in &mut out.levels {
            for x in l.iter_mut() {
                *x *= c;
            }
            l.truncate(stencil::active_len(l));
        }
        out
    }

    /// `max |self - other|` over every level and node.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_compatible(other)?;
        let n = self.config.steps() as i64 + 3;
        let mut m = 0.0f64;
        for l in -2..n {
            let (x, y) = (self.level(l), other.level(l));
            for i in 0..x.len().max(y.len()) {
                let d = x.get(i).copied().unwrap_or(0.0) - y.get(i).copied().unwrap_or(0.0);
                m = m.max(d.abs());
            }
        }
        Ok(m)
    }

    /// Full-length copies of levels `center - 2 ..= center + 2`.
    pub(crate) fn padded_window(&self, center: i64, buf: &mut [Vec<f64>; 5]) {
        let nr = self.config.grid.nr();
        for (j, b) in buf.iter_mut().enumerate() {
            b.clear();
            b.resize(nr, 0.0);
            let src = self.level(center - 2 + j as i64);
            b[..src.len()].copy_from_slice(src);
        }
    }

    /// Derivative window over padded copies made by [`Self::padded_window`].
    pub(crate) fn window<'a>(&self, center: i64, buf: &'a [Vec<f64>; 5]) -> Result<DerivativeWindow<'a>> {
        DerivativeWindow::new(
            self.config.grid,
            self.config.time(center),
            self.config.dt(),
            core::array::from_fn(|j| buf[j].as_slice()),
        )
    }
}

/// Observer storing every level of the selected components.
#[derive(Debug, Clone)]
pub(crate) struct HistoryRecorder {
    comps: Vec<usize>,
    levels: Vec<Vec<Vec<f64>>>,
    next: i64,
}

impl HistoryRecorder {
    pub fn new(comps: Vec<usize>) -> Self {
        let levels = vec![Vec::new(); comps.len()];
        Self { comps, levels, next: 0 }
    }

    pub fn finish(self, config: SolverConfig, masses: &[f64]) -> Result<Vec<FieldHistory>> {
        self.levels
            .into_iter()
            .zip(masses)
            .map(|(l, m)| FieldHistory::from_levels(config, *m, l))
            .collect()
    }
}

impl Observer for HistoryRecorder {
    fn observe(&mut self, frame: &Frame<'_>) -> Result<()> {
        if frame.step != self.next {
            return Err(Error::Mismatch("history recorder missed a level"));
        }
        let offsets: &[i32] = if frame.step == 0 { &[-2, -1, 0, 1, 2] } else { &[2] };
        for (k, &c) in self.comps.iter().enumerate() {
            for &o in offsets {
                let l = frame.level(c, o);
                self.levels[k].push(l[..stencil::active_len(l)].to_vec());
            }
        }
        self.next += 1;
        Ok(())
    }
}
