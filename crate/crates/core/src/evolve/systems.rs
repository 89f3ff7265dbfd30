use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use super::DiscreteLaplacian;

/// One evolved scalar field: its label and Klein-Gordon mass.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub name: String,
    pub mass: f64,
}

impl Component {
    pub fn new(name: &str, mass: f64) -> Self {
        Self {
            name: name.to_string(),
            mass,
        }
    }
}

/// Right-hand sides `f_c` of `-Box w_c + m_c^2 w_c = f_c`.
pub trait SourceModel {
    fn components(&self) -> Vec<Component>;

    /// `false` when component `c` is always source-free.
    fn has_source(&self, c: usize) -> bool;

    /// `true` when sources vanish wherever every amplitude vanishes, so
    /// updates can stop at the current support.
    fn confined(&self) -> bool {
        true
    }

    /// Writes `f_c(t)` on nodes `0..upto` of `out[c]` for every sourced
    /// component, from the amplitudes `w` at the same time level.
    fn sources(&mut self, t: f64, w: &[&[f64]], upto: usize, lap: &DiscreteLaplacian, out: &mut [Vec<f64>]);
}

/// Uncoupled, source-free components.
#[derive(Debug, Clone)]
pub struct FreeSystem {
    comps: Vec<Component>,
}

impl FreeSystem {
    pub fn new(comps: Vec<Component>) -> Self {
        Self { comps }
    }
}

impl SourceModel for FreeSystem {
    fn components(&self) -> Vec<Component> {
        self.comps.clone()
    }

    fn has_source(&self, _c: usize) -> bool {
        false
    }

    fn sources(&mut self, _t: f64, _w: &[&[f64]], _upto: usize, _lap: &DiscreteLaplacian, _out: &mut [Vec<f64>]) {}
}

/// Uncoupled components driven by a prescribed `f(c, t, r)`.
pub struct ExternalSource<F: Fn(usize, f64, f64) -> f64> {
    comps: Vec<Component>,
    radii: Vec<f64>,
    f: F,
}

impl<F: Fn(usize, f64, f64) -> f64> ExternalSource<F> {
    pub fn new(comps: Vec<Component>, grid: &crate::radial::RadialGrid, f: F) -> Self {
        Self {
            comps,
            radii: grid.nodes(),
            f,
        }
    }
}

impl<F: Fn(usize, f64, f64) -> f64> SourceModel for ExternalSource<F> {
    fn components(&self) -> Vec<Component> {
        self.comps.clone()
    }

    fn has_source(&self, _c: usize) -> bool {
        true
    }

    fn confined(&self) -> bool {
        false
    }

    fn sources(&mut self, t: f64, _w: &[&[f64]], _upto: usize, _lap: &DiscreteLaplacian, out: &mut [Vec<f64>]) {
        // prescribed sources are not confined to the current support
        for (c, o) in out.iter_mut().enumerate() {
            for (i, r) in self.radii.iter().enumerate() {
                o[i] = (self.f)(c, t, *r);
            }
        }
    }
}

/// The coupled system for `(e, n)`: `f_e = -n e`, `f_n = Lap(e^2)`.
#[derive(Debug, Clone, Default)]
pub struct KgzDirect {
    scratch: Vec<f64>,
}

impl KgzDirect {
    pub const E: usize = 0;
    pub const N: usize = 1;
}

impl SourceModel for KgzDirect {
    fn components(&self) -> Vec<Component> {
        vec![Component::new("e", 1.0), Component::new("n", 0.0)]
    }

    fn has_source(&self, _c: usize) -> bool {
        true
    }

    fn sources(&mut self, _t: f64, w: &[&[f64]], upto: usize, lap: &DiscreteLaplacian, out: &mut [Vec<f64>]) {
        let (e, n) = (w[0], w[1]);
        let len = (upto + 1).min(e.len());
        self.scratch.resize(e.len(), 0.0);
        for i in 0..len {
            self.scratch[i] = e[i] * e[i];
        }
        for x in &mut self.scratch[len..] {
            *x = 0.0;
        }
        for i in 0..upto {
            out[0][i] = -n[i] * e[i];
        }
        lap.apply(&self.scratch, upto, &mut out[1]);
    }
}

/// The divergence-form system for `(e, n0, nD)`:
/// `f_e = -(n0 + Lap nD) e`, `f_{n0} = 0`, `f_{nD} = e^2`.
#[derive(Debug, Clone, Default)]
pub struct KgzReformulated {
    scratch: Vec<f64>,
}

impl KgzReformulated {
    pub const E: usize = 0;
    pub const N0: usize = 1;
    pub const ND: usize = 2;
}

impl SourceModel for KgzReformulated {
    fn components(&self) -> Vec<Component> {
        vec![
            Component::new("e", 1.0),
            Component::new("n0", 0.0),
            Component::new("nD", 0.0),
        ]
    }

    fn has_source(&self, c: usize) -> bool {
        c != Self::N0
    }

    fn sources(&mut self, _t: f64, w: &[&[f64]], upto: usize, lap: &DiscreteLaplacian, out: &mut [Vec<f64>]) {
        let (e, n0, nd) = (w[0], w[1], w[2]);
        self.scratch.resize(e.len(), 0.0);
        lap.apply(nd, upto, &mut self.scratch);
        for i in 0..upto {
            out[0][i] = -(n0[i] + self.scratch[i]) * e[i];
            out[2][i] = e[i] * e[i];
        }
    }
}
