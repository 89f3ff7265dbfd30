//! Radial grids, stencils, norms and initial data.

pub mod angular;
pub mod data;
pub mod gamma;
pub mod grid;
pub mod norms;
pub mod stencil;
pub mod window;

pub use angular::{sphere_moment, symmetric_directions, AngularMomentTable};
pub use data::{make_initial_state, DataFamily, InitialDataSpec};
pub use gamma::{canonical, canonical_classes, words_up_to, CompiledExpr, RadialExpr, Word};
pub use grid::RadialGrid;
pub use norms::{gamma_l2_table, l2_norm, smallness_norm, weighted_sup, word_label, GammaTable, WeightKind};
pub use window::{DerivativeWindow, RadialDerivs, RadialState};
