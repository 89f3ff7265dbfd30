//! Numerical core of the Klein-Gordon-Zakharov laboratory.
//!
//! `no_std` with `alloc` and no I/O. File formats, the CLI and experiment
//! orchestration live in the `kgz-lab` crate.
//!
//! Module map:
//! - [`jets`]: exact third-order jets and vector-field algebra at a point.
//! - [`radial`]: staggered radial grids, stencils, norms, initial data and the
//!   symbolic action of commuting vector fields on radial fields.
//! - [`evolve`]: leapfrog evolution of linear and coupled radial systems.
//! - [`energies`]: natural, ghost-weight, conformal and hyperboloidal energies.
//! - [`picard`]: the solution map, the truncated X-norm and Picard iteration.
//! - [`diagnostics`]: decay fits, foliation comparison and inequality checks.
#![no_std]
#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::type_complexity
)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod diagnostics;
pub mod energies;
pub mod error;
pub mod evolve;
pub mod jets;
pub mod math;
pub mod picard;
pub mod radial;

pub use error::{Error, Result};
