//! Decay fits, weighted-sup tracking, the flat versus hyperboloidal
//! comparison of nonlinearity integrals and the inequality checks.

pub mod decay;
pub mod foliation;
pub mod inequalities;

pub use decay::{
    component_series, decay_fit, fit_power_law, kubota_bound_check, pointwise_wave_bounds, sup_series, DecayFit,
    FitStatus, WaveBoundSeries, WAVE_BOUND_WEIGHTS,
};
pub use foliation::{
    foliation_comparison, foliation_sweep, Foliation, FoliationConfig, Growth, GrowthRow, GrowthTable, QKind,
};
pub use inequalities::{
    klainerman_sobolev_check, paley_littlewood, partition_check, GeorgievSample, GeorgievTracker, KsReport, KsSample,
    KsTracker, PartitionSpec,
};
