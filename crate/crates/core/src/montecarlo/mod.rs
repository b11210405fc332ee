//! Swendsen-Wang sampling of the Ising model with the Edwards-Sokal bond
//! layer, and estimators for two-point functions, strip crossings and
//! decay rates.

mod estimate;
mod io;
mod spins;
mod stats;

pub use estimate::{
    estimate_coupling, estimate_strip_crossing, estimate_two_point, estimate_two_point_profile, CouplingEstimate,
    LnRatio,
};
pub use io::{write_estimates, EstimateRow, RunManifest};
pub use spins::{fk_from_spins, sw_step, FkConfig, SpinBc, SpinConfig, SwChain, SwWorkspace};
pub use stats::{chain_rng, fit_decay_rate, run_chains, ChainPlan, DecayFit, McEstimate, DEFAULT_BURN_IN, RNG_NAME};
