//! Fermionic observable of the planar FK-Ising model: exact evaluation on
//! small domains, local relations, massive harmonic analysis and Monte Carlo
//! estimation of connection decay.

pub mod error;
pub mod exact;
pub mod lattice;
pub mod massive;
pub mod montecarlo;
pub mod relations;

pub use error::{Error, Result};
pub use exact::{BondConfig, Observable};
pub use lattice::{Domain, MedialGraph, ModelParams, Site};
pub use massive::{GreenField, RateQuery};
pub use montecarlo::{McEstimate, SpinConfig};
