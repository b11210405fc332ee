//! Lattice geometry: domains, their medial graphs and model parameters.

mod domain;
mod medial;
mod params;

pub use domain::{Bond, BoundaryCondition, BoundaryKind, DobrushinDomain, Domain, Site};
pub use medial::{Dir, MedialEdge, MedialGraph, MedialPoint, MedialVertex, Next, Side, VertexKind};
pub use params::{
    alpha_of_x, beta_critical, beta_of_p, dual_p, loop_x, mass_of_x, p_of_beta, p_self_dual, phase_ratio, rate_rhs,
    rate_rhs_excess, ModelParams, Q,
};
