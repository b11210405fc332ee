use thiserror::Error;

use crate::lattice::Site;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("enumeration cap exceeded: domain has {bonds} free bonds, cap is {cap}")]
    CapExceeded { bonds: usize, cap: usize },

    #[error("subcritical regime required (beta < beta_c = {beta_c}), got beta = {beta}")]
    NotSubcritical { beta: f64, beta_c: f64 },

    #[error("massive series diverges: mass = {0} must be < 1")]
    MassTooLarge(f64),

    #[error("tolerance {tol} unreachable at radius {radius}; need radius >= {required}")]
    RadiusTooSmall { tol: f64, radius: usize, required: usize },

    #[error("missing observable value at {0}")]
    MissingValue(String),

    #[error("no stencil role for site ({}, {})", .0.x, .0.y)]
    MissingRole(Site),

    #[error("fit needs at least {needed} usable points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("margin violated: {0}")]
    Margin(String),

    #[error("linear solve failed: {0}")]
    Solve(String),

    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(e: impl std::fmt::Display) -> Self {
        Error::Io(e.to_string())
    }
}
