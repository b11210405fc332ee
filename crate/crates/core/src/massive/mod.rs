//! Massive harmonicity of the observable, the massive Green function, the
//! decay rate and the random-walk representation.

mod green;
mod rate;
mod stencil;
mod walk;

pub use green::{green_function, required_radius, GreenField};
pub use rate::{rate_function, solve_rate, write_rate_table, RateQuery, RateSolution};
pub use stencil::{
    bulk_stencil_residual, corner_alternative_residual, stencil_coefficients, wedge_stencil_residual, Role,
    StencilField,
};
pub use walk::{last_step_payoff, payoff_reflection, solve_walk, walk_representation, WalkField, LAST_STEP_PAYOFF};
