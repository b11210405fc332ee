use std::f64::consts::{FRAC_PI_4, PI, SQRT_2};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cluster weight used throughout (the Ising case).
pub const Q: f64 = 2.0;

/// Self-dual point `sqrt(q) / (1 + sqrt(q))`.
pub fn p_self_dual(q: f64) -> f64 {
    q.sqrt() / (1.0 + q.sqrt())
}

/// Ising inverse temperature coupled to bond density `p`.
pub fn beta_of_p(p: f64) -> f64 {
    -0.5 * (-p).ln_1p()
}

/// Bond density coupled to inverse temperature `beta`.
pub fn p_of_beta(beta: f64) -> f64 {
    -(-2.0 * beta).exp_m1()
}

/// Critical inverse temperature `ln(1 + sqrt 2) / 2`.
pub fn beta_critical() -> f64 {
    0.5 * (1.0 + SQRT_2).ln()
}

/// Planar dual of `p` at cluster weight `q`.
pub fn dual_p(p: f64, q: f64) -> f64 {
    (1.0 - p) * q / ((1.0 - p) * q + p)
}

/// Loop-weight parameter `x = p / ((1 - p) sqrt 2)`.
pub fn loop_x(p: f64) -> f64 {
    p / ((1.0 - p) * SQRT_2)
}

/// `sinh(2 beta) + 1 / sinh(2 beta)`, the right-hand side of the rate equation.
pub fn rate_rhs(beta: f64) -> f64 {
    let s = (2.0 * beta).sinh();
    s + 1.0 / s
}

/// `rate_rhs(beta) - 2 = (sinh 2b - 1)^2 / sinh 2b`, evaluated without
/// cancellation near `beta_c` via `sinh 2b - 1 = 2 cosh(b + b_c) sinh(b - b_c)`.
pub fn rate_rhs_excess(beta: f64) -> f64 {
    let bc = beta_critical();
    let d = 2.0 * (beta + bc).cosh() * (beta - bc).sinh();
    d * d / (2.0 * beta).sinh()
}

/// Parameters of the q = 2 random-cluster model in all the equivalent
/// parametrisations used by the crate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub p: f64,
    pub q: f64,
    pub x: f64,
    /// Phase angle in `[0, 2 pi)`.
    pub alpha: f64,
    pub beta: f64,
    pub mass: f64,
}

impl ModelParams {
    pub fn from_p(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::OutOfRange(format!("p = {p} must lie in (0, 1)")));
        }
        let x = loop_x(p);
        let alpha = alpha_of_x(x);
        Ok(Self {
            p,
            q: Q,
            x,
            alpha,
            beta: beta_of_p(p),
            mass: mass_of_x(x),
        })
    }

    pub fn from_beta(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::OutOfRange(format!("beta = {beta} must be positive")));
        }
        Self::from_p(p_of_beta(beta))
    }

    /// `e^{i alpha}`.
    pub fn phase(&self) -> Complex64 {
        Complex64::from_polar(1.0, self.alpha)
    }

    /// Signed phase angle in `(-pi, pi]`.
    pub fn alpha_signed(&self) -> f64 {
        if self.alpha > PI {
            self.alpha - 2.0 * PI
        } else {
            self.alpha
        }
    }

    pub fn is_subcritical(&self) -> bool {
        self.p < p_self_dual(self.q)
    }
}

/// `cos 2 alpha(x)` expanded as `2x (sqrt2 x^2 + 3x + sqrt2) / (x^2 + sqrt2 x + 1)^2`.
/// Every term is positive, so the mass keeps full relative precision where
/// `cos 2 alpha` is small (`p -> 1`).
pub fn mass_of_x(x: f64) -> f64 {
    let d = x * (x + SQRT_2) + 1.0;
    2.0 * x * (x * (SQRT_2 * x + 3.0) + SQRT_2) / (d * d)
}

/// The ratio `(e^{i pi/4} + x) / (e^{i pi/4} x + 1)`.
pub fn phase_ratio(x: f64) -> Complex64 {
    let w = Complex64::from_polar(1.0, FRAC_PI_4);
    (w + x) / (w * x + 1.0)
}

/// Principal argument of [`phase_ratio`], normalised to `[0, 2 pi)`.
/// Arguments within a few ulps of zero are snapped to zero so that the
/// self-dual point maps to `alpha = 0` rather than to `2 pi - eps`.
pub fn alpha_of_x(x: f64) -> f64 {
    let a = phase_ratio(x).arg();
    if a.abs() <= 8.0 * f64::EPSILON {
        0.0
    } else if a < 0.0 {
        a + 2.0 * PI
    } else {
        a
    }
}
