use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
#[cfg(test)]
use crate::lattice::rate_rhs;
use crate::lattice::{beta_critical, beta_of_p, rate_rhs_excess, Site};

/// Direction and temperature of a decay-rate query.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateQuery {
    pub beta: f64,
    pub direction: Site,
}

impl RateQuery {
    pub fn from_beta(beta: f64, direction: Site) -> Result<Self> {
        let q = Self { beta, direction };
        q.validate()?;
        Ok(q)
    }

    pub fn from_p(p: f64, direction: Site) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::OutOfRange(format!("p = {p} must lie in (0, 1)")));
        }
        Self::from_beta(beta_of_p(p), direction)
    }

    fn validate(&self) -> Result<()> {
        let bc = beta_critical();
        if !(self.beta > 0.0 && self.beta < bc) {
            return Err(Error::NotSubcritical {
                beta: self.beta,
                beta_c: bc,
            });
        }
        if self.direction == Site::new(0, 0) {
            return Err(Error::OutOfRange("direction must be nonzero".into()));
        }
        Ok(())
    }
}

/// Solution of the rate equation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateSolution {
    pub beta: f64,
    pub a1: i32,
    pub a2: i32,
    pub s: f64,
    pub rate: f64,
}

/// `sqrt(1 + u^2) - 1` without cancellation.
fn excess(u: f64) -> f64 {
    u * u / (u.hypot(1.0) + 1.0)
}

fn lhs_excess(s: f64, a1: f64, a2: f64) -> f64 {
    excess(s * a1) + excess(s * a2)
}

/// Solves `sqrt(1 + (s a1)^2) + sqrt(1 + (s a2)^2) = sinh 2b + 1/sinh 2b`
/// for `s >= 0` by bisection and returns
/// `a1 asinh(s a1) + a2 asinh(s a2)`. Both sides are shifted by 2 so that
/// the equation keeps full relative precision as `beta -> beta_c`.
pub fn solve_rate(query: &RateQuery) -> Result<RateSolution> {
    query.validate()?;
    let (a1, a2) = (query.direction.x as f64, query.direction.y as f64);
    let target = rate_rhs_excess(query.beta);
    let mut hi = 1.0;
    while lhs_excess(hi, a1, a2) < target {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if lhs_excess(mid, a1, a2) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = 0.5 * (lo + hi);
    Ok(RateSolution {
        beta: query.beta,
        a1: query.direction.x,
        a2: query.direction.y,
        s,
        rate: a1 * (s * a1).asinh() + a2 * (s * a2).asinh(),
    })
}

/// Exponential decay rate of the two-point function in direction `a`.
pub fn rate_function(query: &RateQuery) -> Result<f64> {
    Ok(solve_rate(query)?.rate)
}

/// Writes rows `beta, a1, a2, s, rate` with 17 significant digits.
pub fn write_rate_table<W: Write>(out: W, rows: &[RateSolution]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["beta", "a1", "a2", "s", "rate"]).map_err(Error::io)?;
    for r in rows {
        w.write_record([
            format!("{:.16e}", r.beta),
            r.a1.to_string(),
            r.a2.to_string(),
            format!("{:.16e}", r.s),
            format!("{:.16e}", r.rate),
        ])
        .map_err(Error::io)?;
    }
    w.flush().map_err(Error::io)?;
    Ok(())
}
