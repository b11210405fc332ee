use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{ModelParams, Site};

/// Value of `F` at the origin seen from the neighbour the walk last visits
/// before absorption. Obtained by solving the bulk relations on free boxes
/// and reading off `(4 / cos 2a) F(X) - sum of the other three neighbours`
/// at each neighbour `X` of the origin; it is `+1` from east and south and
/// `-1` from west and north.
pub const LAST_STEP_PAYOFF: [(Site, f64); 4] = [
    (Site::new(1, 0), 1.0),
    (Site::new(0, -1), 1.0),
    (Site::new(-1, 0), -1.0),
    (Site::new(0, 1), -1.0),
];

/// Payoff for absorption at the origin coming from `from`.
pub fn last_step_payoff(from: Site) -> Option<f64> {
    LAST_STEP_PAYOFF.iter().find(|(s, _)| *s == from).map(|&(_, v)| v)
}

/// Reflection across the diagonal `x2 = x1`, which exchanges the east/south
/// and west/north absorption classes.
pub fn payoff_reflection(s: Site) -> Site {
    Site::new(s.y, s.x)
}

/// Solution of the absorbing massive walk on the box `[-radius, radius]^2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkField {
    pub mass: f64,
    pub radius: usize,
    pub sweeps: usize,
    /// Largest update of the final sweep.
    pub last_change: f64,
    values: Vec<f64>,
}

impl WalkField {
    fn slot(&self, s: Site) -> Option<usize> {
        let r = self.radius as i32;
        if s.x.abs() > r || s.y.abs() > r {
            return None;
        }
        Some((s.y + r) as usize * (2 * self.radius + 1) + (s.x + r) as usize)
    }

    /// `E^s[F(X_tau) m^tau]`; zero on and beyond the box edge.
    pub fn get(&self, s: Site) -> f64 {
        self.slot(s).map_or(0.0, |i| self.values[i])
    }

    /// Largest `|h(s) + h(reflection(s))|` over the box.
    pub fn antisymmetry_defect(&self) -> f64 {
        let r = self.radius as i32;
        let mut worst: f64 = 0.0;
        for y in -r..=r {
            for x in -r..=r {
                let s = Site::new(x, y);
                worst = worst.max((self.get(s) + self.get(payoff_reflection(s))).abs());
            }
        }
        worst
    }
}

/// Solves `h(X) = (m/4) sum_Y h(Y)` off the origin, where a step into the
/// origin contributes its last-step payoff and `h` vanishes on the box
/// edge. Gauss-Seidel sweeps run until the largest update is below `tol`.
pub fn solve_walk(mass: f64, radius: usize, tol: f64) -> Result<WalkField> {
    if !(mass > 0.0 && mass < 1.0) {
        return Err(Error::MassTooLarge(mass));
    }
    if radius < 2 {
        return Err(Error::Margin(format!("walk box radius {radius} leaves no interior")));
    }
    let side = 2 * radius + 1;
    let r = radius as i32;
    let idx = |x: i32, y: i32| (y + r) as usize * side + (x + r) as usize;
    let mut h = vec![0.0; side * side];
    let m4 = mass / 4.0;
    let mut sweeps = 0;
    loop {
        let mut change: f64 = 0.0;
        for y in -r + 1..r {
            for x in -r + 1..r {
                if x == 0 && y == 0 {
                    continue;
                }
                let mut sum = 0.0;
                for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                    let (nx, ny) = (x + dx, y + dy);
                    sum += if nx == 0 && ny == 0 {
                        last_step_payoff(Site::new(x, y)).expect("neighbour of the origin")
                    } else {
                        h[idx(nx, ny)]
                    };
                }
                let v = m4 * sum;
                let i = idx(x, y);
                change = change.max((v - h[i]).abs());
                h[i] = v;
            }
        }
        sweeps += 1;
        if change < tol {
            return Ok(WalkField {
                mass,
                radius,
                sweeps,
                last_change: change,
                values: h,
            });
        }
        if sweeps > 1_000_000 {
            return Err(Error::Solve(format!("walk iteration stalled at change {change}")));
        }
    }
}

/// `F(target) = E^target[F(X_tau) m^tau]` for the massive walk of mass
/// `cos 2a`, truncated to the box of the given radius. The value lies on
/// the real line of the north-west edges.
pub fn walk_representation(radius: usize, params: &ModelParams, target: Site, tol: f64) -> Result<Complex64> {
    if target == Site::new(0, 0) {
        return Err(Error::OutOfRange("target must differ from the origin".into()));
    }
    let r = radius as i32;
    if target.x.abs() >= r || target.y.abs() >= r {
        return Err(Error::Margin(format!(
            "target {target} is not inside the box of radius {radius}"
        )));
    }
    Ok(Complex64::new(solve_walk(params.mass, radius, tol)?.get(target), 0.0))
}
