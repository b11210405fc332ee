use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Site;

/// Sweeps allowed beyond the geometric minimum before giving up.
const MAX_SWEEPS: usize = 200_000;

/// Massive Green function on the box of the given radius around `source`,
/// with zero values outside.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreenField {
    pub mass: f64,
    pub source: Site,
    pub truncation_radius: usize,
    /// `m^radius / (1 - m)`: bound on the mass of walks reaching the box edge.
    pub tail_bound: f64,
    pub sweeps: usize,
    /// `max |G - delta - m P G|` over the box.
    pub residual: f64,
    values: Vec<f64>,
}

impl GreenField {
    fn side(&self) -> usize {
        2 * self.truncation_radius + 1
    }

    fn slot(&self, s: Site) -> Option<usize> {
        let r = self.truncation_radius as i32;
        let (dx, dy) = (s.x - self.source.x, s.y - self.source.y);
        if dx.abs() > r || dy.abs() > r {
            return None;
        }
        Some((dy + r) as usize * self.side() + (dx + r) as usize)
    }

    /// `G_m(source, s)`; zero outside the box.
    pub fn get(&self, s: Site) -> f64 {
        self.slot(s).map_or(0.0, |i| self.values[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (Site, f64)> + '_ {
        let r = self.truncation_radius as i32;
        let side = self.side();
        self.values.iter().enumerate().map(move |(i, &v)| {
            let (ix, iy) = ((i % side) as i32, (i / side) as i32);
            (self.source.offset(ix - r, iy - r), v)
        })
    }

    /// `(n, -ln G(source, source + n a) / n)` for each `n`.
    pub fn rate_series(&self, direction: Site, ns: &[u32]) -> Vec<(u32, f64)> {
        ns.iter()
            .map(|&n| {
                let n_i = n as i32;
                let g = self.get(self.source.offset(direction.x * n_i, direction.y * n_i));
                (n, -g.ln() / n as f64)
            })
            .collect()
    }

    /// CSV `x, y, value` preceded by a `#` comment line carrying the mass,
    /// radius and tail bound.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "# mass={:.16e} source=({},{}) radius={} tail_bound={:.16e} residual={:.16e}",
            self.mass, self.source.x, self.source.y, self.truncation_radius, self.tail_bound, self.residual
        )
        .map_err(Error::io)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "y", "value"]).map_err(Error::io)?;
        for (s, v) in self.iter() {
            w.write_record([s.x.to_string(), s.y.to_string(), format!("{v:.16e}")])
                .map_err(Error::io)?;
        }
        w.flush().map_err(Error::io)
    }
}

/// Smallest radius with `m^radius / (1 - m) <= tol`.
pub fn required_radius(mass: f64, tol: f64) -> usize {
    ((tol * (1.0 - mass)).ln() / mass.ln()).ceil().max(1.0) as usize
}

fn check_mass(mass: f64) -> Result<()> {
    if !(mass > 0.0 && mass < 1.0) {
        return Err(Error::MassTooLarge(mass));
    }
    Ok(())
}

/// One Jacobi sweep `next = delta + (m/4) sum of neighbours`, returning the
/// largest change relative to the new value.
fn sweep(cur: &[f64], next: &mut [f64], side: usize, centre: usize, m4: f64) -> f64 {
    next.par_chunks_mut(side)
        .enumerate()
        .map(|(iy, row)| {
            let mut worst: f64 = 0.0;
            for (ix, out) in row.iter_mut().enumerate() {
                let i = iy * side + ix;
                let e = if ix + 1 < side { cur[i + 1] } else { 0.0 };
                let w = if ix > 0 { cur[i - 1] } else { 0.0 };
                let n = if iy + 1 < side { cur[i + side] } else { 0.0 };
                let s = if iy > 0 { cur[i - side] } else { 0.0 };
                let mut v = m4 * ((e + w) + (n + s));
                if i == centre {
                    v += 1.0;
                }
                if v > 0.0 {
                    worst = worst.max((v - cur[i]) / v);
                }
                *out = v;
            }
            worst
        })
        .reduce(|| 0.0, f64::max)
}

/// `G_m(source, y) = sum_n m^n P^source(X_n = y)` on the box of the given
/// radius by Jacobi iteration from zero; each sweep adds one more term of
/// the series. Iteration stops once every site has been reached and the
/// largest relative change is below `tol`.
pub fn green_function(mass: f64, source: Site, radius: usize, tol: f64) -> Result<GreenField> {
    check_mass(mass)?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::OutOfRange(format!("tol = {tol} must be positive")));
    }
    let tail_bound = mass.powi(radius as i32) / (1.0 - mass);
    if tail_bound > tol {
        return Err(Error::RadiusTooSmall {
            tol,
            radius,
            required: required_radius(mass, tol),
        });
    }
    let side = 2 * radius + 1;
    let centre = radius * side + radius;
    let mut cur = vec![0.0; side * side];
    let mut next = vec![0.0; side * side];
    let m4 = mass / 4.0;
    let mut sweeps = 0;
    loop {
        let change = sweep(&cur, &mut next, side, centre, m4);
        std::mem::swap(&mut cur, &mut next);
        sweeps += 1;
        if sweeps > 2 * radius && change < tol {
            break;
        }
        if sweeps > MAX_SWEEPS {
            return Err(Error::Solve(format!(
                "green iteration stalled at relative change {change}"
            )));
        }
    }
    sweep(&cur, &mut next, side, centre, m4);
    let residual = cur.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(GreenField {
        mass,
        source,
        truncation_radius: radius,
        tail_bound,
        sweeps,
        residual,
        values: cur,
    })
}
