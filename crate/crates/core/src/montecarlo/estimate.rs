use serde::{Deserialize, Serialize};

use super::spins::{SpinBc, SpinConfig, SwChain};
use super::stats::{run_chains, ChainPlan, McEstimate};
use crate::error::{Error, Result};
use crate::lattice::Site;

fn check_p(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::OutOfRange(format!("p = {p} must lie in (0, 1)")));
    }
    Ok(())
}

fn warn_burn_in(plan: &ChainPlan, estimates: &[McEstimate]) {
    let tau = estimates
        .iter()
        .map(|e| e.autocorrelation_time_estimate)
        .filter(|t| t.is_finite())
        .fold(0.0, f64::max);
    if 10.0 * tau > plan.burn_in as f64 {
        log::warn!(
            "burn-in of {} sweeps is shorter than 10 autocorrelation times ({tau:.1})",
            plan.burn_in
        );
    }
}

/// Placements `x` in the box `[0, size)^2` with `x` and `x + a` both at
/// least `margin` away from every side.
fn placements(size: usize, a: Site, margin: i32) -> Vec<(usize, usize)> {
    let l = size as i32;
    let ok = |s: Site| s.x >= margin && s.y >= margin && s.x <= l - 1 - margin && s.y <= l - 1 - margin;
    let mut out = Vec::new();
    for y in 0..l {
        for x in 0..l {
            let (s, t) = (Site::new(x, y), Site::new(x + a.x, y + a.y));
            if ok(s) && ok(t) {
                let idx = |u: Site| u.y as usize * size + u.x as usize;
                out.push((idx(s), idx(t)));
            }
        }
    }
    out
}

fn norm_ceil(a: Site) -> i32 {
    (a.x as f64).hypot(a.y as f64).ceil() as i32
}

/// `phi^0(0 <-> n d)` for each `n` from a single set of chains on the free box
/// `[0, size)^2`. Each sweep contributes the fraction of admissible
/// placements (pair at distance at least `|n d|` from the sides) that are
/// connected.
pub fn estimate_two_point_profile(
    size: usize,
    p: f64,
    direction: Site,
    ns: &[u32],
    plan: &ChainPlan,
) -> Result<Vec<(u32, McEstimate)>> {
    check_p(p)?;
    let mut lists = Vec::with_capacity(ns.len());
    for &n in ns {
        let a = Site::new(direction.x * n as i32, direction.y * n as i32);
        if n == 0 || a == Site::new(0, 0) {
            lists.push(None);
            continue;
        }
        let pl = placements(size, a, norm_ceil(a));
        if pl.is_empty() {
            return Err(Error::Margin(format!(
                "no placement of {a} in a {size}x{size} box keeps distance {} from the sides",
                norm_ceil(a)
            )));
        }
        lists.push(Some(pl));
    }
    let ests = run_chains(
        plan,
        ns.len(),
        |rng| {
            SwChain::new(
                SpinConfig::random(size, size, rng).expect("nonempty box"),
                p,
                SpinBc::Free,
            )
        },
        |chain, rng, out| {
            chain.sweep(rng);
            for (o, list) in out.iter_mut().zip(&lists) {
                *o = match list {
                    None => 1.0,
                    Some(pl) => {
                        let hits = pl.iter().filter(|&&(i, j)| chain.connected(i, j)).count();
                        hits as f64 / pl.len() as f64
                    }
                };
            }
        },
    );
    warn_burn_in(plan, &ests);
    Ok(ns
        .iter()
        .zip(lists.iter().zip(ests))
        .map(|(&n, (l, e))| match l {
            Some(_) => (n, e),
            None => (
                n,
                McEstimate {
                    n_samples: plan.n_samples(),
                    ..McEstimate::exact(1.0)
                },
            ),
        })
        .collect())
}

/// `phi^0(0 <-> a)` on the free box `[0, size)^2`, averaged over the
/// placements of the pair that keep distance `|a|` from the sides.
pub fn estimate_two_point(size: usize, p: f64, a: Site, plan: &ChainPlan) -> Result<McEstimate> {
    if a == Site::new(0, 0) {
        check_p(p)?;
        return Ok(McEstimate {
            n_samples: plan.n_samples(),
            ..McEstimate::exact(1.0)
        });
    }
    let g = gcd(a.x.unsigned_abs(), a.y.unsigned_abs()) as i32;
    let d = Site::new(a.x / g, a.y / g);
    Ok(estimate_two_point_profile(size, p, d, &[g as u32], plan)?[0].1)
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Connection probability and spin correlation of one pair, with the
/// per-sweep difference estimated from the same run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingEstimate {
    pub connection: McEstimate,
    pub spin_correlation: McEstimate,
    /// `sigma_x sigma_y - 1{x <-> y}`, zero in expectation.
    pub difference: McEstimate,
}

/// Estimates `phi(x <-> y)` and `<sigma_x sigma_y>` on the free box
/// `[0, lx) x [0, ly)` from the same Swendsen-Wang run.
pub fn estimate_coupling(lx: usize, ly: usize, p: f64, x: Site, y: Site, plan: &ChainPlan) -> Result<CouplingEstimate> {
    check_p(p)?;
    let probe = SpinConfig::new(lx, ly, 1)?;
    let (i, j) = match (probe.index(x), probe.index(y)) {
        (Some(i), Some(j)) => (i, j),
        _ => return Err(Error::OutOfRange(format!("{x} or {y} lies outside the {lx}x{ly} box"))),
    };
    let e = run_chains(
        plan,
        3,
        |rng| SwChain::new(SpinConfig::random(lx, ly, rng).expect("nonempty box"), p, SpinBc::Free),
        |chain, rng, out| {
            chain.sweep(rng);
            let c = chain.connected(i, j) as u8 as f64;
            let s = chain.spins().spins();
            let sigma = (s[i] * s[j]) as f64;
            out[0] = c;
            out[1] = sigma;
            out[2] = sigma - c;
        },
    );
    warn_burn_in(plan, &e);
    Ok(CouplingEstimate {
        connection: e[0],
        spin_correlation: e[1],
        difference: e[2],
    })
}

/// Probability that the mid-top site `(0, height)` of the strip
/// `[-halfwidth, halfwidth] x [0, height]` is connected to its wired bottom
/// row.
pub fn estimate_strip_crossing(height: u32, halfwidth: u32, p: f64, plan: &ChainPlan) -> Result<McEstimate> {
    check_p(p)?;
    if height == 0 {
        return Ok(McEstimate {
            n_samples: plan.n_samples(),
            ..McEstimate::exact(1.0)
        });
    }
    if halfwidth == 0 {
        return Err(Error::InvalidDomain("strip needs a positive halfwidth".into()));
    }
    let lx = 2 * halfwidth as usize + 1;
    let ly = height as usize + 1;
    let top = height as usize * lx + halfwidth as usize;
    let e = run_chains(
        plan,
        1,
        |rng| {
            let mut s = SpinConfig::random(lx, ly, rng).expect("nonempty strip");
            let mut v = s.spins().to_vec();
            v[..lx].iter_mut().for_each(|x| *x = 1);
            s = SpinConfig::from_spins(lx, ly, v).expect("valid spins");
            SwChain::new(s, p, SpinBc::StripDobrushin)
        },
        |chain, rng, out| {
            chain.sweep(rng);
            out[0] = chain.connected_to_boundary(top) as u8 as f64;
        },
    );
    warn_burn_in(plan, &e);
    Ok(e[0])
}

/// `ln(P_{l+1} / P_l)` of two strip crossing estimates with its delta-method
/// standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LnRatio {
    pub height: u32,
    pub value: f64,
    pub std_error: f64,
}

impl LnRatio {
    pub fn from_estimates(height: u32, lower: &McEstimate, upper: &McEstimate) -> Self {
        let value = (upper.mean / lower.mean).ln();
        let std_error = ((lower.std_error / lower.mean).powi(2) + (upper.std_error / upper.mean).powi(2)).sqrt();
        Self {
            height,
            value,
            std_error,
        }
    }

    /// Distance to `target` in standard errors.
    pub fn z_score(&self, target: f64) -> f64 {
        (self.value - target).abs() / self.std_error
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_cases() {
        let plan = ChainPlan::new(1, 1, 10, Some(0)).unwrap();
        let e = estimate_two_point(8, 0.3, Site::new(0, 0), &plan).unwrap();
        assert_eq!((e.mean, e.std_error, e.n_samples), (1.0, 0.0, 10));
        let e = estimate_strip_crossing(0, 4, 0.3, &plan).unwrap();
        assert_eq!(e.mean, 1.0);
    }

    #[test]
    fn refusals() {
        let plan = ChainPlan::new(1, 1, 10, Some(0)).unwrap();
        assert!(matches!(
            estimate_two_point(8, 0.3, Site::new(5, 0), &plan),
            Err(Error::Margin(_))
        ));
        assert!(matches!(
            estimate_two_point(8, 1.0, Site::new(1, 0), &plan),
            Err(Error::OutOfRange(_))
        ));
    }

    #[test]
    fn placements_respect_margin() {
        let pl = placements(10, Site::new(2, 0), 2);
        // x in [2, 5], y in [2, 7]
        assert_eq!(pl.len(), 4 * 6);
        assert!(pl.iter().all(|&(i, j)| j == i + 2));
    }

    #[test]
    fn deterministic_by_seed() {
        let plan = ChainPlan::new(11, 2, 200, Some(10)).unwrap();
        let a = estimate_two_point(12, 0.4, Site::new(2, 0), &plan).unwrap();
        let b = estimate_two_point(12, 0.4, Site::new(2, 0), &plan).unwrap();
        assert_eq!(a, b);
        let other = ChainPlan { seed: 12, ..plan };
        assert_ne!(a, estimate_two_point(12, 0.4, Site::new(2, 0), &other).unwrap());
    }
}
