use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{check_cap, full_mask, Compensated};
use super::trace::{count_loops, mark, Tracer};
use crate::error::{Error, Result};
use crate::lattice::{BoundaryKind, Domain, ModelParams, Site};

const END: u32 = u32::MAX;
const CHUNK_BITS: usize = 12;

/// `e^{i pi q / 4}` for `q` in `0..8`.
pub(crate) fn eighth_root(q: i32) -> Complex64 {
    const H: f64 = FRAC_1_SQRT_2;
    match q.rem_euclid(8) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(H, H),
        2 => Complex64::new(0.0, 1.0),
        3 => Complex64::new(-H, H),
        4 => Complex64::new(-1.0, 0.0),
        5 => Complex64::new(-H, -H),
        6 => Complex64::new(0.0, -1.0),
        _ => Complex64::new(H, -H),
    }
}

/// Values of the fermionic observable on the medial edges of a domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observable {
    pub values: Vec<Option<Complex64>>,
    /// For the bulk observable, the root edge `e0` where the value is
    /// two-valued: `+1` in relations at its tail, `-1` at its head.
    pub e0: Option<usize>,
}

impl Observable {
    pub fn new(values: Vec<Complex64>) -> Self {
        Self {
            values: values.into_iter().map(Some).collect(),
            e0: None,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, e: usize) -> Option<Complex64> {
        self.values.get(e).copied().flatten()
    }

    /// Value used for edge `e` in the relation around the vertex at `e`'s
    /// tail (`at_tail`) or head.
    pub fn at_vertex(&self, e: usize, at_tail: bool) -> Option<Complex64> {
        if Some(e) == self.e0 {
            return Some(Complex64::new(if at_tail { 1.0 } else { -1.0 }, 0.0));
        }
        self.get(e)
    }

    pub fn max_modulus(&self) -> f64 {
        self.values.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Copy with `delta` added at edge `e`, for sensitivity checks.
    pub fn perturbed(&self, e: usize, delta: Complex64) -> Self {
        let mut out = self.clone();
        if let Some(v) = out.values[e].as_mut() {
            *v += delta;
        }
        out
    }
}

/// Integer histogram of all configurations of a domain by open-bond count
/// `o` and loop count `L`, and of path (or root-loop) visits by edge, `o`,
/// `L` and winding phase. The observable at any `p` is a ratio of weighted
/// sums over it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathHistogram {
    n_bonds: usize,
    n_edges: usize,
    lmax: usize,
    e0: Option<usize>,
    z: Vec<u64>,
    f: Vec<u64>,
}

struct Acc {
    z: Vec<u64>,
    f: Vec<u64>,
    visited: Vec<u64>,
    path: Vec<(u32, i32)>,
}

impl PathHistogram {
    fn zi(&self, o: usize, l: usize) -> usize {
        o * (self.lmax + 1) + l
    }

    fn fi(&self, e: usize, o: usize, l: usize, q: usize) -> usize {
        ((e * (self.n_bonds + 1) + o) * (self.lmax + 1) + l) * 8 + q
    }

    fn empty(n_bonds: usize, n_edges: usize, e0: Option<usize>) -> Self {
        let lmax = n_edges / 4 + 1;
        Self {
            n_bonds,
            n_edges,
            lmax,
            e0,
            z: vec![0; (n_bonds + 1) * (lmax + 1)],
            f: vec![0; n_edges * (n_bonds + 1) * (lmax + 1) * 8],
        }
    }

    /// Enumerates every configuration of a Dobrushin domain.
    pub fn dobrushin(tracer: &Tracer, cap: usize, domain: &Domain) -> Result<Self> {
        let n_bonds = check_cap(domain, cap)?;
        let ea = tracer
            .medial()
            .e_a()
            .ok_or_else(|| Error::InvalidDomain("domain has no marked points".into()))?;
        Ok(Self::run(tracer, n_bonds, None, move |k, mask, acc| {
            let mut e = ea as u32;
            let mut c = 0i32;
            acc.path.clear();
            loop {
                mark(&mut acc.visited, e as usize);
                acc.path.push((e, c));
                let (n, t) = k.step(e as usize, mask);
                if n == END {
                    break;
                }
                c += t as i32;
                e = n;
            }
            c
        }))
    }

    /// Enumerates every configuration of a free domain, following the loop
    /// through `e0`.
    pub fn bulk(tracer: &Tracer, e0: usize, cap: usize, domain: &Domain) -> Result<Self> {
        let n_bonds = check_cap(domain, cap)?;
        Ok(Self::run(tracer, n_bonds, Some(e0), move |k, mask, acc| {
            let mut e = e0 as u32;
            let mut c = 0i32;
            acc.path.clear();
            loop {
                mark(&mut acc.visited, e as usize);
                acc.path.push((e, c));
                let (n, t) = k.step(e as usize, mask);
                c += t as i32;
                if n as usize == e0 {
                    break;
                }
                e = n;
            }
            c
        }))
    }

    fn run<T>(tracer: &Tracer, n_bonds: usize, e0: Option<usize>, trace: T) -> Self
    where
        T: Fn(&super::trace::Kernel, u64, &mut Acc) -> i32 + Sync,
    {
        let k = &tracer.kernel;
        let proto = Self::empty(n_bonds, k.n_edges(), e0);
        let total = full_mask(n_bonds);
        let chunk_bits = CHUNK_BITS.min(n_bonds);
        let n_chunks = (total >> chunk_bits) + 1;
        let new_acc = || Acc {
            z: vec![0; proto.z.len()],
            f: vec![0; proto.f.len()],
            visited: vec![0; k.words],
            path: Vec::with_capacity(k.n_edges()),
        };
        let acc = (0..n_chunks)
            .into_par_iter()
            .fold(new_acc, |mut acc, chunk| {
                let lo = chunk << chunk_bits;
                let hi = lo | full_mask(chunk_bits);
                for mask in lo..=hi {
                    acc.visited.fill(0);
                    let end = trace(k, mask, &mut acc);
                    let l = count_loops(k, mask, &mut acc.visited) + usize::from(e0.is_some());
                    let o = mask.count_ones() as usize;
                    acc.z[proto.zi(o, l)] += 1;
                    for &(e, c) in &acc.path {
                        let q = (end - c).rem_euclid(8) as usize;
                        acc.f[proto.fi(e as usize, o, l, q)] += 1;
                    }
                }
                acc
            })
            .reduce(new_acc, |mut a, b| {
                for (x, y) in a.z.iter_mut().zip(&b.z) {
                    *x += y;
                }
                for (x, y) in a.f.iter_mut().zip(&b.f) {
                    *x += y;
                }
                a
            });
        Self {
            z: acc.z,
            f: acc.f,
            ..proto
        }
    }

    /// Number of configurations visited.
    pub fn n_configs(&self) -> u64 {
        self.z.iter().sum()
    }

    /// Loop-measure weights `x^o sqrt(2)^L` on the histogram support,
    /// rescaled by a common factor.
    fn weights(&self, params: &ModelParams) -> Vec<f64> {
        let lx = params.x.ln();
        let ls = 0.5 * std::f64::consts::LN_2;
        let mut logw = vec![f64::NEG_INFINITY; self.z.len()];
        let mut shift = f64::NEG_INFINITY;
        for o in 0..=self.n_bonds {
            for l in 0..=self.lmax {
                let i = self.zi(o, l);
                if self.z[i] > 0 {
                    logw[i] = o as f64 * lx + l as f64 * ls;
                    shift = shift.max(logw[i]);
                }
            }
        }
        logw.iter().map(|&v| (v - shift).exp()).collect()
    }

    pub fn observable(&self, params: &ModelParams) -> Observable {
        let w = self.weights(params);
        let mut z = Compensated::default();
        for (c, wi) in self.z.iter().zip(&w) {
            if *c > 0 {
                z.add(*c as f64 * wi);
            }
        }
        let z = z.value();
        let values = (0..self.n_edges)
            .map(|e| {
                let (mut re, mut im) = (Compensated::default(), Compensated::default());
                for o in 0..=self.n_bonds {
                    for l in 0..=self.lmax {
                        let wi = w[self.zi(o, l)];
                        for q in 0..8 {
                            let c = self.f[self.fi(e, o, l, q)];
                            if c > 0 {
                                let v = eighth_root(q as i32) * (c as f64 * wi);
                                re.add(v.re);
                                im.add(v.im);
                            }
                        }
                    }
                }
                Some(Complex64::new(re.value() / z, im.value() / z))
            })
            .collect();
        Observable { values, e0: self.e0 }
    }
}

/// Exact observable of a Dobrushin domain by exhaustive enumeration.
pub fn observable_exact(domain: &Domain, params: &ModelParams, cap: usize) -> Result<Observable> {
    let tracer = Tracer::new(domain)?;
    Ok(PathHistogram::dobrushin(&tracer, cap, domain)?.observable(params))
}

/// Root edge of the bulk observable: the north-west side of the origin's
/// diamond.
pub fn bulk_root(domain: &Domain, tracer: &Tracer) -> Result<usize> {
    if !matches!(domain.kind(), BoundaryKind::Free) {
        return Err(Error::InvalidDomain("bulk observable needs a free-boundary box".into()));
    }
    let origin = domain
        .index_of(Site::new(0, 0))
        .filter(|&i| !domain.is_boundary_site(i))
        .ok_or_else(|| Error::InvalidDomain("origin must be an interior site".into()))?;
    tracer
        .medial()
        .nw_edge(origin)
        .ok_or_else(|| Error::InvalidDomain("origin has no north-west edge".into()))
}

/// Exact bulk observable of a free-boundary box containing the origin.
pub fn observable_bulk_exact(domain: &Domain, params: &ModelParams, cap: usize) -> Result<Observable> {
    let tracer = Tracer::new(domain)?;
    let e0 = bulk_root(domain, &tracer)?;
    Ok(PathHistogram::bulk(&tracer, e0, cap, domain)?.observable(params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::p_self_dual;

    #[test]
    fn roots_of_unity() {
        for q in 0..8 {
            let z = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4 * q as f64);
            assert!((eighth_root(q) - z).norm() < 1e-15);
        }
    }

    #[test]
    fn unit_square_self_dual_end_value() {
        let d = Domain::rectangle(1, 1, Site::new(1, 0), Site::new(0, 0)).unwrap();
        let m = ModelParams::from_p(p_self_dual(2.0)).unwrap();
        let t = Tracer::new(&d).unwrap();
        let obs = observable_exact(&d, &m, 24).unwrap();
        let eb = t.medial().e_b().unwrap();
        assert!((obs.get(eb).unwrap() - 1.0).norm() < 1e-14);
        assert!(obs.max_modulus() <= 1.0 + 1e-12);
    }

    #[test]
    fn deterministic_histogram() {
        let d = Domain::rectangle(2, 2, Site::new(1, 0), Site::new(0, 1)).unwrap();
        let t = Tracer::new(&d).unwrap();
        let a = PathHistogram::dobrushin(&t, 24, &d).unwrap();
        let b = PathHistogram::dobrushin(&t, 24, &d).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n_configs(), 1 << d.active_bonds().len());
    }

    #[test]
    fn bulk_needs_interior_origin() {
        let d = Domain::free_box(0, 2, 0, 2).unwrap();
        let m = ModelParams::from_p(0.3).unwrap();
        assert!(observable_bulk_exact(&d, &m, 24).is_err());
        let d = Domain::free_box(-1, 1, -1, 1).unwrap();
        let obs = observable_bulk_exact(&d, &m, 24).unwrap();
        assert!(obs.max_modulus() <= 1.0 + 1e-12);
    }
}
