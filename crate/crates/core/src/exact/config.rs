use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{BoundaryCondition, Domain, ModelParams};

/// Default ceiling on the number of random bonds an exhaustive enumeration
/// may visit.
pub const DEFAULT_CAP: usize = 24;

/// Hard ceiling imposed by the 64-bit configuration masks.
pub const MAX_BONDS: usize = 40;

/// Assignment of open/closed states to the random bonds of a domain, i.e.
/// to [`Domain::active_bonds`] in order. Bit `i` of `mask` is the state of
/// the `i`-th active bond.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BondConfig {
    pub mask: u64,
    pub width: usize,
}

impl BondConfig {
    pub fn new(mask: u64, width: usize) -> Self {
        debug_assert!(width <= 64 && (width == 64 || mask >> width == 0));
        Self { mask, width }
    }

    pub fn all_closed(domain: &Domain) -> Self {
        Self::new(0, domain.active_bonds().len())
    }

    pub fn all_open(domain: &Domain) -> Self {
        let w = domain.active_bonds().len();
        Self::new(full_mask(w), w)
    }

    pub fn is_open(&self, i: usize) -> bool {
        (self.mask >> i) & 1 == 1
    }

    pub fn n_open(&self) -> usize {
        self.mask.count_ones() as usize
    }

    /// All `2^width` configurations in mask order.
    pub fn iter_all(width: usize) -> impl Iterator<Item = BondConfig> {
        (0..=full_mask(width)).map(move |m| BondConfig::new(m, width))
    }
}

pub(crate) fn full_mask(width: usize) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

pub(crate) fn check_cap(domain: &Domain, cap: usize) -> Result<usize> {
    let n = domain.active_bonds().len();
    if n > cap.min(MAX_BONDS) {
        return Err(Error::CapExceeded {
            bonds: n,
            cap: cap.min(MAX_BONDS),
        });
    }
    Ok(n)
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
    components: usize,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
            components: n,
        }
    }

    pub fn reset(&mut self) {
        for (i, p) in self.parent.iter_mut().enumerate() {
            *p = i as u32;
        }
        self.size.fill(1);
        self.components = self.parent.len();
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let gp = self.parent[self.parent[x] as usize];
            self.parent[x] = gp;
            x = gp as usize;
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra as u32;
        self.size[ra] += self.size[rb];
        self.components -= 1;
        true
    }

    pub fn connected(&mut self, a: usize, b: usize) -> bool {
        self.find(a) == self.find(b)
    }

    pub fn components(&self) -> usize {
        self.components
    }
}

/// Sites pre-merged by the boundary condition.
pub(crate) fn boundary_classes(domain: &Domain, bc: BoundaryCondition) -> Vec<usize> {
    match bc {
        BoundaryCondition::Free => Vec::new(),
        BoundaryCondition::Wired => domain.boundary_cycle().to_vec(),
        BoundaryCondition::Dobrushin => domain.wired_arc(),
    }
}

/// Clusters of `config` together with the boundary wiring.
pub(crate) fn clusters(domain: &Domain, config: BondConfig, wiring: &[usize], uf: &mut UnionFind) {
    uf.reset();
    for w in wiring.windows(2) {
        uf.union(w[0], w[1]);
    }
    for (i, &b) in domain.active_bonds().iter().enumerate() {
        if config.is_open(i) {
            let bond = domain.bonds()[b];
            uf.union(bond.u, bond.v);
        }
    }
}

/// Unnormalised random-cluster weight `p^o (1-p)^c q^k` of a configuration
/// of the random bonds, with `k` counted on `config` plus the wiring of `bc`.
pub fn rc_weight(domain: &Domain, config: BondConfig, params: &ModelParams, bc: BoundaryCondition) -> f64 {
    assert_eq!(config.width, domain.active_bonds().len(), "config width mismatch");
    let mut uf = UnionFind::new(domain.n_sites());
    clusters(domain, config, &boundary_classes(domain, bc), &mut uf);
    let o = config.n_open() as i32;
    let c = config.width as i32 - o;
    params.p.powi(o) * (1.0 - params.p).powi(c) * params.q.powi(uf.components() as i32)
}

/// Weighted sums accumulated with Neumaier compensation.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Compensated {
    sum: f64,
    c: f64,
}

impl Compensated {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.c += (self.sum - t) + v;
        } else {
            self.c += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.c
    }
}

/// Histogram of configurations by open-bond count and cluster count, plus
/// per-event counts, from which connection probabilities at any `p` follow.
#[derive(Clone, Debug)]
struct ClusterHistogram {
    n_bonds: usize,
    n_sites: usize,
    z: Vec<u64>,
    hits: Vec<u64>,
}

impl ClusterHistogram {
    fn idx(&self, o: usize, k: usize) -> usize {
        o * (self.n_sites + 1) + k
    }

    fn probability(&self, params: &ModelParams) -> f64 {
        let lp = params.p.ln();
        let lq = (1.0 - params.p).ln();
        let l2 = params.q.ln();
        let logw = |o: usize, k: usize| o as f64 * lp + (self.n_bonds - o) as f64 * lq + k as f64 * l2;
        let mut shift = f64::NEG_INFINITY;
        for o in 0..=self.n_bonds {
            for k in 0..=self.n_sites {
                if self.z[self.idx(o, k)] > 0 {
                    shift = shift.max(logw(o, k));
                }
            }
        }
        let (mut num, mut den) = (Compensated::default(), Compensated::default());
        for o in 0..=self.n_bonds {
            for k in 0..=self.n_sites {
                let i = self.idx(o, k);
                if self.z[i] == 0 {
                    continue;
                }
                let w = (logw(o, k) - shift).exp();
                den.add(self.z[i] as f64 * w);
                num.add(self.hits[i] as f64 * w);
            }
        }
        num.value() / den.value()
    }
}

/// Exact probability that some site of `a` is connected to some site of
/// `b`, by enumeration over the random bonds.
pub fn connection_prob(
    domain: &Domain,
    params: &ModelParams,
    bc: BoundaryCondition,
    a: &[usize],
    b: &[usize],
    cap: usize,
) -> Result<f64> {
    let n_bonds = check_cap(domain, cap)?;
    if a.iter().any(|x| b.contains(x)) {
        return Ok(1.0);
    }
    let wiring = boundary_classes(domain, bc);
    let mut uf = UnionFind::new(domain.n_sites());
    let mut hist = ClusterHistogram {
        n_bonds,
        n_sites: domain.n_sites(),
        z: vec![0; (n_bonds + 1) * (domain.n_sites() + 1)],
        hits: vec![0; (n_bonds + 1) * (domain.n_sites() + 1)],
    };
    let mut roots = Vec::with_capacity(a.len());
    for cfg in BondConfig::iter_all(n_bonds) {
        clusters(domain, cfg, &wiring, &mut uf);
        let i = hist.idx(cfg.n_open(), uf.components());
        hist.z[i] += 1;
        roots.clear();
        roots.extend(a.iter().map(|&s| uf.find(s)));
        if b.iter().any(|&s| {
            let r = uf.find(s);
            roots.contains(&r)
        }) {
            hist.hits[i] += 1;
        }
    }
    Ok(hist.probability(params))
}

/// Exact probability, for every site, of being connected to the wired arc
/// of a Dobrushin domain.
pub fn wired_connection_probs(domain: &Domain, params: &ModelParams, cap: usize) -> Result<Vec<f64>> {
    Ok(wired_connection_probs_multi(domain, std::slice::from_ref(params), cap)?.remove(0))
}

/// [`wired_connection_probs`] for several parameter sets from one
/// enumeration.
pub fn wired_connection_probs_multi(domain: &Domain, params: &[ModelParams], cap: usize) -> Result<Vec<Vec<f64>>> {
    let n_bonds = check_cap(domain, cap)?;
    let wiring = boundary_classes(domain, BoundaryCondition::Dobrushin);
    let Some(&anchor) = wiring.first() else {
        return Err(Error::InvalidDomain("domain has no wired arc".into()));
    };
    let n = domain.n_sites();
    let stride = (n_bonds + 1) * (n + 1);
    let mut z = vec![0u64; stride];
    let mut hits = vec![0u64; stride * n];
    let mut uf = UnionFind::new(n);
    for cfg in BondConfig::iter_all(n_bonds) {
        clusters(domain, cfg, &wiring, &mut uf);
        let i = cfg.n_open() * (n + 1) + uf.components();
        z[i] += 1;
        let root = uf.find(anchor);
        for s in 0..n {
            if uf.find(s) == root {
                hits[s * stride + i] += 1;
            }
        }
    }
    let hists: Vec<ClusterHistogram> = (0..n)
        .map(|s| ClusterHistogram {
            n_bonds,
            n_sites: n,
            z: z.clone(),
            hits: hits[s * stride..(s + 1) * stride].to_vec(),
        })
        .collect();
    Ok(params
        .iter()
        .map(|m| hists.iter().map(|h| h.probability(m)).collect())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Site;

    #[test]
    fn union_find_counts() {
        let mut uf = UnionFind::new(5);
        assert!(uf.union(0, 1));
        assert!(!uf.union(1, 0));
        uf.union(3, 4);
        assert_eq!(uf.components(), 3);
        assert!(uf.connected(0, 1) && !uf.connected(1, 3));
        uf.reset();
        assert_eq!(uf.components(), 5);
    }

    #[test]
    fn extreme_configs() {
        let d = Domain::free_box(0, 2, 0, 1).unwrap();
        let m = ModelParams::from_p(0.3).unwrap();
        let nb = d.n_bonds() as i32;
        let closed = rc_weight(&d, BondConfig::all_closed(&d), &m, BoundaryCondition::Free);
        assert!((closed - 0.7f64.powi(nb) * 2f64.powi(6)).abs() < 1e-15);
        let open = rc_weight(&d, BondConfig::all_open(&d), &m, BoundaryCondition::Free);
        assert!((open - 0.3f64.powi(nb) * 2.0).abs() < 1e-15);
    }

    #[test]
    fn unit_square_dobrushin_by_hand() {
        // wired arc {(0,0), (1,0)}; the random bonds are the two verticals
        // and the top
        let d = Domain::rectangle(1, 1, Site::new(1, 0), Site::new(0, 0)).unwrap();
        let m = ModelParams::from_p(0.4).unwrap();
        assert_eq!(d.active_bonds().len(), 3);
        for cfg in BondConfig::iter_all(3) {
            // clusters: the wired pair plus the two top sites, merged by
            // open bonds; no bond closes an extra cycle count
            let o = cfg.n_open() as i32;
            let k = match o {
                0 => 3,
                1 => 2,
                _ => 1,
            };
            let expect = 0.4f64.powi(o) * 0.6f64.powi(3 - o) * 2f64.powi(k);
            let got = rc_weight(&d, cfg, &m, BoundaryCondition::Dobrushin);
            assert!((got - expect).abs() < 1e-15, "{cfg:?}");
        }
    }

    #[test]
    fn trivial_connections() {
        let d = Domain::free_box(0, 1, 0, 1).unwrap();
        let m = ModelParams::from_p(0.999_999).unwrap();
        assert_eq!(
            connection_prob(&d, &m, BoundaryCondition::Free, &[0], &[0], 24).unwrap(),
            1.0
        );
        let p = connection_prob(&d, &m, BoundaryCondition::Free, &[0], &[3], 24).unwrap();
        assert!((p - 1.0).abs() < 1e-9);
    }

    #[test]
    fn cap_is_enforced() {
        let d = Domain::free_box(0, 2, 0, 2).unwrap();
        let m = ModelParams::from_p(0.5).unwrap();
        let err = connection_prob(&d, &m, BoundaryCondition::Free, &[0], &[8], 4).unwrap_err();
        assert_eq!(err, Error::CapExceeded { bonds: 12, cap: 4 });
    }

    #[test]
    fn compensated_sum() {
        let mut s = Compensated::default();
        for v in [1.0, 1e100, 1.0, -1e100] {
            s.add(v);
        }
        assert_eq!(s.value(), 2.0);
    }
}
