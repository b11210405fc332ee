use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{BondConfig, UnionFind};
use crate::lattice::{p_of_beta, Domain, Site};

/// Boundary condition of the spin box.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpinBc {
    Free,
    /// Every bond leaving the box ends at a `+` spin.
    Plus,
    /// Bottom row wired into one cluster with spin `+`, free elsewhere.
    StripDobrushin,
}

/// Ising spins on the box `[0, lx) x [0, ly)`, row-major from the bottom.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpinConfig {
    lx: usize,
    ly: usize,
    spins: Vec<i8>,
}

impl SpinConfig {
    pub fn new(lx: usize, ly: usize, value: i8) -> Result<Self> {
        if lx == 0 || ly == 0 || (value != 1 && value != -1) {
            return Err(Error::OutOfRange(format!(
                "need a nonempty box and spin +-1, got {lx}x{ly}, {value}"
            )));
        }
        Ok(Self {
            lx,
            ly,
            spins: vec![value; lx * ly],
        })
    }

    pub fn random<R: Rng>(lx: usize, ly: usize, rng: &mut R) -> Result<Self> {
        let mut s = Self::new(lx, ly, 1)?;
        for v in &mut s.spins {
            *v = if rng.gen::<bool>() { 1 } else { -1 };
        }
        Ok(s)
    }

    pub fn from_spins(lx: usize, ly: usize, spins: Vec<i8>) -> Result<Self> {
        if lx * ly != spins.len() || lx == 0 || spins.iter().any(|&v| v != 1 && v != -1) {
            return Err(Error::OutOfRange("spin vector does not fill the box with +-1".into()));
        }
        Ok(Self { lx, ly, spins })
    }

    pub fn lx(&self) -> usize {
        self.lx
    }

    pub fn ly(&self) -> usize {
        self.ly
    }

    pub fn index(&self, s: Site) -> Option<usize> {
        let inside = s.x >= 0 && s.y >= 0 && (s.x as usize) < self.lx && (s.y as usize) < self.ly;
        inside.then(|| s.y as usize * self.lx + s.x as usize)
    }

    pub fn get(&self, s: Site) -> Option<i8> {
        self.index(s).map(|i| self.spins[i])
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    /// State number with site `i` contributing bit `i` when its spin is `+`.
    pub fn code(&self) -> u64 {
        self.spins
            .iter()
            .enumerate()
            .filter(|(_, &v)| v == 1)
            .fold(0, |acc, (i, _)| acc | 1 << i)
    }
}

/// Bond occupation of the box with open/closed flags for the bond to the
/// right and the bond above each site.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FkConfig {
    lx: usize,
    ly: usize,
    bc: SpinBc,
    right: Vec<bool>,
    up: Vec<bool>,
    /// Sites tied to the boundary cluster.
    to_ghost: Vec<bool>,
}

impl FkConfig {
    pub fn is_open(&self, a: Site, b: Site) -> bool {
        let idx = |s: Site| s.y as usize * self.lx + s.x as usize;
        let inside = |s: Site| s.x >= 0 && s.y >= 0 && (s.x as usize) < self.lx && (s.y as usize) < self.ly;
        if !inside(a) || !inside(b) {
            return false;
        }
        match (b.x - a.x, b.y - a.y) {
            (1, 0) => self.right[idx(a)],
            (-1, 0) => self.right[idx(b)],
            (0, 1) => self.up[idx(a)],
            (0, -1) => self.up[idx(b)],
            _ => false,
        }
    }

    pub fn n_open(&self) -> usize {
        self.right.iter().chain(&self.up).filter(|&&o| o).count()
    }

    /// Cluster structure; index `lx * ly` is the boundary cluster.
    pub fn clusters(&self) -> UnionFind {
        let n = self.lx * self.ly;
        let mut uf = UnionFind::new(n + 1);
        self.fill(&mut uf);
        uf
    }

    fn fill(&self, uf: &mut UnionFind) {
        let n = self.lx * self.ly;
        for i in 0..n {
            if self.right[i] {
                uf.union(i, i + 1);
            }
            if self.up[i] {
                uf.union(i, i + self.lx);
            }
            if self.to_ghost[i] {
                uf.union(i, n);
            }
        }
    }

    /// The same occupation as a [`BondConfig`] of the free box with matching
    /// site set.
    pub fn to_bond_config(&self, domain: &Domain) -> Result<BondConfig> {
        if self.bc != SpinBc::Free {
            return Err(Error::InvalidDomain(
                "only free boxes map to bond configurations".into(),
            ));
        }
        let mut mask = 0u64;
        for (k, &b) in domain.active_bonds().iter().enumerate() {
            let bond = domain.bonds()[b];
            if self.is_open(domain.site(bond.u), domain.site(bond.v)) {
                mask |= 1 << k;
            }
        }
        Ok(BondConfig::new(mask, domain.active_bonds().len()))
    }
}

fn outside_neighbours(lx: usize, ly: usize, i: usize) -> i32 {
    let (x, y) = (i % lx, i / lx);
    (x == 0) as i32 + (x + 1 == lx) as i32 + (y == 0) as i32 + (y + 1 == ly) as i32
}

/// Edwards-Sokal bond layer: every aligned bond opens independently with
/// probability `p`; with `+` boundary a `+` site joins the boundary cluster
/// through each outside bond with probability `p`, and the strip's bottom
/// row is always wired.
pub fn fk_from_spins<R: Rng>(spins: &SpinConfig, p: f64, bc: SpinBc, rng: &mut R) -> FkConfig {
    let (lx, ly) = (spins.lx, spins.ly);
    let s = &spins.spins;
    let n = lx * ly;
    let mut right = vec![false; n];
    let mut up = vec![false; n];
    let mut to_ghost = vec![false; n];
    for i in 0..n {
        let x = i % lx;
        if x + 1 < lx && s[i] == s[i + 1] {
            right[i] = rng.gen::<f64>() < p;
        }
        if i + lx < n && s[i] == s[i + lx] {
            up[i] = rng.gen::<f64>() < p;
        }
        match bc {
            SpinBc::Free => {}
            SpinBc::Plus => {
                let k = outside_neighbours(lx, ly, i);
                if k > 0 && s[i] == 1 {
                    to_ghost[i] = rng.gen::<f64>() < 1.0 - (1.0 - p).powi(k);
                }
            }
            SpinBc::StripDobrushin => to_ghost[i] = i < lx,
        }
    }
    FkConfig {
        lx,
        ly,
        bc,
        right,
        up,
        to_ghost,
    }
}

/// Reusable buffers for [`sw_step`].
#[derive(Debug)]
pub struct SwWorkspace {
    uf: UnionFind,
    colour: Vec<i8>,
}

impl SwWorkspace {
    pub fn new(spins: &SpinConfig) -> Self {
        let n = spins.lx * spins.ly + 1;
        Self {
            uf: UnionFind::new(n),
            colour: vec![0; n],
        }
    }
}

/// One Swendsen-Wang update at inverse temperature `beta`: draw the bond
/// layer with `p = 1 - e^{-2 beta}`, then give each cluster an independent
/// uniform spin, except the boundary cluster, which stays `+`.
pub fn sw_step<R: Rng>(spins: &mut SpinConfig, beta: f64, bc: SpinBc, rng: &mut R, ws: &mut SwWorkspace) {
    let fk = fk_from_spins(spins, p_of_beta(beta), bc, rng);
    recolour(spins, &fk, rng, ws);
}

fn recolour<R: Rng>(spins: &mut SpinConfig, fk: &FkConfig, rng: &mut R, ws: &mut SwWorkspace) {
    let n = spins.lx * spins.ly;
    ws.uf.reset();
    fk.fill(&mut ws.uf);
    ws.colour.iter_mut().for_each(|c| *c = 0);
    let ghost = ws.uf.find(n);
    if fk.bc != SpinBc::Free {
        ws.colour[ghost] = 1;
    }
    for i in 0..n {
        let r = ws.uf.find(i);
        if ws.colour[r] == 0 {
            ws.colour[r] = if rng.gen::<bool>() { 1 } else { -1 };
        }
        spins.spins[i] = ws.colour[r];
    }
}

/// Swendsen-Wang chain that keeps the bond layer of its last update. After
/// each [`SwChain::sweep`] the pair (bonds, spins) is one draw of the
/// Edwards-Sokal joint measure once the chain has equilibrated.
#[derive(Debug)]
pub struct SwChain {
    spins: SpinConfig,
    p: f64,
    bc: SpinBc,
    ws: SwWorkspace,
    bonds: Option<FkConfig>,
}

impl SwChain {
    pub fn new(spins: SpinConfig, p: f64, bc: SpinBc) -> Self {
        let ws = SwWorkspace::new(&spins);
        Self {
            spins,
            p,
            bc,
            ws,
            bonds: None,
        }
    }

    pub fn sweep<R: Rng>(&mut self, rng: &mut R) {
        let fk = fk_from_spins(&self.spins, self.p, self.bc, rng);
        recolour(&mut self.spins, &fk, rng, &mut self.ws);
        self.bonds = Some(fk);
    }

    /// Bond layer of the last sweep.
    pub fn bonds(&self) -> Option<&FkConfig> {
        self.bonds.as_ref()
    }

    pub fn spins(&self) -> &SpinConfig {
        &self.spins
    }

    /// Whether box sites `i` and `j` (row-major indices) share a cluster of
    /// the last bond layer.
    pub fn connected(&mut self, i: usize, j: usize) -> bool {
        self.ws.uf.connected(i, j)
    }

    /// Whether site `i` belongs to the boundary cluster.
    pub fn connected_to_boundary(&mut self, i: usize) -> bool {
        let n = self.spins.lx * self.spins.ly;
        self.bc != SpinBc::Free && self.ws.uf.connected(i, n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_beta_closes_everything() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = SpinConfig::new(5, 4, 1).unwrap();
        assert_eq!(fk_from_spins(&s, 0.0, SpinBc::Free, &mut rng).n_open(), 0);
        let fk = fk_from_spins(&s, 1.0, SpinBc::Free, &mut rng);
        assert_eq!(fk.n_open(), 4 * 4 + 5 * 3);
    }

    #[test]
    fn infinite_beta_freezes_a_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut s = SpinConfig::new(6, 6, 1).unwrap();
        let mut ws = SwWorkspace::new(&s);
        for _ in 0..5 {
            sw_step(&mut s, 50.0, SpinBc::Free, &mut rng, &mut ws);
            assert!(s.spins().iter().all(|&v| v == s.spins()[0]));
        }
    }

    #[test]
    fn boundary_clusters_stay_plus() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut s = SpinConfig::random(7, 3, &mut rng).unwrap();
        let mut ws = SwWorkspace::new(&s);
        for _ in 0..20 {
            sw_step(&mut s, 0.3, SpinBc::StripDobrushin, &mut rng, &mut ws);
            assert!((0..7).all(|x| s.get(Site::new(x, 0)) == Some(1)));
        }
        for _ in 0..60 {
            sw_step(&mut s, 50.0, SpinBc::Plus, &mut rng, &mut ws);
        }
        assert!(s.spins().iter().all(|&v| v == 1));
    }

    #[test]
    fn bond_config_matches_domain_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = SpinConfig::random(3, 3, &mut rng).unwrap();
        let fk = fk_from_spins(&s, 0.7, SpinBc::Free, &mut rng);
        let d = Domain::free_box(0, 2, 0, 2).unwrap();
        let c = fk.to_bond_config(&d).unwrap();
        assert_eq!(c.n_open(), fk.n_open());
        for (k, &b) in d.active_bonds().iter().enumerate() {
            let bond = d.bonds()[b];
            assert_eq!(c.is_open(k), fk.is_open(d.site(bond.u), d.site(bond.v)));
        }
    }
}
