use std::collections::{HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A site of the square lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Site {
    pub x: i32,
    pub y: i32,
}

impl Site {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn offset(self, dx: i32, dy: i32) -> Self {
        Self::new(self.x + dx, self.y + dy)
    }

    pub fn neighbors(self) -> [Site; 4] {
        [
            self.offset(1, 0),
            self.offset(0, 1),
            self.offset(-1, 0),
            self.offset(0, -1),
        ]
    }
}

impl std::fmt::Display for Site {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Bond {
    pub u: usize,
    pub v: usize,
}

/// How the boundary of a domain is treated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryKind {
    /// Free on the counterclockwise arc `a -> b`, wired on `b -> a`.
    Dobrushin { a: usize, b: usize },
    /// Free everywhere.
    Free,
}

/// Boundary condition used when weighting a configuration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryCondition {
    Free,
    Wired,
    Dobrushin,
}

/// A finite, simply connected piece of the square lattice with all bonds
/// between its sites and a marked boundary structure.
///
/// For Dobrushin domains the bonds joining consecutive sites of the wired
/// arc are *frozen*: they belong to the boundary wiring and take no part in
/// the loop representation. Every other bond is *active*.
#[derive(Clone, Debug)]
pub struct Domain {
    sites: Vec<Site>,
    index: HashMap<Site, usize>,
    bonds: Vec<Bond>,
    bond_index: HashMap<(usize, usize), usize>,
    boundary: Vec<usize>,
    kind: BoundaryKind,
    wired: Vec<bool>,
    free_arc: Vec<bool>,
    frozen: Vec<bool>,
    active: Vec<usize>,
}

/// Alias kept for readability at call sites that require marked points.
pub type DobrushinDomain = Domain;

impl Domain {
    /// Rectangle `[0, width] x [0, height]` with marked boundary points.
    pub fn rectangle(width: u32, height: u32, a: Site, b: Site) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDomain(format!("degenerate rectangle {width} x {height}")));
        }
        let sites = rect_sites(0, width as i32, 0, height as i32);
        Self::from_sites(sites, a, b)
    }

    /// Finite approximation `[-halfwidth, halfwidth] x [0, height]` of the
    /// strip, wired along the bottom row and free elsewhere.
    pub fn strip(height: u32, halfwidth: u32) -> Result<Self> {
        if height == 0 || halfwidth == 0 {
            return Err(Error::InvalidDomain(format!(
                "strip needs positive height and halfwidth, got {height}, {halfwidth}"
            )));
        }
        let (h, m) = (height as i32, halfwidth as i32);
        Self::from_sites(rect_sites(-m, m, 0, h), Site::new(m, 0), Site::new(-m, 0))
    }

    /// Truncation of the wedge complement `T(w)` to the quadrant box
    /// `[0, w.x + radius] x [0, w.y + radius]`, wired along both axes and free
    /// along the notch cut out by `L+(w)` and the outer sides.
    pub fn wedge(w: Site, radius: u32) -> Result<Self> {
        if w.x < 0 || w.y < 0 || radius == 0 {
            return Err(Error::InvalidDomain(format!(
                "wedge needs w in the first quadrant and radius > 0, got {w}, {radius}"
            )));
        }
        let (xmax, ymax) = (w.x + radius as i32, w.y + radius as i32);
        let sites: Vec<Site> = rect_sites(0, xmax, 0, ymax)
            .into_iter()
            .filter(|s| !(s.x > w.x && s.y > w.y))
            .collect();
        Self::from_sites(sites, Site::new(xmax, 0), Site::new(0, ymax))
    }

    /// Box `[x0, x1] x [y0, y1]` with free boundary everywhere.
    pub fn free_box(x0: i32, x1: i32, y0: i32, y1: i32) -> Result<Self> {
        if x1 <= x0 || y1 <= y0 {
            return Err(Error::InvalidDomain("degenerate box".into()));
        }
        Self::build(rect_sites(x0, x1, y0, y1), None)
    }

    /// General constructor from a site set; the boundary cycle is traced
    /// counterclockwise and validated to be a self-avoiding polygon.
    pub fn from_sites(sites: Vec<Site>, a: Site, b: Site) -> Result<Self> {
        if a == b {
            return Err(Error::InvalidDomain("marked points a and b coincide".into()));
        }
        Self::build(sites, Some((a, b)))
    }

    fn build(mut sites: Vec<Site>, marks: Option<(Site, Site)>) -> Result<Self> {
        sites.sort_by_key(|s| (s.y, s.x));
        sites.dedup();
        if sites.len() < 2 {
            return Err(Error::InvalidDomain("need at least two sites".into()));
        }
        let index: HashMap<Site, usize> = sites.iter().enumerate().map(|(i, s)| (*s, i)).collect();

        let mut bonds = Vec::new();
        let mut bond_index = HashMap::new();
        for (i, s) in sites.iter().enumerate() {
            for nb in [s.offset(1, 0), s.offset(0, 1)] {
                if let Some(&j) = index.get(&nb) {
                    bond_index.insert((i, j), bonds.len());
                    bond_index.insert((j, i), bonds.len());
                    bonds.push(Bond { u: i, v: j });
                }
            }
        }

        check_connected(&sites, &index)?;
        let faces = sites
            .iter()
            .filter(|s| {
                [s.offset(1, 0), s.offset(0, 1), s.offset(1, 1)]
                    .iter()
                    .all(|t| index.contains_key(t))
            })
            .count();
        if sites.len() + faces != bonds.len() + 1 {
            return Err(Error::InvalidDomain("site set is not simply connected".into()));
        }
        let boundary = trace_boundary(&sites, &index)?;

        let n = sites.len();
        let mut wired = vec![false; n];
        let mut free_arc = vec![false; n];
        let mut frozen = vec![false; bonds.len()];
        let kind = match marks {
            None => {
                for &i in &boundary {
                    free_arc[i] = true;
                }
                BoundaryKind::Free
            }
            Some((a, b)) => {
                let pos = |s: Site| -> Result<usize> {
                    let i = index
                        .get(&s)
                        .ok_or_else(|| Error::InvalidDomain(format!("{s} is not a site")))?;
                    boundary
                        .iter()
                        .position(|&k| k == *i)
                        .ok_or_else(|| Error::InvalidDomain(format!("{s} is not on the boundary")))
                };
                let (pa, pb) = (pos(a)?, pos(b)?);
                let len = boundary.len();
                let mut k = pa;
                loop {
                    free_arc[boundary[k]] = true;
                    if k == pb {
                        break;
                    }
                    k = (k + 1) % len;
                }
                let mut k = pb;
                loop {
                    wired[boundary[k]] = true;
                    if k == pa {
                        break;
                    }
                    let next = (k + 1) % len;
                    frozen[bond_index[&(boundary[k], boundary[next])]] = true;
                    k = next;
                }
                BoundaryKind::Dobrushin {
                    a: index[&a],
                    b: index[&b],
                }
            }
        };
        let active = (0..bonds.len()).filter(|&i| !frozen[i]).collect();
        Ok(Self {
            sites,
            index,
            bonds,
            bond_index,
            boundary,
            kind,
            wired,
            free_arc,
            frozen,
            active,
        })
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn site(&self, i: usize) -> Site {
        self.sites[i]
    }

    pub fn index_of(&self, s: Site) -> Option<usize> {
        self.index.get(&s).copied()
    }

    pub fn contains(&self, s: Site) -> bool {
        self.index.contains_key(&s)
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn bond_between(&self, u: usize, v: usize) -> Option<usize> {
        self.bond_index.get(&(u, v)).copied()
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn n_bonds(&self) -> usize {
        self.bonds.len()
    }

    /// Boundary sites in counterclockwise order.
    pub fn boundary_cycle(&self) -> &[usize] {
        &self.boundary
    }

    pub fn kind(&self) -> BoundaryKind {
        self.kind
    }

    pub fn is_dobrushin(&self) -> bool {
        matches!(self.kind, BoundaryKind::Dobrushin { .. })
    }

    pub fn marked(&self) -> Option<(usize, usize)> {
        match self.kind {
            BoundaryKind::Dobrushin { a, b } => Some((a, b)),
            BoundaryKind::Free => None,
        }
    }

    pub fn is_wired(&self, site: usize) -> bool {
        self.wired[site]
    }

    pub fn is_free_arc(&self, site: usize) -> bool {
        self.free_arc[site]
    }

    pub fn wired_arc(&self) -> Vec<usize> {
        self.arc(|i| self.wired[i])
    }

    pub fn free_arc(&self) -> Vec<usize> {
        self.arc(|i| self.free_arc[i])
    }

    fn arc(&self, pred: impl Fn(usize) -> bool) -> Vec<usize> {
        self.boundary.iter().copied().filter(|&i| pred(i)).collect()
    }

    pub fn is_frozen(&self, bond: usize) -> bool {
        self.frozen[bond]
    }

    /// Bonds that carry a random state in the loop representation.
    pub fn active_bonds(&self) -> &[usize] {
        &self.active
    }

    pub fn is_boundary_site(&self, i: usize) -> bool {
        self.sites[i].neighbors().iter().any(|n| !self.contains(*n))
    }
}

pub(crate) fn rect_sites(x0: i32, x1: i32, y0: i32, y1: i32) -> Vec<Site> {
    (y0..=y1)
        .flat_map(|y| (x0..=x1).map(move |x| Site::new(x, y)))
        .collect()
}

fn check_connected(sites: &[Site], index: &HashMap<Site, usize>) -> Result<()> {
    let mut seen = vec![false; sites.len()];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    let mut count = 1;
    while let Some(i) = queue.pop_front() {
        for nb in sites[i].neighbors() {
            if let Some(&j) = index.get(&nb) {
                if !seen[j] {
                    seen[j] = true;
                    count += 1;
                    queue.push_back(j);
                }
            }
        }
    }
    if count != sites.len() {
        return Err(Error::InvalidDomain("site set is not connected".into()));
    }
    Ok(())
}

/// Counterclockwise walk around the outer face keeping the exterior on the
/// right. Rejects boundaries that revisit a site or miss a boundary site.
fn trace_boundary(sites: &[Site], index: &HashMap<Site, usize>) -> Result<Vec<usize>> {
    // unit steps in counterclockwise order: E, N, W, S
    const STEPS: [(i32, i32); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];
    let start = 0; // lowest row, leftmost site
    let mut cur = start;
    let mut heading = 0usize; // arrived heading east
    let mut cycle = vec![start];
    let mut seen = HashSet::from([start]);
    let limit = 4 * sites.len() + 4;
    for _ in 0..limit {
        // right, straight, left, back
        let mut moved = false;
        for turn in [3usize, 0, 1, 2] {
            let h = (heading + turn) % 4;
            let (dx, dy) = STEPS[h];
            if let Some(&j) = index.get(&sites[cur].offset(dx, dy)) {
                heading = h;
                cur = j;
                moved = true;
                break;
            }
        }
        if !moved {
            return Err(Error::InvalidDomain("isolated site".into()));
        }
        if cur == start {
            // Closed only if the next move from start would repeat the first one.
            break;
        }
        if !seen.insert(cur) {
            return Err(Error::InvalidDomain(format!(
                "boundary is not a self-avoiding polygon (revisits {})",
                sites[cur]
            )));
        }
        cycle.push(cur);
    }
    // a site lies on the outer face iff one of its eight neighbours is missing
    let on_boundary = |s: &Site| (-1..=1).any(|dx| (-1..=1).any(|dy| !index.contains_key(&s.offset(dx, dy))));
    let expected = sites.iter().filter(|s| on_boundary(s)).count();
    if expected != cycle.len() {
        return Err(Error::InvalidDomain(
            "boundary is not a single simple cycle (holes or pinches)".into(),
        ));
    }
    Ok(cycle)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square() {
        let d = Domain::rectangle(1, 1, Site::new(0, 0), Site::new(1, 0)).unwrap();
        assert_eq!(d.n_sites(), 4);
        assert_eq!(d.n_bonds(), 4);
        assert_eq!(d.boundary_cycle().len(), 4);
    }

    #[test]
    fn two_by_one() {
        let d = Domain::rectangle(2, 1, Site::new(0, 0), Site::new(2, 0)).unwrap();
        assert_eq!(d.n_sites(), 6);
        assert_eq!(d.n_bonds(), 7);
        let free: Vec<Site> = d.free_arc().iter().map(|&i| d.site(i)).collect();
        assert_eq!(free, vec![Site::new(0, 0), Site::new(1, 0), Site::new(2, 0)]);
        // right, top and left sides are frozen
        assert_eq!(d.active_bonds().len(), 3);
    }

    #[test]
    fn rejects_degenerate() {
        assert!(Domain::rectangle(1, 1, Site::new(0, 0), Site::new(0, 0)).is_err());
        assert!(Domain::rectangle(0, 3, Site::new(0, 0), Site::new(0, 1)).is_err());
        assert!(Domain::rectangle(2, 2, Site::new(1, 1), Site::new(0, 0)).is_err());
        assert!(Domain::strip(0, 3).is_err());
    }

    #[test]
    fn strip_arcs() {
        let d = Domain::strip(1, 1).unwrap();
        let wired: Vec<Site> = d.wired_arc().iter().map(|&i| d.site(i)).collect();
        assert_eq!(wired, vec![Site::new(-1, 0), Site::new(0, 0), Site::new(1, 0)]);
        assert_eq!(Domain::strip(3, 8).unwrap().n_sites(), 68);
    }

    #[test]
    fn arcs_meet_only_at_marks() {
        let d = Domain::rectangle(3, 2, Site::new(1, 0), Site::new(3, 1)).unwrap();
        let both: Vec<usize> = d
            .boundary_cycle()
            .iter()
            .copied()
            .filter(|&i| d.is_wired(i) && d.is_free_arc(i))
            .collect();
        assert_eq!(both.len(), 2);
        assert_eq!(d.boundary_cycle().len(), 10);
    }

    #[test]
    fn wedge_shape() {
        let d = Domain::wedge(Site::new(2, 2), 2).unwrap();
        assert_eq!(d.n_sites(), 21);
        assert_eq!(d.n_bonds(), 32);
        assert_eq!(d.active_bonds().len(), 24);
        assert!(d.is_free_arc(d.index_of(Site::new(2, 2)).unwrap()));
    }

    #[test]
    fn rejects_holes() {
        let sites: Vec<Site> = rect_sites(0, 2, 0, 2)
            .into_iter()
            .filter(|s| *s != Site::new(1, 1))
            .collect();
        assert!(Domain::from_sites(sites, Site::new(0, 0), Site::new(2, 0)).is_err());
    }
}
