use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::domain::{BoundaryKind, Domain, Site};
use crate::error::{Error, Result};

/// Point of the medial lattice in doubled coordinates: site `(x, y)` sits at
/// `(2x, 2y)`, dual faces at odd/odd points, medial vertices at mixed parity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MedialPoint {
    pub x: i32,
    pub y: i32,
}

impl MedialPoint {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }
}

/// Diagonal unit direction, numbered by quarter turns from north-east.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dir {
    NE = 0,
    NW = 1,
    SW = 2,
    SE = 3,
}

impl Dir {
    pub const ALL: [Dir; 4] = [Dir::NE, Dir::NW, Dir::SW, Dir::SE];

    pub fn quarter_turns(self) -> i32 {
        self as i32
    }

    pub fn from_quarter_turns(k: i32) -> Dir {
        Self::ALL[k.rem_euclid(4) as usize]
    }

    /// Counterclockwise angle from `other` to `self`, in quarter turns `0..4`.
    pub fn relative_to(self, other: Dir) -> i32 {
        (self as i32 - other as i32).rem_euclid(4)
    }

    pub fn label(self) -> &'static str {
        match self {
            Dir::NE => "NE",
            Dir::NW => "NW",
            Dir::SW => "SW",
            Dir::SE => "SE",
        }
    }
}

/// Side of a black (site) diamond.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    NE = 0,
    NW = 1,
    SW = 2,
    SE = 3,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::NE, Side::NW, Side::SW, Side::SE];

    // diamond corners relative to the centre: right, top, left, bottom
    const CORNERS: [(i32, i32); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];
    const FACES: [(i32, i32); 4] = [(1, 1), (-1, 1), (-1, -1), (1, -1)];

    /// Orientation of this side: counterclockwise around the black diamond,
    /// i.e. clockwise around the white one it borders.
    pub fn dir(self) -> Dir {
        Dir::from_quarter_turns(self as i32 + 1)
    }

    fn tail_offset(self) -> (i32, i32) {
        Self::CORNERS[self as usize]
    }

    fn head_offset(self) -> (i32, i32) {
        Self::CORNERS[(self as usize + 1) % 4]
    }

    fn face_offset(self) -> (i32, i32) {
        Self::FACES[self as usize]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MedialEdge {
    pub site: usize,
    pub side: Side,
    pub tail: MedialPoint,
    pub head: MedialPoint,
    /// Dual face (doubled coordinates) on the right of the edge.
    pub face: MedialPoint,
    pub dir: Dir,
}

impl MedialEdge {
    /// Midpoint in doubled coordinates times two (so it stays integral).
    pub fn midpoint_x2(&self) -> (i32, i32) {
        (self.tail.x + self.head.x, self.tail.y + self.head.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VertexKind {
    /// Midpoint of an active bond: two incoming and two outgoing edges.
    Regular { bond: usize },
    /// One incoming, one outgoing edge; the interface passes straight through.
    Forced,
    /// Tail of the first edge of the exploration path.
    Start,
    /// Head of the last edge of the exploration path.
    End,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MedialVertex {
    pub point: MedialPoint,
    pub ins: Vec<usize>,
    pub outs: Vec<usize>,
    pub kind: VertexKind,
}

/// Where the interface goes after an edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Next {
    /// Depends on the bond at the head: open keeps the white face on the
    /// right, closed keeps the black diamond on the left.
    Bond {
        bond: usize,
        open: usize,
        closed: usize,
    },
    Forced(usize),
    End,
}

/// Oriented medial graph of a domain.
#[derive(Clone, Debug)]
pub struct MedialGraph {
    edges: Vec<MedialEdge>,
    edge_of: BTreeMap<(usize, Side), usize>,
    vertices: Vec<MedialVertex>,
    vertex_of: BTreeMap<MedialPoint, usize>,
    next: Vec<Next>,
    e_a: Option<usize>,
    e_b: Option<usize>,
}

fn bond_at(domain: &Domain, p: MedialPoint) -> Option<usize> {
    let (u, v) = if p.x.rem_euclid(2) == 1 && p.y.rem_euclid(2) == 0 {
        (Site::new((p.x - 1) / 2, p.y / 2), Site::new((p.x + 1) / 2, p.y / 2))
    } else if p.x.rem_euclid(2) == 0 && p.y.rem_euclid(2) == 1 {
        (Site::new(p.x / 2, (p.y - 1) / 2), Site::new(p.x / 2, (p.y + 1) / 2))
    } else {
        return None;
    };
    domain.bond_between(domain.index_of(u)?, domain.index_of(v)?)
}

/// White faces taking part in the medial graph (doubled coordinates of the
/// face centres).
fn dual_faces(domain: &Domain) -> HashSet<MedialPoint> {
    let mut faces = HashSet::new();
    let free_bc = matches!(domain.kind(), BoundaryKind::Free);
    for s in domain.sites() {
        for side in Side::ALL {
            let (fx, fy) = side.face_offset();
            let centre = MedialPoint::new(2 * s.x + fx, 2 * s.y + fy);
            if faces.contains(&centre) {
                continue;
            }
            // lower-left corner of the face
            let ll = Site::new((centre.x - 1) / 2, (centre.y - 1) / 2);
            let corners = [ll, ll.offset(1, 0), ll.offset(1, 1), ll.offset(0, 1)];
            let present: Vec<Option<usize>> = corners.iter().map(|c| domain.index_of(*c)).collect();
            if present.iter().all(Option::is_some) {
                faces.insert(centre);
                continue;
            }
            let mut bonds = Vec::new();
            for k in 0..4 {
                if let (Some(i), Some(j)) = (present[k], present[(k + 1) % 4]) {
                    bonds.push(domain.bond_between(i, j).expect("adjacent sites are bonded"));
                }
            }
            let include = if bonds.iter().any(|&b| domain.is_frozen(b)) {
                false
            } else if !bonds.is_empty() {
                true
            } else {
                free_bc || present.iter().flatten().any(|&i| domain.is_free_arc(i))
            };
            if include {
                faces.insert(centre);
            }
        }
    }
    faces
}

impl MedialGraph {
    pub fn build(domain: &Domain) -> Result<Self> {
        let faces = dual_faces(domain);
        let mut edges = Vec::new();
        let mut edge_of = BTreeMap::new();
        for (i, s) in domain.sites().iter().enumerate() {
            let c = (2 * s.x, 2 * s.y);
            for side in Side::ALL {
                let (fx, fy) = side.face_offset();
                let face = MedialPoint::new(c.0 + fx, c.1 + fy);
                if !faces.contains(&face) {
                    continue;
                }
                let (tx, ty) = side.tail_offset();
                let (hx, hy) = side.head_offset();
                edge_of.insert((i, side), edges.len());
                edges.push(MedialEdge {
                    site: i,
                    side,
                    tail: MedialPoint::new(c.0 + tx, c.1 + ty),
                    head: MedialPoint::new(c.0 + hx, c.1 + hy),
                    face,
                    dir: side.dir(),
                });
            }
        }

        let mut incid: BTreeMap<MedialPoint, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
        for (k, e) in edges.iter().enumerate() {
            incid.entry(e.head).or_default().0.push(k);
            incid.entry(e.tail).or_default().1.push(k);
        }

        let mut vertices = Vec::with_capacity(incid.len());
        let mut vertex_of = BTreeMap::new();
        let mut next = vec![Next::End; edges.len()];
        let (mut e_a, mut e_b) = (None, None);
        for (point, (ins, outs)) in incid {
            let bond = bond_at(domain, point).filter(|&b| !domain.is_frozen(b));
            let kind = match (ins.len(), outs.len(), bond) {
                (2, 2, Some(bond)) => {
                    for &i in &ins {
                        let same_face = outs.iter().copied().find(|&o| edges[o].face == edges[i].face);
                        let same_site = outs.iter().copied().find(|&o| edges[o].site == edges[i].site);
                        match (same_face, same_site) {
                            (Some(open), Some(closed)) if open != closed => {
                                next[i] = Next::Bond { bond, open, closed };
                            }
                            _ => return Err(Error::InvalidDomain(format!("inconsistent medial vertex at {point:?}"))),
                        }
                    }
                    VertexKind::Regular { bond }
                }
                (1, 1, None) => {
                    next[ins[0]] = Next::Forced(outs[0]);
                    VertexKind::Forced
                }
                (0, 1, None) if domain.is_dobrushin() && e_a.is_none() => {
                    e_a = Some(outs[0]);
                    VertexKind::Start
                }
                (1, 0, None) if domain.is_dobrushin() && e_b.is_none() => {
                    e_b = Some(ins[0]);
                    VertexKind::End
                }
                _ => {
                    return Err(Error::InvalidDomain(format!(
                        "medial vertex at {:?} has in/out degree {}/{} (bond: {:?})",
                        point,
                        ins.len(),
                        outs.len(),
                        bond
                    )))
                }
            };
            vertex_of.insert(point, vertices.len());
            vertices.push(MedialVertex { point, ins, outs, kind });
        }
        if domain.is_dobrushin() && (e_a.is_none() || e_b.is_none()) {
            return Err(Error::InvalidDomain("exploration path endpoints not found".into()));
        }

        let g = Self {
            edges,
            edge_of,
            vertices,
            vertex_of,
            next,
            e_a,
            e_b,
        };
        for (k, n) in g.next.iter().enumerate() {
            let targets: &[usize] = match n {
                Next::Bond { open, closed, .. } => &[*open, *closed],
                Next::Forced(o) => std::slice::from_ref(o),
                Next::End => &[],
            };
            for &t in targets {
                if g.turn(k, t).is_none() {
                    return Err(Error::InvalidDomain(format!(
                        "interface would not turn by a quarter at {:?}",
                        g.edges[k].head
                    )));
                }
            }
        }
        Ok(g)
    }

    pub fn edges(&self) -> &[MedialEdge] {
        &self.edges
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edge(&self, e: usize) -> &MedialEdge {
        &self.edges[e]
    }

    pub fn edge_of(&self, site: usize, side: Side) -> Option<usize> {
        self.edge_of.get(&(site, side)).copied()
    }

    /// The side of a site's diamond pointing north-west (its NE side).
    pub fn nw_edge(&self, site: usize) -> Option<usize> {
        self.edge_of(site, Side::NE)
    }

    pub fn vertices(&self) -> &[MedialVertex] {
        &self.vertices
    }

    pub fn vertex_at(&self, p: MedialPoint) -> Option<&MedialVertex> {
        self.vertex_of.get(&p).map(|&i| &self.vertices[i])
    }

    pub fn next(&self, e: usize) -> Next {
        self.next[e]
    }

    pub fn e_a(&self) -> Option<usize> {
        self.e_a
    }

    pub fn e_b(&self) -> Option<usize> {
        self.e_b
    }

    /// Signed quarter turns from edge `e` into edge `f` (`+1` left, `-1` right).
    pub fn turn(&self, e: usize, f: usize) -> Option<i32> {
        match self.edges[f].dir.relative_to(self.edges[e].dir) {
            1 => Some(1),
            3 => Some(-1),
            _ => None,
        }
    }

    /// Edges at regular vertices other than the two path stubs.
    pub fn in_domain_degree(&self, v: &MedialVertex) -> usize {
        let stub = |e: &usize| Some(*e) == self.e_a || Some(*e) == self.e_b;
        v.ins.iter().chain(&v.outs).filter(|e| !stub(e)).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_degrees(g: &MedialGraph, dobrushin: bool) {
        let mut starts = 0;
        let mut ends = 0;
        for v in g.vertices() {
            match v.kind {
                VertexKind::Regular { .. } => {
                    assert_eq!((v.ins.len(), v.outs.len()), (2, 2));
                }
                VertexKind::Forced => assert_eq!((v.ins.len(), v.outs.len()), (1, 1)),
                VertexKind::Start => starts += 1,
                VertexKind::End => ends += 1,
            }
        }
        let expect = usize::from(dobrushin);
        assert_eq!((starts, ends), (expect, expect));
    }

    #[test]
    fn unit_square_structure() {
        let d = Domain::rectangle(1, 1, Site::new(0, 0), Site::new(1, 0)).unwrap();
        let g = MedialGraph::build(&d).unwrap();
        check_degrees(&g, true);
        // one active bond, one regular vertex
        let regular = g
            .vertices()
            .iter()
            .filter(|v| matches!(v.kind, VertexKind::Regular { .. }))
            .count();
        assert_eq!(regular, 1);
        assert!(g.e_a().is_some() && g.e_b().is_some());
    }

    #[test]
    fn every_edge_separates_black_from_white() {
        let d = Domain::rectangle(3, 2, Site::new(1, 0), Site::new(3, 1)).unwrap();
        let g = MedialGraph::build(&d).unwrap();
        for e in g.edges() {
            let s = d.site(e.site);
            // the face is diagonal to the site
            assert_eq!((e.face.x - 2 * s.x).abs(), 1);
            assert_eq!((e.face.y - 2 * s.y).abs(), 1);
            // the edge is a diagonal unit step
            assert_eq!((e.head.x - e.tail.x).abs(), 1);
            assert_eq!((e.head.y - e.tail.y).abs(), 1);
        }
        check_degrees(&g, true);
    }

    #[test]
    fn stubs_attach_to_three_edge_vertices() {
        let d = Domain::rectangle(3, 2, Site::new(1, 0), Site::new(3, 1)).unwrap();
        let g = MedialGraph::build(&d).unwrap();
        let three: Vec<_> = g
            .vertices()
            .iter()
            .filter(|v| matches!(v.kind, VertexKind::Regular { .. }))
            .filter(|v| g.in_domain_degree(v) == 3)
            .collect();
        assert_eq!(three.len(), 2);
    }

    #[test]
    fn catalog_shapes_build() {
        for d in [
            Domain::rectangle(2, 2, Site::new(0, 0), Site::new(2, 2)).unwrap(),
            Domain::strip(2, 3).unwrap(),
            Domain::wedge(Site::new(2, 2), 2).unwrap(),
        ] {
            check_degrees(&MedialGraph::build(&d).unwrap(), true);
        }
        let f = Domain::free_box(-1, 1, -1, 1).unwrap();
        let g = MedialGraph::build(&f).unwrap();
        check_degrees(&g, false);
        // every diamond side is present with free boundary
        assert_eq!(g.n_edges(), 4 * f.n_sites());
    }

    #[test]
    fn nw_edge_points_north_west() {
        let d = Domain::free_box(0, 2, 0, 2).unwrap();
        let g = MedialGraph::build(&d).unwrap();
        for i in 0..d.n_sites() {
            assert_eq!(g.edge(g.nw_edge(i).unwrap()).dir, Dir::NW);
        }
    }
}
