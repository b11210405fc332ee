use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use super::config::BondConfig;
use crate::error::{Error, Result};
use crate::lattice::{Domain, MedialGraph, ModelParams, Next};

const END: u32 = u32::MAX;

/// Loops and exploration path of one configuration.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoopDecomposition {
    /// Closed cycles of medial edges.
    pub loops: Vec<Vec<usize>>,
    /// Medial edges of the exploration path from `e_a` to `e_b`; empty for
    /// domains without marked points.
    pub path: Vec<usize>,
    /// Winding from each path edge to `e_b`, in quarter turns.
    pub winding: Vec<i32>,
}

impl LoopDecomposition {
    pub fn n_loops(&self) -> usize {
        self.loops.len()
    }

    /// Winding of the path edge in radians.
    pub fn winding_radians(&self, i: usize) -> f64 {
        self.winding[i] as f64 * std::f64::consts::FRAC_PI_2
    }
}

/// Flattened successor tables of a medial graph, indexed by the open/closed
/// state of the bond at each edge's head.
#[derive(Clone, Debug)]
pub(crate) struct Kernel {
    /// `succ[e][0]` if the bond is open, `succ[e][1]` if closed.
    pub succ: Vec<[u32; 2]>,
    pub turn: Vec<[i8; 2]>,
    /// Position of the deciding bond in the configuration mask.
    pub bit: Vec<u32>,
    pub words: usize,
}

impl Kernel {
    pub fn new(domain: &Domain, medial: &MedialGraph) -> Self {
        let mut slot = vec![u32::MAX; domain.n_bonds()];
        for (i, &b) in domain.active_bonds().iter().enumerate() {
            slot[b] = i as u32;
        }
        let n = medial.n_edges();
        let mut succ = vec![[END; 2]; n];
        let mut turn = vec![[0i8; 2]; n];
        let mut bit = vec![0u32; n];
        for e in 0..n {
            match medial.next(e) {
                Next::Bond { bond, open, closed } => {
                    succ[e] = [open as u32, closed as u32];
                    turn[e] = [
                        medial.turn(e, open).expect("validated turn") as i8,
                        medial.turn(e, closed).expect("validated turn") as i8,
                    ];
                    bit[e] = slot[bond];
                }
                Next::Forced(f) => {
                    succ[e] = [f as u32; 2];
                    let t = medial.turn(e, f).expect("validated turn") as i8;
                    turn[e] = [t; 2];
                }
                Next::End => {}
            }
        }
        Self {
            succ,
            turn,
            bit,
            words: n.div_ceil(64),
        }
    }

    pub fn n_edges(&self) -> usize {
        self.succ.len()
    }

    #[inline(always)]
    pub fn step(&self, e: usize, mask: u64) -> (u32, i8) {
        let s = (((mask >> self.bit[e]) & 1) ^ 1) as usize;
        (self.succ[e][s], self.turn[e][s])
    }
}

#[inline(always)]
pub(crate) fn mark(visited: &mut [u64], e: usize) {
    visited[e >> 6] |= 1 << (e & 63);
}

/// Counts the cycles among unvisited edges, marking them visited.
#[inline]
pub(crate) fn count_loops(kernel: &Kernel, mask: u64, visited: &mut [u64]) -> usize {
    let mut loops = 0;
    for w in 0..kernel.words {
        loop {
            let free = !visited[w];
            if free == 0 {
                break;
            }
            let start = w * 64 + free.trailing_zeros() as usize;
            if start >= kernel.n_edges() {
                break;
            }
            loops += 1;
            let mut e = start;
            loop {
                mark(visited, e);
                e = kernel.step(e, mask).0 as usize;
                if e == start {
                    break;
                }
            }
        }
    }
    loops
}

/// Medial graph and successor tables of a domain, ready for tracing.
#[derive(Clone, Debug)]
pub struct Tracer {
    medial: MedialGraph,
    pub(crate) kernel: Kernel,
    width: usize,
}

impl Tracer {
    pub fn new(domain: &Domain) -> Result<Self> {
        let medial = MedialGraph::build(domain)?;
        let kernel = Kernel::new(domain, &medial);
        Ok(Self {
            medial,
            kernel,
            width: domain.active_bonds().len(),
        })
    }

    pub fn medial(&self) -> &MedialGraph {
        &self.medial
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn decompose(&self, config: BondConfig) -> LoopDecomposition {
        assert_eq!(config.width, self.width, "config width mismatch");
        let k = &self.kernel;
        let mut visited = vec![0u64; k.words];
        let mut path = Vec::new();
        let mut turns = Vec::new();
        if let Some(ea) = self.medial.e_a() {
            let mut e = ea;
            loop {
                mark(&mut visited, e);
                path.push(e);
                let (next, t) = k.step(e, config.mask);
                if next == END {
                    break;
                }
                turns.push(t as i32);
                e = next as usize;
            }
        }
        // winding to the last edge, accumulated backwards
        let mut winding = vec![0i32; path.len()];
        for i in (0..turns.len()).rev() {
            winding[i] = winding[i + 1] + turns[i];
        }
        let mut loops = Vec::new();
        for start in 0..k.n_edges() {
            if visited[start >> 6] >> (start & 63) & 1 == 1 {
                continue;
            }
            let mut cycle = Vec::new();
            let mut e = start;
            loop {
                mark(&mut visited, e);
                cycle.push(e);
                e = k.step(e, config.mask).0 as usize;
                if e == start {
                    break;
                }
            }
            loops.push(cycle);
        }
        LoopDecomposition { loops, path, winding }
    }

    /// Loop-representation weight `x^o sqrt(2)^L`; the exploration path is
    /// not a loop.
    pub fn loop_weight(&self, config: BondConfig, params: &ModelParams) -> f64 {
        let mut visited = vec![0u64; self.kernel.words];
        if let Some(ea) = self.medial.e_a() {
            let mut e = ea as u32;
            while e != END {
                mark(&mut visited, e as usize);
                e = self.kernel.step(e as usize, config.mask).0;
            }
        }
        let l = count_loops(&self.kernel, config.mask, &mut visited);
        params.x.powi(config.n_open() as i32) * SQRT_2.powi(l as i32)
    }

    /// The loop through `e0`, with the winding from each of its edges forward
    /// to the closing return into `e0` (quarter turns; `e0` itself gets the
    /// full turn of the loop).
    pub fn loop_through(&self, e0: usize, config: BondConfig) -> Result<(Vec<usize>, Vec<i32>)> {
        let k = &self.kernel;
        let mut edges = vec![e0];
        let mut acc = vec![0i32];
        let mut e = e0;
        loop {
            let (next, t) = k.step(e, config.mask);
            if next == END {
                return Err(Error::InvalidDomain("edge lies on an open path, not a loop".into()));
            }
            let total = acc.last().copied().unwrap_or(0) + t as i32;
            e = next as usize;
            if e == e0 {
                let winding = acc.iter().map(|c| total - c).collect();
                return Ok((edges, winding));
            }
            edges.push(e);
            acc.push(total);
        }
    }
}

pub fn loop_decompose(domain: &Domain, config: BondConfig) -> Result<LoopDecomposition> {
    Ok(Tracer::new(domain)?.decompose(config))
}

pub fn loop_weight(domain: &Domain, config: BondConfig, params: &ModelParams) -> Result<f64> {
    Ok(Tracer::new(domain)?.loop_weight(config, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{Site, VertexKind};

    fn eulerian(t: &Tracer, d: &LoopDecomposition) {
        let mut seen = vec![0u32; t.medial().n_edges()];
        for &e in d.path.iter().chain(d.loops.iter().flatten()) {
            seen[e] += 1;
        }
        assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn two_by_one_all_configs_are_eulerian() {
        let d = Domain::rectangle(2, 1, Site::new(1, 0), Site::new(0, 0)).unwrap();
        let t = Tracer::new(&d).unwrap();
        for cfg in BondConfig::iter_all(t.width()) {
            let dec = t.decompose(cfg);
            eulerian(&t, &dec);
            assert_eq!(dec.path.first().copied(), t.medial().e_a());
            assert_eq!(dec.path.last().copied(), t.medial().e_b());
            assert_eq!(*dec.winding.last().unwrap(), 0);
            for w in dec.path.windows(2) {
                assert!(t.medial().turn(w[0], w[1]).is_some());
            }
        }
    }

    #[test]
    fn closed_path_hugs_wired_arc() {
        // all closed: each off-arc site is ringed by its own loop
        let d = Domain::rectangle(1, 1, Site::new(1, 0), Site::new(0, 0)).unwrap();
        let t = Tracer::new(&d).unwrap();
        let dec = t.decompose(BondConfig::all_closed(&d));
        assert_eq!(dec.n_loops(), 2);
        let wired = d.wired_arc();
        for &e in &dec.path {
            assert!(wired.contains(&t.medial().edge(e).site));
        }
        // all open: the path keeps to the free arc side
        let dec = t.decompose(BondConfig::all_open(&d));
        assert_eq!(dec.n_loops(), 1);
        for &e in &dec.path {
            assert!(d.is_free_arc(t.medial().edge(e).site));
        }
    }

    #[test]
    fn free_box_loops() {
        let d = Domain::free_box(0, 1, 0, 1).unwrap();
        let t = Tracer::new(&d).unwrap();
        let closed = t.decompose(BondConfig::all_closed(&d));
        assert_eq!(closed.n_loops(), 4);
        assert!(closed.path.is_empty());
        let open = t.decompose(BondConfig::all_open(&d));
        // outer boundary loop and the loop around the single dual site
        assert_eq!(open.n_loops(), 2);
        let e0 = t.medial().nw_edge(0).unwrap();
        let (edges, w) = t.loop_through(e0, BondConfig::all_closed(&d)).unwrap();
        assert_eq!(edges.len(), 4);
        assert_eq!(w[0].abs(), 4);
        for v in t.medial().vertices() {
            assert!(!matches!(v.kind, VertexKind::Start | VertexKind::End));
        }
    }
}
