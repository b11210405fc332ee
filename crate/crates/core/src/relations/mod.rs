//! Numerical checks of the local identities satisfied by the observable, and
//! the strip contraction.

mod strip;
mod suite;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{rc_weight, wired_connection_probs, BondConfig, Observable, Tracer};
use crate::lattice::{BoundaryCondition, Dir, Domain, MedialGraph, MedialPoint, ModelParams, VertexKind};

pub use strip::{
    aitken, projection_reconstruction, strip_contraction, strip_extrapolation, strip_observable_profile,
    Reconstruction, StripExtrapolation, StripProfile,
};
pub use suite::{
    catalog, p_grid, run_suite, stencil_domains, CatalogDomain, CheckSummary, Skipped, SuiteEntry, SuiteOptions,
    ARGUMENT_GATE, MEASURE_GATE, MODULUS_GATE, STENCIL_GATE, VERTEX_GATE,
};

/// Aggregate of a family of residuals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub check_name: String,
    pub max_abs_residual: f64,
    pub worst_location: String,
    pub count_checked: usize,
    pub mean_abs_residual: f64,
    /// Locations skipped because their neighbourhood is not covered.
    #[serde(default)]
    pub excluded: usize,
}

impl ResidualReport {
    pub fn passes(&self, gate: f64) -> bool {
        self.count_checked > 0 && self.max_abs_residual < gate
    }
}

/// Accumulates residuals by location.
#[derive(Debug)]
pub(crate) struct Tally {
    name: String,
    max: f64,
    worst: String,
    sum: f64,
    count: usize,
    pub excluded: usize,
}

impl Tally {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            max: 0.0,
            worst: String::new(),
            sum: 0.0,
            count: 0,
            excluded: 0,
        }
    }

    pub fn add(&mut self, r: f64, at: impl FnOnce() -> String) {
        if self.count == 0 || r > self.max || r.is_nan() {
            self.max = if r.is_nan() { f64::INFINITY } else { r };
            self.worst = at();
        }
        self.sum += r;
        self.count += 1;
    }

    pub fn finish(self) -> Result<ResidualReport> {
        if self.count == 0 {
            return Err(Error::InvalidDomain(format!(
                "{}: no eligible locations ({} excluded)",
                self.name, self.excluded
            )));
        }
        Ok(ResidualReport {
            check_name: self.name,
            max_abs_residual: self.max,
            worst_location: self.worst,
            count_checked: self.count,
            mean_abs_residual: self.sum / self.count as f64,
            excluded: self.excluded,
        })
    }
}

fn fmt_point(p: MedialPoint) -> String {
    format!("vertex ({}, {})/2", p.x, p.y)
}

/// `|F(A) + F(C) - e^{i alpha} (F(B) + F(D))|` at every vertex with four
/// edges, `A, C` incoming and `B, D` outgoing.
pub fn check_vertex_relation(obs: &Observable, medial: &MedialGraph, params: &ModelParams) -> Result<ResidualReport> {
    let mut t = Tally::new("check_vertex_relation");
    let phase = params.phase();
    for v in medial.vertices() {
        if !matches!(v.kind, VertexKind::Regular { .. }) {
            continue;
        }
        let missing = || Error::MissingValue(fmt_point(v.point));
        let mut lhs = Complex64::new(0.0, 0.0);
        for &e in &v.ins {
            lhs += obs.at_vertex(e, false).ok_or_else(missing)?;
        }
        let mut rhs = Complex64::new(0.0, 0.0);
        for &e in &v.outs {
            rhs += obs.at_vertex(e, true).ok_or_else(missing)?;
        }
        t.add((lhs - phase * rhs).norm(), || fmt_point(v.point));
    }
    t.finish()
}

/// Reference direction for the argument lines: `e_b` for Dobrushin
/// observables, the root edge for the bulk one.
fn reference_dir(obs: &Observable, medial: &MedialGraph) -> Result<Dir> {
    let e = obs
        .e0
        .or(medial.e_b())
        .ok_or_else(|| Error::InvalidDomain("no reference edge".into()))?;
    Ok(medial.edge(e).dir)
}

/// Unit vector spanning the argument line of an edge pointing in `dir`:
/// `e^{-i pi k / 4}` where `k` counts quarter turns from the reference.
pub fn argument_line(dir: Dir, reference: Dir) -> Complex64 {
    let k = dir.relative_to(reference);
    Complex64::from_polar(1.0, -std::f64::consts::FRAC_PI_4 * k as f64)
}

/// Distance from `F(e)` to the line prescribed by the direction of `e`.
pub fn check_argument_lines(obs: &Observable, medial: &MedialGraph) -> Result<ResidualReport> {
    let reference = reference_dir(obs, medial)?;
    let mut t = Tally::new("check_argument_lines");
    for (e, edge) in medial.edges().iter().enumerate() {
        let Some(f) = obs.get(e) else {
            t.excluded += 1;
            continue;
        };
        let u = argument_line(edge.dir, reference);
        t.add((f * u.conj()).im.abs(), || {
            let (x, y) = edge.midpoint_x2();
            format!("edge ({x}, {y})/4 {}", edge.dir.label())
        });
    }
    t.finish()
}

/// Sides of a free-arc site's diamond that border a white face outside the
/// domain.
pub fn free_arc_edges(domain: &Domain, medial: &MedialGraph) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (e, edge) in medial.edges().iter().enumerate() {
        let u = edge.site;
        if !domain.is_free_arc(u) || domain.is_wired(u) {
            continue;
        }
        let ll = crate::lattice::Site::new((edge.face.x - 1) / 2, (edge.face.y - 1) / 2);
        let inner = [ll, ll.offset(1, 0), ll.offset(0, 1), ll.offset(1, 1)]
            .iter()
            .all(|s| domain.contains(*s));
        if !inner {
            out.push((u, e));
        }
    }
    out
}

/// `| |F(e_u)| - P(u <-> wired arc) |` for free-arc sites `u`, with the
/// connection probability computed independently by cluster enumeration.
pub fn check_boundary_modulus(
    domain: &Domain,
    medial: &MedialGraph,
    params: &ModelParams,
    obs: &Observable,
    cap: usize,
) -> Result<ResidualReport> {
    let probs = wired_connection_probs(domain, params, cap)?;
    check_boundary_modulus_with(domain, medial, obs, &probs)
}

/// [`check_boundary_modulus`] against precomputed per-site connection
/// probabilities.
pub fn check_boundary_modulus_with(
    domain: &Domain,
    medial: &MedialGraph,
    obs: &Observable,
    probs: &[f64],
) -> Result<ResidualReport> {
    let mut t = Tally::new("check_boundary_modulus");
    for (u, e) in free_arc_edges(domain, medial) {
        let f = obs
            .get(e)
            .ok_or_else(|| Error::MissingValue(format!("edge of site {}", domain.site(u))))?;
        t.add((f.norm() - probs[u]).abs(), || {
            format!("site {} side {:?}", domain.site(u), medial.edge(e).side)
        });
    }
    t.finish()
}

/// Largest number of random bonds for which configuration-by-configuration
/// cross-checks are run.
pub const BRUTE_FORCE_CAP: usize = 12;

/// `|w_loop(omega) / w_rc(omega) / c - 1|` over every configuration, where
/// `w_loop = x^o sqrt(2)^loops`, `w_rc = p^o (1-p)^c 2^k` with Dobrushin
/// wiring and `c` is the ratio at the empty configuration.
pub fn check_measure_proportionality(domain: &Domain, params: &ModelParams, cap: usize) -> Result<ResidualReport> {
    let width = domain.active_bonds().len();
    if width > cap.min(BRUTE_FORCE_CAP) {
        return Err(Error::CapExceeded {
            bonds: width,
            cap: cap.min(BRUTE_FORCE_CAP),
        });
    }
    let tracer = Tracer::new(domain)?;
    let ratio =
        |c: BondConfig| tracer.loop_weight(c, params) / rc_weight(domain, c, params, BoundaryCondition::Dobrushin);
    let base = ratio(BondConfig::new(0, width));
    let mut t = Tally::new("check_measure_proportionality");
    for c in BondConfig::iter_all(width) {
        t.add((ratio(c) / base - 1.0).abs(), || {
            format!("configuration mask {:#x}", c.mask)
        });
    }
    t.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::observable_exact;
    use crate::lattice::{p_self_dual, Site};

    fn square() -> Domain {
        Domain::rectangle(2, 2, Site::new(1, 0), Site::new(1, 2)).unwrap()
    }

    #[test]
    fn vertex_relation_exact_and_sensitive() {
        let d = square();
        let g = MedialGraph::build(&d).unwrap();
        for p in [0.4, p_self_dual(2.0)] {
            let m = ModelParams::from_p(p).unwrap();
            let obs = observable_exact(&d, &m, 24).unwrap();
            let r = check_vertex_relation(&obs, &g, &m).unwrap();
            assert!(r.max_abs_residual < 1e-10, "{r:?}");
            // bump an edge entering a regular vertex
            let v = g
                .vertices()
                .iter()
                .find(|v| matches!(v.kind, VertexKind::Regular { .. }))
                .unwrap();
            let bumped = obs.perturbed(v.ins[0], Complex64::new(0.1, 0.0));
            let r = check_vertex_relation(&bumped, &g, &m).unwrap();
            assert!(r.max_abs_residual >= 0.05);
        }
    }

    #[test]
    fn missing_value_names_vertex() {
        let d = square();
        let g = MedialGraph::build(&d).unwrap();
        let m = ModelParams::from_p(0.4).unwrap();
        let mut obs = observable_exact(&d, &m, 24).unwrap();
        let v = g
            .vertices()
            .iter()
            .find(|v| matches!(v.kind, VertexKind::Regular { .. }))
            .unwrap();
        obs.values[v.outs[0]] = None;
        match check_vertex_relation(&obs, &g, &m) {
            Err(Error::MissingValue(s)) => assert!(s.starts_with("vertex")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn argument_lines_and_end_edge() {
        let d = square();
        let g = MedialGraph::build(&d).unwrap();
        let m = ModelParams::from_p(0.3).unwrap();
        let obs = observable_exact(&d, &m, 24).unwrap();
        let r = check_argument_lines(&obs, &g).unwrap();
        assert!(r.max_abs_residual < 1e-12);
        let fb = obs.get(g.e_b().unwrap()).unwrap();
        assert!(fb.im.abs() < 1e-15 && fb.re > 0.0);
    }

    #[test]
    fn boundary_modulus_limits() {
        let d = square();
        let g = MedialGraph::build(&d).unwrap();
        let m = ModelParams::from_p(1.0 - 1e-12).unwrap();
        let obs = observable_exact(&d, &m, 24).unwrap();
        for (_, e) in free_arc_edges(&d, &g) {
            assert!((obs.get(e).unwrap().norm() - 1.0).abs() < 1e-9);
        }
        let m = ModelParams::from_p(1e-9).unwrap();
        let obs = observable_exact(&d, &m, 24).unwrap();
        for (u, e) in free_arc_edges(&d, &g) {
            let s = d.site(u);
            let near_wired = s
                .neighbors()
                .iter()
                .any(|n| d.index_of(*n).is_some_and(|i| d.is_wired(i)));
            if !near_wired {
                assert!(obs.get(e).unwrap().norm() < 1e-6);
            }
        }
    }

    #[test]
    fn report_serialises() {
        let r = ResidualReport {
            check_name: "x".into(),
            max_abs_residual: 1e-16,
            worst_location: "vertex (1, 0)/2".into(),
            count_checked: 3,
            mean_abs_residual: 1e-17,
            excluded: 0,
        };
        let s = serde_json::to_string(&r).unwrap();
        for key in ["check_name", "max_abs_residual", "worst_location", "count_checked"] {
            assert!(s.contains(key));
        }
    }

    #[test]
    fn measures_proportional() {
        let d = square();
        for p in [0.2, 0.7] {
            let m = ModelParams::from_p(p).unwrap();
            let r = check_measure_proportionality(&d, &m, 24).unwrap();
            assert!(r.max_abs_residual < 1e-12, "{r:?}");
            assert_eq!(r.count_checked, 1 << d.active_bonds().len());
        }
        let big = Domain::rectangle(3, 2, Site::new(1, 0), Site::new(2, 2)).unwrap();
        let m = ModelParams::from_p(0.3).unwrap();
        assert!(matches!(
            check_measure_proportionality(&big, &m, 4),
            Err(Error::CapExceeded { cap: 4, .. })
        ));
    }
}
