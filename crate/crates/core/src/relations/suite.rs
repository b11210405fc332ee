use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{
    check_argument_lines, check_boundary_modulus_with, check_measure_proportionality, check_vertex_relation,
    ResidualReport, BRUTE_FORCE_CAP,
};
use crate::error::Result;
use crate::exact::{wired_connection_probs_multi, Observable, PathHistogram, Tracer};
use crate::lattice::{p_self_dual, Domain, MedialGraph, ModelParams, Site, VertexKind, Q};
use crate::massive::{bulk_stencil_residual, wedge_stencil_residual, StencilField};

pub const VERTEX_GATE: f64 = 1e-10;
pub const ARGUMENT_GATE: f64 = 1e-12;
pub const MODULUS_GATE: f64 = 1e-12;
pub const MEASURE_GATE: f64 = 1e-12;
pub const STENCIL_GATE: f64 = 1e-10;

/// `{0.2, 0.3, 0.4, p_sd, 0.7}`.
pub fn p_grid() -> [f64; 5] {
    [0.2, 0.3, 0.4, p_self_dual(Q), 0.7]
}

/// A named domain of the verification catalog. `wedge` is the notch corner
/// when the domain is a wedge truncation.
#[derive(Clone, Debug)]
pub struct CatalogDomain {
    pub name: String,
    pub domain: Domain,
    pub wedge: Option<Site>,
}

impl CatalogDomain {
    fn new(name: &str, domain: Result<Domain>, wedge: Option<Site>) -> Result<Self> {
        Ok(Self {
            name: name.to_string(),
            domain: domain?,
            wedge,
        })
    }

    pub fn bonds(&self) -> usize {
        self.domain.active_bonds().len()
    }
}

/// Rectangles 1x1, 2x1, 2x2, 3x2, the strip of height 2 and halfwidth 2
/// and the wedge truncation around `w = (2, 2)` of radius 2.
pub fn catalog() -> Result<Vec<CatalogDomain>> {
    let s = Site::new;
    Ok(vec![
        CatalogDomain::new("rect_1x1", Domain::rectangle(1, 1, s(1, 0), s(0, 0)), None)?,
        CatalogDomain::new("rect_2x1", Domain::rectangle(2, 1, s(1, 0), s(0, 1)), None)?,
        CatalogDomain::new("rect_2x2", Domain::rectangle(2, 2, s(1, 0), s(1, 2)), None)?,
        CatalogDomain::new("rect_3x2", Domain::rectangle(3, 2, s(1, 0), s(2, 2)), None)?,
        CatalogDomain::new("strip_h2_hw2", Domain::strip(2, 2), None)?,
        CatalogDomain::new("wedge_w2_2_r2", Domain::wedge(s(2, 2), 2), Some(s(2, 2)))?,
    ])
}

/// Domains for the massive stencil check: the 4x4-site box and the wedge.
pub fn stencil_domains() -> Result<Vec<CatalogDomain>> {
    let s = Site::new;
    Ok(vec![
        CatalogDomain::new("rect_4x4_sites", Domain::rectangle(3, 3, s(2, 0), s(1, 3)), None)?,
        CatalogDomain::new("wedge_w2_2_r2", Domain::wedge(s(2, 2), 2), Some(s(2, 2)))?,
    ])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteEntry {
    pub domain: String,
    pub p: f64,
    pub report: ResidualReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Skipped {
    pub domain: String,
    pub bonds: usize,
    pub reason: String,
}

/// All entries of one check across the catalog.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub check: String,
    pub gate: f64,
    pub passed: bool,
    pub max_abs_residual: f64,
    pub worst: String,
    pub entries: Vec<SuiteEntry>,
    pub skipped: Vec<Skipped>,
}

impl CheckSummary {
    fn new(check: &str, gate: f64) -> Self {
        Self {
            check: check.to_string(),
            gate,
            passed: true,
            max_abs_residual: 0.0,
            worst: String::new(),
            entries: Vec::new(),
            skipped: Vec::new(),
        }
    }

    fn push(&mut self, domain: &str, p: f64, report: ResidualReport) {
        if !report.passes(self.gate) {
            self.passed = false;
        }
        if report.max_abs_residual >= self.max_abs_residual {
            self.max_abs_residual = report.max_abs_residual;
            self.worst = format!("{domain} p={p} {}", report.worst_location);
        }
        self.entries.push(SuiteEntry {
            domain: domain.to_string(),
            p,
            report,
        });
    }

    fn skip(&mut self, d: &CatalogDomain, cap: usize) {
        self.skipped.push(Skipped {
            domain: d.name.clone(),
            bonds: d.bonds(),
            reason: format!("{} random bonds exceed the cap of {cap}", d.bonds()),
        });
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SuiteOptions {
    /// Largest number of random bonds to enumerate.
    pub cap: usize,
    /// Test hook: perturb one observable value on every domain.
    pub inject_fault: bool,
}

fn fault(obs: &Observable, medial: &MedialGraph) -> Observable {
    let e = medial
        .vertices()
        .iter()
        .find(|v| matches!(v.kind, VertexKind::Regular { .. }))
        .map_or(0, |v| v.ins[0]);
    obs.perturbed(e, Complex64::new(0.1, 0.0))
}

fn observables(d: &Domain, grid: &[f64], opts: &SuiteOptions) -> Result<(Tracer, Vec<(ModelParams, Observable)>)> {
    let tracer = Tracer::new(d)?;
    let hist = PathHistogram::dobrushin(&tracer, opts.cap, d)?;
    let out = grid
        .iter()
        .map(|&p| {
            let m = ModelParams::from_p(p)?;
            let obs = hist.observable(&m);
            let obs = if opts.inject_fault {
                fault(&obs, tracer.medial())
            } else {
                obs
            };
            Ok((m, obs))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((tracer, out))
}

/// Runs the exact-identity checks on every catalog domain within the cap and
/// every `p` of the grid, followed by the massive stencil checks. Returns
/// one summary per check in the order vertex relation, argument lines,
/// boundary modulus, measure proportionality, stencils.
pub fn run_suite(opts: &SuiteOptions) -> Result<Vec<CheckSummary>> {
    let grid = p_grid();
    let mut vertex = CheckSummary::new("check_vertex_relation", VERTEX_GATE);
    let mut argument = CheckSummary::new("check_argument_lines", ARGUMENT_GATE);
    let mut modulus = CheckSummary::new("check_boundary_modulus", MODULUS_GATE);
    let mut measure = CheckSummary::new("check_measure_proportionality", MEASURE_GATE);
    let mut stencil = CheckSummary::new("check_massive_stencils", STENCIL_GATE);
    for cd in catalog()? {
        if cd.bonds() > opts.cap {
            for s in [&mut vertex, &mut argument, &mut modulus, &mut measure] {
                s.skip(&cd, opts.cap);
            }
            continue;
        }
        let d = &cd.domain;
        let (tracer, obs) = observables(d, &grid, opts)?;
        let medial = tracer.medial();
        let params: Vec<ModelParams> = obs.iter().map(|(m, _)| *m).collect();
        let probs = wired_connection_probs_multi(d, &params, opts.cap)?;
        for ((m, o), pr) in obs.iter().zip(&probs) {
            vertex.push(&cd.name, m.p, check_vertex_relation(o, medial, m)?);
            argument.push(&cd.name, m.p, check_argument_lines(o, medial)?);
            modulus.push(&cd.name, m.p, check_boundary_modulus_with(d, medial, o, pr)?);
            if cd.bonds() <= BRUTE_FORCE_CAP {
                measure.push(&cd.name, m.p, check_measure_proportionality(d, m, opts.cap)?);
            }
        }
        if cd.bonds() > BRUTE_FORCE_CAP {
            measure.skip(&cd, opts.cap.min(BRUTE_FORCE_CAP));
        }
    }
    for cd in stencil_domains()? {
        if cd.bonds() > opts.cap {
            stencil.skip(&cd, opts.cap);
            continue;
        }
        let d = &cd.domain;
        let (tracer, obs) = observables(d, &grid, opts)?;
        for (m, o) in &obs {
            let report = match cd.wedge {
                Some(w) => {
                    let f = StencilField::wedge(d, w).with_observable(d, tracer.medial(), o)?;
                    wedge_stencil_residual(&f, d, m)?
                }
                None => {
                    let f = StencilField::bulk(d, None).with_observable(d, tracer.medial(), o)?;
                    bulk_stencil_residual(&f, d, m)?
                }
            };
            stencil.push(&cd.name, m.p, report);
        }
    }
    Ok(vec![vertex, argument, modulus, measure, stencil])
}
