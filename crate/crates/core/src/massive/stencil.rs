use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_4;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::Observable;
use crate::lattice::{Dir, Domain, MedialGraph, ModelParams, Site};
use crate::relations::{argument_line, ResidualReport, Tally};

/// Stencil case attached to a site.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Interior,
    /// Free boundary with the excluded quadrant above.
    HorizontalFreeBoundary,
    /// Free boundary with the excluded quadrant to the right.
    VerticalFreeBoundary,
    /// The notch corner `w`.
    CornerW,
    Wired,
    Source,
}

/// Real field on a region of sites with a stencil role per site.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StencilField {
    pub roles: BTreeMap<Site, Role>,
    pub values: BTreeMap<Site, f64>,
}

impl StencilField {
    /// Roles of the wedge complement `T(w)`: the corner `w`, the horizontal
    /// and vertical free sides of the notch, wired sites, and interior
    /// elsewhere.
    pub fn wedge(domain: &Domain, w: Site) -> Self {
        let roles = domain
            .sites()
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                let role = if domain.is_wired(i) {
                    Role::Wired
                } else if s == w {
                    Role::CornerW
                } else if s.y == w.y && s.x > w.x {
                    Role::HorizontalFreeBoundary
                } else if s.x == w.x && s.y > w.y {
                    Role::VerticalFreeBoundary
                } else {
                    Role::Interior
                };
                (s, role)
            })
            .collect();
        Self {
            roles,
            values: BTreeMap::new(),
        }
    }

    /// Every site interior except `source` and, for Dobrushin domains, the
    /// wired arc.
    pub fn bulk(domain: &Domain, source: Option<Site>) -> Self {
        let roles = domain
            .sites()
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                let role = if Some(s) == source {
                    Role::Source
                } else if domain.is_wired(i) {
                    Role::Wired
                } else {
                    Role::Interior
                };
                (s, role)
            })
            .collect();
        Self {
            roles,
            values: BTreeMap::new(),
        }
    }

    /// Fills `values` with the projections of `F` on the common argument
    /// line of the north-west pointing edges.
    pub fn with_observable(mut self, domain: &Domain, medial: &MedialGraph, obs: &Observable) -> Result<Self> {
        let reference = obs
            .e0
            .or(medial.e_b())
            .map(|e| medial.edge(e).dir)
            .ok_or_else(|| Error::InvalidDomain("no reference edge".into()))?;
        let u = argument_line(Dir::NW, reference).conj();
        self.values = domain
            .sites()
            .iter()
            .enumerate()
            .filter_map(|(i, &s)| {
                let e = medial.nw_edge(i)?;
                if Some(e) == obs.e0 {
                    return None;
                }
                Some((s, (obs.get(e)? * u).re))
            })
            .collect();
        Ok(self)
    }

    pub fn value(&self, s: Site) -> Option<f64> {
        self.values.get(&s).copied()
    }
}

/// Coefficients `(a, b, c)` of `(g + Delta g)(X) = a [g(W) + g(S)] + b g(E) + c g(N)`
/// for each stencil case.
pub fn stencil_coefficients(role: Role, params: &ModelParams) -> Option<(f64, f64, f64)> {
    let a = params.alpha;
    let c2 = (2.0 * a).cos();
    let cp = (FRAC_PI_4 + a).cos();
    let cm = (FRAC_PI_4 - a).cos();
    match role {
        Role::Interior => Some((c2 / 4.0, c2 / 4.0, c2 / 4.0)),
        Role::HorizontalFreeBoundary => Some((c2 / (2.0 * (1.0 + cm)), cp / (1.0 + cm), 0.0)),
        Role::VerticalFreeBoundary => Some((c2 / (2.0 * (1.0 + cm)), 0.0, cp / (1.0 + cm))),
        Role::CornerW => Some((c2 / 4.0, cp / 2.0, cp / 2.0)),
        Role::Wired | Role::Source => None,
    }
}

/// Sites that must be present (`true`) or absent (`false`) around `X` for the
/// local geometry to match the stencil case, as offsets `(dx, dy)`.
fn required_geometry(role: Role) -> &'static [((i32, i32), bool)] {
    const W: (i32, i32) = (-1, 0);
    const S: (i32, i32) = (0, -1);
    const E: (i32, i32) = (1, 0);
    const N: (i32, i32) = (0, 1);
    const NE: (i32, i32) = (1, 1);
    match role {
        Role::Interior => &[(W, true), (S, true), (E, true), (N, true), (NE, true)],
        Role::HorizontalFreeBoundary => &[(W, true), (S, true), (E, true), (N, false), (NE, false)],
        Role::VerticalFreeBoundary => &[(W, true), (S, true), (N, true), (E, false), (NE, false)],
        Role::CornerW => &[(W, true), (S, true), (E, true), (N, true), (NE, false)],
        Role::Wired | Role::Source => &[],
    }
}

fn site_residual(field: &StencilField, domain: &Domain, s: Site, role: Role, params: &ModelParams) -> Option<f64> {
    let (a, b, c) = stencil_coefficients(role, params)?;
    for &((dx, dy), present) in required_geometry(role) {
        if domain.contains(s.offset(dx, dy)) != present {
            return None;
        }
    }
    let g = |dx, dy| -> Option<f64> { field.value(s.offset(dx, dy)) };
    let x = g(0, 0)?;
    let w = g(-1, 0)?;
    let south = g(0, -1)?;
    let east = if b != 0.0 { g(1, 0)? } else { 0.0 };
    let north = if c != 0.0 { g(0, 1)? } else { 0.0 };
    Some((a * (w + south) + b * east + c * north - x).abs())
}

fn touches_source(field: &StencilField, s: Site) -> bool {
    [(0, 0), (-1, 0), (1, 0), (0, -1), (0, 1)]
        .iter()
        .any(|&(dx, dy)| field.roles.get(&s.offset(dx, dy)) == Some(&Role::Source))
}

fn fmt_site(s: Site) -> String {
    format!("site ({}, {})", s.x, s.y)
}

/// Residual of `(cos 2a / 4) sum F(neighbours) - F(X)` over the interior
/// sites of `field`. Sites whose derivation neighbourhood leaves the domain
/// or reaches the source are excluded and counted.
pub fn bulk_stencil_residual(field: &StencilField, domain: &Domain, params: &ModelParams) -> Result<ResidualReport> {
    let mut t = Tally::new("bulk_stencil_residual");
    for (&s, &role) in &field.roles {
        if role != Role::Interior {
            continue;
        }
        if touches_source(field, s) {
            t.excluded += 1;
            continue;
        }
        match site_residual(field, domain, s, Role::Interior, params) {
            Some(r) => t.add(r, || fmt_site(s)),
            None => t.excluded += 1,
        }
    }
    t.finish()
}

/// Residual of the four-case massive Laplacian of the wedge at every site
/// of `domain` not on the wired arc, using the stencil matching its role.
/// Sites whose neighbourhood does not match their role's geometry are
/// excluded and counted.
pub fn wedge_stencil_residual(field: &StencilField, domain: &Domain, params: &ModelParams) -> Result<ResidualReport> {
    let mut t = Tally::new("wedge_stencil_residual");
    for &s in domain.sites() {
        let role = *field.roles.get(&s).ok_or(Error::MissingRole(s))?;
        if matches!(role, Role::Wired | Role::Source) {
            continue;
        }
        match site_residual(field, domain, s, role, params) {
            Some(r) => t.add(r, || format!("{} ({role:?})", fmt_site(s))),
            None => t.excluded += 1,
        }
    }
    t.finish()
}

/// Residual at `w` of the corner stencil with `cos(pi/4 - a) / 2` on the
/// east and north terms instead of `cos(pi/4 + a) / 2`.
pub fn corner_alternative_residual(field: &StencilField, w: Site, params: &ModelParams) -> Result<f64> {
    let a = params.alpha;
    let g = |dx, dy| {
        field
            .value(w.offset(dx, dy))
            .ok_or_else(|| Error::MissingValue(fmt_site(w.offset(dx, dy))))
    };
    let c2 = (2.0 * a).cos();
    let cm = (FRAC_PI_4 - a).cos();
    Ok((c2 / 4.0 * (g(-1, 0)? + g(0, -1)?) + cm / 2.0 * (g(1, 0)? + g(0, 1)?) - g(0, 0)?).abs())
}
