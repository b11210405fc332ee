use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::enumerate::{bulk_root, eighth_root, Observable};
use super::trace::Tracer;
use crate::error::{Error, Result};
use crate::lattice::{Dir, Domain, MedialGraph, ModelParams, VertexKind};

/// Largest system solved by SVD; beyond it the normal equations are used
/// and the smallest singular value is not reported.
const DENSE_SVD_LIMIT: usize = 600;

fn undetermined(missing: usize, n: usize) -> Error {
    Error::Solve(format!("relations leave {missing} of {n} coefficients undetermined"))
}

/// Diagnostics of a relation solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub n_unknowns: usize,
    pub n_equations: usize,
    pub rank: usize,
    pub min_singular_value: f64,
    pub max_residual: f64,
}

/// Real linear system in the coefficients `r_e` of `F(e) = r_e u_e`, where
/// `u_e` spans the argument line of edge `e`.
struct System {
    rows: Vec<Vec<(usize, f64)>>,
    rhs: Vec<f64>,
    line: Vec<Complex64>,
}

impl System {
    fn new(medial: &MedialGraph, reference: Dir) -> Self {
        let line = medial
            .edges()
            .iter()
            .map(|e| eighth_root(reference.quarter_turns() - e.dir.quarter_turns()))
            .collect();
        Self {
            rows: Vec::new(),
            rhs: Vec::new(),
            line,
        }
    }

    /// Adds `sum_k c_k F(e_k) = known` as two real rows.
    fn complex_row(&mut self, terms: &[(usize, Complex64)], known: Complex64) {
        let re = terms.iter().map(|&(e, c)| (e, (c * self.line[e]).re)).collect();
        let im = terms.iter().map(|&(e, c)| (e, (c * self.line[e]).im)).collect();
        self.rows.push(re);
        self.rhs.push(known.re);
        self.rows.push(im);
        self.rhs.push(known.im);
    }

    fn solve(self, n: usize) -> Result<(Vec<Complex64>, SolveReport)> {
        let m = self.rows.len();
        let mut a = DMatrix::<f64>::zeros(m, n);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                a[(i, j)] += v;
            }
        }
        let b = DVector::from_vec(self.rhs);
        let (r, rank, smin) = if n <= DENSE_SVD_LIMIT {
            let svd = a.clone().svd(true, true);
            let tol = svd.singular_values.max() * 1e-11 * (m.max(n) as f64);
            let rank = svd.rank(tol);
            if rank < n {
                return Err(undetermined(n - rank, n));
            }
            let r = svd.solve(&b, tol).map_err(|e| Error::Solve(e.to_string()))?;
            (r, rank, svd.singular_values.min())
        } else {
            // normal equations; the relation matrices are well conditioned
            let ata = a.transpose() * &a;
            let chol = ata.cholesky().ok_or_else(|| undetermined(1, n))?;
            let r = chol.solve(&(a.transpose() * &b));
            let smin = chol.l().diagonal().min();
            if smin <= 1e-9 {
                return Err(undetermined(1, n));
            }
            (r, n, f64::NAN)
        };
        let residual = (&a * &r - &b).amax();
        let values = r.iter().zip(&self.line).map(|(c, u)| u * *c).collect();
        Ok((
            values,
            SolveReport {
                n_unknowns: n,
                n_equations: m,
                rank,
                min_singular_value: smin,
                max_residual: residual,
            },
        ))
    }
}

fn add_vertex_rows(sys: &mut System, medial: &MedialGraph, params: &ModelParams, e0: Option<usize>) {
    let phase = params.phase();
    for v in medial.vertices() {
        match v.kind {
            VertexKind::Regular { .. } => {
                let mut terms = Vec::new();
                let mut known = Complex64::new(0.0, 0.0);
                for &e in &v.ins {
                    if Some(e) == e0 {
                        // e0 arrives at its head with value -1
                        known += 1.0;
                    } else {
                        terms.push((e, Complex64::new(1.0, 0.0)));
                    }
                }
                for &e in &v.outs {
                    if Some(e) == e0 {
                        // and leaves its tail with value +1
                        known += phase;
                    } else {
                        terms.push((e, -phase));
                    }
                }
                sys.complex_row(&terms, known);
            }
            VertexKind::Forced => {
                let (i, o) = (v.ins[0], v.outs[0]);
                let t = medial.turn(i, o).expect("validated turn");
                let rot = eighth_root(t);
                let mut terms = Vec::new();
                let mut known = Complex64::new(0.0, 0.0);
                if Some(i) == e0 {
                    known += 1.0;
                } else {
                    terms.push((i, Complex64::new(1.0, 0.0)));
                }
                if Some(o) == e0 {
                    known += rot;
                } else {
                    terms.push((o, -rot));
                }
                sys.complex_row(&terms, known);
            }
            VertexKind::Start | VertexKind::End => {}
        }
    }
}

/// Observable of a Dobrushin domain as the unique solution of the vertex
/// relations, the argument lines, propagation through degree-two vertices
/// and `F(e_b) = 1`.
pub fn solve_dobrushin(domain: &Domain, params: &ModelParams) -> Result<(Observable, SolveReport)> {
    let tracer = Tracer::new(domain)?;
    let medial = tracer.medial();
    let eb = medial
        .e_b()
        .ok_or_else(|| Error::InvalidDomain("domain has no marked points".into()))?;
    let mut sys = System::new(medial, medial.edge(eb).dir);
    add_vertex_rows(&mut sys, medial, params, None);
    sys.rows.push(vec![(eb, 1.0)]);
    sys.rhs.push(1.0);
    let (values, report) = sys.solve(medial.n_edges())?;
    Ok((Observable::new(values), report))
}

/// Bulk observable of a free-boundary box as the solution of the vertex
/// relations with the two-valued root edge.
pub fn solve_bulk(domain: &Domain, params: &ModelParams) -> Result<(Observable, SolveReport)> {
    let tracer = Tracer::new(domain)?;
    let medial = tracer.medial();
    let e0 = bulk_root(domain, &tracer)?;
    let mut sys = System::new(medial, medial.edge(e0).dir);
    add_vertex_rows(&mut sys, medial, params, Some(e0));
    // e0's own coefficient is pinned to its value as a closed loop
    sys.rows.push(vec![(e0, 1.0)]);
    sys.rhs.push(-1.0);
    let (values, report) = sys.solve(medial.n_edges())?;
    let mut obs = Observable::new(values);
    obs.e0 = Some(e0);
    Ok((obs, report))
}
