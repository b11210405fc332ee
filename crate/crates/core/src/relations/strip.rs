use std::f64::consts::FRAC_PI_4;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{observable_exact, solve_dobrushin, Observable, Tracer};
use crate::lattice::{Domain, MedialGraph, ModelParams, Side, Site};

/// `lambda(alpha) = [1 + cos(pi/4 + a)] cos(pi/4 + a) / ([1 + cos(pi/4 - a)] cos(pi/4 - a))`,
/// the factor by which the strip observable shrinks per unit of height.
pub fn strip_contraction(params: &ModelParams) -> Result<f64> {
    let a = params.alpha;
    if !(0.0..FRAC_PI_4).contains(&a) {
        return Err(Error::OutOfRange(format!(
            "strip contraction needs 0 <= alpha < pi/4, got alpha = {a}"
        )));
    }
    let cp = (FRAC_PI_4 + a).cos();
    let cm = (FRAC_PI_4 - a).cos();
    Ok((1.0 + cp) * cp / ((1.0 + cm) * cm))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StripProfile {
    pub height: u32,
    pub halfwidth: u32,
    pub p: f64,
    /// `enumeration` or `relations`.
    pub method: String,
    /// `|F(e_k)|` for `k = 1..=height`.
    pub moduli: Vec<f64>,
    /// `|F(e_{k+1})| / |F(e_k)|`.
    pub ratios: Vec<f64>,
}

fn strip_observable(domain: &Domain, params: &ModelParams, cap: usize) -> Result<(Observable, &'static str)> {
    if domain.active_bonds().len() <= cap {
        Ok((observable_exact(domain, params, cap)?, "enumeration"))
    } else {
        Ok((solve_dobrushin(domain, params)?.0, "relations"))
    }
}

fn edge_at(domain: &Domain, medial: &MedialGraph, s: Site, side: Side) -> Result<usize> {
    domain
        .index_of(s)
        .and_then(|i| medial.edge_of(i, side))
        .ok_or_else(|| Error::MissingValue(format!("{side:?} side of {s}")))
}

fn value(obs: &Observable, e: usize) -> Result<Complex64> {
    obs.get(e).ok_or_else(|| Error::MissingValue(format!("edge {e}")))
}

/// `|F|` on the north-west sides of the mid-column diamonds of the strip
/// approximation `[-halfwidth, halfwidth] x [0, height]`. Enumerates when the
/// domain fits under `cap`, otherwise solves the local relations.
pub fn strip_observable_profile(height: u32, halfwidth: u32, params: &ModelParams, cap: usize) -> Result<StripProfile> {
    let d = Domain::strip(height, halfwidth)?;
    let (obs, method) = strip_observable(&d, params, cap)?;
    let g = MedialGraph::build(&d)?;
    let moduli = (1..=height as i32)
        .map(|k| Ok(value(&obs, edge_at(&d, &g, Site::new(0, k), Side::NE)?)?.norm()))
        .collect::<Result<Vec<f64>>>()?;
    let ratios = moduli.windows(2).map(|w| w[1] / w[0]).collect();
    Ok(StripProfile {
        height,
        halfwidth,
        p: params.p,
        method: method.to_string(),
        moduli,
        ratios,
    })
}

/// Aitken's delta-squared limit of three consecutive terms; falls back to
/// the last term when the differences do not shrink.
pub fn aitken(a0: f64, a1: f64, a2: f64) -> f64 {
    let d1 = a1 - a0;
    let d2 = a2 - a1;
    let den = d2 - d1;
    if den == 0.0 || d1 == 0.0 || (d2 / d1).abs() >= 1.0 {
        return a2;
    }
    a2 - d2 * d2 / den
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StripExtrapolation {
    pub height: u32,
    pub p: f64,
    pub lambda: f64,
    pub halfwidths: Vec<u32>,
    /// One profile of ratios per halfwidth.
    pub ratios: Vec<Vec<f64>>,
    /// Extrapolated ratio per height step.
    pub extrapolated: Vec<f64>,
    pub method: String,
}

/// Ratio profiles over increasing halfwidths and their extrapolation to the
/// infinite strip from the last three halfwidths.
pub fn strip_extrapolation(
    height: u32,
    halfwidths: &[u32],
    params: &ModelParams,
    cap: usize,
) -> Result<StripExtrapolation> {
    if halfwidths.len() < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            got: halfwidths.len(),
        });
    }
    if height < 2 {
        return Err(Error::OutOfRange("ratios need height >= 2".into()));
    }
    let lambda = strip_contraction(params)?;
    let ratios = halfwidths
        .iter()
        .map(|&m| Ok(strip_observable_profile(height, m, params, cap)?.ratios))
        .collect::<Result<Vec<_>>>()?;
    let n = ratios.len();
    let extrapolated = (0..ratios[0].len())
        .map(|k| aitken(ratios[n - 3][k], ratios[n - 2][k], ratios[n - 1][k]))
        .collect();
    Ok(StripExtrapolation {
        height,
        p: params.p,
        lambda,
        halfwidths: halfwidths.to_vec(),
        ratios,
        extrapolated,
        method: "aitken-delta-squared over the last three halfwidths".into(),
    })
}

/// Residuals of the projected vertex relations around `e_k` and the two
/// reconstructions of `F(e_{k+1})` that the strip argument derives from
/// them under translation and reflection symmetry.
///
/// Edges: `x` is the south-east side of the diamond at `(0, k+1)`, `x'` the
/// south-west side of `(1, k+1)` and `x''` the south-west side of `(0, k+1)`.
/// The relations at the two ends of `x` projected off the fourth edge read
/// `e^{-i pi/4} F(x) = cos(pi/4 - a) F(e_{k+1}) + cos(pi/4 + a) e^{-i pi/2} F(x')`
/// and `e^{-i pi/4} F(x) = cos(pi/4 + a) F(e_k) + cos(pi/4 - a) e^{-i pi/2} F(x'')`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reconstruction {
    pub k: u32,
    pub height: u32,
    pub halfwidths: Vec<u32>,
    /// Largest residual of the two projected relations over the halfwidths.
    pub projection_residual: f64,
    /// `|F(e_{k+1}) - e^{-i pi/4} (1 + cos(pi/4 + a)) / cos(pi/4 - a) F(x)|`
    /// on extrapolated values.
    pub via_x_error: f64,
    /// `|F(e_{k+1}) - lambda F(e_k)|` on extrapolated values.
    pub via_lambda_error: f64,
    /// Symmetry defects `|F(x') - F(x'')|` and `|F(x) + e^{-i pi/4} F(x')|`
    /// on extrapolated values.
    pub translation_defect: f64,
    pub reflection_defect: f64,
    /// Same quantities at the widest strip, before extrapolation.
    pub raw_via_lambda_error: f64,
}

pub fn projection_reconstruction(
    height: u32,
    k: u32,
    halfwidths: &[u32],
    params: &ModelParams,
    cap: usize,
) -> Result<Reconstruction> {
    if k + 1 > height {
        return Err(Error::OutOfRange(format!("need k < height, got k = {k}")));
    }
    if halfwidths.len() < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            got: halfwidths.len(),
        });
    }
    let a = params.alpha;
    let (cp, cm) = ((FRAC_PI_4 + a).cos(), (FRAC_PI_4 - a).cos());
    let w = Complex64::from_polar(1.0, -FRAC_PI_4);
    let mi = Complex64::new(0.0, -1.0);
    let lambda = strip_contraction(params)?;
    let k = k as i32;
    let mut samples: Vec<[Complex64; 5]> = Vec::new();
    let mut projection_residual: f64 = 0.0;
    for &m in halfwidths {
        let d = Domain::strip(height, m)?;
        let tracer = Tracer::new(&d)?;
        let g = tracer.medial();
        let (obs, _) = strip_observable(&d, params, cap)?;
        let get = |s: Site, side: Side| -> Result<Complex64> { value(&obs, edge_at(&d, g, s, side)?) };
        let ek = get(Site::new(0, k), Side::NE)?;
        let ek1 = get(Site::new(0, k + 1), Side::NE)?;
        let x = get(Site::new(0, k + 1), Side::SE)?;
        let x1 = get(Site::new(1, k + 1), Side::SW)?;
        let x2 = get(Site::new(0, k + 1), Side::SW)?;
        let r1 = (w * x - (ek1 * cm + mi * x1 * cp)).norm();
        let r2 = (w * x - (ek * cp + mi * x2 * cm)).norm();
        projection_residual = projection_residual.max(r1).max(r2);
        samples.push([ek, ek1, x, x1, x2]);
    }
    let n = samples.len();
    let ext = |i: usize| {
        let (a0, a1, a2) = (samples[n - 3][i], samples[n - 2][i], samples[n - 1][i]);
        Complex64::new(aitken(a0.re, a1.re, a2.re), aitken(a0.im, a1.im, a2.im))
    };
    let (ek, ek1, x, x1, x2) = (ext(0), ext(1), ext(2), ext(3), ext(4));
    let [rk, rk1, ..] = samples[n - 1];
    Ok(Reconstruction {
        k: k as u32,
        height,
        halfwidths: halfwidths.to_vec(),
        projection_residual,
        via_x_error: (ek1 - w * (1.0 + cp) / cm * x).norm(),
        via_lambda_error: (ek1 - ek * lambda).norm(),
        translation_defect: (x1 - x2).norm(),
        reflection_defect: (x + w * x1).norm(),
        raw_via_lambda_error: (rk1 - rk * lambda).norm(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::p_self_dual;

    #[test]
    fn contraction_values() {
        let m = ModelParams::from_p(p_self_dual(2.0)).unwrap();
        assert_eq!(strip_contraction(&m).unwrap(), 1.0);
        let m = ModelParams::from_p(0.3).unwrap();
        // closed-form evaluation at alpha(0.3), computed independently
        assert!((strip_contraction(&m).unwrap() - 0.252_100_840_336_134_56).abs() < 1e-12);
        let m = ModelParams::from_p(0.8).unwrap();
        assert!(strip_contraction(&m).is_err());
    }

    #[test]
    fn aitken_recovers_geometric_limit() {
        let s: Vec<f64> = (0..3).map(|n| 2.0 + 0.5f64.powi(n)).collect();
        assert!((aitken(s[0], s[1], s[2]) - 2.0).abs() < 1e-15);
        assert_eq!(aitken(1.0, 1.0, 1.0), 1.0);
    }

    #[test]
    fn height_one_profile() {
        let m = ModelParams::from_p(0.45).unwrap();
        let prof = strip_observable_profile(1, 2, &m, 24).unwrap();
        assert_eq!(prof.method, "enumeration");
        assert!(prof.moduli[0] <= 1.0 && prof.ratios.is_empty());
    }
}
