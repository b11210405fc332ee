use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use log::{info, warn};
use serde_json::{json, Value};

use fkobs::lattice::{p_self_dual, Q};
use fkobs::massive::{green_function, rate_function, solve_rate, RateQuery};
use fkobs::montecarlo::{
    estimate_strip_crossing, estimate_two_point_profile, fit_decay_rate, write_estimates, ChainPlan, EstimateRow,
    LnRatio, McEstimate, RunManifest,
};
use fkobs::relations::{run_suite, strip_contraction, strip_observable_profile, SuiteOptions};
use fkobs::{ModelParams, Site};

use crate::failure::Failure;
use crate::output::{Cell, Format, Output, Table, BUILD_ID};
use crate::settings::Settings;

/// Everything a subcommand needs.
pub struct Ctx {
    pub settings: Settings,
    pub out: Output,
}

/// Model parameters from `p` or `beta`, if either is set.
fn model(s: &Settings) -> Result<Option<ModelParams>, Failure> {
    if let Some(p) = s.get::<f64>("p")? {
        return Ok(Some(ModelParams::from_p(p)?));
    }
    if let Some(b) = s.get::<f64>("beta")? {
        return Ok(Some(ModelParams::from_beta(b)?));
    }
    Ok(None)
}

fn require_model(s: &Settings) -> Result<ModelParams, Failure> {
    model(s)?.ok_or_else(|| Failure::invalid("one of --p or --beta is required"))
}

pub fn parse_site(text: &str) -> Result<Site, Failure> {
    let bad = || Failure::invalid(format!("expected a direction `a1,a2`, got `{text}`"));
    let (a, b) = text.split_once(',').ok_or_else(bad)?;
    Ok(Site::new(
        a.trim().parse().map_err(|_| bad())?,
        b.trim().parse().map_err(|_| bad())?,
    ))
}

/// `4,5,6` or the inclusive range `4..14`.
pub fn parse_list(text: &str) -> Result<Vec<u32>, Failure> {
    let bad = || Failure::invalid(format!("expected a list `4,5,6` or range `4..14`, got `{text}`"));
    if let Some((a, b)) = text.split_once("..") {
        let (a, b): (u32, u32) = (
            a.trim().parse().map_err(|_| bad())?,
            b.trim().parse().map_err(|_| bad())?,
        );
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    text.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect()
}

fn plan(s: &Settings) -> Result<ChainPlan, Failure> {
    let seed = s.require::<u64>("seed")?;
    let chains = s.require::<usize>("chains")?;
    let sweeps = s.require::<usize>("sweeps")?;
    let burn_in = s.get::<usize>("burn_in")?;
    Ok(ChainPlan::new(seed, chains, sweeps, burn_in)?)
}

fn positive_tol(s: &Settings) -> Result<f64, Failure> {
    let tol = s.require::<f64>("tol")?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(Failure::invalid(format!("tol = {tol} must be positive")));
    }
    Ok(tol)
}

pub fn verify(ctx: &mut Ctx) -> Result<(), Failure> {
    let cap = ctx.settings.require::<usize>("cap")?;
    let opts = SuiteOptions {
        cap,
        inject_fault: ctx.settings.flag("inject_fault"),
    };
    let summaries = run_suite(&opts)?;
    let mut first_failure = None;
    for c in &summaries {
        ctx.out.json(&format!("{}.json", c.check), c)?;
        println!(
            "{} {:<32} max {:.3e} (gate {:.0e}) over {} cases, {} skipped",
            if c.passed { "PASS" } else { "FAIL" },
            c.check,
            c.max_abs_residual,
            c.gate,
            c.entries.len(),
            c.skipped.len()
        );
        for sk in &c.skipped {
            println!("     skipped {}: {}", sk.domain, sk.reason);
        }
        if !c.passed && first_failure.is_none() {
            first_failure = Some(format!("{} (max {:.3e} at {})", c.check, c.max_abs_residual, c.worst));
        }
    }
    match first_failure {
        Some(f) => Err(Failure::Verification(f)),
        None => Ok(()),
    }
}

pub fn rate(ctx: &mut Ctx) -> Result<(), Failure> {
    let s = &ctx.settings;
    let direction = parse_site(s.str("direction").unwrap_or("1,0"))?;
    let query = match (s.get::<f64>("beta")?, s.get::<f64>("p")?) {
        (Some(b), _) => RateQuery::from_beta(b, direction)?,
        (None, Some(p)) => RateQuery::from_p(p, direction)?,
        (None, None) => return Err(Failure::invalid("one of --p or --beta is required")),
    };
    let sol = solve_rate(&query)?;
    let axis = direction.x == 0 || direction.y == 0;
    let cross = if axis {
        let params = ModelParams::from_beta(query.beta)?;
        let steps = (direction.x.abs() + direction.y.abs()) as f64;
        Some(-strip_contraction(&params)?.ln() * steps)
    } else {
        None
    };
    let mut t = Table::new(&["beta", "a1", "a2", "s", "rate", "neg_ln_lambda"]);
    t.push(vec![
        sol.beta.into(),
        (sol.a1 as i64).into(),
        (sol.a2 as i64).into(),
        sol.s.into(),
        sol.rate.into(),
        cross.into(),
    ]);
    let path = ctx.out.table("rate", &t)?;
    println!(
        "rate({}, {}) at beta = {} : {:.12e}",
        sol.a1, sol.a2, sol.beta, sol.rate
    );
    if let Some(c) = cross {
        println!(
            "-|a| ln lambda                 : {c:.12e} (difference {:.2e})",
            (c - sol.rate).abs()
        );
    }
    println!("wrote {}", path.display());
    Ok(())
}

pub fn green(ctx: &mut Ctx) -> Result<(), Failure> {
    let s = &ctx.settings;
    let params = model(s)?;
    let mass = match (s.get::<f64>("mass")?, params) {
        (Some(_), Some(_)) => return Err(Failure::invalid("give either --mass or --p/--beta, not both")),
        (Some(m), None) => m,
        (None, Some(p)) => p.mass,
        (None, None) => return Err(Failure::invalid("one of --mass, --p or --beta is required")),
    };
    let radius = s.require::<usize>("radius")?;
    let tol = positive_tol(s)?;
    let direction = parse_site(s.str("direction").unwrap_or("1,0"))?;
    let ns = parse_list(s.str("n").unwrap_or("50,100,150"))?;
    let target = match params {
        Some(p) if p.is_subcritical() => Some(rate_function(&RateQuery::from_beta(p.beta, direction)?)?),
        _ => None,
    };
    let g = green_function(mass, Site::new(0, 0), radius, tol)?;
    info!("green function: {} sweeps, residual {:.2e}", g.sweeps, g.residual);
    if !s.flag("no_field") {
        let mut w = ctx.out.raw("green_field.csv")?;
        g.write_csv(&mut w)?;
        w.flush()?;
    }
    let rot = Site::new(-direction.y, direction.x);
    let mut t = Table::new(&[
        "n",
        "g_direction",
        "g_rotated",
        "neg_ln_g_over_n",
        "target_rate",
        "difference",
    ]);
    for &n in &ns {
        let k = n as i32;
        let gd = g.get(Site::new(direction.x * k, direction.y * k));
        let gr = g.get(Site::new(rot.x * k, rot.y * k));
        let r = -gd.ln() / n as f64;
        t.push(vec![
            (n as i64).into(),
            gd.into(),
            gr.into(),
            r.into(),
            target.into(),
            target.map(|x| r - x).into(),
        ]);
        match target {
            Some(x) => println!("n = {n:4}: -ln G / n = {r:.6} (target {x:.6}, diff {:+.4})", r - x),
            None => println!("n = {n:4}: -ln G / n = {r:.6}"),
        }
    }
    let path = ctx.out.table("green_series", &t)?;
    println!(
        "mass {mass:.12}, radius {radius}, tail bound {:.2e}, {} sweeps; wrote {}",
        g.tail_bound,
        g.sweeps,
        path.display()
    );
    Ok(())
}

pub fn strip(ctx: &mut Ctx) -> Result<(), Failure> {
    let s = &ctx.settings;
    let params = require_model(s)?;
    let heights = parse_list(s.str("heights").unwrap_or("2..7"))?;
    let halfwidth = s.require::<u32>("halfwidth")?;
    let exact_hw = s.require::<u32>("exact_halfwidth")?;
    let cap = s.require::<usize>("cap")?;
    let plan = plan(s)?;
    let lambda = match strip_contraction(&params) {
        Ok(l) => Some(l),
        Err(e) => {
            warn!("no strip contraction at p = {}: {e}", params.p);
            None
        }
    };
    let mut crossing = Table::new(&[
        "height",
        "halfwidth",
        "mean",
        "std_error",
        "n_samples",
        "tau",
        "exact_relations",
    ]);
    let mut rows = Vec::new();
    let mut ests: Vec<(u32, McEstimate)> = Vec::new();
    for &h in &heights {
        let e = estimate_strip_crossing(h, halfwidth, params.p, &plan)?;
        let exact = if exact_hw > 0 && h > 0 {
            Some(
                *strip_observable_profile(h, exact_hw, &params, cap)?
                    .moduli
                    .last()
                    .expect("positive height"),
            )
        } else {
            None
        };
        println!("height {h}: P = {:.6} +- {:.6}", e.mean, e.std_error);
        crossing.push(vec![
            (h as i64).into(),
            (halfwidth as i64).into(),
            e.mean.into(),
            e.std_error.into(),
            (e.n_samples as i64).into(),
            e.autocorrelation_time_estimate.into(),
            exact.into(),
        ]);
        rows.push(EstimateRow {
            quantity: "strip_crossing".into(),
            p: params.p,
            sizes: format!("height={h};halfwidth={halfwidth}"),
            a1: 0,
            a2: h as i32,
            estimate: e,
        });
        ests.push((h, e));
    }
    let mut ratios = Table::new(&["height", "ln_ratio", "std_error", "ln_lambda", "z_score"]);
    for w in ests.windows(2) {
        if w[1].0 != w[0].0 + 1 {
            continue;
        }
        let r = LnRatio::from_estimates(w[0].0, &w[0].1, &w[1].1);
        let ll = lambda.map(f64::ln);
        let z = ll.map(|l| r.z_score(l));
        match (ll, z) {
            (Some(l), Some(z)) => println!(
                "ln P({})/P({}) = {:.4} +- {:.4}; ln lambda = {l:.4}; {z:.2} standard errors",
                w[1].0, w[0].0, r.value, r.std_error
            ),
            _ => println!("ln P({})/P({}) = {:.4} +- {:.4}", w[1].0, w[0].0, r.value, r.std_error),
        }
        ratios.push(vec![
            (r.height as i64).into(),
            r.value.into(),
            r.std_error.into(),
            ll.into(),
            z.into(),
        ]);
    }
    let manifest = RunManifest::new("strip_crossing", params.p, &plan, BUILD_ID).with("halfwidth", halfwidth as f64);
    ctx.out.json("strip_manifest.json", &manifest)?;
    ctx.out.table("strip_crossing", &crossing)?;
    ctx.out.table("strip_ratios", &ratios)?;
    let mut w = ctx.out.raw("strip_estimates.csv")?;
    write_estimates(&mut w, &rows)?;
    Ok(())
}

pub const DESK_PRESET: [(&str, &str); 7] = [
    ("p", "0.45"),
    ("box_size", "64"),
    ("sweeps", "100000"),
    ("ns", "4..14"),
    ("direction", "1,0"),
    ("prefactor", "0.5"),
    ("chains", "4"),
];

pub fn sample(ctx: &mut Ctx) -> Result<(), Failure> {
    if let Some(preset) = ctx.settings.str("preset").map(str::to_string) {
        match preset.as_str() {
            "desk" => ctx.settings.apply_preset(&DESK_PRESET),
            other => return Err(Failure::invalid(format!("unknown preset `{other}` (known: desk)"))),
        }
    }
    let s = &ctx.settings;
    let params = require_model(s)?;
    let size = s.require::<usize>("box_size")?;
    let direction = parse_site(s.str("direction").unwrap_or("1,0"))?;
    let ns = parse_list(s.str("ns").unwrap_or("4..14"))?;
    let prefactor = s.require::<f64>("prefactor")?;
    let fit = !s.flag("no_fit");
    let plan = plan(s)?;
    let prof = estimate_two_point_profile(size, params.p, direction, &ns, &plan)?;
    let rows: Vec<EstimateRow> = prof
        .iter()
        .map(|&(n, e)| EstimateRow {
            quantity: "two_point".into(),
            p: params.p,
            sizes: format!("box={size}"),
            a1: direction.x * n as i32,
            a2: direction.y * n as i32,
            estimate: e,
        })
        .collect();
    for r in &rows {
        println!(
            "phi(0 <-> ({}, {})) = {:.6e} +- {:.2e}",
            r.a1, r.a2, r.estimate.mean, r.estimate.std_error
        );
    }
    let manifest = RunManifest::new("two_point", params.p, &plan, BUILD_ID)
        .with("box", size as f64)
        .with("direction_x", direction.x as f64)
        .with("direction_y", direction.y as f64);
    ctx.out.json("sample_manifest.json", &manifest)?;
    match ctx.out.format() {
        Format::Csv => {
            let mut w = ctx.out.raw("sample_estimates.csv")?;
            write_estimates(&mut w, &rows)?;
        }
        Format::Json => {
            let list: Vec<Value> = rows
                .iter()
                .map(|r| json!({"quantity": r.quantity, "p": r.p, "sizes": r.sizes, "a1": r.a1, "a2": r.a2, "estimate": r.estimate}))
                .collect();
            ctx.out.json("sample_estimates.json", &list)?;
        }
    }
    if !fit {
        return Ok(());
    }
    if params.p >= p_self_dual(Q) {
        warn!(
            "p = {} is not below p_sd = {}; rate fitting skipped",
            params.p,
            p_self_dual(Q)
        );
        ctx.out.json(
            "sample_fit.json",
            &json!({"skipped": "p is not below the self-dual point"}),
        )?;
        return Ok(());
    }
    let target = rate_function(&RateQuery::from_beta(params.beta, direction)?)?;
    let pts: Vec<(f64, McEstimate)> = prof.iter().map(|&(n, e)| (n as f64, e)).collect();
    let mut fits = BTreeMap::new();
    for (label, kappa) in [("with_prefactor", Some(prefactor)), ("plain", None)] {
        let f = fit_decay_rate(&pts, kappa)?;
        println!(
            "fitted rate ({label}, kappa = {}) = {:.5} +- {:.5}; target {target:.6}, relative error {:.2}%",
            f.prefactor_exponent,
            f.rate,
            f.rate_std_error,
            100.0 * (f.rate - target).abs() / target
        );
        fits.insert(
            label,
            json!({"fit": f, "target_rate": target, "relative_error": (f.rate - target).abs() / target}),
        );
    }
    ctx.out.json("sample_fit.json", &fits)?;
    Ok(())
}

/// Collects the JSON documents of an output directory into one summary.
pub fn report(ctx: &mut Ctx) -> Result<(), Failure> {
    let dir = PathBuf::from(ctx.settings.require::<String>("out")?);
    let mut names: Vec<PathBuf> = fs::read_dir(&dir)
        .map_err(|e| Failure::invalid(format!("cannot read {}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().is_some_and(|x| x == "json")
                && !p.to_string_lossy().ends_with(".run.json")
                && p.file_name().is_some_and(|n| n != "report.json")
        })
        .collect();
    names.sort();
    let mut t = Table::new(&["file", "item", "value", "reference", "status"]);
    let mut failed = None;
    for path in &names {
        let text = fs::read_to_string(path)?;
        let doc: Value = serde_json::from_str(&text)?;
        let file = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let data = &doc["data"];
        if let (Some(check), Some(passed)) = (data["check"].as_str(), data["passed"].as_bool()) {
            let max = data["max_abs_residual"].as_f64();
            t.push(vec![
                Cell::Text(file.clone()),
                Cell::Text(check.to_string()),
                max.into(),
                data["gate"].as_f64().into(),
                Cell::Text(if passed { "pass" } else { "fail" }.into()),
            ]);
            println!(
                "{:<40} {} max {:.3e}",
                check,
                if passed { "pass" } else { "FAIL" },
                max.unwrap_or(f64::NAN)
            );
            if !passed && failed.is_none() {
                failed = Some(check.to_string());
            }
        } else if let Some(obj) = data.as_object().filter(|o| o.contains_key("with_prefactor")) {
            for (label, v) in obj {
                let rate = v["fit"]["rate"].as_f64();
                let target = v["target_rate"].as_f64();
                t.push(vec![
                    Cell::Text(file.clone()),
                    Cell::Text(format!("fitted_rate_{label}")),
                    rate.into(),
                    target.into(),
                    Cell::Text(format!(
                        "relative_error={:.4}",
                        v["relative_error"].as_f64().unwrap_or(f64::NAN)
                    )),
                ]);
                println!(
                    "fitted rate {label:<16} {:.5} (target {:.6})",
                    rate.unwrap_or(f64::NAN),
                    target.unwrap_or(f64::NAN)
                );
            }
        }
    }
    if t.rows.is_empty() {
        return Err(Failure::invalid(format!("no reports found in {}", dir.display())));
    }
    ctx.out.table("report", &t)?;
    match failed {
        Some(c) => Err(Failure::Verification(c)),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists_and_sites() {
        assert_eq!(parse_list("4..7").unwrap(), vec![4, 5, 6, 7]);
        assert_eq!(parse_list("50, 100,150").unwrap(), vec![50, 100, 150]);
        assert!(parse_list("7..4").is_err());
        assert_eq!(parse_site("1,-2").unwrap(), Site::new(1, -2));
        assert!(parse_site("1").is_err());
    }
}
