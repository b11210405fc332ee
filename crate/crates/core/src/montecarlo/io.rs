use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::stats::{ChainPlan, McEstimate, RNG_NAME};
use crate::error::{Error, Result};

/// Everything needed to rerun a Monte Carlo campaign.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub quantity: String,
    pub p: f64,
    pub beta: f64,
    /// Free-form numeric parameters such as box size or height.
    pub params: BTreeMap<String, f64>,
    pub seed: u64,
    pub chains: usize,
    pub burn_in: usize,
    pub samples_per_chain: usize,
    pub batches: usize,
    pub rng: String,
    pub build: String,
}

impl RunManifest {
    pub fn new(quantity: &str, p: f64, plan: &ChainPlan, build: &str) -> Self {
        Self {
            quantity: quantity.to_string(),
            p,
            beta: crate::lattice::beta_of_p(p),
            params: BTreeMap::new(),
            seed: plan.seed,
            chains: plan.chains,
            burn_in: plan.burn_in,
            samples_per_chain: plan.samples_per_chain,
            batches: plan.batches,
            rng: RNG_NAME.to_string(),
            build: build.to_string(),
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self).map_err(Error::io)
    }
}

/// One line of an estimates table.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimateRow {
    pub quantity: String,
    pub p: f64,
    /// Size parameters, e.g. `box=64` or `height=3;halfwidth=64`.
    pub sizes: String,
    pub a1: i32,
    pub a2: i32,
    pub estimate: McEstimate,
}

/// CSV with 17 significant digits.
pub fn write_estimates<W: Write>(out: W, rows: &[EstimateRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "quantity",
        "p",
        "sizes",
        "a1",
        "a2",
        "mean",
        "std_error",
        "n_samples",
        "autocorrelation_time",
    ])
    .map_err(Error::io)?;
    for r in rows {
        let e = &r.estimate;
        w.write_record([
            r.quantity.clone(),
            format!("{:.16e}", r.p),
            r.sizes.clone(),
            r.a1.to_string(),
            r.a2.to_string(),
            format!("{:.16e}", e.mean),
            format!("{:.16e}", e.std_error),
            e.n_samples.to_string(),
            format!("{:.16e}", e.autocorrelation_time_estimate),
        ])
        .map_err(Error::io)?;
    }
    w.flush().map_err(Error::io)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trip() {
        let plan = ChainPlan::new(5, 2, 100, None).unwrap();
        let m = RunManifest::new("two_point", 0.45, &plan, "abc").with("box", 64.0);
        let mut buf = Vec::new();
        m.write_json(&mut buf).unwrap();
        let back: RunManifest = serde_json::from_slice(&buf).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.burn_in, 100);
    }

    #[test]
    fn csv_rows() {
        let rows = [EstimateRow {
            quantity: "two_point".into(),
            p: 0.45,
            sizes: "box=64".into(),
            a1: 4,
            a2: 0,
            estimate: McEstimate::exact(0.5),
        }];
        let mut buf = Vec::new();
        write_estimates(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let fields: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(fields[..5], ["two_point", "4.5000000000000001e-1", "box=64", "4", "0"]);
        assert_eq!(fields[5].parse::<f64>().unwrap(), 0.5);
    }
}
