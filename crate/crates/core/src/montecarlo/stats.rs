use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Name of the generator recorded in manifests.
pub const RNG_NAME: &str = "ChaCha8 (rand_chacha), key from seed, stream = chain index";

/// Default number of discarded sweeps.
pub const DEFAULT_BURN_IN: usize = 100;

/// Monte Carlo mean with its batch-means standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
    /// Integrated autocorrelation time in sweeps, from the batch variance.
    pub autocorrelation_time_estimate: f64,
}

impl McEstimate {
    /// An estimate known without error.
    pub fn exact(mean: f64) -> Self {
        Self {
            mean,
            std_error: 0.0,
            n_samples: 1,
            autocorrelation_time_estimate: 0.0,
        }
    }
}

/// Independent stream for one chain.
pub fn chain_rng(seed: u64, chain: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain as u64);
    rng
}

/// Chain layout of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainPlan {
    pub seed: u64,
    pub chains: usize,
    pub burn_in: usize,
    /// Measured sweeps per chain.
    pub samples_per_chain: usize,
    /// Batches per chain for the error estimate.
    pub batches: usize,
}

impl ChainPlan {
    /// Splits `n_samples` measured sweeps over `chains` chains.
    pub fn new(seed: u64, chains: usize, n_samples: usize, burn_in: Option<usize>) -> Result<Self> {
        let chains = chains.max(1);
        let samples_per_chain = n_samples.div_ceil(chains);
        let batches = 20.min(samples_per_chain);
        if batches == 0 {
            return Err(Error::OutOfRange("need at least one sample".into()));
        }
        Ok(Self {
            seed,
            chains,
            burn_in: burn_in.unwrap_or(DEFAULT_BURN_IN),
            samples_per_chain,
            batches,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.chains * self.samples_per_chain
    }
}

/// Per-chain running sums of `k` observables split into batches.
#[derive(Clone, Debug)]
struct ChainSummary {
    batch_sums: Vec<Vec<f64>>,
    batch_len: Vec<usize>,
    sum: Vec<f64>,
    sumsq: Vec<f64>,
    n: usize,
}

/// Runs `plan.chains` chains in parallel. `init` builds a chain's state,
/// `step` performs one sweep and writes `k` measurements into the slice.
/// Results depend only on the plan, not on the thread count.
pub fn run_chains<S, I, F>(plan: &ChainPlan, k: usize, init: I, step: F) -> Vec<McEstimate>
where
    I: Fn(&mut ChaCha8Rng) -> S + Sync,
    F: Fn(&mut S, &mut ChaCha8Rng, &mut [f64]) + Sync,
{
    let summaries: Vec<ChainSummary> = (0..plan.chains)
        .into_par_iter()
        .map(|c| {
            let mut rng = chain_rng(plan.seed, c);
            let mut state = init(&mut rng);
            let mut buf = vec![0.0; k];
            for _ in 0..plan.burn_in {
                step(&mut state, &mut rng, &mut buf);
            }
            let n = plan.samples_per_chain;
            let mut s = ChainSummary {
                batch_sums: vec![vec![0.0; k]; plan.batches],
                batch_len: vec![0; plan.batches],
                sum: vec![0.0; k],
                sumsq: vec![0.0; k],
                n,
            };
            for t in 0..n {
                step(&mut state, &mut rng, &mut buf);
                let b = t * plan.batches / n;
                s.batch_len[b] += 1;
                for (j, &v) in buf.iter().enumerate() {
                    s.batch_sums[b][j] += v;
                    s.sum[j] += v;
                    s.sumsq[j] += v * v;
                }
            }
            s
        })
        .collect();
    (0..k).map(|j| combine(&summaries, j)).collect()
}

fn combine(summaries: &[ChainSummary], j: usize) -> McEstimate {
    let n: usize = summaries.iter().map(|s| s.n).sum();
    let mean = summaries.iter().map(|s| s.sum[j]).sum::<f64>() / n as f64;
    let var = (summaries.iter().map(|s| s.sumsq[j]).sum::<f64>() / n as f64 - mean * mean).max(0.0);
    let means: Vec<(f64, usize)> = summaries
        .iter()
        .flat_map(|s| {
            s.batch_sums
                .iter()
                .zip(&s.batch_len)
                .filter(|(_, &l)| l > 0)
                .map(move |(b, &l)| (b[j] / l as f64, l))
        })
        .collect();
    let nb = means.len();
    let (std_error, tau) = if nb < 2 {
        (f64::NAN, f64::NAN)
    } else {
        let bvar = means.iter().map(|(m, _)| (m - mean).powi(2)).sum::<f64>() / (nb - 1) as f64;
        let len = n as f64 / nb as f64;
        let tau = if var > 0.0 { len * bvar / (2.0 * var) } else { 0.5 };
        ((bvar / nb as f64).sqrt(), tau)
    };
    McEstimate {
        mean,
        std_error,
        n_samples: n,
        autocorrelation_time_estimate: tau,
    }
}

/// Result of a decay fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub rate: f64,
    pub rate_std_error: f64,
    /// `ln c` in `mean ~ c n^{-kappa} e^{-rate n}`.
    pub log_amplitude: f64,
    /// Exponent `kappa` of the power-law prefactor removed before fitting.
    pub prefactor_exponent: f64,
    pub points_used: usize,
    pub points_dropped: usize,
    /// Weighted sum of squared residuals.
    pub chi2: f64,
}

/// Weighted least squares of `-ln(mean) - kappa ln n` against `n`, weights
/// `(mean / std_error)^2`. Points with nonpositive mean are dropped with a
/// warning. When any error is zero all weights are taken equal and the
/// slope error comes from the residual scatter.
pub fn fit_decay_rate(points: &[(f64, McEstimate)], prefactor_exponent: Option<f64>) -> Result<DecayFit> {
    let kappa = prefactor_exponent.unwrap_or(0.0);
    let mut used = Vec::new();
    let mut dropped = 0;
    for &(n, e) in points {
        if e.mean > 0.0 && e.mean.is_finite() && n > 0.0 {
            used.push((n, e));
        } else {
            log::warn!("dropping point n = {n} with mean {}", e.mean);
            dropped += 1;
        }
    }
    if used.len() < 4 {
        return Err(Error::TooFewPoints {
            needed: 4,
            got: used.len(),
        });
    }
    let unweighted = used.iter().any(|(_, e)| e.std_error.is_nan() || e.std_error <= 0.0);
    let rows: Vec<(f64, f64, f64)> = used
        .iter()
        .map(|&(n, e)| {
            let y = -e.mean.ln() - kappa * n.ln();
            let w = if unweighted {
                1.0
            } else {
                (e.mean / e.std_error).powi(2)
            };
            (n, y, w)
        })
        .collect();
    let sw: f64 = rows.iter().map(|r| r.2).sum();
    let sx: f64 = rows.iter().map(|r| r.2 * r.0).sum();
    let sy: f64 = rows.iter().map(|r| r.2 * r.1).sum();
    let xbar = sx / sw;
    let ybar = sy / sw;
    let sxx: f64 = rows.iter().map(|r| r.2 * (r.0 - xbar).powi(2)).sum();
    let sxy: f64 = rows.iter().map(|r| r.2 * (r.0 - xbar) * (r.1 - ybar)).sum();
    let rate = sxy / sxx;
    let intercept = ybar - rate * xbar;
    let chi2: f64 = rows.iter().map(|r| r.2 * (r.1 - intercept - rate * r.0).powi(2)).sum();
    let rate_std_error = if unweighted {
        (chi2 / (rows.len() - 2) as f64 / sxx).sqrt()
    } else {
        (1.0 / sxx).sqrt()
    };
    Ok(DecayFit {
        rate,
        rate_std_error,
        log_amplitude: -intercept,
        prefactor_exponent: kappa,
        points_used: rows.len(),
        points_dropped: dropped,
        chi2,
    })
}
