//! Standalone property sweeps on small random M-matrices, evaluated with
//! dense direct solves so they never share code with the CG path.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::checks::{general_energy_backward, general_energy_forward, stability_violation};
use super::{LemmaId, LemmaSummary};
use crate::error::{Error, Result};
use crate::instances::random_small_mmatrix;
use crate::linalg::dense::{inverse, lambda_min, shifted_solve, to_dense};
use crate::linalg::certify_mmatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    /// Trials per property.
    pub trials: usize,
    pub seed: u64,
    pub max_n: usize,
    /// Reverses the pointwise stability inequality. Negative control only.
    pub inject_fault: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            trials: 1000,
            seed: 0,
            max_n: 32,
            inject_fault: false,
        }
    }
}

/// Results of the property sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub lemmas: BTreeMap<LemmaId, LemmaSummary>,
    /// `(lhs, rhs)` of the forward general lemma for `A = [1]`, `r = 0.1`.
    pub hand_check: (f64, f64),
}

impl VerifyReport {
    pub fn hard_violations(&self) -> usize {
        self.lemmas.values().map(|s| s.hard).sum::<usize>()
            + usize::from(self.hand_check.0 < self.hand_check.1)
    }
}

fn trial_rng(seed: u64, property: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (property << 32));
    rng.set_stream(trial as u64);
    rng
}

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    10f64.powf(rng.gen_range(lo.log10()..=hi.log10()))
}

fn summarize(id: LemmaId, magnitudes: &[f64]) -> LemmaSummary {
    let tol = id.tolerance(1);
    LemmaSummary {
        checks: magnitudes.len(),
        max_magnitude: magnitudes.iter().copied().fold(0.0, f64::max),
        hard: magnitudes.iter().filter(|&&m| !(m <= tol)).count(),
    }
}

/// Runs every sweep. Trials are independent and run in parallel; each trial
/// draws from its own ChaCha8 stream, so results do not depend on the thread
/// count.
pub fn run_verify(opts: &VerifyOptions) -> Result<VerifyReport> {
    if opts.trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    if opts.max_n == 0 || opts.max_n > 64 {
        return Err(Error::InvalidConfig("max_n must lie in 1..=64".into()));
    }
    let max_n = opts.max_n;

    let stability: Vec<(f64, f64)> = (0..opts.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(opts.seed, 1, t);
            let n = rng.gen_range(1..=max_n);
            let a = to_dense(&random_small_mmatrix(n, &mut rng));
            let x: Vec<f64> = (0..n).map(|_| log_uniform(&mut rng, 0.1, 10.0)).collect();
            let mu0 = log_uniform(&mut rng, 1e-3, 1e3);
            let mu = mu0 * rng.gen_range(1.0..=10.0);
            let ones = vec![1.0; n];
            let r0 = shifted_solve(&a, &x, 1.0 / mu0, &ones);
            let r = shifted_solve(&a, &x, 1.0 / mu, &ones);
            match (r0, r) {
                (Some(r0), Some(r)) if opts.inject_fault => {
                    let flipped = r0
                        .iter()
                        .zip(&r)
                        .map(|(a, b)| a - mu0 / mu * b)
                        .fold(0.0, f64::max);
                    (flipped, stability_violation(mu0, mu, &r0, &r).1)
                }
                (Some(r0), Some(r)) => stability_violation(mu0, mu, &r0, &r),
                _ => (f64::INFINITY, f64::INFINITY),
            }
        })
        .collect();

    let forward: Vec<f64> = (0..opts.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(opts.seed, 2, t);
            let n = rng.gen_range(1..=max_n);
            let a = to_dense(&random_small_mmatrix(n, &mut rng));
            let r: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..=1.0)).collect();
            general_energy_forward(&a, &r).map_or(f64::INFINITY, |c| (c.rhs - c.lhs).max(0.0))
        })
        .collect();

    let backward: Vec<f64> = (0..opts.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(opts.seed, 3, t);
            let n = rng.gen_range(1..=max_n);
            let a = to_dense(&random_small_mmatrix(n, &mut rng));
            let r: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.5..=0.0)).collect();
            general_energy_backward(&a, &r).map_or(f64::INFINITY, |c| (c.lhs - c.rhs).max(0.0))
        })
        .collect();

    // Certificate and inverse-positivity checks on a smaller batch.
    let oracle_trials = opts.trials.min(200);
    let oracle: Vec<(f64, f64)> = (0..oracle_trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(opts.seed, 4, t);
            let n = rng.gen_range(1..=max_n.min(16));
            let sparse = random_small_mmatrix(n, &mut rng);
            let a = to_dense(&sparse);
            let inv_min = inverse(&a).map_or(f64::NEG_INFINITY, |m| m.min());
            let exact = lambda_min(&a);
            let lmin_err = match certify_mmatrix(&sparse, 1e-6) {
                Ok(c) => ((c.lambda_min_estimate - exact) / exact).abs(),
                Err(_) => f64::INFINITY,
            };
            ((-inv_min).max(0.0), lmin_err)
        })
        .collect();

    let hand = general_energy_forward(&nalgebra::DMatrix::from_element(1, 1, 1.0), &[0.1])
        .expect("1x1 solve");

    let mut lemmas = BTreeMap::new();
    let pw: Vec<f64> = stability.iter().map(|s| s.0).collect();
    let nm: Vec<f64> = stability.iter().map(|s| s.1).collect();
    lemmas.insert(LemmaId::StabilityPointwise, summarize(LemmaId::StabilityPointwise, &pw));
    lemmas.insert(LemmaId::StabilityNorm, summarize(LemmaId::StabilityNorm, &nm));
    lemmas.insert(LemmaId::GeneralEnergyForward, summarize(LemmaId::GeneralEnergyForward, &forward));
    lemmas.insert(LemmaId::GeneralEnergyBackward, summarize(LemmaId::GeneralEnergyBackward, &backward));
    let inv: Vec<f64> = oracle.iter().map(|o| o.0).collect();
    let lm: Vec<f64> = oracle.iter().map(|o| o.1).collect();
    lemmas.insert(LemmaId::InversePositivity, summarize(LemmaId::InversePositivity, &inv));
    lemmas.insert(LemmaId::LambdaMinOracle, summarize(LemmaId::LambdaMinOracle, &lm));
    Ok(VerifyReport {
        lemmas,
        hand_check: (hand.lhs, hand.rhs),
    })
}
