//! Independent reference solvers: support enumeration for small quadratic
//! programs, a dense Newton solve for scaling, and the fixed short-step
//! path follower used as a baseline.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::linalg::dense::{lu_solve, to_dense};
use crate::linalg::{CertifiedMatrix, SparseSymMatrix};
use crate::scaling::{ms_solve_to_mu_with, ScalingResult, StepRule};

/// Largest `n` accepted by [`qo_bruteforce`].
pub const MAX_BRUTEFORCE_N: usize = 15;

/// Slack allowed on the sign conditions when accepting a candidate support.
pub const KKT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KktSolution {
    pub support: Vec<usize>,
    pub x: Vec<f64>,
    pub objective: f64,
}

impl KktSolution {
    /// Largest violation of `x >= 0`, `A x - b >= 0` and complementarity.
    pub fn kkt_residual(&self, a: &SparseSymMatrix, b: &[f64]) -> Result<f64> {
        let ax = a.matvec(&self.x)?;
        let mut worst = 0.0f64;
        for i in 0..self.x.len() {
            let s = ax[i] - b[i];
            worst = worst.max(-self.x[i]).max(-s).max((s * self.x[i]).abs());
        }
        Ok(worst)
    }
}

/// Minimizes `1/2 x^T A x - b^T x` over `x >= 0` by trying every support.
pub fn qo_bruteforce(a: &SparseSymMatrix, b: &[f64]) -> Result<KktSolution> {
    let n = a.n();
    if n > MAX_BRUTEFORCE_N {
        return Err(Error::TooLarge {
            n,
            max: MAX_BRUTEFORCE_N,
        });
    }
    if b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: b.len() });
    }
    let dense = to_dense(a);
    let best = (0u32..1 << n)
        .into_par_iter()
        .filter_map(|mask| candidate(&dense, b, mask))
        .min_by(|p, q| p.objective.total_cmp(&q.objective));
    best.ok_or_else(|| Error::InvalidStructure("no support satisfies the KKT conditions".into()))
}

fn candidate(a: &DMatrix<f64>, b: &[f64], mask: u32) -> Option<KktSolution> {
    let n = b.len();
    let support: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
    let mut x = vec![0.0; n];
    if !support.is_empty() {
        let k = support.len();
        let sub = DMatrix::from_fn(k, k, |r, c| a[(support[r], support[c])]);
        let rhs: Vec<f64> = support.iter().map(|&i| b[i]).collect();
        let xs = lu_solve(&sub, &rhs)?;
        for (&i, v) in support.iter().zip(xs) {
            x[i] = v;
        }
    }
    let scale = 1.0 + b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if support.iter().any(|&i| x[i] < -KKT_TOL * scale) {
        return None;
    }
    let ax = a * DVector::from_column_slice(&x);
    let off_ok = (0..n)
        .filter(|i| mask >> i & 1 == 0)
        .all(|i| ax[i] - b[i] >= -KKT_TOL * scale);
    if !off_ok {
        return None;
    }
    let objective = (0..n).map(|i| 0.5 * x[i] * ax[i] - b[i] * x[i]).sum();
    Some(KktSolution {
        support,
        x,
        objective,
    })
}

/// Dense damped Newton on `1/2 x^T A x - sum log x`, whose minimizer
/// satisfies `X A X 1 = 1`. Returns the scaling vector.
pub fn scaling_newton(a: &SparseSymMatrix, tol: f64, max_iters: usize) -> Result<Vec<f64>> {
    let n = a.n();
    let dense = to_dense(a);
    let f = |x: &DVector<f64>| 0.5 * x.dot(&(&dense * x)) - x.iter().map(|v| v.ln()).sum::<f64>();
    let mut x = DVector::from_element(n, 1.0);
    for _ in 0..max_iters {
        let ax = &dense * &x;
        let grad = DVector::from_fn(n, |i, _| ax[i] - 1.0 / x[i]);
        let residual = (0..n)
            .map(|i| (x[i] * ax[i] - 1.0).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual <= tol {
            return Ok(x.iter().copied().collect());
        }
        let mut h = dense.clone();
        for i in 0..n {
            h[(i, i)] += 1.0 / (x[i] * x[i]);
        }
        let step = lu_solve(&h, grad.as_slice())
            .ok_or_else(|| Error::InvalidStructure("singular Newton system".into()))?;
        let step = DVector::from_vec(step);
        let decrement = grad.dot(&step);
        // The objective is self-concordant, so a full step is safe once the
        // Newton decrement is below 1/4. Function values there differ only
        // by rounding and cannot drive the line search.
        if decrement < 1.0 / 16.0 {
            x -= &step;
            continue;
        }
        let fx = f(&x);
        let mut t = 1.0;
        loop {
            let trial = &x - t * &step;
            if trial.iter().all(|v| *v > 0.0) && f(&trial) <= fx - 0.25 * t * decrement {
                x = trial;
                break;
            }
            t *= 0.5;
            if t < 1e-20 {
                // No further progress is possible in floating point.
                return Ok(x.iter().copied().collect());
            }
        }
    }
    Err(Error::InvalidConfig(format!("Newton scaling did not reach {tol:e} in {max_iters} iterations")))
}

/// Fixed step `delta = 1 / (2 sqrt n)` path following up to `mu_f`.
pub fn shortstep_ms(a: &CertifiedMatrix, mu_f: f64, config: &SolverConfig) -> Result<ScalingResult> {
    let delta = 0.5 / (a.n() as f64).sqrt();
    ms_solve_to_mu_with(a, mu_f, StepRule::Fixed(delta), config)
}
