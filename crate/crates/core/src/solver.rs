//! Preconditioned conjugate gradients for `H = c X A X + I`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::vector::{dot, norm2};
use crate::linalg::SparseSymMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preconditioner {
    None,
    Jacobi,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveParams {
    pub rel_tol: f64,
    /// `None` means `20 n + 200`.
    pub max_iters: Option<usize>,
    pub preconditioner: Preconditioner,
}

impl Default for SolveParams {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            max_iters: None,
            preconditioner: Preconditioner::Jacobi,
        }
    }
}

impl SolveParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol <= 1e-2) {
            return Err(Error::InvalidConfig(format!(
                "cg rel_tol must lie in (0, 1e-2], got {}",
                self.rel_tol
            )));
        }
        if self.max_iters == Some(0) {
            return Err(Error::InvalidConfig("cg max_iters must be at least 1".into()));
        }
        Ok(())
    }

    pub fn max_iters_for(&self, n: usize) -> usize {
        self.max_iters.unwrap_or(20 * n + 200)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// `||H y - r|| / ||r||`, recomputed from scratch at exit.
    pub final_relative_residual: f64,
    pub converged: bool,
}

const STAGNATION_WINDOW: usize = 50;
const STAGNATION_DECREASE: f64 = 1e-16;

/// `out = c X A X v + v`. `scratch` has length n.
fn apply_h(a: &SparseSymMatrix, x: &[f64], c: f64, v: &[f64], scratch: &mut [f64], out: &mut [f64]) {
    for ((s, xi), vi) in scratch.iter_mut().zip(x).zip(v) {
        *s = xi * vi;
    }
    a.matvec_into(scratch, out);
    for ((o, xi), vi) in out.iter_mut().zip(x).zip(v) {
        *o = c * xi * *o + vi;
    }
}

/// Solves `(c X A X + I) y = r` by conjugate gradients.
///
/// The recursive residual drives the iteration. When it meets the tolerance
/// the true residual is recomputed; if that misses the tolerance the
/// recursion is reseeded from the true residual and continues.
pub fn solve_shifted(
    a: &SparseSymMatrix,
    x: &[f64],
    c: f64,
    r: &[f64],
    params: &SolveParams,
) -> Result<(Vec<f64>, SolveReport)> {
    solve_shifted_from(a, x, c, r, None, params)
}

/// As [`solve_shifted`], starting from `guess` when one is given.
pub fn solve_shifted_from(
    a: &SparseSymMatrix,
    x: &[f64],
    c: f64,
    r: &[f64],
    guess: Option<&[f64]>,
    params: &SolveParams,
) -> Result<(Vec<f64>, SolveReport)> {
    let n = a.n();
    if let Some(g) = guess {
        if g.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: g.len() });
        }
    }
    for len in [x.len(), r.len()] {
        if len != n {
            return Err(Error::DimensionMismatch { expected: n, got: len });
        }
    }
    params.validate()?;
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidConfig(format!("shift scale c must be positive, got {c}")));
    }
    if x.iter().any(|&xi| !(xi > 0.0 && xi.is_finite())) {
        return Err(Error::NonFiniteIterate);
    }

    let rnorm = norm2(r);
    if rnorm == 0.0 {
        return Ok((
            vec![0.0; n],
            SolveReport {
                iterations: 0,
                final_relative_residual: 0.0,
                converged: true,
            },
        ));
    }
    let tol = params.rel_tol * rnorm;
    let max_iters = params.max_iters_for(n);

    let diag_a = a.diagonal();
    let d: Vec<f64> = match params.preconditioner {
        Preconditioner::Jacobi => x
            .iter()
            .zip(&diag_a)
            .map(|(xi, ai)| c * xi * xi * ai + 1.0)
            .collect(),
        Preconditioner::None => vec![1.0; n],
    };
    // Without a guess, start from r / diag(H) regardless of preconditioning.
    let mut y: Vec<f64> = match guess {
        Some(g) => g.to_vec(),
        None => r
            .iter()
            .zip(x.iter().zip(&diag_a))
            .map(|(ri, (xi, ai))| ri / (c * xi * xi * ai + 1.0))
            .collect(),
    };

    let mut scratch = vec![0.0; n];
    let mut hv = vec![0.0; n];
    let mut res = vec![0.0; n];
    let true_residual = |y: &[f64], scratch: &mut [f64], hv: &mut [f64], res: &mut [f64]| {
        apply_h(a, x, c, y, scratch, hv);
        for ((ri, bi), hi) in res.iter_mut().zip(r).zip(hv.iter()) {
            *ri = bi - hi;
        }
        norm2(res)
    };

    let mut res_norm = true_residual(&y, &mut scratch, &mut hv, &mut res);
    let mut z: Vec<f64> = res.iter().zip(&d).map(|(ri, di)| ri / di).collect();
    let mut p = z.clone();
    let mut rz = dot(&res, &z);
    let mut history: Vec<f64> = Vec::with_capacity(max_iters + 1);
    history.push(res_norm);

    let mut iterations = 0;
    loop {
        if res_norm <= tol {
            let true_norm = true_residual(&y, &mut scratch, &mut hv, &mut res);
            if true_norm <= tol {
                return Ok((
                    y,
                    SolveReport {
                        iterations,
                        final_relative_residual: true_norm / rnorm,
                        converged: true,
                    },
                ));
            }
            res_norm = true_norm;
            for ((zi, ri), di) in z.iter_mut().zip(&res).zip(&d) {
                *zi = ri / di;
            }
            p.copy_from_slice(&z);
            rz = dot(&res, &z);
        }
        let stagnated = history.len() > STAGNATION_WINDOW && {
            let old = history[history.len() - 1 - STAGNATION_WINDOW];
            (old - res_norm) / old < STAGNATION_DECREASE
        };
        if iterations >= max_iters || stagnated || !res_norm.is_finite() {
            let true_norm = true_residual(&y, &mut scratch, &mut hv, &mut res);
            let report = SolveReport {
                iterations,
                final_relative_residual: true_norm / rnorm,
                converged: false,
            };
            return Err(Error::NotConverged(report));
        }

        apply_h(a, x, c, &p, &mut scratch, &mut hv);
        let php = dot(&p, &hv);
        let alpha = rz / php;
        for ((yi, ri), (pi, hi)) in y.iter_mut().zip(res.iter_mut()).zip(p.iter().zip(&hv)) {
            *yi += alpha * pi;
            *ri -= alpha * hi;
        }
        for ((zi, ri), di) in z.iter_mut().zip(&res).zip(&d) {
            *zi = ri / di;
        }
        let rz_new = dot(&res, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
        res_norm = norm2(&res);
        history.push(res_norm);
        iterations += 1;
    }
}
