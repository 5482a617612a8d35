//! Barrier gradient, congestion vectors, corrector steps and centering.

use std::cell::Cell;

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::vector::{all_finite, norm2};
use crate::linalg::{norm_p, Norm, SparseSymMatrix};
use crate::solver::{solve_shifted_from, SolveParams};

/// A strictly positive iterate together with its centrality parameter, the
/// linear term of the objective and the current phase anchor.
#[derive(Debug, Clone, PartialEq)]
pub struct IpmState {
    pub x: Vec<f64>,
    pub mu: f64,
    pub b: Vec<f64>,
    pub phase_mu0: f64,
}

impl IpmState {
    pub fn new(x: Vec<f64>, mu: f64, b: Vec<f64>) -> Result<Self> {
        if x.len() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: b.len(),
            });
        }
        if !(mu > 0.0 && mu.is_finite()) || x.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::NonFiniteIterate);
        }
        Ok(Self {
            x,
            mu,
            b,
            phase_mu0: mu,
        })
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }
}

/// `rho_hat = (X A X / mu + I)^{-1} 1` with its norms.
#[derive(Debug, Clone, PartialEq)]
pub struct CongestionVector {
    pub rho_hat: Vec<f64>,
    pub l2: f64,
    pub l3: f64,
    pub l4: f64,
    pub linf: f64,
    pub target_mu: f64,
}

impl CongestionVector {
    pub fn new(rho_hat: Vec<f64>, target_mu: f64) -> Self {
        Self {
            l2: norm_p(&rho_hat, Norm::L2),
            l3: norm_p(&rho_hat, Norm::L3),
            l4: norm_p(&rho_hat, Norm::L4),
            linf: norm_p(&rho_hat, Norm::Inf),
            rho_hat,
            target_mu,
        }
    }

    pub fn min(&self) -> f64 {
        self.rho_hat.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.rho_hat.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sum(&self) -> f64 {
        self.rho_hat.iter().sum()
    }
}

/// `(A x - b) / mu - 1 / x`.
pub fn barrier_gradient(state: &IpmState, a: &SparseSymMatrix) -> Result<Vec<f64>> {
    let ax = a.matvec(&state.x)?;
    Ok(ax
        .iter()
        .zip(&state.b)
        .zip(&state.x)
        .map(|((axi, bi), xi)| (axi - bi) / state.mu - 1.0 / xi)
        .collect())
}

/// One corrector step's contraction data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractionSample {
    pub before_l4_sq: f64,
    pub after_l2: f64,
}

impl ContractionSample {
    pub fn excess(&self) -> f64 {
        (self.after_l2 - self.before_l4_sq).max(0.0)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CenterReport {
    pub correctors: usize,
    /// `||rho||_2` at the last evaluated point.
    pub residual: f64,
    pub contraction: Vec<ContractionSample>,
    /// Corrector steps with at least one negative coordinate of `rho`.
    pub mixed_sign_steps: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelStats {
    pub solves: usize,
    pub cg_iterations: usize,
    pub retries: usize,
}

/// Shared linear algebra for both path-following methods. Counts solves.
#[derive(Debug)]
pub struct PathKernel<'a> {
    a: &'a SparseSymMatrix,
    params: SolveParams,
    stats: Cell<KernelStats>,
}

impl<'a> PathKernel<'a> {
    pub fn new(a: &'a SparseSymMatrix, params: SolveParams) -> Self {
        Self {
            a,
            params,
            stats: Cell::new(KernelStats::default()),
        }
    }

    pub fn matrix(&self) -> &'a SparseSymMatrix {
        self.a
    }

    pub fn stats(&self) -> KernelStats {
        self.stats.get()
    }

    /// `(c X A X + I)^{-1} r`, retrying once with a ten times larger
    /// iteration budget before giving up.
    pub fn solve(&self, x: &[f64], c: f64, r: &[f64]) -> Result<Vec<f64>> {
        self.solve_from(x, c, r, None)
    }

    /// As [`PathKernel::solve`] with an optional warm start.
    pub fn solve_from(&self, x: &[f64], c: f64, r: &[f64], guess: Option<&[f64]>) -> Result<Vec<f64>> {
        let mut st = self.stats.get();
        st.solves += 1;
        let out = match solve_shifted_from(self.a, x, c, r, guess, &self.params) {
            Err(Error::NotConverged(rep)) => {
                warn!(
                    "cg stopped after {} iterations at relative residual {:e}; retrying",
                    rep.iterations, rep.final_relative_residual
                );
                st.retries += 1;
                st.cg_iterations += rep.iterations;
                let retry = SolveParams {
                    max_iters: Some(10 * self.params.max_iters_for(self.a.n())),
                    ..self.params
                };
                solve_shifted_from(self.a, x, c, r, None, &retry)
            }
            other => other,
        };
        if let Ok((_, rep)) = &out {
            st.cg_iterations += rep.iterations;
        }
        self.stats.set(st);
        out.map(|(y, _)| y)
    }

    pub fn unnormalized_congestion(&self, x: &[f64], target_mu: f64) -> Result<CongestionVector> {
        self.unnormalized_congestion_from(x, target_mu, None)
    }

    /// `rho_hat(x, target_mu)`, warm-started from a nearby solution.
    pub fn unnormalized_congestion_from(
        &self,
        x: &[f64],
        target_mu: f64,
        guess: Option<&[f64]>,
    ) -> Result<CongestionVector> {
        let ones = vec![1.0; x.len()];
        let y = self.solve_from(x, 1.0 / target_mu, &ones, guess)?;
        Ok(CongestionVector::new(y, target_mu))
    }

    /// The multiplicative Newton step for `G_{target_mu}` at `state.x`.
    pub fn normalized_congestion(&self, state: &IpmState, target_mu: f64) -> Result<Vec<f64>> {
        let ax = self.a.matvec(&state.x)?;
        let r: Vec<f64> = ax
            .iter()
            .zip(&state.b)
            .zip(&state.x)
            .map(|((axi, bi), xi)| 1.0 - xi * (axi - bi) / target_mu)
            .collect();
        self.solve(&state.x, 1.0 / target_mu, &r)
    }

    pub fn centrality_residual(&self, state: &IpmState) -> Result<f64> {
        Ok(norm2(&self.normalized_congestion(state, state.mu)?))
    }

    /// `1^T (X A X / mu0 + I)^{-1} 1` together with the underlying vector.
    pub fn potential(&self, x: &[f64], mu0: f64) -> Result<(f64, CongestionVector)> {
        self.potential_from(x, mu0, None)
    }

    pub fn potential_from(&self, x: &[f64], mu0: f64, guess: Option<&[f64]>) -> Result<(f64, CongestionVector)> {
        let c = self.unnormalized_congestion_from(x, mu0, guess)?;
        Ok((c.sum(), c))
    }

    /// A single corrector step `x <- x (1 + rho)`.
    pub fn corrector_step(&self, state: &IpmState) -> Result<IpmState> {
        let rho = self.normalized_congestion(state, state.mu)?;
        let mut next = state.clone();
        apply_multiplicative(&mut next.x, &rho)?;
        Ok(next)
    }

    /// Applies corrector steps until `||rho||_2 <= tol`. The last computed
    /// `rho` is applied as well, so the returned point has gradient error of
    /// order `rho^2`; that final application is not counted.
    pub fn center(
        &self,
        state: &IpmState,
        tol: f64,
        max_correctors: usize,
    ) -> Result<(IpmState, CenterReport)> {
        let mut cur = state.clone();
        let mut report = CenterReport::default();
        let mut rho = self.normalized_congestion(&cur, cur.mu)?;
        let mut r2 = norm2(&rho);
        loop {
            if !r2.is_finite() {
                return Err(Error::NonFiniteIterate);
            }
            if r2 <= tol {
                report.residual = r2;
                apply_multiplicative(&mut cur.x, &rho)?;
                return Ok((cur, report));
            }
            if report.correctors >= max_correctors {
                return Err(Error::MaxCorrectorsExceeded {
                    max: max_correctors,
                    residual: r2,
                });
            }
            let r4 = norm_p(&rho, Norm::L4);
            if rho.iter().any(|&v| v < 0.0) && rho.iter().any(|&v| v > 0.0) {
                report.mixed_sign_steps += 1;
            }
            apply_multiplicative(&mut cur.x, &rho)?;
            report.correctors += 1;
            rho = self.normalized_congestion(&cur, cur.mu)?;
            r2 = norm2(&rho);
            report.contraction.push(ContractionSample {
                before_l4_sq: r4 * r4,
                after_l2: r2,
            });
            debug!("corrector {}: ||rho||_2 {:e}", report.correctors, r2);
        }
    }
}

/// `x <- x (1 + rho)` after checking `||rho||_4 <= 1/2`.
fn apply_multiplicative(x: &mut [f64], rho: &[f64]) -> Result<()> {
    let r4 = norm_p(rho, Norm::L4);
    if !(r4 <= 0.5) {
        return Err(Error::CorrectabilityViolated { norm4: r4 });
    }
    for (xi, ri) in x.iter_mut().zip(rho) {
        *xi *= 1.0 + ri;
    }
    if !all_finite(x) || x.iter().any(|&v| v <= 0.0) {
        return Err(Error::CorrectabilityViolated { norm4: r4 });
    }
    Ok(())
}
