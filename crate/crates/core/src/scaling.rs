//! Adaptive-step path following for symmetric M-matrix scaling: finds
//! `x > 0` with `X A X 1 ~ 1`.

use log::{debug, info};
use serde::{Deserialize, Serialize};

use crate::central_path::{IpmState, KernelStats, PathKernel};
use crate::config::SolverConfig;
use crate::diagnostics::{
    check_phase_amortization, classify_step, energy_forward_violation, full_correction_zeta,
    monotonicity_violation, phase_reports, stability_violation, x_bound_violation, LemmaChecker,
    LemmaId, PhaseReport, RunSummary, StepTrace,
};
use crate::error::{Error, Result};
use crate::linalg::vector::norm2;
use crate::linalg::CertifiedMatrix;

/// How the predictor picks `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StepRule {
    /// `delta = 1 / (coeff ||rho_hat(x, mu)||_3)`, capped at 1/2.
    Adaptive { coeff: f64 },
    /// The same `delta` every iteration.
    Fixed(f64),
}

#[derive(Debug, Clone)]
pub struct ScalingResult {
    /// `x / sqrt(mu)`, the returned scaling.
    pub x_scaled: Vec<f64>,
    /// The centered iterate before rescaling.
    pub x: Vec<f64>,
    pub final_mu: f64,
    /// `||X A X 1 - 1||_2` at `x_scaled`, measured at exit.
    pub residual_l2: f64,
    /// Final target after any doublings.
    pub mu_target: f64,
    pub iterations: usize,
    pub trace: Vec<StepTrace>,
    pub phases: Vec<PhaseReport>,
    pub summary: RunSummary,
    pub stats: KernelStats,
}

/// `||X A X 1 - 1||_2`.
pub fn scaling_residual(a: &CertifiedMatrix, x: &[f64]) -> Result<f64> {
    let ax = a.matvec(x)?;
    Ok(ax
        .iter()
        .zip(x)
        .map(|(axi, xi)| (xi * axi - 1.0).powi(2))
        .sum::<f64>()
        .sqrt())
}

enum Stop {
    /// Stop at the first centered point with `mu >= mu_f`.
    AtMu(f64),
    /// Stop once the measured residual is at most `epsilon`, doubling the
    /// target from `mu_f` as needed.
    Residual { epsilon: f64, mu_f: f64 },
}

/// Scales `A` to residual at most `epsilon`.
pub fn ms_solve(a: &CertifiedMatrix, epsilon: f64, config: &SolverConfig) -> Result<ScalingResult> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidConfig(format!("epsilon must be positive, got {epsilon}")));
    }
    let b = shifted_ones(a)?;
    let bn = norm2(&b);
    let mu_f = (bn * bn / (epsilon * epsilon)).max(1.0);
    run(
        a,
        StepRule::Adaptive { coeff: config.step_coeff },
        Stop::Residual { epsilon, mu_f },
        config,
    )
}

/// Follows the path until `mu >= mu_f` and returns the centered point.
pub fn ms_solve_to_mu(a: &CertifiedMatrix, mu_f: f64, config: &SolverConfig) -> Result<ScalingResult> {
    run(a, StepRule::Adaptive { coeff: config.step_coeff }, Stop::AtMu(mu_f), config)
}

/// As [`ms_solve_to_mu`] with an explicit step rule.
pub fn ms_solve_to_mu_with(
    a: &CertifiedMatrix,
    mu_f: f64,
    rule: StepRule,
    config: &SolverConfig,
) -> Result<ScalingResult> {
    run(a, rule, Stop::AtMu(mu_f), config)
}

/// `A 1 - 1`, the linear term that makes `x = 1` central at `mu = 1`.
pub fn shifted_ones(a: &CertifiedMatrix) -> Result<Vec<f64>> {
    Ok(a.row_sums().into_iter().map(|s| s - 1.0).collect())
}

fn run(a: &CertifiedMatrix, rule: StepRule, stop: Stop, config: &SolverConfig) -> Result<ScalingResult> {
    let mut path = MsPath::new(a, rule, config)?;
    let (mut target, epsilon) = match stop {
        Stop::AtMu(mu_f) => (mu_f, None),
        Stop::Residual { epsilon, mu_f } => (mu_f, Some(epsilon)),
    };
    loop {
        path.advance_to(target)?;
        let residual = scaling_residual(a, &path.scaled())?;
        match epsilon {
            Some(eps) if residual > eps => {
                debug!("residual {residual:e} > {eps:e} at mu = {:e}; doubling target", path.state.mu);
                target *= 2.0;
            }
            _ => break,
        }
    }
    path.finish(target, epsilon)
}

/// Resumable adaptive path following on the scaling barrier, starting from
/// `x = 1`, `mu = 1`.
pub struct MsPath<'a> {
    a: &'a CertifiedMatrix,
    kernel: PathKernel<'a>,
    config: SolverConfig,
    rule: StepRule,
    checker: LemmaChecker,
    trace: Vec<StepTrace>,
    phase_index: usize,
    /// Potential of the current point under the current anchor.
    phi: f64,
    /// `rho_hat(x, mu0)` at the current point.
    rho_hat_mu0: Vec<f64>,
    b_norm: f64,
    state: IpmState,
    /// A recent `rho_hat` near the current point, used as a CG warm start.
    warm: Option<Vec<f64>>,
}

impl<'a> MsPath<'a> {
    pub fn new(a: &'a CertifiedMatrix, rule: StepRule, config: &SolverConfig) -> Result<Self> {
        config.validate()?;
        match rule {
            StepRule::Adaptive { coeff } if !(coeff >= 16.0) => {
                return Err(Error::InvalidConfig(format!("step coefficient must be >= 16, got {coeff}")))
            }
            StepRule::Fixed(d) if !(d > 0.0 && d < 1.0) => {
                return Err(Error::InvalidConfig(format!("fixed step must lie in (0, 1), got {d}")))
            }
            _ => {}
        }
        let n = a.n();
        let b = shifted_ones(a)?;
        let state = IpmState::new(vec![1.0; n], 1.0, b)?;
        let mut path = Self {
            a,
            kernel: PathKernel::new(a.matrix(), config.solve_params()),
            config: config.clone(),
            rule,
            checker: LemmaChecker::new(config.diagnostics_level, n),
            trace: Vec::new(),
            phase_index: 0,
            phi: f64::NAN,
            rho_hat_mu0: Vec::new(),
            b_norm: norm2(&state.b),
            state,
            warm: None,
        };
        if path.checker.enabled() {
            let x = path.state.x.clone();
            path.refresh_potential(&x, 1.0)?;
        }
        Ok(path)
    }

    /// The current centered point.
    pub fn state(&self) -> &IpmState {
        &self.state
    }

    pub fn kernel(&self) -> &PathKernel<'a> {
        &self.kernel
    }

    pub fn iterations(&self) -> usize {
        self.trace.len()
    }

    /// `x / sqrt(mu)` at the current point.
    pub fn scaled(&self) -> Vec<f64> {
        let root = self.state.mu.sqrt();
        self.state.x.iter().map(|v| v / root).collect()
    }

    /// Steps until `mu >= target`.
    pub fn advance_to(&mut self, target: f64) -> Result<()> {
        while self.state.mu < target {
            if self.trace.len() >= self.config.max_iterations {
                return Err(Error::IterationLimit {
                    limit: self.config.max_iterations,
                    mu: self.state.mu,
                });
            }
            let cur = self.state.clone();
            self.state = self.step(&cur)?;
        }
        Ok(())
    }

    /// Runs the end-of-run checks and packages the result. With `epsilon`
    /// set, the norm bound for an `epsilon`-scaling is checked as well.
    pub fn finish(mut self, target: f64, epsilon: Option<f64>) -> Result<ScalingResult> {
        let n = self.state.n();
        let x_scaled = self.scaled();
        let residual = scaling_residual(self.a, &x_scaled)?;
        if let Some(eps) = epsilon {
            let lmin = self.a.certificate().lambda_min_estimate;
            let bound = 2.0 * n as f64 / lmin;
            let x2: f64 = x_scaled.iter().map(|v| v * v).sum();
            if residual <= eps {
                self.checker.check(LemmaId::XBound, ((x2 - bound) / bound).max(0.0))?;
            }
        }
        if self.checker.enabled() {
            for (id, m) in check_phase_amortization(&self.trace, n, self.config.threshold_coeff) {
                self.checker.check(id, m)?;
            }
        }
        info!(
            "scaling finished: {} iterations, mu = {:e}, residual = {:e}",
            self.trace.len(),
            self.state.mu,
            residual
        );
        let phases = phase_reports(&self.trace, n, self.config.threshold_coeff);
        let stats = self.kernel.stats();
        Ok(ScalingResult {
            x_scaled,
            x: self.state.x,
            final_mu: self.state.mu,
            residual_l2: residual,
            mu_target: target,
            iterations: self.trace.len(),
            trace: self.trace,
            phases,
            summary: self.checker.into_summary(),
            stats,
        })
    }

    fn refresh_potential(&mut self, x: &[f64], mu0: f64) -> Result<()> {
        let (phi, rh0) = self.kernel.potential_from(x, mu0, self.warm.as_deref())?;
        self.checker.observe_rho_hat(&rh0.rho_hat)?;
        self.checker.observe_phi(phi)?;
        self.phi = phi;
        self.rho_hat_mu0 = rh0.rho_hat;
        Ok(())
    }

    fn step(&mut self, state: &IpmState) -> Result<IpmState> {
        let n = state.n();
        let mu = state.mu;
        let mu0 = state.phase_mu0;
        let rh = self
            .kernel
            .unnormalized_congestion_from(&state.x, mu, self.warm.as_deref())?;
        self.checker.observe_rho_hat(&rh.rho_hat)?;
        let delta = match self.rule {
            StepRule::Adaptive { coeff } => (1.0 / (coeff * rh.l3)).min(0.5),
            StepRule::Fixed(d) => d,
        };
        let mu_next = mu / (1.0 - delta);
        if !mu_next.is_finite() {
            return Err(Error::NonFiniteIterate);
        }
        let mut pred = state.clone();
        pred.mu = mu_next;
        for (xi, ri) in pred.x.iter_mut().zip(&rh.rho_hat) {
            *xi *= 1.0 + delta * ri;
        }
        let (mut next, report) =
            self.kernel.center(&pred, self.config.center_tol, self.config.max_correctors)?;
        self.checker.observe_centering(&report)?;

        let mut alpha = f64::NAN;
        let (mut target_l2, mut target_l3) = (f64::NAN, f64::NAN);
        let phi_prev = self.phi;
        let mut phi_next = f64::NAN;
        let mut warm = None;
        if self.checker.enabled() {
            let rt = self
                .kernel
                .unnormalized_congestion_from(&state.x, mu_next, Some(&rh.rho_hat))?;
            self.checker.observe_rho_hat(&rt.rho_hat)?;
            alpha = delta * rt.l3;
            target_l2 = rt.l2;
            target_l3 = rt.l3;
            self.checker.check(LemmaId::PredictorSafety, alpha - 1.0 / 16.0)?;
            let zeta = full_correction_zeta(&state.x, &next.x, delta, &rt.rho_hat, true);
            self.checker
                .check(LemmaId::FullCorrection, norm2(&zeta) - 8.0 * alpha * alpha)?;

            let (pw, nm) = stability_violation(mu0, mu, &self.rho_hat_mu0, &rh.rho_hat);
            self.checker.check(LemmaId::StabilityPointwise, pw)?;
            self.checker.check(LemmaId::StabilityNorm, nm)?;

            let (phi, rh0) = self.kernel.potential_from(&next.x, mu0, Some(&self.rho_hat_mu0))?;
            self.checker.observe_rho_hat(&rh0.rho_hat)?;
            self.checker.observe_phi(phi)?;
            self.checker
                .check(LemmaId::EnergyForward, energy_forward_violation(phi_prev, phi, alpha, &rt, n))?;
            self.checker
                .check(LemmaId::Monotonicity, monotonicity_violation(&state.x, &next.x))?;
            self.checker.check(
                LemmaId::XBound,
                x_bound_violation(
                    &next.x,
                    mu_next,
                    self.b_norm,
                    self.a.certificate().lambda_min_estimate,
                ),
            )?;
            phi_next = phi;
            self.phi = phi;
            self.rho_hat_mu0 = rh0.rho_hat;
            warm = Some(rt.rho_hat);
        }
        let (rho_l2, rho_l3, rho_l4, rho_linf) = (rh.l2, rh.l3, rh.l4, rh.linf);
        self.warm = Some(warm.unwrap_or(rh.rho_hat));

        let step_phase = self.phase_index;
        if mu_next >= 2.0 * mu0 {
            self.phase_index += 1;
            next.phase_mu0 = mu_next;
            if self.checker.enabled() {
                self.refresh_potential(&next.x, mu_next)?;
            }
        }

        self.trace.push(StepTrace {
            iter: self.trace.len() + 1,
            phase_index: step_phase,
            mu_prev: mu,
            mu: mu_next,
            delta,
            rho_l2,
            rho_l3,
            rho_l4,
            rho_linf,
            phi: phi_next,
            step_kind: classify_step(rho_l3, n, self.config.threshold_coeff),
            corrector_count: report.correctors,
            residual_after: report.residual,
            lemma_violations: self.checker.take_pending(),
            phi_prev,
            alpha,
            target_l2,
            target_l3,
        });
        Ok(next)
    }
}
