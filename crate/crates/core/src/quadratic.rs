//! Non-negative quadratic optimization `min 1/2 x^T A x - b^T x, x >= 0`
//! for symmetric M-matrices `A`.

use log::{debug, info};
use serde::{Deserialize, Serialize};

use crate::central_path::{CongestionVector, IpmState, KernelStats, PathKernel};
use crate::config::SolverConfig;
use crate::diagnostics::{
    classify_step, energy_backward_violation, full_correction_zeta,
    monotonicity_violation, phase_reports, stability_violation, x_bound_violation, LemmaChecker,
    LemmaId, PhaseReport, RunSummary, StepTrace,
};
use crate::error::{Error, Result};
use crate::linalg::vector::{dot, norm2};
use crate::linalg::{CertifiedMatrix, SparseSymMatrix};
use crate::scaling::{shifted_ones, MsPath, StepRule};

/// Upper bound on line-search evaluations per iteration.
pub const MAX_LINE_SEARCH_EVALS: usize = 200;

#[derive(Debug, Clone)]
pub struct QoResult {
    pub x: Vec<f64>,
    pub objective: f64,
    pub final_mu: f64,
    /// `mu n`, which bounds the gap to the optimum at a centered point.
    pub duality_gap_bound: f64,
    /// Measured `<A x - b, x>` at exit.
    pub duality_gap: f64,
    /// Steps of the decreasing phase only.
    pub iterations: usize,
    pub trace: Vec<StepTrace>,
    /// Steps spent reaching the starting point.
    pub init_iterations: usize,
    /// Times the starting target was doubled so the switch was correctable.
    pub switch_doublings: usize,
    pub init_trace: Vec<StepTrace>,
    pub phases: Vec<PhaseReport>,
    pub summary: RunSummary,
    pub stats: KernelStats,
}

/// `1/2 x^T A x - b^T x`.
pub fn objective(a: &SparseSymMatrix, b: &[f64], x: &[f64]) -> Result<f64> {
    let ax = a.matvec(x)?;
    Ok(0.5 * dot(x, &ax) - dot(b, x))
}

/// `<A x - b, x>`. Fails if the dual slack `A x - b` has a non-positive entry.
pub fn duality_gap(state: &IpmState, a: &SparseSymMatrix) -> Result<f64> {
    let ax = a.matvec(&state.x)?;
    let mut gap = 0.0;
    for (i, ((axi, bi), xi)) in ax.iter().zip(&state.b).zip(&state.x).enumerate() {
        let s = axi - bi;
        if !(s > 0.0) {
            return Err(Error::DualInfeasible { index: i, value: s });
        }
        gap += s * xi;
    }
    Ok(gap)
}

/// Which problem a regularization shift is sized for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegularizeMode {
    /// `gamma = eps / (2 n)`.
    Scaling,
    /// `gamma = (eps / 8) (lambda_min / ||b||)^2`.
    Qo,
}

/// Returns `A + gamma I` and `gamma`. A zero `gamma` returns `A` unchanged.
pub fn regularize(
    a: &CertifiedMatrix,
    b: &[f64],
    epsilon: f64,
    mode: RegularizeMode,
) -> (CertifiedMatrix, f64) {
    let n = a.n() as f64;
    let gamma = match mode {
        RegularizeMode::Scaling => epsilon / (2.0 * n),
        RegularizeMode::Qo => {
            let bn = norm2(b);
            if bn == 0.0 {
                0.0
            } else {
                let l = a.certificate().lambda_min_estimate;
                epsilon / 8.0 * (l / bn).powi(2)
            }
        }
    };
    if gamma > 0.0 && gamma.is_finite() {
        (a.shifted(gamma), gamma)
    } else {
        (a.clone(), 0.0)
    }
}

/// Picks `delta` so that `delta ||rho_hat(x, mu / (1 + delta))||_3` lies in
/// `window`. Starts from `1 / (32 ||rho_hat(x, mu)||_3)`, doubles until the
/// window's lower end is reached, then bisects. If `cap` is hit first the
/// capped step is returned. The result comes with `rho_hat` at the new
/// target and the number of evaluations.
pub fn line_search_delta(
    kernel: &PathKernel<'_>,
    x: &[f64],
    mu: f64,
    rho_hat_mu: &CongestionVector,
    cap: f64,
    window: (f64, f64),
) -> Result<(f64, CongestionVector, usize)> {
    let (lo_w, hi_w) = window;
    let eval = |d: f64| kernel.unnormalized_congestion_from(x, mu / (1.0 + d), Some(&rho_hat_mu.rho_hat));
    let mut evals = 0;
    let mut delta = (1.0 / (32.0 * rho_hat_mu.l3)).min(cap);
    let mut lo = 0.0;
    let hi;
    loop {
        let r = eval(delta)?;
        evals += 1;
        let g = delta * r.l3;
        if g >= lo_w && g <= hi_w {
            return Ok((delta, r, evals));
        }
        if g < lo_w {
            if delta >= cap {
                return Ok((delta, r, evals));
            }
            lo = delta;
            delta = (2.0 * delta).min(cap);
        } else {
            hi = delta;
            break;
        }
        if evals >= MAX_LINE_SEARCH_EVALS {
            return Err(Error::LineSearchFailed { evaluations: evals });
        }
    }
    let mut hi = hi;
    while evals < MAX_LINE_SEARCH_EVALS {
        delta = 0.5 * (lo + hi);
        let r = eval(delta)?;
        evals += 1;
        let g = delta * r.l3;
        if g < lo_w {
            lo = delta;
        } else if g > hi_w {
            hi = delta;
        } else {
            return Ok((delta, r, evals));
        }
    }
    Err(Error::LineSearchFailed { evaluations: evals })
}

/// Solves the problem to additive error `epsilon`.
pub fn qo_solve(a: &CertifiedMatrix, b: &[f64], epsilon: f64, config: &SolverConfig) -> Result<QoResult> {
    config.validate()?;
    let n = a.n();
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.len(),
        });
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidConfig(format!("epsilon must be positive, got {epsilon}")));
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidStructure("b has non-finite entries".into()));
    }
    let b0 = shifted_ones(a)?;
    let shift: Vec<f64> = b0.iter().zip(b).map(|(p, q)| p - q).collect();
    let d = norm2(&shift);

    let mut summary = RunSummary::new(n);
    let kernel = PathKernel::new(a.matrix(), config.solve_params());
    let mut checker = LemmaChecker::new(config.diagnostics_level, n);
    let (mut state, init_trace, switch_doublings) = if d == 0.0 {
        (IpmState::new(vec![1.0; n], 1.0, b.to_vec())?, Vec::new(), 0)
    } else {
        // Raise the target until swapping the linear term leaves a point
        // that a corrector can handle.
        let mut path = MsPath::new(a, StepRule::Adaptive { coeff: config.step_coeff }, config)?;
        let mut target = 2.0 * d;
        let mut doublings = 0;
        loop {
            path.advance_to(target)?;
            let mut st = path.state().clone();
            st.b = b.to_vec();
            let r2 = norm2(&kernel.normalized_congestion(&st, st.mu)?);
            if r2 <= 0.5 {
                checker.check(LemmaId::InitSwitch, r2 - 0.5)?;
                break;
            }
            debug!("switch residual {r2:e} at mu = {:e}; doubling", st.mu);
            target *= 2.0;
            doublings += 1;
        }
        let mut st = path.state().clone();
        st.b = b.to_vec();
        let ms = path.finish(target, None)?;
        summary.merge(&ms.summary);
        (st, ms.trace, doublings)
    };
    debug!(
        "starting point at mu = {:e} after {} steps and {switch_doublings} target doublings",
        state.mu,
        init_trace.len()
    );
    let (centered, report) = kernel.center(&state, config.center_tol, config.max_correctors)?;
    checker.observe_centering(&report)?;
    state = centered;
    state.phase_mu0 = state.mu / 2.0;

    let lmin = a.certificate().lambda_min_estimate;
    let b_norm = norm2(b);
    let mut f = objective(a, b, &state.x)?;
    let mut phi = f64::NAN;
    let mut rho_hat_mu0: Vec<f64> = Vec::new();
    if checker.enabled() {
        check_gap(&mut checker, &state, a)?;
        let (p, r0) = kernel.potential(&state.x, state.phase_mu0)?;
        checker.observe_rho_hat(&r0.rho_hat)?;
        checker.observe_phi(p)?;
        phi = p;
        rho_hat_mu0 = r0.rho_hat;
    }

    let mu_stop = epsilon / n as f64;
    let mut phase_index = 0;
    let mut trace: Vec<StepTrace> = Vec::new();
    let mut warm: Option<Vec<f64>> = None;
    while state.mu > mu_stop {
        if trace.len() >= config.max_iterations {
            return Err(Error::IterationLimit {
                limit: config.max_iterations,
                mu: state.mu,
            });
        }
        let mu = state.mu;
        let mu0 = state.phase_mu0;
        let rh = kernel.unnormalized_congestion_from(&state.x, mu, warm.as_deref())?;
        checker.observe_rho_hat(&rh.rho_hat)?;
        let cap = (mu / mu0 - 1.0).min(0.5);
        let (delta, rd, _evals) = line_search_delta(&kernel, &state.x, mu, &rh, cap, config.ls_window)?;
        checker.observe_rho_hat(&rd.rho_hat)?;
        let mu_next = mu / (1.0 + delta);
        let mut pred = state.clone();
        pred.mu = mu_next;
        for (xi, ri) in pred.x.iter_mut().zip(&rd.rho_hat) {
            *xi *= 1.0 - delta * ri;
        }
        let (mut next, report) = kernel.center(&pred, config.center_tol, config.max_correctors)?;
        checker.observe_centering(&report)?;
        let alpha = delta * rd.l3;
        let phi_prev = phi;
        let mut phi_next = f64::NAN;
        let f_next = objective(a, b, &next.x)?;

        if checker.enabled() {
            checker.check(LemmaId::PredictorSafety, alpha - config.ls_window.1)?;
            let zeta = full_correction_zeta(&state.x, &next.x, delta, &rd.rho_hat, false);
            checker.check(LemmaId::FullCorrectionBackward, norm2(&zeta) - 8.0 * alpha * alpha)?;
            let (pw, nm) = stability_violation(mu0, mu, &rho_hat_mu0, &rh.rho_hat);
            checker.check(LemmaId::StabilityPointwise, pw)?;
            checker.check(LemmaId::StabilityNorm, nm)?;
            let (p, r0) = kernel.potential_from(&next.x, mu0, Some(&rho_hat_mu0))?;
            checker.observe_rho_hat(&r0.rho_hat)?;
            checker.observe_phi(p)?;
            checker.check(LemmaId::EnergyBackward, energy_backward_violation(phi_prev, p, alpha, &rd, n))?;
            // x is non-increasing along the decreasing path.
            checker.check(LemmaId::Monotonicity, monotonicity_violation(&next.x, &state.x))?;
            checker.check(
                LemmaId::ObjectiveMonotonicity,
                (f_next - f) / (1.0 + f.abs()),
            )?;
            checker.check(LemmaId::XBound, x_bound_violation(&next.x, mu_next, b_norm, lmin))?;
            check_gap(&mut checker, &next, a)?;
            phi_next = p;
            phi = p;
            rho_hat_mu0 = r0.rho_hat;
        }

        let step_phase = phase_index;
        if mu_next <= mu0 * (1.0 + 1e-12) {
            phase_index += 1;
            next.phase_mu0 = mu_next / 2.0;
            if checker.enabled() {
                let (p, r0) = kernel.potential_from(&next.x, next.phase_mu0, Some(&rd.rho_hat))?;
                checker.observe_rho_hat(&r0.rho_hat)?;
                checker.observe_phi(p)?;
                phi = p;
                rho_hat_mu0 = r0.rho_hat;
            }
        }
        trace.push(StepTrace {
            iter: trace.len() + 1,
            phase_index: step_phase,
            mu_prev: mu,
            mu: mu_next,
            delta,
            rho_l2: rh.l2,
            rho_l3: rh.l3,
            rho_l4: rh.l4,
            rho_linf: rh.linf,
            phi: phi_next,
            step_kind: classify_step(rh.l3, n, config.threshold_coeff),
            corrector_count: report.correctors,
            residual_after: report.residual,
            lemma_violations: checker.take_pending(),
            phi_prev,
            alpha,
            target_l2: rd.l2,
            target_l3: rd.l3,
        });
        f = f_next;
        state = next;
        warm = Some(rd.rho_hat);
    }

    let gap = duality_gap(&state, a)?;
    info!(
        "qp finished: {} iterations, mu = {:e}, objective = {:.12e}",
        trace.len(),
        state.mu,
        f
    );
    summary.merge(&checker.into_summary());
    let phases = phase_reports(&trace, n, config.threshold_coeff);
    Ok(QoResult {
        objective: f,
        final_mu: state.mu,
        duality_gap_bound: state.mu * n as f64,
        duality_gap: gap,
        iterations: trace.len(),
        init_iterations: init_trace.len(),
        switch_doublings,
        x: state.x,
        trace,
        init_trace,
        phases,
        summary,
        stats: kernel.stats(),
    })
}

fn check_gap(checker: &mut LemmaChecker, state: &IpmState, a: &SparseSymMatrix) -> Result<()> {
    let target = state.mu * state.n() as f64;
    match duality_gap(state, a) {
        Ok(g) => checker.check(LemmaId::DualityGap, (g - target).abs() / target),
        Err(Error::DualInfeasible { .. }) => checker.check(LemmaId::DualityGap, f64::INFINITY),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::DiagnosticsLevel;

    fn cert(a: SparseSymMatrix) -> CertifiedMatrix {
        CertifiedMatrix::new(a).unwrap()
    }

    fn assert_cfg() -> SolverConfig {
        SolverConfig {
            diagnostics_level: DiagnosticsLevel::Assert,
            ..SolverConfig::default()
        }
    }

    #[test]
    fn scalar_problem() {
        let a = cert(SparseSymMatrix::from_diagonal(&[2.0]));
        let r = qo_solve(&a, &[1.0], 1e-8, &assert_cfg()).unwrap();
        assert!((r.x[0] - 0.5).abs() < 1e-6);
        assert!((r.objective + 0.25).abs() <= 1e-8);
        assert!(r.final_mu <= 1e-8);
    }

    #[test]
    fn nonpositive_b_gives_zero() {
        let a = cert(SparseSymMatrix::from_diagonal(&[1.0, 3.0]));
        let r = qo_solve(&a, &[-1.0, 0.0], 1e-6, &assert_cfg()).unwrap();
        assert!(r.objective >= 0.0 && r.objective <= 1e-6);
        assert!(r.x.iter().all(|v| *v >= 0.0 && *v < 1e-3));
    }

    #[test]
    fn start_already_central_when_b_matches() {
        let m = SparseSymMatrix::from_dense(&[vec![3.0, -1.0], vec![-1.0, 3.0]]).unwrap();
        let a = cert(m);
        let b = shifted_ones(&a).unwrap();
        let r = qo_solve(&a, &b, 1e-6, &assert_cfg()).unwrap();
        assert_eq!(r.init_iterations, 0);
        // Interior optimum: A x = b = (1, 1) gives x = (1/2, 1/2).
        for v in &r.x {
            assert!((v - 0.5).abs() < 1e-6);
        }
    }

    #[test]
    fn line_search_on_central_identity() {
        let m = SparseSymMatrix::identity(1);
        let k = PathKernel::new(&m, SolverConfig::default().solve_params());
        let x = [1.0];
        let rh = k.unnormalized_congestion(&x, 1.0).unwrap();
        let (d, r, evals) = line_search_delta(&k, &x, 1.0, &rh, 0.5, (1.0 / 32.0, 1.0 / 16.0)).unwrap();
        assert_eq!(evals, 2);
        assert!((d - 0.125).abs() < 1e-15);
        assert!((d * r.l3 - 0.125 / 2.125).abs() < 1e-12);
        assert!(d >= 2.0 / 31.0 && d <= 2.0 / 15.0);
    }

    #[test]
    fn line_search_respects_cap() {
        let m = SparseSymMatrix::identity(1);
        let k = PathKernel::new(&m, SolverConfig::default().solve_params());
        let x = [1.0];
        let rh = k.unnormalized_congestion(&x, 1.0).unwrap();
        let (d, _, _) = line_search_delta(&k, &x, 1.0, &rh, 0.01, (1.0 / 32.0, 1.0 / 16.0)).unwrap();
        assert_eq!(d, 0.01);
    }

    #[test]
    fn gap_at_central_point() {
        // A = I, b = 0: central point x = sqrt(mu).
        let m = SparseSymMatrix::identity(3);
        let s = IpmState::new(vec![0.5; 3], 0.25, vec![0.0; 3]).unwrap();
        assert!((duality_gap(&s, &m).unwrap() - 0.75).abs() < 1e-15);
        let bad = IpmState::new(vec![0.5; 3], 0.25, vec![1.0; 3]).unwrap();
        assert!(matches!(duality_gap(&bad, &m), Err(Error::DualInfeasible { index: 0, .. })));
    }

    #[test]
    fn regularization_shifts() {
        let a = cert(SparseSymMatrix::from_diagonal(&[2.0, 2.0]));
        let (_, g) = regularize(&a, &[0.0, 0.0], 1e-3, RegularizeMode::Qo);
        assert_eq!(g, 0.0);
        let (s, g) = regularize(&a, &[1.0, 0.0], 0.0, RegularizeMode::Scaling);
        assert_eq!(g, 0.0);
        assert_eq!(s.matrix(), a.matrix());
        let (s, g) = regularize(&a, &[1.0, 0.0], 1e-2, RegularizeMode::Scaling);
        assert!((g - 2.5e-3).abs() < 1e-18);
        assert!((s.diag(0) - 2.0025).abs() < 1e-15);
    }

    #[test]
    fn objective_value() {
        let m = SparseSymMatrix::from_diagonal(&[2.0]);
        assert_eq!(objective(&m, &[1.0], &[0.5]).unwrap(), -0.25);
    }
}
