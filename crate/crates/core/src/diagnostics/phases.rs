use serde::{Deserialize, Serialize};

use super::{classify_step, LemmaId, StepKind, StepTrace};

/// Aggregate of the iterations that move `mu` by a factor of two.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseReport {
    pub phase_index: usize,
    pub mu_start: f64,
    pub mu_end: f64,
    pub iterations: usize,
    pub long_steps: usize,
    pub short_steps: usize,
    /// Classification against the median `||rho_hat||_3` of the run.
    pub long_steps_median: usize,
    pub short_steps_median: usize,
    pub phi_start: f64,
    pub phi_end: f64,
}

pub fn median_rho_l3(trace: &[StepTrace]) -> f64 {
    let mut v: Vec<f64> = trace.iter().map(|t| t.rho_l3).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

pub fn phase_reports(trace: &[StepTrace], n: usize, threshold_coeff: f64) -> Vec<PhaseReport> {
    let median = median_rho_l3(trace);
    let mut out: Vec<PhaseReport> = Vec::new();
    for t in trace {
        let fresh = out.last().map_or(true, |p| p.phase_index != t.phase_index);
        if fresh {
            out.push(PhaseReport {
                phase_index: t.phase_index,
                mu_start: t.mu_prev,
                mu_end: t.mu,
                iterations: 0,
                long_steps: 0,
                short_steps: 0,
                long_steps_median: 0,
                short_steps_median: 0,
                phi_start: t.phi_prev,
                phi_end: t.phi,
            });
        }
        let p = out.last_mut().expect("phase exists");
        p.mu_end = t.mu;
        p.phi_end = t.phi;
        p.iterations += 1;
        match classify_step(t.rho_l3, n, threshold_coeff) {
            StepKind::Long => p.long_steps += 1,
            StepKind::Short => p.short_steps += 1,
        }
        if t.rho_l3 <= median {
            p.long_steps_median += 1;
        } else {
            p.short_steps_median += 1;
        }
    }
    out
}

/// Per-phase amortization checks for the scaling method.
///
/// Long steps: the total potential decrease they cause is at most
/// `sum 8 alpha n^(1/6) sqrt(n)`. Short steps: each raises the potential by
/// at least `2^-11 alpha ||rho_hat||_3^2 - 8 alpha n^(1/6) sqrt(n)`.
/// Steps without a recorded potential are skipped.
pub fn check_phase_amortization(
    trace: &[StepTrace],
    n: usize,
    threshold_coeff: f64,
) -> Vec<(LemmaId, f64)> {
    let nf = n as f64;
    let slack = nf.powf(1.0 / 6.0) * nf.sqrt();
    let mut out = Vec::new();
    let mut i = 0;
    while i < trace.len() {
        let phase = trace[i].phase_index;
        let mut decrease = 0.0;
        let mut budget = 0.0;
        let mut any_long = false;
        while i < trace.len() && trace[i].phase_index == phase {
            let t = &trace[i];
            i += 1;
            if !(t.phi.is_finite() && t.phi_prev.is_finite() && t.alpha.is_finite()) {
                continue;
            }
            match classify_step(t.rho_l3, n, threshold_coeff) {
                StepKind::Long => {
                    any_long = true;
                    decrease += (t.phi_prev - t.phi).max(0.0);
                    budget += 8.0 * t.alpha * slack;
                }
                StepKind::Short => {
                    let need = t.alpha * t.target_l3 * t.target_l3 / 2048.0 - 8.0 * t.alpha * slack;
                    out.push((LemmaId::PhaseShortSteps, (need - (t.phi - t.phi_prev)).max(0.0)));
                }
            }
        }
        if any_long {
            out.push((LemmaId::PhaseLongSteps, (decrease - budget).max(0.0)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step(phase: usize, mu_prev: f64, mu: f64, rho_l3: f64, phi_prev: f64, phi: f64) -> StepTrace {
        StepTrace {
            iter: 0,
            phase_index: phase,
            mu_prev,
            mu,
            delta: 0.1,
            rho_l2: 1.0,
            rho_l3,
            rho_l4: 1.0,
            rho_linf: 1.0,
            phi,
            step_kind: StepKind::Long,
            corrector_count: 1,
            residual_after: 0.0,
            lemma_violations: vec![],
            phi_prev,
            alpha: 0.05,
            target_l2: 1.0,
            target_l3: rho_l3,
        }
    }

    #[test]
    fn phases_group_and_classify() {
        let t = vec![
            step(0, 1.0, 1.5, 1.0, 2.0, 1.9),
            step(0, 1.5, 2.1, 3.0, 1.9, 1.8),
            step(1, 2.1, 3.0, 2.0, 1.9, 1.85),
        ];
        let p = phase_reports(&t, 8, 256.0);
        assert_eq!(p.len(), 2);
        assert_eq!(p[0].iterations, 2);
        assert_eq!(p[0].mu_start, 1.0);
        assert_eq!(p[0].mu_end, 2.1);
        assert_eq!(p[0].phi_start, 2.0);
        assert_eq!(p[1].long_steps, 1);
        assert_eq!(median_rho_l3(&t), 2.0);
        assert_eq!(p[0].long_steps_median + p[1].long_steps_median, 2);
    }

    #[test]
    fn amortization_flags_large_drop() {
        let ok = vec![step(0, 1.0, 1.5, 1.0, 2.0, 1.9)];
        assert!(check_phase_amortization(&ok, 8, 256.0).iter().all(|&(_, m)| m == 0.0));
        let bad = vec![step(0, 1.0, 1.5, 1.0, 200.0, 1.0)];
        assert!(check_phase_amortization(&bad, 8, 256.0).iter().any(|&(_, m)| m > 0.0));
    }
}
