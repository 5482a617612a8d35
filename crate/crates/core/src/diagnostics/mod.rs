//! Potential tracking, step classification and runtime lemma checks.

mod checks;
mod phases;
mod trace;
pub mod verify;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::config::DiagnosticsLevel;
use crate::error::{Error, Result};

pub use checks::{
    check_general_energy_lemma, check_general_energy_lemma_backward, check_stability_lemma,
    classify_step, energy_backward_violation, energy_forward_violation, full_correction_zeta,
    general_energy_backward, general_energy_forward, monotonicity_violation, potential,
    potential_violation, stability_violation, x_bound_violation, EnergyComparison,
};
pub use phases::{check_phase_amortization, median_rho_l3, phase_reports, PhaseReport};
pub use trace::{emit_trace, read_trace, write_trace, TraceRow, TRACE_HEADER};

/// Identifies one numerical check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LemmaId {
    /// `rho_hat >= 0` entrywise and `||rho_hat||_2 <= sqrt(n)`.
    CongestionBounds,
    /// `||rho_after||_2 <= ||rho_before||_4^2` for each corrector.
    Contraction,
    StabilityPointwise,
    StabilityNorm,
    EnergyForward,
    EnergyBackward,
    /// `||zeta||_2 <= 8 alpha^2` for increasing `mu`.
    FullCorrection,
    /// Mirror of the full-correction bound for decreasing `mu`.
    FullCorrectionBackward,
    /// `0 < Phi <= n`.
    PotentialBound,
    /// `||delta rho_hat(x, mu')||_3 <= 1/16`.
    PredictorSafety,
    DualityGap,
    /// Coordinates of consecutive centered scaling iterates do not decrease.
    Monotonicity,
    /// The quadratic objective does not increase along the path.
    ObjectiveMonotonicity,
    /// `||rho||_2 <= 1/2` when the quadratic solver swaps in its linear term.
    InitSwitch,
    XBound,
    PhaseLongSteps,
    PhaseShortSteps,
    GeneralEnergyForward,
    GeneralEnergyBackward,
    /// `A^{-1} >= 0` entrywise on small dense instances.
    InversePositivity,
    /// Certificate `lambda_min` against a dense eigensolver.
    LambdaMinOracle,
}

impl LemmaId {
    pub const ALL: [LemmaId; 21] = [
        LemmaId::CongestionBounds,
        LemmaId::Contraction,
        LemmaId::StabilityPointwise,
        LemmaId::StabilityNorm,
        LemmaId::EnergyForward,
        LemmaId::EnergyBackward,
        LemmaId::FullCorrection,
        LemmaId::FullCorrectionBackward,
        LemmaId::PotentialBound,
        LemmaId::PredictorSafety,
        LemmaId::DualityGap,
        LemmaId::Monotonicity,
        LemmaId::ObjectiveMonotonicity,
        LemmaId::InitSwitch,
        LemmaId::XBound,
        LemmaId::PhaseLongSteps,
        LemmaId::PhaseShortSteps,
        LemmaId::GeneralEnergyForward,
        LemmaId::GeneralEnergyBackward,
        LemmaId::InversePositivity,
        LemmaId::LambdaMinOracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LemmaId::CongestionBounds => "congestion-bounds",
            LemmaId::Contraction => "contraction",
            LemmaId::StabilityPointwise => "stability-pointwise",
            LemmaId::StabilityNorm => "stability-norm",
            LemmaId::EnergyForward => "energy-forward",
            LemmaId::EnergyBackward => "energy-backward",
            LemmaId::FullCorrection => "full-correction",
            LemmaId::FullCorrectionBackward => "full-correction-backward",
            LemmaId::PotentialBound => "potential-bound",
            LemmaId::PredictorSafety => "predictor-safety",
            LemmaId::DualityGap => "duality-gap",
            LemmaId::Monotonicity => "monotonicity",
            LemmaId::ObjectiveMonotonicity => "objective-monotonicity",
            LemmaId::InitSwitch => "init-switch",
            LemmaId::XBound => "x-bound",
            LemmaId::PhaseLongSteps => "phase-long-steps",
            LemmaId::PhaseShortSteps => "phase-short-steps",
            LemmaId::GeneralEnergyForward => "general-energy-forward",
            LemmaId::GeneralEnergyBackward => "general-energy-backward",
            LemmaId::InversePositivity => "inverse-positivity",
            LemmaId::LambdaMinOracle => "lambda-min-oracle",
        }
    }

    /// Largest magnitude treated as float noise for a problem of size `n`.
    /// Magnitudes are already normalized where the check is relative.
    pub fn tolerance(self, n: usize) -> f64 {
        let n = n.max(1) as f64;
        match self {
            LemmaId::CongestionBounds => 1e-10,
            LemmaId::EnergyForward
            | LemmaId::EnergyBackward
            | LemmaId::PhaseLongSteps
            | LemmaId::PhaseShortSteps => 1e-6 * n,
            LemmaId::PotentialBound => 1e-6,
            LemmaId::DualityGap => 1e-6,
            LemmaId::ObjectiveMonotonicity => 1e-10,
            LemmaId::InversePositivity => 1e-10,
            LemmaId::LambdaMinOracle => 0.02,
            _ => 1e-8,
        }
    }
}

impl fmt::Display for LemmaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepKind {
    Long,
    Short,
}

impl StepKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StepKind::Long => "long",
            StepKind::Short => "short",
        }
    }
}

/// One predictor-corrector iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct StepTrace {
    pub iter: usize,
    pub phase_index: usize,
    pub mu_prev: f64,
    /// `mu` after the step.
    pub mu: f64,
    pub delta: f64,
    /// Norms of the congestion vector that set the step.
    pub rho_l2: f64,
    pub rho_l3: f64,
    pub rho_l4: f64,
    pub rho_linf: f64,
    /// Potential after the step under the anchor in force before it. `NaN`
    /// when diagnostics are off.
    pub phi: f64,
    pub step_kind: StepKind,
    pub corrector_count: usize,
    pub residual_after: f64,
    pub lemma_violations: Vec<(LemmaId, f64)>,
    /// Potential before the step under the same anchor as `phi`.
    pub phi_prev: f64,
    /// `||delta rho_hat||_3` with `rho_hat` taken at the new `mu`.
    pub alpha: f64,
    /// Norms of `rho_hat` at the new `mu`, from the old iterate.
    pub target_l2: f64,
    pub target_l3: f64,
}

impl StepTrace {
    pub fn violation_max(&self) -> f64 {
        self.lemma_violations
            .iter()
            .map(|&(_, m)| m)
            .fold(0.0, f64::max)
    }
}

/// Per-check aggregate over a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LemmaSummary {
    pub checks: usize,
    pub max_magnitude: f64,
    /// Checks whose magnitude exceeded the tolerance.
    pub hard: usize,
}

/// Aggregated diagnostics of one solver run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub n: usize,
    pub lemmas: BTreeMap<LemmaId, LemmaSummary>,
    pub min_rho_hat: f64,
    pub max_rho_hat: f64,
    pub min_phi: f64,
    pub max_phi: f64,
    pub corrector_steps: usize,
    pub mixed_sign_corrector_steps: usize,
}

impl RunSummary {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            lemmas: BTreeMap::new(),
            min_rho_hat: f64::INFINITY,
            max_rho_hat: f64::NEG_INFINITY,
            min_phi: f64::INFINITY,
            max_phi: f64::NEG_INFINITY,
            corrector_steps: 0,
            mixed_sign_corrector_steps: 0,
        }
    }

    pub fn hard_violations(&self) -> usize {
        self.lemmas.values().map(|s| s.hard).sum()
    }

    pub fn get(&self, id: LemmaId) -> LemmaSummary {
        self.lemmas.get(&id).copied().unwrap_or_default()
    }

    /// Folds another run into this one.
    pub fn merge(&mut self, other: &RunSummary) {
        self.n = self.n.max(other.n);
        for (id, s) in &other.lemmas {
            let e = self.lemmas.entry(*id).or_default();
            e.checks += s.checks;
            e.hard += s.hard;
            e.max_magnitude = e.max_magnitude.max(s.max_magnitude);
        }
        self.min_rho_hat = self.min_rho_hat.min(other.min_rho_hat);
        self.max_rho_hat = self.max_rho_hat.max(other.max_rho_hat);
        self.min_phi = self.min_phi.min(other.min_phi);
        self.max_phi = self.max_phi.max(other.max_phi);
        self.corrector_steps += other.corrector_steps;
        self.mixed_sign_corrector_steps += other.mixed_sign_corrector_steps;
    }
}

/// Records check magnitudes and enforces tolerances according to the
/// configured level.
#[derive(Debug, Clone)]
pub struct LemmaChecker {
    level: DiagnosticsLevel,
    summary: RunSummary,
    pending: Vec<(LemmaId, f64)>,
}

impl LemmaChecker {
    pub fn new(level: DiagnosticsLevel, n: usize) -> Self {
        Self {
            level,
            summary: RunSummary::new(n),
            pending: Vec::new(),
        }
    }

    pub fn level(&self) -> DiagnosticsLevel {
        self.level
    }

    pub fn enabled(&self) -> bool {
        self.level.enabled()
    }

    /// Records one check. A non-finite magnitude counts as a violation.
    pub fn check(&mut self, id: LemmaId, magnitude: f64) -> Result<()> {
        if !self.enabled() {
            return Ok(());
        }
        let magnitude = if magnitude.is_nan() { f64::INFINITY } else { magnitude.max(0.0) };
        let tolerance = id.tolerance(self.summary.n);
        let entry = self.summary.lemmas.entry(id).or_default();
        entry.checks += 1;
        entry.max_magnitude = entry.max_magnitude.max(magnitude);
        if magnitude > 0.0 {
            self.pending.push((id, magnitude));
        }
        if magnitude > tolerance {
            entry.hard += 1;
            if self.level == DiagnosticsLevel::Assert {
                return Err(Error::LemmaViolation {
                    lemma: id,
                    magnitude,
                    tolerance,
                });
            }
        }
        Ok(())
    }

    /// Checks `rho_hat >= 0` and `||rho_hat||_2 <= sqrt(n)`. Entries above 1
    /// are possible when `X A X` has negative row sums; the extremes are
    /// kept in the summary.
    pub fn observe_rho_hat(&mut self, rho_hat: &[f64]) -> Result<()> {
        if !self.enabled() {
            return Ok(());
        }
        let lo = rho_hat.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = rho_hat.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        self.summary.min_rho_hat = self.summary.min_rho_hat.min(lo);
        self.summary.max_rho_hat = self.summary.max_rho_hat.max(hi);
        let l2 = rho_hat.iter().map(|v| v * v).sum::<f64>().sqrt();
        let excess = l2 / (rho_hat.len() as f64).sqrt() - 1.0;
        self.check(LemmaId::CongestionBounds, (-lo).max(excess))
    }

    pub fn observe_phi(&mut self, phi: f64) -> Result<()> {
        if !self.enabled() {
            return Ok(());
        }
        self.summary.min_phi = self.summary.min_phi.min(phi);
        self.summary.max_phi = self.summary.max_phi.max(phi);
        let n = self.summary.n;
        self.check(LemmaId::PotentialBound, potential_violation(phi, n))
    }

    pub fn observe_centering(&mut self, report: &crate::central_path::CenterReport) -> Result<()> {
        self.summary.corrector_steps += report.correctors;
        self.summary.mixed_sign_corrector_steps += report.mixed_sign_steps;
        for s in &report.contraction {
            self.check(LemmaId::Contraction, s.excess())?;
        }
        Ok(())
    }

    /// Violations recorded since the last call.
    pub fn take_pending(&mut self) -> Vec<(LemmaId, f64)> {
        std::mem::take(&mut self.pending)
    }

    pub fn summary(&self) -> &RunSummary {
        &self.summary
    }

    pub fn into_summary(self) -> RunSummary {
        self.summary
    }
}
