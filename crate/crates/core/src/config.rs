use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::{Preconditioner, SolveParams};

/// How much runtime checking the solvers perform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DiagnosticsLevel {
    /// No lemma checks and no potential tracking.
    Off,
    /// Checks are evaluated and recorded but never abort a run.
    #[default]
    Soft,
    /// Any check above its tolerance aborts with `LemmaViolation`.
    Assert,
}

impl DiagnosticsLevel {
    pub fn enabled(self) -> bool {
        self != DiagnosticsLevel::Off
    }
}

impl std::str::FromStr for DiagnosticsLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "off" => Ok(Self::Off),
            "soft" => Ok(Self::Soft),
            "assert" => Ok(Self::Assert),
            other => Err(Error::InvalidConfig(format!(
                "unknown diagnostics level '{other}' (expected off, soft or assert)"
            ))),
        }
    }
}

/// Solver constants and tolerances. Serialized as JSON for run snapshots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub epsilon: f64,
    /// Centering stops once `||rho||_2` falls to this value.
    pub center_tol: f64,
    pub cg_rel_tol: f64,
    /// `None` means `20 n + 200`.
    pub cg_max_iters: Option<usize>,
    pub preconditioner: Preconditioner,
    pub max_correctors: usize,
    /// Denominator of the predictor rule `delta = 1 / (coeff ||rho_hat||_3)`.
    pub step_coeff: f64,
    /// Target window for `delta ||rho_hat_delta||_3` in the quadratic line search.
    pub ls_window: (f64, f64),
    /// Long steps have `||rho_hat||_3 <= threshold_coeff n^(1/3)`.
    pub threshold_coeff: f64,
    pub diagnostics_level: DiagnosticsLevel,
    /// Hard cap on predictor steps in one run.
    pub max_iterations: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-6,
            center_tol: 1e-10,
            cg_rel_tol: 1e-12,
            cg_max_iters: None,
            preconditioner: Preconditioner::Jacobi,
            max_correctors: 40,
            step_coeff: 32.0,
            ls_window: (1.0 / 32.0, 1.0 / 16.0),
            threshold_coeff: 256.0,
            diagnostics_level: DiagnosticsLevel::Soft,
            max_iterations: 10_000_000,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if !(self.center_tol > 0.0 && self.center_tol < 0.5) {
            return bad(format!("center_tol must lie in (0, 1/2), got {}", self.center_tol));
        }
        if self.max_correctors == 0 {
            return bad("max_correctors must be at least 1".into());
        }
        if !(self.step_coeff >= 16.0 && self.step_coeff.is_finite()) {
            return bad(format!("step_coeff must be >= 16, got {}", self.step_coeff));
        }
        let (lo, hi) = self.ls_window;
        if !(lo > 0.0 && lo < hi && hi <= 1.0 / 16.0) {
            return bad(format!(
                "ls_window must satisfy 0 < lo < hi <= 1/16, got ({lo}, {hi})"
            ));
        }
        if !(self.threshold_coeff > 0.0) {
            return bad(format!("threshold_coeff must be positive, got {}", self.threshold_coeff));
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be at least 1".into());
        }
        self.solve_params().validate()
    }

    pub fn solve_params(&self) -> SolveParams {
        SolveParams {
            rel_tol: self.cg_rel_tol,
            max_iters: self.cg_max_iters,
            preconditioner: self.preconditioner,
        }
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        SolverConfig::default().validate().unwrap();
    }

    #[test]
    fn json_round_trip() {
        let cfg = SolverConfig {
            epsilon: 1e-3,
            diagnostics_level: DiagnosticsLevel::Assert,
            ..SolverConfig::default()
        };
        let back: SolverConfig = serde_json::from_str(&cfg.to_json()).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn partial_json_uses_defaults() {
        let cfg: SolverConfig = serde_json::from_str(r#"{"epsilon": 0.01}"#).unwrap();
        assert_eq!(cfg.epsilon, 0.01);
        assert_eq!(cfg.max_correctors, 40);
    }

    #[test]
    fn invalid_values_are_rejected() {
        let mut cfg = SolverConfig {
            step_coeff: 8.0,
            ..SolverConfig::default()
        };
        assert!(cfg.validate().is_err());
        cfg.step_coeff = 32.0;
        cfg.ls_window = (0.1, 0.05);
        assert!(cfg.validate().is_err());
        assert!(serde_json::from_str::<SolverConfig>(r#"{"bogus": 1}"#).is_err());
    }
}
