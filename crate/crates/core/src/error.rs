use std::path::PathBuf;

use thiserror::Error;

use crate::diagnostics::LemmaId;
use crate::solver::SolveReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid matrix structure: {0}")]
    InvalidStructure(String),

    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },

    #[error("positive off-diagonal entry {value} at ({row}, {col})")]
    PositiveOffDiagonal { row: usize, col: usize, value: f64 },

    #[error("matrix is not positive definite: rho(C) = {rho_c} >= s (1 - tol) with s = {s}")]
    NotPositiveDefinite { s: f64, rho_c: f64 },

    #[error("generated instance failed certification: {0}")]
    CertificationFailed(Box<Error>),

    #[error(
        "conjugate gradients did not converge after {} iterations (relative residual {:e})",
        .0.iterations,
        .0.final_relative_residual
    )]
    NotConverged(SolveReport),

    #[error("corrector precondition violated: ||rho||_4 = {norm4} > 1/2")]
    CorrectabilityViolated { norm4: f64 },

    #[error("centering did not reach tolerance within {max} corrector steps (residual {residual:e})")]
    MaxCorrectorsExceeded { max: usize, residual: f64 },

    #[error("iterate became non-finite or non-positive")]
    NonFiniteIterate,

    #[error("iteration limit {limit} reached at mu = {mu:e}")]
    IterationLimit { limit: usize, mu: f64 },

    #[error("line search failed to localize the step window after {evaluations} evaluations")]
    LineSearchFailed { evaluations: usize },

    #[error("point is not dual feasible: (Ax - b)[{index}] = {value}")]
    DualInfeasible { index: usize, value: f64 },

    #[error("brute-force oracle supports n <= {max}, got n = {n}")]
    TooLarge { n: usize, max: usize },

    #[error("lemma check {lemma} violated: magnitude {magnitude:e} exceeds tolerance {tolerance:e}")]
    LemmaViolation {
        lemma: LemmaId,
        magnitude: f64,
        tolerance: f64,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error in {path:?} at line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Errors caused by bad user input rather than numerical failure.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch { .. }
                | Error::InvalidStructure(_)
                | Error::NotSymmetric { .. }
                | Error::PositiveOffDiagonal { .. }
                | Error::NotPositiveDefinite { .. }
                | Error::InvalidConfig(_)
                | Error::Parse { .. }
                | Error::Io(_)
                | Error::TooLarge { .. }
        )
    }
}
