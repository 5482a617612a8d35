use std::ops::Deref;

use serde::{Deserialize, Serialize};

use super::sparse::SparseSymMatrix;
use super::spectral::{estimate_lambda_max, power_iteration};
use crate::error::{Error, Result};

/// Default relative tolerance for spectral estimates.
pub const DEFAULT_TOL: f64 = 1e-6;

const MAX_POWER_ITERS: usize = 200_000;

/// Evidence that `A` is a symmetric M-matrix via the splitting `A = sI - C`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MMatrixCertificate {
    pub s: f64,
    pub rho_c_estimate: f64,
    pub lambda_min_estimate: f64,
    pub lambda_max_estimate: f64,
    /// Whether both power iterations met their tolerance.
    pub converged: bool,
}

/// Checks the sign pattern exactly and estimates `rho(C)` for `C = sI - A`
/// with `s = max diag + 1`.
pub fn certify_mmatrix(a: &SparseSymMatrix, tol: f64) -> Result<MMatrixCertificate> {
    for i in 0..a.n() {
        for (j, v) in a.row(i) {
            if j != i && v > 0.0 {
                return Err(Error::PositiveOffDiagonal {
                    row: i,
                    col: j,
                    value: v,
                });
            }
        }
    }
    let s = a.diagonal().into_iter().fold(f64::NEG_INFINITY, f64::max) + 1.0;
    if a.n() == 0 {
        return Err(Error::InvalidStructure("empty matrix".into()));
    }
    let decoupled = (0..a.n()).all(|i| a.row(i).all(|(j, v)| j == i || v == 0.0));
    if decoupled {
        // C is diagonal, so its spectrum is read off directly.
        let d = a.diagonal();
        let lmin = d.iter().copied().fold(f64::INFINITY, f64::min);
        let lmax = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let rho_c = d.iter().map(|v| (s - v).abs()).fold(0.0, f64::max);
        if !(s > 0.0) || rho_c >= s * (1.0 - tol) {
            return Err(Error::NotPositiveDefinite { s, rho_c });
        }
        return Ok(MMatrixCertificate {
            s,
            rho_c_estimate: rho_c,
            lambda_min_estimate: lmin,
            lambda_max_estimate: lmax,
            converged: true,
        });
    }
    let rho = power_iteration(
        a.n(),
        |v, w| {
            a.matvec_into(v, w);
            for (wi, vi) in w.iter_mut().zip(v) {
                *wi = s * vi - *wi;
            }
        },
        tol,
        MAX_POWER_ITERS,
    );
    if !(s > 0.0) || rho.value >= s * (1.0 - tol) {
        return Err(Error::NotPositiveDefinite {
            s,
            rho_c: rho.value,
        });
    }
    let lmax = estimate_lambda_max(a, tol, MAX_POWER_ITERS);
    Ok(MMatrixCertificate {
        s,
        rho_c_estimate: rho.value,
        lambda_min_estimate: (s - rho.value).max(0.0),
        lambda_max_estimate: lmax.value,
        converged: rho.converged && lmax.converged,
    })
}

/// A matrix bundled with its M-matrix certificate. The solvers only accept
/// this type.
#[derive(Debug, Clone)]
pub struct CertifiedMatrix {
    matrix: SparseSymMatrix,
    certificate: MMatrixCertificate,
}

impl CertifiedMatrix {
    pub fn new(matrix: SparseSymMatrix) -> Result<Self> {
        Self::with_tol(matrix, DEFAULT_TOL)
    }

    pub fn with_tol(matrix: SparseSymMatrix, tol: f64) -> Result<Self> {
        let certificate = certify_mmatrix(&matrix, tol)?;
        Ok(Self {
            matrix,
            certificate,
        })
    }

    pub fn matrix(&self) -> &SparseSymMatrix {
        &self.matrix
    }

    pub fn certificate(&self) -> &MMatrixCertificate {
        &self.certificate
    }

    pub fn into_matrix(self) -> SparseSymMatrix {
        self.matrix
    }

    /// `A + gamma I` for `gamma >= 0`. The splitting carries over with
    /// `s + gamma` and the same `C`, so no new power iteration is needed.
    pub fn shifted(&self, gamma: f64) -> Self {
        debug_assert!(gamma >= 0.0);
        let c = self.certificate;
        Self {
            matrix: self.matrix.shifted(gamma),
            certificate: MMatrixCertificate {
                s: c.s + gamma,
                rho_c_estimate: c.rho_c_estimate,
                lambda_min_estimate: c.lambda_min_estimate + gamma,
                lambda_max_estimate: c.lambda_max_estimate + gamma,
                converged: c.converged,
            },
        }
    }
}

impl Deref for CertifiedMatrix {
    type Target = SparseSymMatrix;

    fn deref(&self) -> &SparseSymMatrix {
        &self.matrix
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_certificate() {
        let c = certify_mmatrix(&SparseSymMatrix::identity(4), DEFAULT_TOL).unwrap();
        assert_eq!(c.s, 2.0);
        assert!((c.rho_c_estimate - 1.0).abs() < 1e-12);
        assert!((c.lambda_min_estimate - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_by_two_certificate() {
        let a = SparseSymMatrix::from_dense(&[vec![2.0, -1.0], vec![-1.0, 2.0]]).unwrap();
        let c = certify_mmatrix(&a, DEFAULT_TOL).unwrap();
        assert_eq!(c.s, 3.0);
        assert!((c.rho_c_estimate - 2.0).abs() < 1e-6);
        assert!((c.lambda_min_estimate - 1.0).abs() < 1e-6);
        assert!((c.lambda_max_estimate - 3.0).abs() < 1e-5);
    }

    #[test]
    fn positive_off_diagonal_is_rejected() {
        let a = SparseSymMatrix::from_dense(&[vec![1.0, 0.1], vec![0.1, 1.0]]).unwrap();
        assert!(matches!(
            certify_mmatrix(&a, DEFAULT_TOL),
            Err(Error::PositiveOffDiagonal { .. })
        ));
    }

    #[test]
    fn singular_laplacian_is_rejected() {
        let a = SparseSymMatrix::from_dense(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap();
        assert!(matches!(
            certify_mmatrix(&a, DEFAULT_TOL),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn shift_updates_certificate() {
        let a = CertifiedMatrix::new(SparseSymMatrix::identity(3)).unwrap();
        let b = a.shifted(0.5);
        assert_eq!(b.certificate().s, 2.5);
        assert!((b.certificate().lambda_min_estimate - 1.5).abs() < 1e-12);
        assert_eq!(b.diag(1), 1.5);
    }

    #[test]
    fn diagonal_spectrum_is_exact() {
        let a = SparseSymMatrix::from_diagonal(&[0.5, 3.0, 1.25]);
        let c = certify_mmatrix(&a, DEFAULT_TOL).unwrap();
        assert_eq!(c.s, 4.0);
        assert_eq!(c.rho_c_estimate, 3.5);
        assert_eq!(c.lambda_min_estimate, 0.5);
        assert_eq!(c.lambda_max_estimate, 3.0);
        assert!(c.converged);
        let bad = SparseSymMatrix::from_diagonal(&[1.0, 0.0]);
        assert!(matches!(certify_mmatrix(&bad, DEFAULT_TOL), Err(Error::NotPositiveDefinite { .. })));
    }
}
