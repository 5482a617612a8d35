//! Sparse symmetric storage, vector kernels, spectral estimates and
//! M-matrix certification.

pub mod dense;
mod mmatrix;
mod sparse;
mod spectral;
pub mod vector;

pub use mmatrix::{certify_mmatrix, CertifiedMatrix, MMatrixCertificate};
pub use sparse::SparseSymMatrix;
pub use spectral::{estimate_lambda_max, power_iteration, SpectralEstimate};
pub use vector::{norm_p, Norm};
