//! Interior point methods for symmetric M-matrix scaling and non-negative
//! quadratic optimization, with runtime diagnostics and reference oracles.
//!
//! ```
//! use mipm::config::SolverConfig;
//! use mipm::linalg::{CertifiedMatrix, SparseSymMatrix};
//! use mipm::scaling::ms_solve;
//!
//! let a = SparseSymMatrix::from_dense(&[vec![2.0, -1.0], vec![-1.0, 2.0]]).unwrap();
//! let a = CertifiedMatrix::new(a).unwrap();
//! let r = ms_solve(&a, 1e-8, &SolverConfig::default()).unwrap();
//! assert!(r.residual_l2 <= 1e-8);
//! ```

pub mod bench;
pub mod central_path;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod instances;
pub mod io;
pub mod linalg;
pub mod oracle;
pub mod quadratic;
pub mod scaling;
pub mod solver;

pub use error::{Error, Result};
