//! C interface to the `mipm` solvers.
//!
//! Matrices and results are opaque handles owned by the caller and released
//! with the matching `*_free` function. Every fallible call returns a
//! [`MipmStatus`]; on failure [`mipm_last_error_message`] describes the cause
//! for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mipm::config::{DiagnosticsLevel, SolverConfig};
use mipm::io::read_matrix_market;
use mipm::linalg::{CertifiedMatrix, SparseSymMatrix};
use mipm::quadratic::{qo_solve, QoResult};
use mipm::scaling::{ms_solve, ScalingResult};
use mipm::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MipmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    NotMMatrix = 3,
    NotConverged = 4,
    LemmaViolation = 5,
    Io = 6,
    Panic = 7,
}

/// Solver settings. Obtain defaults from [`mipm_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MipmConfig {
    pub epsilon: f64,
    pub center_tol: f64,
    pub cg_rel_tol: f64,
    /// 0 selects `20 n + 200`.
    pub cg_max_iters: usize,
    pub max_correctors: usize,
    pub step_coeff: f64,
    pub ls_window_lo: f64,
    pub ls_window_hi: f64,
    pub threshold_coeff: f64,
    /// 0 off, 1 soft, 2 assert.
    pub diagnostics_level: u32,
}

impl From<&SolverConfig> for MipmConfig {
    fn from(c: &SolverConfig) -> Self {
        MipmConfig {
            epsilon: c.epsilon,
            center_tol: c.center_tol,
            cg_rel_tol: c.cg_rel_tol,
            cg_max_iters: c.cg_max_iters.unwrap_or(0),
            max_correctors: c.max_correctors,
            step_coeff: c.step_coeff,
            ls_window_lo: c.ls_window.0,
            ls_window_hi: c.ls_window.1,
            threshold_coeff: c.threshold_coeff,
            diagnostics_level: match c.diagnostics_level {
                DiagnosticsLevel::Off => 0,
                DiagnosticsLevel::Soft => 1,
                DiagnosticsLevel::Assert => 2,
            },
        }
    }
}

impl TryFrom<&MipmConfig> for SolverConfig {
    type Error = Error;

    fn try_from(c: &MipmConfig) -> Result<Self, Error> {
        let diagnostics_level = match c.diagnostics_level {
            0 => DiagnosticsLevel::Off,
            1 => DiagnosticsLevel::Soft,
            2 => DiagnosticsLevel::Assert,
            other => return Err(Error::InvalidConfig(format!("unknown diagnostics level {other}"))),
        };
        let cfg = SolverConfig {
            epsilon: c.epsilon,
            center_tol: c.center_tol,
            cg_rel_tol: c.cg_rel_tol,
            cg_max_iters: (c.cg_max_iters > 0).then_some(c.cg_max_iters),
            max_correctors: c.max_correctors,
            step_coeff: c.step_coeff,
            ls_window: (c.ls_window_lo, c.ls_window_hi),
            threshold_coeff: c.threshold_coeff,
            diagnostics_level,
            ..SolverConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// A certified symmetric M-matrix.
pub struct MipmMatrix(CertifiedMatrix);

pub struct MipmScaleResult(ScalingResult);

pub struct MipmQpResult(QoResult);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> MipmStatus {
    match e {
        Error::PositiveOffDiagonal { .. } | Error::NotPositiveDefinite { .. } => MipmStatus::NotMMatrix,
        Error::LemmaViolation { .. } => MipmStatus::LemmaViolation,
        Error::Io(_) => MipmStatus::Io,
        e if e.is_input_error() => MipmStatus::InvalidInput,
        _ => MipmStatus::NotConverged,
    }
}

/// Runs `f`, translating errors and panics into status codes.
fn guard<F>(f: F) -> MipmStatus
where
    F: FnOnce() -> Result<(), (MipmStatus, String)>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            MipmStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            MipmStatus::Panic
        }
    }
}

fn lift(e: Error) -> (MipmStatus, String) {
    (status_of(&e), e.to_string())
}

fn null() -> (MipmStatus, String) {
    (MipmStatus::NullPointer, "null pointer argument".into())
}

unsafe fn config_from(cfg: *const MipmConfig) -> Result<SolverConfig, (MipmStatus, String)> {
    if cfg.is_null() {
        Ok(SolverConfig::default())
    } else {
        SolverConfig::try_from(&*cfg).map_err(lift)
    }
}

/// Message for the last failed call on this thread. Empty after a success.
/// The pointer stays valid until the next call into this library.
#[no_mangle]
pub extern "C" fn mipm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn mipm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mipm_config_default(out: *mut MipmConfig) -> MipmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        *out = MipmConfig::from(&SolverConfig::default());
        Ok(())
    })
}

/// Builds and certifies a matrix from full symmetric CSR arrays.
///
/// # Safety
/// `row_starts` must hold `n + 1` entries, and `col_indices` and `values`
/// must hold `row_starts[n]` entries each. `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mipm_matrix_from_csr(
    n: usize,
    row_starts: *const usize,
    col_indices: *const usize,
    values: *const f64,
    out: *mut *mut MipmMatrix,
) -> MipmStatus {
    guard(|| {
        if row_starts.is_null() || out.is_null() {
            return Err(null());
        }
        let rs = std::slice::from_raw_parts(row_starts, n + 1).to_vec();
        let nnz = rs[n];
        if nnz > 0 && (col_indices.is_null() || values.is_null()) {
            return Err(null());
        }
        let (ci, vs) = if nnz == 0 {
            (Vec::new(), Vec::new())
        } else {
            (
                std::slice::from_raw_parts(col_indices, nnz).to_vec(),
                std::slice::from_raw_parts(values, nnz).to_vec(),
            )
        };
        let m = SparseSymMatrix::from_csr(n, rs, ci, vs).map_err(lift)?;
        let c = CertifiedMatrix::new(m).map_err(lift)?;
        *out = Box::into_raw(Box::new(MipmMatrix(c)));
        Ok(())
    })
}

/// Reads and certifies a Matrix Market file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mipm_matrix_read_mtx(path: *const c_char, out: *mut *mut MipmMatrix) -> MipmStatus {
    guard(|| {
        if path.is_null() || out.is_null() {
            return Err(null());
        }
        let p = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| (MipmStatus::InvalidInput, "path is not valid UTF-8".to_string()))?;
        let m = read_matrix_market(p).map_err(lift)?;
        let c = CertifiedMatrix::new(m).map_err(lift)?;
        *out = Box::into_raw(Box::new(MipmMatrix(c)));
        Ok(())
    })
}

/// # Safety
/// `m` must be null or a handle from this library that was not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mipm_matrix_free(m: *mut MipmMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Dimension of `m`, or 0 for a null handle.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mipm_matrix_dim(m: *const MipmMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.n())
}

/// Certified estimate of the smallest eigenvalue, or NaN for a null handle.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mipm_matrix_lambda_min(m: *const MipmMatrix) -> f64 {
    m.as_ref().map_or(f64::NAN, |m| m.0.certificate().lambda_min_estimate)
}

/// Computes `x > 0` with `||X A X 1 - 1||_2 <= cfg.epsilon`. A null `cfg`
/// uses the defaults.
///
/// # Safety
/// `m` must be a live handle, `cfg` null or valid, `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mipm_scale(
    m: *const MipmMatrix,
    cfg: *const MipmConfig,
    out: *mut *mut MipmScaleResult,
) -> MipmStatus {
    guard(|| {
        let (Some(m), false) = (m.as_ref(), out.is_null()) else {
            return Err(null());
        };
        let cfg = config_from(cfg)?;
        let r = ms_solve(&m.0, cfg.epsilon, &cfg).map_err(lift)?;
        *out = Box::into_raw(Box::new(MipmScaleResult(r)));
        Ok(())
    })
}

/// Copies the scaling vector into `buf`, which must hold `len == n` values.
///
/// # Safety
/// `r` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn mipm_scale_result_x(r: *const MipmScaleResult, buf: *mut f64, len: usize) -> MipmStatus {
    guard(|| {
        let (Some(r), false) = (r.as_ref(), buf.is_null()) else {
            return Err(null());
        };
        copy_out(&r.0.x_scaled, buf, len)
    })
}

/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mipm_scale_result_residual(r: *const MipmScaleResult) -> f64 {
    r.as_ref().map_or(f64::NAN, |r| r.0.residual_l2)
}

/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mipm_scale_result_iterations(r: *const MipmScaleResult) -> usize {
    r.as_ref().map_or(0, |r| r.0.iterations)
}

/// # Safety
/// `r` must be null or a live handle that was not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mipm_scale_result_free(r: *mut MipmScaleResult) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Minimizes `1/2 x^T A x - b^T x` over `x >= 0` to additive error
/// `cfg.epsilon`.
///
/// # Safety
/// `m` must be a live handle, `b` valid for `len` reads, `cfg` null or
/// valid, `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mipm_qp(
    m: *const MipmMatrix,
    b: *const f64,
    len: usize,
    cfg: *const MipmConfig,
    out: *mut *mut MipmQpResult,
) -> MipmStatus {
    guard(|| {
        let (Some(m), false, false) = (m.as_ref(), b.is_null(), out.is_null()) else {
            return Err(null());
        };
        let cfg = config_from(cfg)?;
        let b = std::slice::from_raw_parts(b, len);
        let r = qo_solve(&m.0, b, cfg.epsilon, &cfg).map_err(lift)?;
        *out = Box::into_raw(Box::new(MipmQpResult(r)));
        Ok(())
    })
}

/// # Safety
/// `r` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn mipm_qp_result_x(r: *const MipmQpResult, buf: *mut f64, len: usize) -> MipmStatus {
    guard(|| {
        let (Some(r), false) = (r.as_ref(), buf.is_null()) else {
            return Err(null());
        };
        copy_out(&r.0.x, buf, len)
    })
}

/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mipm_qp_result_objective(r: *const MipmQpResult) -> f64 {
    r.as_ref().map_or(f64::NAN, |r| r.0.objective)
}

/// Upper bound `mu n` on the distance to the optimal objective.
///
/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mipm_qp_result_gap_bound(r: *const MipmQpResult) -> f64 {
    r.as_ref().map_or(f64::NAN, |r| r.0.duality_gap_bound)
}

/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mipm_qp_result_iterations(r: *const MipmQpResult) -> usize {
    r.as_ref().map_or(0, |r| r.0.iterations)
}

/// # Safety
/// `r` must be null or a live handle that was not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mipm_qp_result_free(r: *mut MipmQpResult) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

unsafe fn copy_out(src: &[f64], buf: *mut f64, len: usize) -> Result<(), (MipmStatus, String)> {
    if len != src.len() {
        return Err((
            MipmStatus::InvalidInput,
            format!("buffer holds {len} values, result has {}", src.len()),
        ));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, len);
    Ok(())
}
