use nalgebra::DMatrix;

use super::StepKind;
use crate::central_path::{CongestionVector, PathKernel};
use crate::error::Result;
use crate::linalg::dense::{lu_solve, to_dense};
use crate::linalg::vector::norm2;
use crate::linalg::SparseSymMatrix;

/// `1^T (X A X / mu0 + I)^{-1} 1`.
pub fn potential(kernel: &PathKernel<'_>, x: &[f64], mu0: f64) -> Result<f64> {
    kernel.potential(x, mu0).map(|(phi, _)| phi)
}

/// Long iff `rho_l3 <= threshold_coeff * n^(1/3)`; the boundary counts as long.
pub fn classify_step(rho_l3: f64, n: usize, threshold_coeff: f64) -> StepKind {
    if rho_l3 <= threshold_coeff * (n as f64).cbrt() {
        StepKind::Long
    } else {
        StepKind::Short
    }
}

/// `0 < Phi <= n`: excess over `n`, or 1 for a non-positive potential.
pub fn potential_violation(phi: f64, n: usize) -> f64 {
    if !(phi > 0.0) {
        return 1.0;
    }
    (phi - n as f64).max(0.0)
}

/// Violations of `rho_hat(x, mu0) >= (mu0/mu) rho_hat(x, mu)` (pointwise) and
/// `||rho_hat(x, mu)||_2 >= (mu0/mu) ||rho_hat(x, mu0)||_2`, for `mu0 <= mu`.
pub fn stability_violation(mu0: f64, mu: f64, rho_hat_mu0: &[f64], rho_hat_mu: &[f64]) -> (f64, f64) {
    let ratio = mu0 / mu;
    let pointwise = rho_hat_mu0
        .iter()
        .zip(rho_hat_mu)
        .map(|(r0, r)| ratio * r - r0)
        .fold(0.0, f64::max);
    let norm = (ratio * norm2(rho_hat_mu0) - norm2(rho_hat_mu)).max(0.0);
    (pointwise, norm)
}

/// Evaluates both stability clauses with two shifted solves.
pub fn check_stability_lemma(
    kernel: &PathKernel<'_>,
    x: &[f64],
    mu0: f64,
    mu: f64,
) -> Result<(f64, f64)> {
    let r0 = kernel.unnormalized_congestion(x, mu0)?;
    let r = kernel.unnormalized_congestion(x, mu)?;
    Ok(stability_violation(mu0, mu, &r0.rho_hat, &r.rho_hat))
}

/// Forward energy bound
/// `Phi' >= Phi - 8 alpha n^(1/6) ||rho_hat||_2 + 2^-11 alpha ||rho_hat||_3^2`.
pub fn energy_forward_violation(
    phi: f64,
    phi_next: f64,
    alpha: f64,
    target: &CongestionVector,
    n: usize,
) -> f64 {
    let n6 = (n as f64).powf(1.0 / 6.0);
    let rhs = phi - 8.0 * alpha * n6 * target.l2 + alpha * target.l3 * target.l3 / 2048.0;
    (rhs - phi_next).max(0.0)
}

/// Backward energy bound
/// `Phi' <= Phi + 32 alpha n^(1/6) ||rho_hat||_2 - alpha ||rho_hat||_3^2 / 2`.
pub fn energy_backward_violation(
    phi: f64,
    phi_next: f64,
    alpha: f64,
    target: &CongestionVector,
    n: usize,
) -> f64 {
    let n6 = (n as f64).powf(1.0 / 6.0);
    let rhs = phi + 32.0 * alpha * n6 * target.l2 - 0.5 * alpha * target.l3 * target.l3;
    (phi_next - rhs).max(0.0)
}

/// `zeta` in `x_new = x_old (1 + sign delta rho_hat + sign zeta)`, with
/// `sign = +1` when `mu` increases and `-1` when it decreases.
pub fn full_correction_zeta(x_old: &[f64], x_new: &[f64], delta: f64, rho_hat: &[f64], increasing: bool) -> Vec<f64> {
    x_old
        .iter()
        .zip(x_new)
        .zip(rho_hat)
        .map(|((xo, xn), r)| {
            if increasing {
                xn / xo - 1.0 - delta * r
            } else {
                1.0 - delta * r - xn / xo
            }
        })
        .collect()
}

/// Largest coordinate decrease between consecutive centered points,
/// relative to `||x_prev||_inf`.
pub fn monotonicity_violation(x_prev: &[f64], x_next: &[f64]) -> f64 {
    let scale = x_prev.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    x_prev
        .iter()
        .zip(x_next)
        .map(|(p, q)| (p - q) / scale)
        .fold(0.0, f64::max)
}

/// Relative excess of `||x||_2^2` over `max(2 mu n / lambda_min, (2 ||b||_2 / lambda_min)^2)`.
pub fn x_bound_violation(x: &[f64], mu: f64, b_norm: f64, lambda_min: f64) -> f64 {
    let n = x.len() as f64;
    let bound = (2.0 * mu * n / lambda_min).max((2.0 * b_norm / lambda_min).powi(2));
    let x2 = x.iter().map(|v| v * v).sum::<f64>();
    ((x2 - bound) / bound).max(0.0)
}

/// Both sides of a general energy inequality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyComparison {
    pub lhs: f64,
    pub rhs: f64,
}

fn general_energy_parts(a: &DMatrix<f64>, r: &[f64]) -> Option<(f64, f64, Vec<f64>)> {
    let n = r.len();
    let shifted = a + DMatrix::identity(n, n);
    let rho = lu_solve(&shifted, &vec![1.0; n])?;
    let base: f64 = rho.iter().sum();
    let scaled = DMatrix::from_fn(n, n, |i, j| {
        (1.0 + r[i]) * a[(i, j)] * (1.0 + r[j]) + if i == j { 1.0 } else { 0.0 }
    });
    let lhs: f64 = lu_solve(&scaled, &vec![1.0; n])?.iter().sum();
    Some((lhs, base, rho))
}

/// `1^T((I+R)A(I+R)+I)^{-1}1 >= 1^T(A+I)^{-1}1 - 2<r,rho> + 2(1+||r||_inf)^-4 <r,rho^2>`
/// for `r >= 0`, with `rho = (A+I)^{-1} 1`. Dense solves only.
pub fn general_energy_forward(a: &DMatrix<f64>, r: &[f64]) -> Option<EnergyComparison> {
    let (lhs, base, rho) = general_energy_parts(a, r)?;
    let rinf = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let r_rho: f64 = r.iter().zip(&rho).map(|(a, b)| a * b).sum();
    let r_rho2: f64 = r.iter().zip(&rho).map(|(a, b)| a * b * b).sum();
    let rhs = base - 2.0 * r_rho + 2.0 * (1.0 + rinf).powi(-4) * r_rho2;
    Some(EnergyComparison { lhs, rhs })
}

/// `1^T((I+R)A(I+R)+I)^{-1}1 <= 1^T(A+I)^{-1}1 - 6<r,rho> + 1.5<r,rho^2>`
/// for `-1/2 <= r <= 0`.
pub fn general_energy_backward(a: &DMatrix<f64>, r: &[f64]) -> Option<EnergyComparison> {
    let (lhs, base, rho) = general_energy_parts(a, r)?;
    let r_rho: f64 = r.iter().zip(&rho).map(|(a, b)| a * b).sum();
    let r_rho2: f64 = r.iter().zip(&rho).map(|(a, b)| a * b * b).sum();
    let rhs = base - 6.0 * r_rho + 1.5 * r_rho2;
    Some(EnergyComparison { lhs, rhs })
}

/// Violation magnitude `max(0, rhs - lhs)` of the forward general lemma.
pub fn check_general_energy_lemma(a: &SparseSymMatrix, r: &[f64]) -> f64 {
    match general_energy_forward(&to_dense(a), r) {
        Some(c) => (c.rhs - c.lhs).max(0.0),
        None => f64::INFINITY,
    }
}

/// Violation magnitude `max(0, lhs - rhs)` of the backward general lemma.
pub fn check_general_energy_lemma_backward(a: &SparseSymMatrix, r: &[f64]) -> f64 {
    match general_energy_backward(&to_dense(a), r) {
        Some(c) => (c.lhs - c.rhs).max(0.0),
        None => f64::INFINITY,
    }
}
