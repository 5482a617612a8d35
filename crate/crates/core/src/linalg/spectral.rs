use super::sparse::SparseSymMatrix;
use super::vector::{dot, norm2};

/// Outcome of a power iteration run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralEstimate {
    pub value: f64,
    pub iterations: usize,
    /// Final `||w - theta v||_2` for the unit iterate `v`.
    pub residual: f64,
    pub converged: bool,
}

/// Deterministic start vector: all ones plus `1e-3 (i mod 7)`.
pub fn start_vector(n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 1e-3 * (i % 7) as f64).collect();
    let nv = norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    v
}

/// Power iteration for the dominant eigenvalue of a symmetric operator.
///
/// The estimate is the Rayleigh quotient of the current unit iterate. The run
/// stops once `||w - theta v|| <= tol |theta|`.
pub fn power_iteration<F>(n: usize, mut apply: F, tol: f64, max_iters: usize) -> SpectralEstimate
where
    F: FnMut(&[f64], &mut [f64]),
{
    if n == 0 {
        return SpectralEstimate {
            value: 0.0,
            iterations: 0,
            residual: 0.0,
            converged: true,
        };
    }
    let mut v = start_vector(n);
    let mut w = vec![0.0; n];
    let mut theta = 0.0;
    let mut residual = f64::INFINITY;
    for it in 1..=max_iters.max(1) {
        apply(&v, &mut w);
        theta = dot(&v, &w);
        residual = v
            .iter()
            .zip(&w)
            .map(|(vi, wi)| (wi - theta * vi).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual <= tol * theta.abs() {
            return SpectralEstimate {
                value: theta,
                iterations: it,
                residual,
                converged: true,
            };
        }
        let nw = norm2(&w);
        if nw == 0.0 || !nw.is_finite() {
            break;
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / nw;
        }
    }
    SpectralEstimate {
        value: theta,
        iterations: max_iters,
        residual,
        converged: false,
    }
}

/// Upper estimate of the largest eigenvalue of `A`.
///
/// Runs power iteration on `A + sigma I` where `sigma` is the maximum absolute
/// row sum, so the shifted operator is positive semidefinite, then removes the
/// shift and inflates by `1 + tol`.
pub fn estimate_lambda_max(a: &SparseSymMatrix, tol: f64, max_iters: usize) -> SpectralEstimate {
    let sigma = a.max_abs_row_sum();
    let mut est = power_iteration(
        a.n(),
        |v, w| {
            a.matvec_into(v, w);
            for (wi, vi) in w.iter_mut().zip(v) {
                *wi += sigma * vi;
            }
        },
        tol,
        max_iters,
    );
    est.value = (est.value - sigma) * (1.0 + tol);
    est
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-6;

    #[test]
    fn lambda_max_identity() {
        let e = estimate_lambda_max(&SparseSymMatrix::identity(5), TOL, 1000);
        assert!(e.converged);
        assert!((e.value - 1.0).abs() <= 2.0 * TOL);
    }

    #[test]
    fn lambda_max_diagonal() {
        let a = SparseSymMatrix::from_diagonal(&[1.0, 2.0, 5.0]);
        let e = estimate_lambda_max(&a, TOL, 10_000);
        assert!(e.converged);
        assert!((e.value - 5.0).abs() <= 5.0 * TOL * 1.01);
        assert!(5.0 <= e.value * (1.0 + TOL));
    }

    #[test]
    fn lambda_max_two_by_two() {
        let a = SparseSymMatrix::from_dense(&[vec![2.0, -1.0], vec![-1.0, 2.0]]).unwrap();
        let e = estimate_lambda_max(&a, TOL, 10_000);
        assert!((e.value - 3.0).abs() <= 3.0 * TOL * 1.01, "{}", e.value);
    }

    #[test]
    fn start_vector_is_unit_and_positive() {
        let v = start_vector(20);
        assert!((norm2(&v) - 1.0).abs() < 1e-15);
        assert!(v.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn non_convergence_is_flagged() {
        let a = SparseSymMatrix::from_diagonal(&[1.0, 1.0 + 1e-9, -1.0]);
        let e = power_iteration(3, |v, w| a.matvec_into(v, w), 1e-14, 3);
        assert!(!e.converged);
    }
}
