//! Dense conversions and direct solves used by the oracles. Nothing here
//! touches the conjugate gradient path.

use nalgebra::{DMatrix, DVector};

use super::sparse::SparseSymMatrix;

pub fn to_dense(a: &SparseSymMatrix) -> DMatrix<f64> {
    let n = a.n();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for (j, v) in a.row(i) {
            m[(i, j)] = v;
        }
    }
    m
}

/// Solves `m y = r` by LU with partial pivoting. `None` if singular.
pub fn lu_solve(m: &DMatrix<f64>, r: &[f64]) -> Option<Vec<f64>> {
    let rhs = DVector::from_column_slice(r);
    m.clone().lu().solve(&rhs).map(|y| y.as_slice().to_vec())
}

/// `(c X A X + I)^{-1} r` by a dense direct solve.
pub fn shifted_solve(a: &DMatrix<f64>, x: &[f64], c: f64, r: &[f64]) -> Option<Vec<f64>> {
    lu_solve(&shifted_system(a, x, c), r)
}

/// `c X A X + I` as a dense matrix.
pub fn shifted_system(a: &DMatrix<f64>, x: &[f64], c: f64) -> DMatrix<f64> {
    let n = x.len();
    DMatrix::from_fn(n, n, |i, j| {
        c * x[i] * a[(i, j)] * x[j] + if i == j { 1.0 } else { 0.0 }
    })
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn lambda_min(a: &DMatrix<f64>) -> f64 {
    a.clone().symmetric_eigen().eigenvalues.min()
}

pub fn inverse(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    a.clone().try_inverse()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shifted_solve_two_by_two() {
        let a = to_dense(
            &SparseSymMatrix::from_dense(&[vec![2.0, -1.0], vec![-1.0, 2.0]]).unwrap(),
        );
        let y = shifted_solve(&a, &[1.0, 1.0], 1.0, &[1.0, 1.0]).unwrap();
        assert!((y[0] - 0.5).abs() < 1e-15 && (y[1] - 0.5).abs() < 1e-15);
        assert!((lambda_min(&a) - 1.0).abs() < 1e-12);
    }
}
