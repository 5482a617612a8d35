//! Dense vector kernels on plain slices.

/// Norms used by the step-size and centrality rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L2,
    L3,
    L4,
    Inf,
}

pub fn norm_p(v: &[f64], p: Norm) -> f64 {
    match p {
        Norm::L2 => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
        Norm::L3 => v.iter().map(|x| x.abs().powi(3)).sum::<f64>().cbrt(),
        Norm::L4 => v.iter().map(|x| x.powi(4)).sum::<f64>().sqrt().sqrt(),
        Norm::Inf => v.iter().fold(0.0_f64, |m, x| m.max(x.abs())),
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn min_entry(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

pub fn max_entry(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

pub fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn l3_of_halves_is_one() {
        let v = [0.5; 8];
        assert!((norm_p(&v, Norm::L3) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_vector_has_zero_norms() {
        let v = [0.0; 5];
        for p in [Norm::L2, Norm::L3, Norm::L4, Norm::Inf] {
            assert_eq!(norm_p(&v, p), 0.0);
        }
    }

    #[test]
    fn three_four_five() {
        assert_eq!(norm_p(&[3.0, 4.0], Norm::L2), 5.0);
        assert_eq!(norm_p(&[3.0, -4.0], Norm::Inf), 4.0);
    }

    #[test]
    fn norms_are_ordered() {
        let v = [0.3, -1.2, 0.7, 2.0, -0.1];
        let (l2, l3, l4, li) = (
            norm_p(&v, Norm::L2),
            norm_p(&v, Norm::L3),
            norm_p(&v, Norm::L4),
            norm_p(&v, Norm::Inf),
        );
        assert!(li <= l4 && l4 <= l3 && l3 <= l2);
    }
}
