use mipm::config::{DiagnosticsLevel, SolverConfig};
use mipm::instances::random_small_mmatrix;
use mipm::linalg::dense::{inverse, lambda_min, shifted_solve, to_dense};
use mipm::linalg::vector::dot;
use mipm::linalg::{CertifiedMatrix, SparseSymMatrix};
use mipm::oracle::{qo_bruteforce, scaling_newton};
use mipm::quadratic::{objective, qo_solve};
use mipm::scaling::{ms_solve, scaling_residual};
use mipm::solver::{solve_shifted, SolveParams};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn matrix(n: usize, seed: u64) -> SparseSymMatrix {
    random_small_mmatrix(n, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn quiet() -> SolverConfig {
    SolverConfig {
        diagnostics_level: DiagnosticsLevel::Off,
        ..SolverConfig::default()
    }
}

fn vec_of(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn matvec_is_symmetric((n, seed, u, v) in (2usize..20, any::<u64>())
        .prop_flat_map(|(n, s)| (Just(n), Just(s), vec_of(n), vec_of(n))))
    {
        let a = matrix(n, seed);
        let lhs = dot(&u, &a.matvec(&v).unwrap());
        let rhs = dot(&v, &a.matvec(&u).unwrap());
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn cg_matches_dense((n, seed, r, x) in (2usize..20, any::<u64>())
        .prop_flat_map(|(n, s)| (Just(n), Just(s), vec_of(n), prop::collection::vec(0.1f64..3.0, n))),
        c in 0.01f64..100.0)
    {
        let a = matrix(n, seed);
        let (y, report) = solve_shifted(&a, &x, c, &r, &SolveParams::default()).unwrap();
        prop_assert!(report.converged);
        let z = shifted_solve(&to_dense(&a), &x, c, &r).unwrap();
        let scale = 1.0 + z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (yi, zi) in y.iter().zip(&z) {
            prop_assert!((yi - zi).abs() <= 1e-8 * scale);
        }
    }

    #[test]
    fn certified_lambda_min_is_close(n in 2usize..20, seed: u64) {
        let a = matrix(n, seed);
        let exact = lambda_min(&to_dense(&a));
        let c = CertifiedMatrix::new(a).unwrap();
        let est = c.certificate().lambda_min_estimate;
        prop_assert!((est - exact).abs() <= 0.02 * exact, "est {est} exact {exact}");
    }

    #[test]
    fn mmatrix_inverse_is_nonnegative(n in 2usize..16, seed: u64) {
        let inv = inverse(&to_dense(&matrix(n, seed))).unwrap();
        prop_assert!(inv.iter().all(|v| *v >= -1e-12));
    }

    #[test]
    fn scaling_matches_newton(n in 2usize..12, seed: u64) {
        let a = CertifiedMatrix::new(matrix(n, seed)).unwrap();
        let eps = 1e-7;
        let r = ms_solve(&a, eps, &quiet()).unwrap();
        prop_assert!(r.x_scaled.iter().all(|v| *v > 0.0));
        prop_assert!(scaling_residual(&a, &r.x_scaled).unwrap() <= eps);
        let reference = scaling_newton(a.matrix(), 1e-10, 200).unwrap();
        for (u, v) in r.x_scaled.iter().zip(&reference) {
            prop_assert!((u - v).abs() <= 1e-4 * v, "{u} vs {v}");
        }
    }

    #[test]
    fn qp_is_feasible_and_near_optimal((n, seed, b) in (2usize..9, any::<u64>())
        .prop_flat_map(|(n, s)| (Just(n), Just(s), vec_of(n))))
    {
        let a = CertifiedMatrix::new(matrix(n, seed)).unwrap();
        let eps = 1e-6;
        let r = qo_solve(&a, &b, eps, &quiet()).unwrap();
        prop_assert!(r.x.iter().all(|v| *v > 0.0));
        let f = objective(a.matrix(), &b, &r.x).unwrap();
        let opt = qo_bruteforce(a.matrix(), &b).unwrap().objective;
        prop_assert!(f >= opt - 1e-9);
        prop_assert!(f - opt <= eps + 1e-9, "excess {}", f - opt);
    }

    #[test]
    fn solves_are_deterministic(n in 2usize..10, seed: u64) {
        let a = CertifiedMatrix::new(matrix(n, seed)).unwrap();
        let r1 = ms_solve(&a, 1e-6, &quiet()).unwrap();
        let r2 = ms_solve(&a, 1e-6, &quiet()).unwrap();
        prop_assert_eq!(r1.x_scaled, r2.x_scaled);
        prop_assert_eq!(r1.iterations, r2.iterations);
    }
}

#[test]
fn matrix_market_round_trip() {
    let a = matrix(12, 7);
    let mut buf = Vec::new();
    mipm::io::write_matrix_market_to(&mut buf, &a).unwrap();
    let b = mipm::io::parse_matrix_market(&buf[..], std::path::Path::new("mem")).unwrap();
    assert_eq!(a.n(), b.n());
    for i in 0..a.n() {
        for j in 0..a.n() {
            assert_eq!(a.get(i, j), b.get(i, j));
        }
    }
}
