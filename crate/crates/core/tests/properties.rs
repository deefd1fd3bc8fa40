use proptest::prelude::*;

use matroot::backward::{bartels_stewart, kron_solve, lyapunov_grad, BackwardConfig, GradRequest};
use matroot::coeffs::{pade_table, Target};
use matroot::diffcheck::{mae, nrmse};
use matroot::forward::{mpa, mtp, ns_coupled, spectral};
use matroot::matcore::{frobenius_norm, matmul, random_normal, random_spd, solve_spd, sym_eig, Matrix, OpCounters, RandomSpdConfig};

fn spd(dim: usize, seed: u64) -> matroot::SymMatrix {
    random_spd(&RandomSpdConfig::new(dim, seed)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_spd_is_positive_definite(dim in 1usize..24, seed in any::<u64>()) {
        let a = spd(dim, seed);
        let d = sym_eig(&a, &mut OpCounters::new()).unwrap();
        prop_assert!(d.eigenvalues[0] > 0.0);
        let again = spd(dim, seed);
        prop_assert_eq!(a.as_matrix(), again.as_matrix());
    }

    #[test]
    fn matmul_is_associative(n in 1usize..12, seed in any::<u64>()) {
        let mut ops = OpCounters::new();
        let a = random_normal(n, n, seed, 0);
        let b = random_normal(n, n, seed, 1);
        let c = random_normal(n, n, seed, 2);
        let l = matmul(&matmul(&a, &b, &mut ops).unwrap(), &c, &mut ops).unwrap();
        let r = matmul(&a, &matmul(&b, &c, &mut ops).unwrap(), &mut ops).unwrap();
        prop_assert!(frobenius_norm(&l.sub(&r).unwrap()) <= 1e-10 * frobenius_norm(&l).max(1e-300));
        prop_assert_eq!(ops.matmul, 4);
    }

    #[test]
    fn solve_spd_round_trip(n in 1usize..16, seed in any::<u64>()) {
        let a = spd(n, seed);
        let x = random_normal(n, 2, seed, 5);
        let mut ops = OpCounters::new();
        let b = matmul(&a, &x, &mut ops).unwrap();
        let got = solve_spd(&a, &b, &mut ops).unwrap();
        let cond = {
            let d = sym_eig(&a, &mut ops).unwrap();
            d.eigenvalues[n - 1] / d.eigenvalues[0]
        };
        prop_assert!(nrmse(&got, &x).unwrap() <= 1e-13 * cond.max(1.0));
    }

    #[test]
    fn spectral_roots_are_consistent(n in 1usize..16, seed in any::<u64>()) {
        let a = spd(n, seed);
        let s = spectral(&a, Target::Sqrt).unwrap().value;
        let i = spectral(&a, Target::InvSqrt).unwrap().value;
        let mut ops = OpCounters::new();
        let sq = matmul(&s, &s, &mut ops).unwrap();
        prop_assert!(nrmse(&sq, &a).unwrap() < 1e-9);
        let si = matmul(&s, &i, &mut ops).unwrap();
        let d = sym_eig(&a, &mut ops).unwrap();
        let cond = (d.eigenvalues[n - 1] / d.eigenvalues[0]).sqrt();
        prop_assert!(si.sub(&Matrix::identity(n)).unwrap().max_abs() < 1e-13 * cond.max(1.0) * n as f64);
    }

    #[test]
    fn approximants_are_symmetric_and_finite(n in 1usize..20, seed in any::<u64>(), k in 1usize..9) {
        let a = spd(n, seed);
        for t in [Target::Sqrt, Target::InvSqrt] {
            for v in [mtp(&a, t, 2 * k).unwrap().value, mpa(&a, t, 2 * k + 1).unwrap().value] {
                prop_assert!(v.is_finite());
                prop_assert_eq!(v.asymmetry(), 0.0);
            }
        }
    }

    #[test]
    fn higher_degree_is_more_accurate(n in 2usize..20, seed in any::<u64>()) {
        let a = spd(n, seed);
        for t in [Target::Sqrt, Target::InvSqrt] {
            let exact = spectral(&a, t).unwrap().value;
            let lo = mae(&mpa(&a, t, 5).unwrap().value, &exact).unwrap();
            let hi = mae(&mpa(&a, t, 15).unwrap().value, &exact).unwrap();
            prop_assert!(hi <= lo);
            let lo = mae(&mtp(&a, t, 5).unwrap().value, &exact).unwrap();
            let hi = mae(&mtp(&a, t, 15).unwrap().value, &exact).unwrap();
            prop_assert!(hi <= lo);
        }
    }

    #[test]
    fn ns_product_tends_to_identity(n in 1usize..16, seed in any::<u64>()) {
        let a = spd(n, seed);
        let (s, i) = ns_coupled(&a, 6).unwrap();
        let (s2, i2) = ns_coupled(&a, 12).unwrap();
        let mut ops = OpCounters::new();
        let e1 = frobenius_norm(&matmul(&s.value, &i.value, &mut ops).unwrap().sub(&Matrix::identity(n)).unwrap());
        let e2 = frobenius_norm(&matmul(&s2.value, &i2.value, &mut ops).unwrap().sub(&Matrix::identity(n)).unwrap());
        prop_assert!(e2 <= e1 + 1e-12);
    }

    #[test]
    fn lyapunov_solvers_agree(n in 1usize..7, seed in any::<u64>()) {
        let b = spd(n, seed);
        let c = random_normal(n, n, seed, 3);
        let x = bartels_stewart(&b, &c).unwrap();
        prop_assert!(nrmse(&kron_solve(&b, &c).unwrap(), &x).unwrap() < 1e-8);
        let mut ops = OpCounters::new();
        let lhs = matmul(&b, &x, &mut ops).unwrap().add(&matmul(&x, &b, &mut ops).unwrap()).unwrap();
        prop_assert!(nrmse(&lhs, &c).unwrap() < 1e-9);
    }

    #[test]
    fn lyapunov_gradient_is_linear_in_upstream(n in 1usize..10, seed in any::<u64>(), alpha in -3.0f64..3.0) {
        let a = spd(n, seed);
        let s = spectral(&a, Target::Sqrt).unwrap().value;
        let g = random_normal(n, n, seed, 4).symmetrized();
        let run = |u: Matrix| lyapunov_grad(&GradRequest {
            target: Target::Sqrt,
            a: a.clone(),
            forward_value: s.clone(),
            upstream: u,
            config: BackwardConfig::with_iterations(6),
        }).unwrap().grad;
        let scaled = run(g.scale(alpha));
        let base = run(g).scale(alpha);
        prop_assert!(scaled.sub(&base).unwrap().max_abs() <= 1e-12 * base.max_abs().max(1.0));
    }
}

#[test]
fn pade_matches_series_to_order_m_plus_n() {
    for m in 1..10 {
        for n in 1..10 {
            for t in [Target::Sqrt, Target::InvSqrt] {
                let tab = pade_table(t, m, n).unwrap();
                let err = |z: f64| (tab.eval(z) - (1.0 - z).powf(t.exponent())).abs();
                if m + n <= 5 {
                    // error ~ c·z^{M+N+1}: halving z divides it by 2^{M+N+1}
                    let order = (err(0.05) / err(0.025)).log2();
                    assert!((order - (m + n + 1) as f64).abs() < 0.3, "{t} [{m},{n}] order {order}");
                } else {
                    assert!(err(0.01) < 1e-12, "{t} [{m},{n}] error {:e}", err(0.01));
                }
            }
        }
    }
}
