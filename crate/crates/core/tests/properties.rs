use cmop_core::cmat::{adjoint_product, frob_norm, re_frob_inner, row_sq_norms};
use cmop_core::diagnostics::{monitor_lemma2, monitor_lemma4, monitor_lipschitz, monitor_thm2, monitor_thm3};
use cmop_core::projection::{is_feasible, project_rows, vi_residual};
use cmop_core::sample::{random_feasible, random_instance, random_matrix, Prng};
use cmop_core::solvers::{
    active_set_oracle, complex_iteration_flops, gd_solve, pgd_solve, StepSize,
};
use cmop_core::{ComplexMatrix, Precomputed, RowBall, SolverConfig, C64};
use proptest::prelude::*;

fn pair(seed: u64, rows: usize, cols: usize) -> (ComplexMatrix, ComplexMatrix) {
    let mut rng = Prng::new(seed);
    (random_matrix(&mut rng, rows, cols, 5.0), random_matrix(&mut rng, rows, cols, 5.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inner_product_is_symmetric_and_bilinear(seed in any::<u64>(), s in -3.0f64..3.0, rows in 1usize..6, cols in 1usize..6) {
        let (x, y) = pair(seed, rows, cols);
        let z = random_matrix(&mut Prng::new(seed ^ 1), rows, cols, 5.0);
        let xy = re_frob_inner(&x, &y).unwrap();
        prop_assert!((xy - re_frob_inner(&y, &x).unwrap()).abs() <= 1e-12 * (1.0 + xy.abs()));
        let lhs = re_frob_inner(&x.scale(s).add(&z).unwrap(), &y).unwrap();
        let rhs = s * xy + re_frob_inner(&z, &y).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-11 * (1.0 + lhs.abs() + rhs.abs()));
        prop_assert!(xy.abs() <= frob_norm(&x) * frob_norm(&y) * (1.0 + 1e-14));
    }

    #[test]
    fn squared_norm_is_sum_of_row_norms(seed in any::<u64>(), rows in 1usize..8, cols in 1usize..8) {
        let (x, _) = pair(seed, rows, cols);
        let total = row_sq_norms(&x).sum();
        let sq = frob_norm(&x).powi(2);
        prop_assert!((total - sq).abs() <= 1e-12 * sq.max(1.0));
    }

    #[test]
    fn adjoint_product_of_itself_is_hermitian(seed in any::<u64>(), rows in 1usize..8, cols in 1usize..6) {
        let (x, _) = pair(seed, rows, cols);
        prop_assert!(adjoint_product(&x, &x).unwrap().is_hermitian(1e-12));
    }

    #[test]
    fn projection_is_idempotent_and_feasible(seed in any::<u64>(), eta in 0.1f64..5.0) {
        let (w, _) = pair(seed, 5, 8);
        let ball = RowBall::from_eta(eta).unwrap();
        let p = project_rows(&w, &ball);
        prop_assert!(is_feasible(&p, &ball, 1e-12));
        prop_assert_eq!(project_rows(&p, &ball), p);
    }

    #[test]
    fn projection_is_nonexpansive(seed in any::<u64>(), eta in 0.1f64..5.0) {
        let (x, y) = pair(seed, 5, 8);
        let ball = RowBall::from_eta(eta).unwrap();
        let d = frob_norm(&project_rows(&x, &ball).sub(&project_rows(&y, &ball)).unwrap());
        prop_assert!(d <= frob_norm(&x.sub(&y).unwrap()) + 1e-12);
    }

    #[test]
    fn projection_commutes_with_unit_phase(seed in any::<u64>(), phase in 0.0f64..6.3) {
        let (w, _) = pair(seed, 4, 3);
        let ball = RowBall::from_eta(2.0).unwrap();
        let u = C64::from_polar(1.0, phase);
        let lhs = project_rows(&w.scale_complex(u), &ball);
        let rhs = project_rows(&w, &ball).scale_complex(u);
        prop_assert!(lhs.max_abs_diff(&rhs).unwrap() <= 1e-12);
    }

    #[test]
    fn projection_acts_row_by_row(seed in any::<u64>(), row in 0usize..5) {
        let (w, other) = pair(seed, 5, 8);
        let ball = RowBall::from_eta(2.0).unwrap();
        let mixed = ComplexMatrix::from_fn(5, 8, |r, c| if r == row { other.get(r, c) } else { w.get(r, c) }).unwrap();
        let (p, q) = (project_rows(&w, &ball), project_rows(&mixed, &ball));
        for r in (0..5).filter(|&r| r != row) {
            prop_assert_eq!(p.row(r), q.row(r));
        }
    }

    #[test]
    fn projection_satisfies_variational_inequality(seed in any::<u64>()) {
        let mut rng = Prng::new(seed);
        let ball = RowBall::from_eta(2.0).unwrap();
        let v = random_matrix(&mut rng, 5, 8, 3.0);
        let z = random_feasible(&mut rng, 5, 8, ball.radius());
        let r = vi_residual(&project_rows(&v, &ball), &v, &z, &ball).unwrap();
        prop_assert!(r >= -1e-10 * (1.0 + frob_norm(&v).powi(2)));
    }

    #[test]
    fn instance_generation_is_deterministic(seed in any::<u64>()) {
        let a = random_instance(4, 3, 2, 10.0, 2.0, seed).unwrap();
        let b = random_instance(4, 3, 2, 10.0, 2.0, seed).unwrap();
        prop_assert_eq!(a.h(), b.h());
        prop_assert_eq!(a.a(), b.a());
        prop_assert!(a.h().as_slice().iter().all(|z| z.re.abs() <= 10.0 && z.im.abs() <= 10.0));
    }
}

#[test]
fn convexity_and_lipschitz_monitors_pass() {
    let inst = random_instance(10, 5, 8, 10.0, 2.0, 31).unwrap();
    let pre = Precomputed::new(&inst).unwrap();
    let mut rng = Prng::new(32);
    let pairs: Vec<_> = (0..100)
        .map(|_| (random_matrix(&mut rng, 5, 8, 3.0), random_matrix(&mut rng, 5, 8, 3.0)))
        .collect();
    assert!(monitor_lemma2(&pre, &inst, &pairs).unwrap().passed);
    let lip = monitor_lipschitz(inst.h(), pre.lipschitz(), 1000, 33, 8).unwrap();
    assert!(lip.report.passed);
    assert!(lip.tightest_ratio <= pre.lipschitz());

    // Along the top eigenvector the bound is attained.
    let v = ComplexMatrix::new(5, 1, pre.top_eigenvector().to_vec()).unwrap();
    let ratio = frob_norm(&inst.h().matmul(&v).unwrap()).powi(2) / frob_norm(&v).powi(2);
    approx::assert_relative_eq!(ratio, pre.lipschitz(), max_relative = 1e-8);
}

#[test]
fn descent_monitors_pass_inside_the_interval() {
    let inst = random_instance(10, 5, 8, 10.0, 2.0, 34).unwrap();
    let pre = Precomputed::new(&inst).unwrap();
    let w0 = ComplexMatrix::zeros(5, 8);
    for f in [0.25, 0.5, 0.95] {
        let gd = gd_solve(&pre, &inst, &w0, &SolverConfig::new(StepSize::FractionOfTwoOverL(f))).unwrap();
        assert!(monitor_thm2(&gd.trace, gd.alpha, pre.lipschitz()).unwrap().passed);
    }
    let ball = RowBall::from_eta(2.0).unwrap();
    let w_opt = active_set_oracle(&pre, &inst, 1e-12, 10_000).unwrap().result.w_final;
    for f in [0.5, 0.9] {
        let cfg = SolverConfig::new(StepSize::FractionOfOneOverL(f)).record_iterates(true);
        let pgd = pgd_solve(&pre, &inst, &w0, &ball, &cfg).unwrap();
        let (dec, fej) = monitor_thm3(&pgd.trace, &pgd.iterates, &w_opt, pgd.alpha, pre.lipschitz()).unwrap();
        assert!(dec.passed && fej.passed);
    }
    let pairs: Vec<_> = {
        let mut rng = Prng::new(35);
        (0..500)
            .map(|_| (random_matrix(&mut rng, 5, 8, 3.0), random_feasible(&mut rng, 5, 8, ball.radius())))
            .collect()
    };
    assert!(monitor_lemma4(&ball, &pairs).unwrap().passed);
}

#[test]
fn solves_are_bitwise_reproducible() {
    let inst = random_instance(10, 5, 8, 10.0, 2.0, 36).unwrap();
    let run = || {
        let pre = Precomputed::new(&inst).unwrap();
        let cfg = SolverConfig::new(StepSize::FractionOfOneOverL(0.9));
        pgd_solve(&pre, &inst, &ComplexMatrix::zeros(5, 8), &RowBall::from_eta(2.0).unwrap(), &cfg).unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a.w_final, b.w_final);
    assert_eq!(a.trace, b.trace);
}

#[test]
fn flop_count_ignores_the_number_of_measurements() {
    let cfg = SolverConfig::new(StepSize::FractionOfOneOverL(0.9)).max_iter(3);
    let ball = RowBall::from_eta(2.0).unwrap();
    for (m, n, k) in [(10, 5, 8), (100, 5, 8), (12, 10, 8), (40, 5, 16)] {
        let inst = random_instance(m, n, k, 10.0, 2.0, 37).unwrap();
        let pre = Precomputed::new(&inst).unwrap();
        let res = pgd_solve(&pre, &inst, &ComplexMatrix::zeros(n, k), &ball, &cfg).unwrap();
        assert!(res.trace.iter().all(|r| r.flops == complex_iteration_flops(n, k, true)));
    }
}
