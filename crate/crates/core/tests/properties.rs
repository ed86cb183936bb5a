use lmi_codesign::analysis::ellipsoid_boundary_points;
use lmi_codesign::cli::sig6;
use lmi_codesign::model::{make_detector, Ellipsoid, GainPair, LtiSystem};
use lmi_codesign::numerics::{
    chi2_cdf, chi2_quantile, dlyap, kron, solve_quadratic_matrix_eq, spectral_radius, sqrtm_psd, symmetrize,
    QuadraticMatrixProblem,
};
use lmi_codesign::sdp::{AffineMatrix, SdpProblem};
use lmi_codesign::simulator::{simulate, AttackStrategy, PhiPolicy, SimConfig};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn square(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-2.0..2.0f64, n * n).prop_map(move |v| DMatrix::from_vec(n, n, v))
}

fn sized_square(max: usize) -> impl Strategy<Value = DMatrix<f64>> {
    (1..=max).prop_flat_map(square)
}

fn stable(max: usize) -> impl Strategy<Value = DMatrix<f64>> {
    (sized_square(max), 0.0..0.97f64).prop_map(|(m, target)| {
        let r = spectral_radius(&m);
        if r < 1e-9 {
            m
        } else {
            m * (target / r)
        }
    })
}

fn spd(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    square(n).prop_map(move |b| &b * b.transpose() + DMatrix::identity(n, n) * 0.05)
}

fn case_gains() -> GainPair {
    GainPair::new(
        DMatrix::from_row_slice(2, 2, &[0.1273, -2.0544, -0.4303, 1.4190]),
        DMatrix::from_row_slice(2, 2, &[1.0085, -0.9780, -0.0139, 0.2664]),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lyapunov_residual_vanishes(a in stable(4), seed in square(4)) {
        let n = a.nrows();
        let b = seed.view((0, 0), (n, n)).into_owned();
        let q = &b * b.transpose();
        let x = dlyap(&a, &q).unwrap();
        let scale = 1.0 + x.norm();
        prop_assert!((&x - &a * &x * a.transpose() - &q).norm() < 1e-10 * scale);
        prop_assert!((&x - x.transpose()).amax() < 1e-10 * scale);
    }

    #[test]
    fn riccati_solutions_satisfy_equation(n in 1usize..=2, entries in prop::collection::vec(-2.0..2.0f64, 16)) {
        let g = |k: usize| DMatrix::from_fn(n, n, |i, j| entries[4 * k + n * i + j]);
        let problem = QuadraticMatrixProblem::new(g(0), g(1), g(2), g(3)).unwrap();
        let set = solve_quadratic_matrix_eq(&problem);
        prop_assert_eq!(set.solutions.len(), set.residuals.len());
        for x in &set.solutions {
            prop_assert!(problem.residual(x) < 1e-8 * (1.0 + x.norm().powi(2)));
        }
    }

    #[test]
    fn chi2_quantile_inverts_cdf(p in 0.01..0.999f64, dof in 1usize..6) {
        let x = chi2_quantile(p, dof).unwrap();
        prop_assert!((chi2_cdf(x, dof) - p).abs() < 1e-9);
    }

    #[test]
    fn psd_square_root_squares_back(m in (1usize..=4).prop_flat_map(spd)) {
        let r = sqrtm_psd(&m);
        prop_assert!((&r - r.transpose()).amax() < 1e-12);
        prop_assert!((&r * &r - &m).amax() < 1e-9 * (1.0 + m.amax()));
    }

    #[test]
    fn kron_mixed_product(a in square(2), b in square(2), c in square(2), d in square(2)) {
        let lhs = kron(&a, &b) * kron(&c, &d);
        let rhs = kron(&(&a * &c), &(&b * &d));
        prop_assert!((lhs - rhs).amax() < 1e-12);
    }

    #[test]
    fn boundary_points_lie_on_ellipse(shape in spd(2), count in 3usize..40) {
        let ellipsoid = Ellipsoid::new(shape.clone()).unwrap();
        for (_, p) in ellipsoid_boundary_points(&shape, count).unwrap() {
            prop_assert!((ellipsoid.level(&p).unwrap() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn gains_json_round_trip(k in square(2), l in square(2)) {
        let gains = GainPair::new(k, l);
        let text = serde_json::to_string(&gains).unwrap();
        prop_assert_eq!(GainPair::from_json(&text).unwrap(), gains);
    }

    #[test]
    fn symmetrize_is_idempotent(m in sized_square(4)) {
        let s = symmetrize(&m);
        prop_assert_eq!(symmetrize(&s), s.clone());
        prop_assert_eq!(s.clone(), s.transpose());
    }

    #[test]
    fn six_digit_summary_round_trips(x in prop::num::f64::NORMAL) {
        let back: f64 = sig6(x).parse().unwrap();
        prop_assert!((back - x).abs() <= 5e-6 * x.abs());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn sdp_recovers_largest_eigenvalue(m in spd(3)) {
        let mut prob = SdpProblem::new();
        let t = prob.add_scalar_var("t", None, None).unwrap();
        let lmi = AffineMatrix::scalar_times(&t.expr(), &DMatrix::identity(3, 3)) - AffineMatrix::constant(m.clone());
        prob.add_psd_block(&lmi).unwrap();
        prob.set_objective(t.expr());
        let sol = prob.solve_default();
        prop_assert!(sol.is_optimal());
        let top = m.symmetric_eigenvalues().max();
        prop_assert!((sol.scalar(t) - top).abs() < 1e-6 * (1.0 + top));
    }

    #[test]
    fn zero_alarm_attack_is_silent(seed in any::<u64>(), scale in 0.05..=1.0f64, rate in -1.0..1.0f64) {
        let sys = LtiSystem::case_study();
        let det = make_detector(0.05, 2).unwrap();
        let gains = case_gains();
        let strategy = AttackStrategy::zero_alarm(PhiPolicy::Rotating { rate }, scale);
        let trace = simulate(&sys, &gains, &det, &strategy, &SimConfig::new(400, seed), None).unwrap();
        prop_assert!(trace.alarms.is_empty());
        prop_assert!(trace.max_z() <= det.alpha);
        for k in 0..trace.steps() {
            prop_assert!((&trace.e[k] - (&trace.x[k] - &trace.xhat[k])).amax() <= 1e-12);
        }
    }
}
