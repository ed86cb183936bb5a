//! Values frozen from independent computations: scipy for Lyapunov
//! solutions and CVXOPT (through cvxpy) for the semidefinite programs.

use approx::assert_relative_eq;
use lmi_codesign::analysis::{bound_reachable_set, default_a_grid};
use lmi_codesign::h2design::{evaluate_gamma, open_loop_gamma, optimal_occ_h2};
use lmi_codesign::model::{make_detector, residual_covariance, GainPair, LtiSystem, TruncationConfig};
use nalgebra::DMatrix;

fn gains(k: [f64; 4], l: [f64; 4]) -> GainPair {
    GainPair::new(
        DMatrix::from_row_slice(2, 2, &k),
        DMatrix::from_row_slice(2, 2, &l),
    )
}

fn h2_gains() -> GainPair {
    gains(
        [0.1273, -2.0544, -0.4303, 1.4190],
        [1.0085, -0.9780, -0.0139, 0.2664],
    )
}

fn iterative_gains() -> GainPair {
    gains(
        [0.1440, -2.0390, -0.4441, 1.4063],
        [0.0956, -0.1248, -0.1010, 0.1321],
    )
}

fn convex_gains() -> GainPair {
    gains(
        [0.1902, -1.9945, -0.4757, 1.3759],
        [0.1274, -0.1737, -0.2019, 0.2872],
    )
}

#[test]
fn open_loop_performance() {
    let sys = LtiSystem::case_study();
    assert_relative_eq!(open_loop_gamma(&sys).unwrap(), 10.187398, max_relative = 1e-6);
}

#[test]
fn achieved_performance_at_reference_gains() {
    let sys = LtiSystem::case_study();
    for (g, want) in [
        (h2_gains(), 1.570539),
        (iterative_gains(), 6.919076),
        (convex_gains(), 6.811813),
    ] {
        assert_relative_eq!(evaluate_gamma(&sys, &g).unwrap().gamma, want, max_relative = 1e-6);
    }
}

#[test]
fn optimal_covariance_design() {
    let sys = LtiSystem::case_study();
    let res = optimal_occ_h2(&sys).unwrap();
    assert_relative_eq!(res.gamma_star, 1.57053, max_relative = 1e-5);
}

#[test]
fn reachable_set_traces_at_reference_gains() {
    let sys = LtiSystem::case_study();
    let det = make_detector(0.05, 2).unwrap();
    let trunc = TruncationConfig::default_for(&sys);
    let grid = default_a_grid();
    for (g, want) in [
        (h2_gains(), 330.7142),
        (iterative_gains(), 125.8764),
        (convex_gains(), 144.5360),
    ] {
        let bound = bound_reachable_set(&sys, &g, &det, &trunc, &grid).unwrap();
        assert_relative_eq!(bound.objective, want, max_relative = 1e-5);
    }
}

#[test]
fn residual_covariance_is_a_fixed_point() {
    let sys = LtiSystem::case_study();
    let l = h2_gains().l;
    let (pe, sigma) = residual_covariance(&sys, &l).unwrap();
    let closed = sys.f() - &l * sys.c();
    let next = &closed * &pe * closed.transpose() + sys.r1() + &l * sys.r2() * l.transpose();
    assert!((&next - &pe).amax() < 1e-10);
    assert!(sigma.clone().cholesky().is_some());
    let expected = sys.c() * &pe * sys.c().transpose() + sys.r2();
    assert!((sigma - expected).amax() < 1e-12);
}
