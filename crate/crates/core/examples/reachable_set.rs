//! Outer ellipsoid on the states reachable under a zero-alarm attack, for
//! fixed gains.

use lmi_codesign::analysis::{bound_reachable_set, default_a_grid, ellipsoid_boundary_points};
use lmi_codesign::model::{make_detector, GainPair, LtiSystem, TruncationConfig};

fn main() -> lmi_codesign::Result<()> {
    let sys = LtiSystem::case_study();
    let gains = GainPair::from_json(include_str!("../data/gains_h2.json"))?;
    let detector = make_detector(0.05, sys.p())?;
    let trunc = TruncationConfig::default_for(&sys);

    let bound = bound_reachable_set(&sys, &gains, &detector, &trunc, &default_a_grid())?;
    println!(
        "trace of state block: {:.4} (a = {}, a1 = {:.4}, a2 = {:.4})",
        bound.objective, bound.a, bound.a1, bound.a2
    );
    println!("feasible a values: {}", bound.feasible_a_grid.len());
    println!("shape matrix:{}", bound.q_x);
    for (theta, p) in ellipsoid_boundary_points(&bound.q_x, 8)? {
        println!("  θ = {theta:.3}: ({:+.4}, {:+.4})", p[0], p[1]);
    }
    Ok(())
}
