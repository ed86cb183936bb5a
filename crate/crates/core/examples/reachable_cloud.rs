//! States visited under several attack policies next to the certified
//! ellipsoid. The cloud only probes the reachable set from inside.

use lmi_codesign::analysis::{bound_reachable_set, default_a_grid};
use lmi_codesign::model::{make_detector, Ellipsoid, GainPair, LtiSystem, TruncationConfig};
use lmi_codesign::simulator::{empirical_reachable_cloud, AttackStrategy, PhiPolicy, SimConfig};

fn main() -> lmi_codesign::Result<()> {
    let sys = LtiSystem::case_study();
    let gains = GainPair::from_json(include_str!("../data/gains_convex.json"))?;
    let detector = make_detector(0.05, sys.p())?;
    let trunc = TruncationConfig::default_for(&sys);
    let bound = bound_reachable_set(&sys, &gains, &detector, &trunc, &default_a_grid())?;
    let ellipsoid = Ellipsoid::new(bound.q_x.clone())?;

    let policies: Vec<_> = [
        PhiPolicy::MaxGrowth,
        PhiPolicy::Rotating { rate: 0.02 },
        PhiPolicy::Rotating { rate: -0.3 },
        PhiPolicy::FixedDirection(vec![1.0, 0.0]),
    ]
    .into_iter()
    .map(|p| AttackStrategy::zero_alarm(p, 1.0))
    .collect();
    let config = SimConfig {
        truncate_noise: true,
        ..SimConfig::new(20_000, 7)
    };
    let cloud = empirical_reachable_cloud(&sys, &gains, &detector, &policies, &config)?;
    let deepest = cloud
        .iter()
        .filter_map(|x| ellipsoid.level(x))
        .fold(0.0, f64::max);
    println!(
        "{} states, largest ellipsoid level {deepest:.4} (1 = boundary)",
        cloud.len()
    );
    Ok(())
}
