//! Nominal and attacked Monte Carlo runs checked against the detector and the
//! reachable-set bound.

use lmi_codesign::analysis::{bound_reachable_set, default_a_grid};
use lmi_codesign::model::{make_detector, GainPair, LtiSystem, TruncationConfig};
use lmi_codesign::simulator::{simulate, AttackStrategy, PhiPolicy, SimConfig, SimSummary};

fn main() -> lmi_codesign::Result<()> {
    let sys = LtiSystem::case_study();
    let gains = GainPair::from_json(include_str!("../data/gains_h2.json"))?;
    let detector = make_detector(0.05, sys.p())?;
    let trunc = TruncationConfig::default_for(&sys);
    let bound = bound_reachable_set(&sys, &gains, &detector, &trunc, &default_a_grid())?;

    let nominal = simulate(
        &sys,
        &gains,
        &detector,
        &AttackStrategy::none(),
        &SimConfig::new(100_000, 1),
        None,
    )?;
    println!("nominal: {:?}", SimSummary::from(&nominal));

    let config = SimConfig {
        truncate_noise: true,
        ..SimConfig::new(100_000, 2)
    };
    for policy in [
        PhiPolicy::MaxGrowth,
        PhiPolicy::Rotating { rate: 0.05 },
        PhiPolicy::FixedDirection(vec![0.6, 0.8]),
    ] {
        let strategy = AttackStrategy::zero_alarm(policy.clone(), 1.0);
        let trace = simulate(&sys, &gains, &detector, &strategy, &config, Some(&bound))?;
        let s = SimSummary::from(&trace);
        println!(
            "{policy:?}: alarms {}, max z {:.4} (threshold {:.4}), outside bound {}",
            s.alarm_count, s.max_z, s.alpha, s.containment_violations
        );
    }
    Ok(())
}
