//! Security against performance along a sweep of ceilings; prints CSV.

use lmi_codesign::codesign::{tradeoff_csv, tradeoff_curve, CodesignConfig, Method};
use lmi_codesign::model::{make_detector, LtiSystem, TruncationConfig};

fn main() -> lmi_codesign::Result<()> {
    let sys = LtiSystem::case_study();
    let detector = make_detector(0.05, sys.p())?;
    let trunc = TruncationConfig::default_for(&sys);
    let ceilings = [7.75, 8.5, 9.5, 11.0];

    let rows = tradeoff_curve(
        &sys,
        &detector,
        &trunc,
        &ceilings,
        Method::Convex,
        &CodesignConfig::default(),
    )?;
    print!("{}", tradeoff_csv(&rows));
    for r in rows.iter().filter(|r| r.error.is_some()) {
        eprintln!("{}: {}", r.gamma_bar, r.error.as_deref().unwrap_or_default());
    }
    Ok(())
}
