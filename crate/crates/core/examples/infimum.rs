//! Smallest performance ceiling reachable by the convex co-design.

use lmi_codesign::codesign::{design_convex, infimum_gamma_on_manifold, CodesignConfig};
use lmi_codesign::model::{make_detector, LtiSystem, TruncationConfig};

fn main() -> lmi_codesign::Result<()> {
    let sys = LtiSystem::case_study();
    let detector = make_detector(0.05, sys.p())?;
    let trunc = TruncationConfig::default_for(&sys);
    let cfg = CodesignConfig::default();

    let inf = infimum_gamma_on_manifold(&sys, &detector, &trunc, cfg.sigma_infimum, &cfg)?;
    println!(
        "smallest ceiling {:.4}, achieved gamma {:.4}",
        inf.gamma_bar_c, inf.gamma_c
    );
    let below = inf.gamma_bar_c - 0.15;
    match design_convex(&sys, below, &detector, &trunc, &cfg) {
        Ok(r) => println!("unexpected design at {below:.3}: sigma {:.2}", r.sigma),
        Err(e) => println!("ceiling {below:.3}: {e}"),
    }
    Ok(())
}
