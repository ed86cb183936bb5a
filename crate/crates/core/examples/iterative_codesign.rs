//! Iterative co-design under a performance ceiling. Takes a few minutes:
//! the ceiling is approached in small steps from the H2 optimum.

use lmi_codesign::codesign::{design_iterative, CodesignConfig};
use lmi_codesign::model::{make_detector, LtiSystem, TruncationConfig};

fn main() -> lmi_codesign::Result<()> {
    let gamma_bar: f64 = std::env::args()
        .nth(1)
        .map_or(Ok(8.75), |s| s.parse())
        .expect("ceiling must be a number");
    let sys = LtiSystem::case_study();
    let detector = make_detector(0.05, sys.p())?;
    let trunc = TruncationConfig::default_for(&sys);

    let res = design_iterative(&sys, gamma_bar, &detector, &trunc, &CodesignConfig::default())?;
    println!(
        "sigma {:.3}, gamma {:.4} (ceiling {gamma_bar})",
        res.sigma, res.gamma
    );
    println!(
        "reachable-set trace {:.4} at a = {}",
        res.bound.objective, res.bound.a
    );
    println!("K ={}L ={}", res.gains.k, res.gains.l);
    println!(
        "spectral radii: nominal {:.4}, attacked {:.4}",
        res.nominal_radius, res.attacked_radius
    );
    let cycles = res.diagnostics.iter().filter(|d| d.cycle_length > 1).count();
    println!(
        "{} probes over {} ramp stages, {cycles} settled in a cycle",
        res.diagnostics.len(),
        res.warm_start_path.len()
    );
    Ok(())
}
