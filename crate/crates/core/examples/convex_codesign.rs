//! Convex co-design on the restricted manifold.

use lmi_codesign::codesign::{design_convex, CodesignConfig};
use lmi_codesign::model::{make_detector, LtiSystem, TruncationConfig};

fn main() -> lmi_codesign::Result<()> {
    let gamma_bar: f64 = std::env::args()
        .nth(1)
        .map_or(Ok(8.75), |s| s.parse())
        .expect("ceiling must be a number");
    let sys = LtiSystem::case_study();
    let detector = make_detector(0.05, sys.p())?;
    let trunc = TruncationConfig::default_for(&sys);

    let res = design_convex(&sys, gamma_bar, &detector, &trunc, &CodesignConfig::default())?;
    println!(
        "sigma {:.3}, gamma {:.4} (ceiling {gamma_bar}), a = {}, a2 = {}",
        res.sigma, res.gamma, res.a, res.a2
    );
    println!("reachable-set trace {:.4}", res.bound.objective);
    println!("K ={}L ={}", res.gains.k, res.gains.l);
    println!("state covariance mismatch (MAE): {:.4}", res.mae_lyapunov);
    for (label, eig) in &res.certificate.block_min_eigenvalues {
        println!("  {label}: min eigenvalue {eig:.3e}");
    }
    Ok(())
}
