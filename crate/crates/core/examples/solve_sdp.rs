//! The bundled SDP layer on a small problem: the largest eigenvalue of a
//! symmetric matrix as `min t s.t. tI − M ⪰ 0`.

use lmi_codesign::sdp::{AffineMatrix, SdpProblem};
use nalgebra::DMatrix;

fn main() -> lmi_codesign::Result<()> {
    let m = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0]);
    let mut prob = SdpProblem::new();
    let t = prob.add_scalar_var("t", None, None)?;
    let lmi =
        AffineMatrix::scalar_times(&t.expr(), &DMatrix::identity(3, 3)) - AffineMatrix::constant(m.clone());
    prob.add_psd_block(&lmi)?;
    prob.set_objective(t.expr());
    let sol = prob.solve_default();
    println!("{:?} after {} iterations", sol.status, sol.iterations);
    println!(
        "t = {:.10}, eigen = {:.10}",
        sol.scalar(t),
        m.symmetric_eigenvalues().max()
    );
    Ok(())
}
