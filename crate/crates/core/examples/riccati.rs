//! Real solutions of `X A X + X B + C X + D = 0` by invariant subspaces.

use lmi_codesign::numerics::{solve_quadratic_matrix_eq, QuadraticMatrixProblem};
use nalgebra::DMatrix;

fn main() {
    let m = |v: [f64; 4]| DMatrix::from_row_slice(2, 2, &v);
    let problem = QuadraticMatrixProblem {
        gamma1: m([1.0, 0.2, 0.0, 1.0]),
        gamma2: m([0.5, 0.0, 0.1, -0.3]),
        gamma3: m([-0.4, 0.1, 0.0, 0.2]),
        gamma4: m([-1.0, 0.3, 0.2, -0.8]),
    };
    let set = solve_quadratic_matrix_eq(&problem);
    println!(
        "{} candidate subspaces, {} complex discarded",
        set.candidates, set.discarded_complex_count
    );
    for (x, r) in set.solutions.iter().zip(&set.residuals) {
        println!("residual {r:.2e}{x}");
    }
}
