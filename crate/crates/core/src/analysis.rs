//! Minimum-trace ellipsoidal outer bound on the states an attacker can reach
//! with zero-alarm sensor injections, for fixed gains.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    build_stacked, residual_covariance, rows_format, DetectorConfig, GainPair, LtiSystem, TruncationConfig,
};
use crate::numerics::{inverse, spectral_radius, sqrtm_psd, symmetrize};
use crate::sdp::{AffineMatrix, AffineScalar, ScalarVar, SdpProblem, SolveOptions, SymVar};

/// Upper bound imposed on the contraction weights `a1`, `a2`.
pub const CONTRACTION_CAP: f64 = 1.0 - 1e-6;
/// Relative tolerance under which two per-`a` objectives count as tied.
const TIE_TOL: f64 = 1e-9;

/// `{0.01, 0.02, …, 0.99}`.
pub fn default_a_grid() -> Vec<f64> {
    (1..100).map(|i| i as f64 / 100.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReachableBound {
    /// Stacked shape matrix over `(x, x̂, e)`.
    #[serde(with = "rows_format")]
    pub q_full: DMatrix<f64>,
    /// Leading state block of `q_full`.
    #[serde(with = "rows_format")]
    pub q_x: DMatrix<f64>,
    pub a: f64,
    pub a1: f64,
    pub a2: f64,
    /// `tr(q_x)`.
    pub objective: f64,
    /// Grid points whose SDP was solved to optimality.
    pub feasible_a_grid: Vec<f64>,
}

/// `diag(first, second)` for affine blocks.
pub(crate) fn block_diag(first: AffineMatrix, second: AffineMatrix) -> Result<AffineMatrix> {
    AffineMatrix::blocks(&[vec![Some(first), None], vec![None, Some(second)]])
}

/// `AffineScalar` for `(1 − v) · factor`.
pub(crate) fn complement(v: ScalarVar, factor: f64) -> AffineScalar {
    (AffineScalar::constant(1.0) - v.expr()) * factor
}

/// Sum of the leading `n` diagonal entries.
pub(crate) fn leading_trace(m: &AffineMatrix, n: usize) -> AffineScalar {
    (0..n).fold(AffineScalar::constant(0.0), |acc, i| acc + m.entry(i, i))
}

/// The bounding LMI `[[aQ, QAᵀ, 0], [AQ, Q, B], [0, Bᵀ, c·W]]` for affine
/// `Q`, `A·Q` and `W`, with `c = (1 − a)/(2 − a)`.
pub(crate) fn contraction_lmi(
    a: f64,
    shape: &AffineMatrix,
    dynamics_times_shape: AffineMatrix,
    input: AffineMatrix,
    weight: AffineMatrix,
) -> Result<AffineMatrix> {
    AffineMatrix::symmetric_blocks(&[
        vec![Some(shape.scale(a))],
        vec![Some(dynamics_times_shape), Some(shape.clone())],
        vec![
            None,
            Some(input.transpose()),
            Some(weight.scale((1.0 - a) / (2.0 - a))),
        ],
    ])
}

/// Grid-independent ingredients of the bounding SDP.
#[derive(Debug, Clone)]
pub struct BoundingData {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub r1_inv: DMatrix<f64>,
    /// `Σ⁻¹ / α`.
    pub residual_weight: DMatrix<f64>,
    pub nu_bar: f64,
    pub n: usize,
}

/// One bounding SDP with handles to its variables.
#[derive(Debug, Clone)]
pub struct BoundingProblem {
    pub problem: SdpProblem,
    pub q: SymVar,
    pub a1: ScalarVar,
    pub a2: ScalarVar,
}

impl BoundingData {
    pub fn new(
        sys: &LtiSystem,
        gains: &GainPair,
        detector: &DetectorConfig,
        trunc: &TruncationConfig,
    ) -> Result<Self> {
        let stacked = build_stacked(sys, gains)?;
        let (_, sigma) = residual_covariance(sys, &gains.l)?;
        let residual_weight = symmetrize(&(inverse(&sigma, "residual covariance")? / detector.alpha));
        Ok(Self {
            a: stacked.a,
            b: stacked.b,
            r1_inv: symmetrize(&inverse(sys.r1(), "R1")?),
            residual_weight,
            nu_bar: trunc.nu_bar,
            n: sys.n(),
        })
    }

    /// The bounding SDP at contraction rate `a`.
    pub fn problem(&self, a: f64) -> Result<BoundingProblem> {
        let mut prob = SdpProblem::new();
        let q = prob.add_symmetric_var("Q", self.a.nrows())?;
        let a1 = prob.add_scalar_var("a1", Some(0.0), Some(CONTRACTION_CAP))?;
        let a2 = prob.add_scalar_var("a2", Some(0.0), Some(CONTRACTION_CAP))?;
        prob.add_linear_leq(AffineScalar::constant(a) - a1.expr() - a2.expr())?;

        let weight = block_diag(
            AffineMatrix::scalar_times(&complement(a1, 1.0 / self.nu_bar), &self.r1_inv),
            AffineMatrix::scalar_times(&complement(a2, 1.0), &self.residual_weight),
        )?;
        let qe = q.expr();
        let lmi = contraction_lmi(
            a,
            &qe,
            &self.a * &qe,
            AffineMatrix::constant(self.b.clone()),
            weight,
        )?;
        prob.add_labeled_psd_block("bounding", &lmi, 0.0)?;
        prob.set_objective(leading_trace(&qe, self.n));
        Ok(BoundingProblem {
            problem: prob,
            q,
            a1,
            a2,
        })
    }

    /// Grid points that can possibly be feasible: the LMI forces
    /// `a ≥ ρ(A)²`.
    pub fn admissible(&self, grid: &[f64]) -> Vec<f64> {
        let rho2 = spectral_radius(&self.a).powi(2);
        grid.iter()
            .copied()
            .filter(|&a| a > 0.0 && a < 1.0 && a >= rho2)
            .collect()
    }
}

struct GridPoint {
    a: f64,
    q_full: DMatrix<f64>,
    a1: f64,
    a2: f64,
    objective: f64,
}

fn solve_point(data: &BoundingData, a: f64, opts: &SolveOptions) -> Option<GridPoint> {
    let bp = data.problem(a).ok()?;
    let sol = bp.problem.solve(opts);
    if !sol.is_optimal() {
        return None;
    }
    let q_full = symmetrize(&sol.symmetric(bp.q));
    Some(GridPoint {
        a,
        objective: sol.objective,
        a1: sol.scalar(bp.a1),
        a2: sol.scalar(bp.a2),
        q_full,
    })
}

/// Keeps the smaller objective; near-ties go to the smaller `a`.
fn better(current: &GridPoint, candidate: &GridPoint) -> bool {
    let tol = TIE_TOL * current.objective.abs().max(1.0);
    candidate.objective < current.objective - tol
        || ((candidate.objective - current.objective).abs() <= tol && candidate.a < current.a)
}

/// Minimum-trace bound over `a_grid`, with per-point solves run in parallel.
pub fn bound_reachable_set(
    sys: &LtiSystem,
    gains: &GainPair,
    detector: &DetectorConfig,
    trunc: &TruncationConfig,
    a_grid: &[f64],
) -> Result<ReachableBound> {
    bound_reachable_set_with(sys, gains, detector, trunc, a_grid, &SolveOptions::default())
}

pub fn bound_reachable_set_with(
    sys: &LtiSystem,
    gains: &GainPair,
    detector: &DetectorConfig,
    trunc: &TruncationConfig,
    a_grid: &[f64],
    opts: &SolveOptions,
) -> Result<ReachableBound> {
    if a_grid.is_empty() {
        return Err(Error::Argument("a-grid is empty".into()));
    }
    let data = BoundingData::new(sys, gains, detector, trunc)?;
    let grid = data.admissible(a_grid);
    let points: Vec<GridPoint> = grid
        .par_iter()
        .filter_map(|&a| solve_point(&data, a, opts))
        .collect();
    let feasible_a_grid: Vec<f64> = points.iter().map(|p| p.a).collect();
    let best = points
        .into_iter()
        .reduce(|best, p| if better(&best, &p) { p } else { best })
        .ok_or(Error::InfeasibleAnalysis {
            grid_len: a_grid.len(),
        })?;
    let n = sys.n();
    Ok(ReachableBound {
        q_x: best.q_full.view((0, 0), (n, n)).into_owned(),
        q_full: best.q_full,
        a: best.a,
        a1: best.a1,
        a2: best.a2,
        objective: best.objective,
        feasible_a_grid,
    })
}

/// Points `Q^{1/2} [cos θ, sin θ]ᵀ` on the boundary of a planar ellipsoid,
/// for `θ` evenly spaced from 0. Returned as `(θ, point)`.
pub fn ellipsoid_boundary_points(q_x: &DMatrix<f64>, count: usize) -> Result<Vec<(f64, DVector<f64>)>> {
    if q_x.shape() != (2, 2) {
        return Err(Error::UnsupportedDimension(format!(
            "boundary points need a 2x2 shape matrix, got {}x{}",
            q_x.nrows(),
            q_x.ncols()
        )));
    }
    let root = sqrtm_psd(&symmetrize(q_x));
    Ok((0..count)
        .map(|i| {
            let theta = std::f64::consts::TAU * i as f64 / count as f64;
            (theta, &root * DVector::from_vec(vec![theta.cos(), theta.sin()]))
        })
        .collect())
}

/// CSV with header `theta,x1,x2`.
pub fn boundary_csv(points: &[(f64, DVector<f64>)]) -> String {
    let mut out = String::from("theta,x1,x2\n");
    for (theta, p) in points {
        out.push_str(&format!("{theta},{},{}\n", p[0], p[1]));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_detector;
    use crate::numerics::min_eigenvalue;

    fn design_gains() -> GainPair {
        GainPair::new(
            DMatrix::from_row_slice(2, 2, &[0.1273, -2.0544, -0.4303, 1.4190]),
            DMatrix::from_row_slice(2, 2, &[1.0085, -0.9780, -0.0139, 0.2664]),
        )
    }

    fn fixture() -> (LtiSystem, DetectorConfig, TruncationConfig) {
        let sys = LtiSystem::case_study();
        let det = make_detector(0.05, 2).unwrap();
        let trunc = TruncationConfig::default_for(&sys);
        (sys, det, trunc)
    }

    #[test]
    fn single_point_is_certified() {
        let (sys, det, trunc) = fixture();
        let data = BoundingData::new(&sys, &design_gains(), &det, &trunc).unwrap();
        let bp = data.problem(0.9).unwrap();
        let sol = bp.problem.solve_default();
        assert!(sol.is_optimal(), "{:?}", sol.status);
        for (label, eig) in bp.problem.block_min_eigenvalues(&sol.values) {
            assert!(eig >= -1e-7, "{label}: {eig}");
        }
        let (a1, a2) = (sol.scalar(bp.a1), sol.scalar(bp.a2));
        assert!(a1 >= -1e-8 && a2 >= -1e-8 && a1 + a2 >= 0.9 - 1e-8);
    }

    #[test]
    fn bound_is_consistent() {
        let (sys, det, trunc) = fixture();
        let grid: Vec<f64> = (1..20).map(|i| i as f64 / 20.0).collect();
        let b = bound_reachable_set(&sys, &design_gains(), &det, &trunc, &grid).unwrap();
        assert_eq!(b.q_x, b.q_full.view((0, 0), (2, 2)).into_owned());
        assert!(min_eigenvalue(&b.q_full) > -1e-7);
        assert!((b.objective - b.q_x.trace()).abs() < 1e-6 * b.objective.max(1.0));
        assert!(b.feasible_a_grid.contains(&b.a));
        assert!(b.a1 + b.a2 >= b.a - 1e-7);
    }

    #[test]
    fn zero_observer_ignores_detector() {
        let (sys, det, trunc) = fixture();
        let gains = GainPair::new(
            DMatrix::from_row_slice(2, 2, &[0.1273, -2.0544, -0.4303, 1.4190]),
            DMatrix::zeros(2, 2),
        );
        let grid = [0.6, 0.7, 0.8, 0.9];
        let strong = det.with_alpha(1e-3).unwrap();
        let opts = SolveOptions {
            opt_tol: 1e-11,
            ..SolveOptions::default()
        };
        let b1 = bound_reachable_set_with(&sys, &gains, &det, &trunc, &grid, &opts).unwrap();
        let b2 = bound_reachable_set_with(&sys, &gains, &strong, &trunc, &grid, &opts).unwrap();
        assert!(
            (b1.objective - b2.objective).abs() < 1e-6,
            "{} {}",
            b1.objective,
            b2.objective
        );
    }

    #[test]
    fn unstable_loop_is_infeasible() {
        let (sys, det, trunc) = fixture();
        let gains = GainPair::new(DMatrix::from_element(2, 2, 3.0), DMatrix::zeros(2, 2));
        let err = bound_reachable_set(&sys, &gains, &det, &trunc, &default_a_grid()).unwrap_err();
        assert!(matches!(err, Error::InfeasibleAnalysis { grid_len: 99 }));
    }

    #[test]
    fn boundary_points() {
        let pts = ellipsoid_boundary_points(&DMatrix::identity(2, 2), 4).unwrap();
        let expect = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)];
        for ((_, p), (x, y)) in pts.iter().zip(expect) {
            assert!((p[0] - x).abs() < 1e-12 && (p[1] - y).abs() < 1e-12);
        }
        let q = DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 1.0]);
        let pts = ellipsoid_boundary_points(&q, 4).unwrap();
        assert!((pts[0].1[0] - 2.0).abs() < 1e-12 && (pts[1].1[1] - 1.0).abs() < 1e-12);
        let q = DMatrix::from_row_slice(2, 2, &[3.0, 1.2, 1.2, 0.8]);
        let qi = q.clone().try_inverse().unwrap();
        for (_, p) in ellipsoid_boundary_points(&q, 37).unwrap() {
            assert!((p.dot(&(&qi * &p)) - 1.0).abs() < 1e-10);
        }
        assert!(ellipsoid_boundary_points(&DMatrix::identity(3, 3), 4).is_err());
    }
}
