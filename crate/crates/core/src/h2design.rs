//! Output-covariance-constrained H2 design: the optimal gain, the open-loop
//! gain, performance of arbitrary gains, and the gain recovery shared by the
//! co-design engines.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{bound_reachable_set_with, default_a_grid};
use crate::error::{Error, Result};
use crate::model::{build_stacked, rows_format, DetectorConfig, GainPair, LtiSystem, TruncationConfig};
use crate::numerics::{
    condition_number, dlyap, inverse, solve_quadratic_matrix_eq, spectral_radius, symmetrize,
    QuadraticMatrixProblem,
};
use crate::sdp::{AffineMatrix, MatVar, SdpProblem, SdpSolution, SolveOptions, SymVar};

/// Largest condition number accepted for `I − Q1·Px` and the recovery factors.
pub const MAX_FACTOR_COND: f64 = 1e12;
const TIE_TOL: f64 = 1e-9;

/// `sqrt((tr(C Px Cᵀ) + tr R2) / (tr R1 + tr R2))`.
pub fn gamma_from_state_covariance(sys: &LtiSystem, px: &DMatrix<f64>) -> f64 {
    let num = (sys.c() * px * sys.c().transpose()).trace() + sys.r2().trace();
    let den = sys.r1().trace() + sys.r2().trace();
    (num / den).max(0.0).sqrt()
}

/// Covariance ceiling `tr(C Px Cᵀ) ≤ γ̄²(tr R1 + tr R2) − tr R2`.
pub fn output_trace_budget(sys: &LtiSystem, gamma_bar: f64) -> f64 {
    gamma_bar * gamma_bar * (sys.r1().trace() + sys.r2().trace()) - sys.r2().trace()
}

/// Decision variables shared by every H2-constrained program.
#[derive(Debug, Clone, Copy)]
pub struct H2Variables {
    pub px: SymVar,
    pub q1: SymVar,
    /// n×p.
    pub x: MatVar,
    /// m×n.
    pub y: MatVar,
    /// n×n.
    pub z: MatVar,
}

/// Values of [`H2Variables`] at a solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct H2Values {
    #[serde(with = "rows_format")]
    pub px: DMatrix<f64>,
    #[serde(with = "rows_format")]
    pub q1: DMatrix<f64>,
    #[serde(with = "rows_format")]
    pub x: DMatrix<f64>,
    #[serde(with = "rows_format")]
    pub y: DMatrix<f64>,
    #[serde(with = "rows_format")]
    pub z: DMatrix<f64>,
}

impl H2Variables {
    pub fn declare(prob: &mut SdpProblem, sys: &LtiSystem) -> Result<Self> {
        let (n, m, p) = (sys.n(), sys.m(), sys.p());
        Ok(Self {
            px: prob.add_symmetric_var("Px", n)?,
            q1: prob.add_symmetric_var("Q1", n)?,
            x: prob.add_matrix_var("X", n, p)?,
            y: prob.add_matrix_var("Y", m, n)?,
            z: prob.add_matrix_var("Z", n, n)?,
        })
    }

    /// The six-block covariance LMI linking `Px`, `Q1` and the linearized
    /// gain variables.
    pub fn covariance_lmi(&self, sys: &LtiSystem) -> Result<AffineMatrix> {
        let n = sys.n();
        let (f, g, c, r1, r2) = (sys.f(), sys.g(), sys.c(), sys.r1(), sys.r2());
        let px = self.px.expr();
        let q1 = self.q1.expr();
        let x = self.x.expr();
        let eye = AffineMatrix::identity(n);
        let observer = q1.mul_right(f) + x.mul_right(c);
        let controller = px.mul_left(f) + self.y.expr().mul_left(g);
        let k = |m: &DMatrix<f64>| Some(AffineMatrix::constant(m.clone()));
        AffineMatrix::symmetric_blocks(&[
            vec![Some(q1.clone())],
            vec![Some(eye.clone()), Some(px.clone())],
            vec![Some(observer.transpose()), k(&f.transpose()), Some(q1.clone())],
            vec![
                Some(self.z.expr().transpose()),
                Some(controller.transpose()),
                Some(eye),
                Some(px),
            ],
            vec![Some(q1.mul_left(r1)), k(r1), None, None, k(r1)],
            vec![Some(x.transpose().mul_left(r2)), None, None, None, None, k(r2)],
        ])
    }

    pub fn values(&self, sol: &SdpSolution) -> H2Values {
        H2Values {
            px: symmetrize(&sol.symmetric(self.px)),
            q1: symmetrize(&sol.symmetric(self.q1)),
            x: sol.matrix(self.x),
            y: sol.matrix(self.y),
            z: sol.matrix(self.z),
        }
    }
}

/// Recovered gains for one real solution of the quadratic matrix equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainCandidate {
    #[serde(with = "rows_format")]
    pub q12: DMatrix<f64>,
    #[serde(with = "rows_format")]
    pub p_xxhat: DMatrix<f64>,
    pub gains: GainPair,
    /// Reachable-set trace at these gains, when it could be computed.
    pub lemma2_objective: Option<f64>,
    /// Spectral radius of the nominal closed loop.
    pub nominal_radius: f64,
    /// Spectral radius of the attacked stacked loop.
    pub attacked_radius: f64,
    pub riccati_residual: f64,
}

/// Counts from the candidate enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RiccatiSummary {
    /// Invariant subspaces with an invertible top block.
    pub candidates: usize,
    pub real: usize,
    pub complex_discarded: usize,
}

fn checked_inverse(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    let cond = condition_number(m);
    if !cond.is_finite() || cond > MAX_FACTOR_COND {
        return Err(Error::NearSingular {
            what: what.into(),
            cond,
        });
    }
    inverse(m, what)
}

/// Quadratic matrix equation whose real solutions are the admissible `Q12`.
pub fn recovery_equation(sys: &LtiSystem, v: &H2Values) -> Result<QuadraticMatrixProblem> {
    let n = sys.n();
    let eye = DMatrix::<f64>::identity(n, n);
    let t_inv = checked_inverse(&(&eye - &v.q1 * &v.px), "I - Q1*Px")?;
    let (f, g, c) = (sys.f(), sys.g(), sys.c());
    let gy = g * &v.y;
    let gamma1 = &gy * &t_inv;
    let gamma3 = (&v.q1 * &gy + &v.x * c * &v.px + &v.q1 * f * &v.px - &v.z) * &t_inv;
    let gamma4 = -(&v.x * c);
    QuadraticMatrixProblem::new(gamma1, f.clone(), gamma3, gamma4)
}

/// `L = Q12⁻¹X`, `P_xx̂ = (I − Px Q1) Q12⁻ᵀ`, `K = Y P_xx̂⁻ᵀ`.
pub fn gains_from_q12(v: &H2Values, q12: &DMatrix<f64>) -> Result<(GainPair, DMatrix<f64>)> {
    let n = v.px.nrows();
    let q12_inv = checked_inverse(q12, "Q12")?;
    let l = &q12_inv * &v.x;
    let p_xxhat = (DMatrix::identity(n, n) - &v.px * &v.q1) * q12_inv.transpose();
    let k = &v.y * checked_inverse(&p_xxhat, "P_xxhat")?.transpose();
    Ok((GainPair::new(k, l), p_xxhat))
}

/// Every real gain pair obtainable from the H2 variables.
pub fn recover_candidates(sys: &LtiSystem, v: &H2Values) -> Result<(Vec<GainCandidate>, RiccatiSummary)> {
    let eq = recovery_equation(sys, v)?;
    let set = solve_quadratic_matrix_eq(&eq);
    let summary = RiccatiSummary {
        candidates: set.candidates,
        real: set.solutions.len(),
        complex_discarded: set.discarded_complex_count,
    };
    if set.solutions.is_empty() {
        return Err(Error::EmptyRiccati {
            candidates: set.candidates,
        });
    }
    let mut out = Vec::with_capacity(set.solutions.len());
    for (q12, res) in set.solutions.iter().zip(&set.residuals) {
        let Ok((gains, p_xxhat)) = gains_from_q12(v, q12) else {
            continue;
        };
        let st = build_stacked(sys, &gains)?;
        out.push(GainCandidate {
            q12: q12.clone(),
            p_xxhat,
            nominal_radius: spectral_radius(&st.a_hat),
            attacked_radius: spectral_radius(&st.a),
            gains,
            lemma2_objective: None,
            riccati_residual: *res,
        });
    }
    if out.is_empty() {
        return Err(Error::EmptyRiccati {
            candidates: set.candidates,
        });
    }
    Ok((out, summary))
}

/// Detector context used to rank candidates by reachable-set size.
#[derive(Debug, Clone)]
pub struct RankingContext {
    pub detector: DetectorConfig,
    pub truncation: TruncationConfig,
    pub a_grid: Vec<f64>,
    pub solve: SolveOptions,
}

impl RankingContext {
    pub fn new(detector: DetectorConfig, truncation: TruncationConfig) -> Self {
        Self {
            detector,
            truncation,
            a_grid: default_a_grid(),
            solve: SolveOptions::default(),
        }
    }
}

/// Fills in reachable-set objectives (when a context is given) and returns
/// the index of the preferred stable candidate.
///
/// With a context, the smallest objective wins; otherwise the smallest
/// closed-loop spectral radius. Near-ties go to the smaller `‖L‖_F`.
pub fn rank_candidates(
    sys: &LtiSystem,
    candidates: &mut [GainCandidate],
    ctx: Option<&RankingContext>,
) -> Result<usize> {
    if let Some(ctx) = ctx {
        candidates.par_iter_mut().for_each(|cand| {
            if cand.nominal_radius < 1.0 && cand.attacked_radius < 1.0 {
                cand.lemma2_objective = bound_reachable_set_with(
                    sys,
                    &cand.gains,
                    &ctx.detector,
                    &ctx.truncation,
                    &ctx.a_grid,
                    &ctx.solve,
                )
                .ok()
                .map(|b| b.objective);
            }
        });
    }
    let score = |c: &GainCandidate| -> Option<f64> {
        if c.nominal_radius >= 1.0 || c.attacked_radius >= 1.0 {
            return None;
        }
        match ctx {
            Some(_) => c.lemma2_objective,
            None => Some(c.nominal_radius),
        }
    };
    let mut best: Option<(usize, f64)> = None;
    for (i, c) in candidates.iter().enumerate() {
        let Some(s) = score(c) else { continue };
        best = match best {
            None => Some((i, s)),
            Some((j, t)) => {
                let tol = TIE_TOL * t.abs().max(1.0);
                let tie = (s - t).abs() <= tol;
                if s < t - tol || (tie && c.gains.l.norm() < candidates[j].gains.l.norm()) {
                    Some((i, s))
                } else {
                    Some((j, t))
                }
            }
        };
    }
    best.map(|(i, _)| i).ok_or_else(|| {
        let radius = candidates
            .iter()
            .map(|c| c.nominal_radius.max(c.attacked_radius))
            .fold(f64::INFINITY, f64::min);
        if ctx.is_some() && radius < 1.0 {
            Error::InfeasibleAnalysis {
                grid_len: ctx.map_or(0, |c| c.a_grid.len()),
            }
        } else {
            Error::Unstable {
                what: "every recovered closed loop".into(),
                radius,
            }
        }
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct H2Result {
    pub gamma_star: f64,
    pub variables: H2Values,
    pub candidates: Vec<GainCandidate>,
    pub riccati: RiccatiSummary,
    pub selected_index: usize,
    pub selected: GainPair,
    /// Mean absolute difference between the SDP `Px` and the state
    /// covariance recomputed from the selected gains.
    pub mae_lyapunov: f64,
}

/// Minimum output-covariance H2 design. Candidates are ranked by reachable-set
/// size when `ranking` is given.
pub fn optimal_occ_h2_ranked(
    sys: &LtiSystem,
    ranking: Option<&RankingContext>,
    opts: &SolveOptions,
) -> Result<H2Result> {
    let mut prob = SdpProblem::new();
    let vars = H2Variables::declare(&mut prob, sys)?;
    prob.add_labeled_psd_block("covariance", &vars.covariance_lmi(sys)?, 0.0)?;
    prob.set_objective(
        vars.px
            .expr()
            .mul_left(sys.c())
            .mul_right(&sys.c().transpose())
            .trace(),
    );
    let sol = prob.solve(opts);
    if !sol.is_optimal() {
        return Err(match sol.status {
            crate::sdp::SdpStatus::Infeasible => Error::Infeasible("optimal H2 covariance program".into()),
            s => Error::Numerical(format!("optimal H2 covariance program ended {s:?}")),
        });
    }
    let values = vars.values(&sol);
    let gamma_star = gamma_from_state_covariance(sys, &values.px);
    let (mut candidates, riccati) = recover_candidates(sys, &values)?;
    let selected_index = rank_candidates(sys, &mut candidates, ranking)?;
    let selected = candidates[selected_index].gains.clone();
    let report = evaluate_gamma(sys, &selected)?;
    let n = sys.n();
    let px_lyap = report.covariance.view((0, 0), (n, n)).into_owned();
    let mae_lyapunov = (&px_lyap - &values.px).abs().mean();
    Ok(H2Result {
        gamma_star,
        variables: values,
        candidates,
        riccati,
        selected_index,
        selected,
        mae_lyapunov,
    })
}

/// Minimum output-covariance H2 design with candidates ranked by spectral
/// radius.
pub fn optimal_occ_h2(sys: &LtiSystem) -> Result<H2Result> {
    optimal_occ_h2_ranked(sys, None, &SolveOptions::default())
}

/// Gain with no feedback: `Px = dlyap(F, R1)`.
pub fn open_loop_gamma(sys: &LtiSystem) -> Result<f64> {
    let px = dlyap(sys.f(), sys.r1())?;
    Ok(gamma_from_state_covariance(sys, &px))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceReport {
    pub gamma: f64,
    /// Nominal stacked covariance over `(x, x̂)`.
    #[serde(with = "rows_format")]
    pub covariance: DMatrix<f64>,
    pub stable: bool,
    pub spectral_radius: f64,
}

/// Performance of fixed gains from the nominal stacked Lyapunov equation.
pub fn evaluate_gamma(sys: &LtiSystem, gains: &GainPair) -> Result<PerformanceReport> {
    let st = build_stacked(sys, gains)?;
    let radius = spectral_radius(&st.a_hat);
    if radius >= 1.0 {
        return Err(Error::Unstable {
            what: "nominal closed loop".into(),
            radius,
        });
    }
    let n = sys.n();
    let mut noise = DMatrix::zeros(2 * n, 2 * n);
    noise.view_mut((0, 0), (n, n)).copy_from(sys.r1());
    noise
        .view_mut((n, n), (n, n))
        .copy_from(&(&gains.l * sys.r2() * gains.l.transpose()));
    let covariance = dlyap(&st.a_hat, &noise)?;
    let px = covariance.view((0, 0), (n, n)).into_owned();
    Ok(PerformanceReport {
        gamma: gamma_from_state_covariance(sys, &px),
        covariance,
        stable: true,
        spectral_radius: radius,
    })
}
