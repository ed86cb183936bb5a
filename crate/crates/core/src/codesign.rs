//! Co-design of observer and controller gains: the iterative algorithm with a
//! fixed observer inside each convex solve, the fully convex variant on the
//! `P_x̂ = P_xx̂` manifold, its infimum, and γ̄ sweeps.

use std::fmt;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    block_diag, bound_reachable_set_with, complement, contraction_lmi, default_a_grid, ReachableBound,
    CONTRACTION_CAP,
};
use crate::error::{Error, Result};
use crate::h2design::{
    evaluate_gamma, optimal_occ_h2_ranked, rank_candidates, recover_candidates, H2Values, H2Variables,
    RankingContext,
};
use crate::model::{
    build_stacked, residual_covariance, rows_format, DetectorConfig, GainPair, LtiSystem, TruncationConfig,
};
use crate::numerics::{inverse, spectral_radius, symmetrize};
use crate::sdp::{AffineMatrix, AffineScalar, ScalarVar, SdpProblem, SdpSolution, SolveOptions, SymVar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodesignConfig {
    /// Observer convergence threshold on `‖L − L̃‖_F`.
    pub epsilon_l: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    /// Bisection stops once `hi − lo ≤ sigma_bisect_tol · hi`.
    pub sigma_bisect_tol: f64,
    /// γ̄ increment of the warm-start ramp.
    pub gamma_step: f64,
    /// Intermediate ramp stages try `σ · ramp_sigma_shrink` once before
    /// moving on; only the final stage bisects.
    pub ramp_sigma_shrink: f64,
    pub a_grid: Vec<f64>,
    pub a2_grid: Vec<f64>,
    pub max_inner_iters: usize,
    /// Magnification used by the infimum computation.
    pub sigma_infimum: f64,
    pub feas_tol: f64,
    pub opt_tol: f64,
    /// Strictness margin added to every LMI.
    pub psd_margin: f64,
}

impl Default for CodesignConfig {
    fn default() -> Self {
        Self {
            epsilon_l: 0.03,
            sigma_min: 0.1,
            sigma_max: 1e6,
            sigma_bisect_tol: 0.01,
            gamma_step: 0.1,
            ramp_sigma_shrink: 0.5,
            a_grid: default_a_grid(),
            a2_grid: (1..10).map(|i| i as f64 / 10.0).collect(),
            max_inner_iters: 25,
            sigma_infimum: 1e5,
            feas_tol: crate::sdp::DEFAULT_FEAS_TOL,
            opt_tol: crate::sdp::DEFAULT_OPT_TOL,
            psd_margin: 1e-8,
        }
    }
}

impl CodesignConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("epsilon_l", self.epsilon_l),
            ("sigma_min", self.sigma_min),
            ("sigma_max", self.sigma_max),
            ("sigma_bisect_tol", self.sigma_bisect_tol),
            ("gamma_step", self.gamma_step),
            ("sigma_infimum", self.sigma_infimum),
            ("feas_tol", self.feas_tol),
            ("opt_tol", self.opt_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Argument(format!("{name} must be positive, got {v}")));
            }
        }
        if self.sigma_min >= self.sigma_max {
            return Err(Error::Argument("sigma_min must be below sigma_max".into()));
        }
        if !(self.ramp_sigma_shrink > 0.0 && self.ramp_sigma_shrink < 1.0) {
            return Err(Error::Argument("ramp_sigma_shrink must lie in (0, 1)".into()));
        }
        if self.max_inner_iters == 0 {
            return Err(Error::Argument("max_inner_iters must be positive".into()));
        }
        if self.psd_margin < 0.0 {
            return Err(Error::Argument("psd_margin must be non-negative".into()));
        }
        for (name, grid) in [("a_grid", &self.a_grid), ("a2_grid", &self.a2_grid)] {
            if grid.is_empty() || grid.iter().any(|&v| !(0.0..1.0).contains(&v)) {
                return Err(Error::Argument(format!("{name} must be non-empty within [0, 1)")));
            }
        }
        Ok(())
    }

    fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            feas_tol: self.feas_tol,
            opt_tol: self.opt_tol,
            ..SolveOptions::default()
        }
    }

    /// Grid points not excluded by `a ≥ ρ(F)²`.
    fn admissible_a(&self, sys: &LtiSystem) -> Vec<f64> {
        let rho2 = spectral_radius(sys.f()).powi(2);
        self.a_grid
            .iter()
            .copied()
            .filter(|&a| a > 0.0 && a >= rho2)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Iterative,
    Convex,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Iterative => "iterative",
            Method::Convex => "convex",
        })
    }
}

/// One feasibility probe of the magnification search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRecord {
    pub gamma_bar: f64,
    pub sigma: f64,
    pub feasible: bool,
    /// `‖L − L̃‖_F` per observer update (iterative method only).
    pub l_deltas: Vec<f64>,
    /// Period of the observer sequence at termination: 1 for a fixed point,
    /// larger when it settled into an oscillation, 0 when it did not settle.
    pub cycle_length: usize,
}

/// Smallest eigenvalues of every LMI and the covariance budget slack at the
/// returned solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub block_min_eigenvalues: Vec<(String, f64)>,
    /// `tr(C Px Cᵀ) + tr R2 − γ̄²(tr R1 + tr R2)`; non-positive when satisfied.
    pub budget_residual: f64,
    pub max_violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodesignResult {
    pub method: Method,
    pub gains: GainPair,
    pub sigma: f64,
    pub gamma_bar: f64,
    /// Achieved performance from a fresh Lyapunov solve.
    pub gamma: f64,
    /// Reachable-set bound at the returned gains.
    pub bound: ReachableBound,
    /// Grid values at the design optimum.
    pub a: f64,
    pub a2: f64,
    pub objective: f64,
    #[serde(with = "rows_format")]
    pub px: DMatrix<f64>,
    /// Observer block of the solution; approximates the inverse estimation
    /// error covariance on the manifold.
    #[serde(with = "rows_format")]
    pub q1: DMatrix<f64>,
    /// Mean absolute difference between `px` and the recomputed state
    /// covariance.
    pub mae_lyapunov: f64,
    pub nominal_radius: f64,
    pub attacked_radius: f64,
    pub certificate: Certificate,
    pub diagnostics: Vec<ProbeRecord>,
    /// γ̄ values solved on the way to `gamma_bar`.
    pub warm_start_path: Vec<f64>,
}

/// `[[σPx, I, 0], [I, Q1/σ, 0], [0, 0, third]]`.
fn magnified_shape(v: &H2Variables, sigma: f64, third: AffineMatrix, n: usize) -> Result<AffineMatrix> {
    let eye = AffineMatrix::identity(n);
    AffineMatrix::blocks(&[
        vec![Some(v.px.expr().scale(sigma)), Some(eye.clone()), None],
        vec![Some(eye), Some(v.q1.expr().scale(1.0 / sigma)), None],
        vec![None, None, Some(third)],
    ])
}

/// `[[σ(F Px + G Y), F, 0], [Z, (Q1 F + X C)/σ, −X C/σ], [0, 0, third]]`.
fn magnified_dynamics(
    sys: &LtiSystem,
    v: &H2Variables,
    sigma: f64,
    third: AffineMatrix,
) -> Result<AffineMatrix> {
    let (f, g, c) = (sys.f(), sys.g(), sys.c());
    let controller = v.px.expr().mul_left(f) + v.y.expr().mul_left(g);
    let xc = v.x.expr().mul_right(c);
    let observer = v.q1.expr().mul_right(f) + xc.clone();
    AffineMatrix::blocks(&[
        vec![
            Some(controller.scale(sigma)),
            Some(AffineMatrix::constant(f.clone())),
            None,
        ],
        vec![
            Some(v.z.expr()),
            Some(observer.scale(1.0 / sigma)),
            Some(xc.scale(-1.0 / sigma)),
        ],
        vec![None, None, Some(third)],
    ])
}

fn budget_constraint(sys: &LtiSystem, v: &H2Variables, gamma_sq: AffineScalar) -> AffineScalar {
    let c = sys.c();
    let output = v.px.expr().mul_left(c).mul_right(&c.transpose()).trace();
    let trr = sys.r1().trace() + sys.r2().trace();
    output + AffineScalar::constant(sys.r2().trace()) - gamma_sq * trr
}

fn add_block(prob: &mut SdpProblem, label: &str, m: &AffineMatrix, margin: f64) -> Result<()> {
    prob.add_labeled_psd_block(label, m, margin)
}

struct IterativeProgram {
    problem: SdpProblem,
    vars: H2Variables,
}

/// Inner program of the iterative method for fixed `σ`, `a`, observer `l`
/// and residual weight `Σ(l)⁻¹/α`.
#[allow(clippy::too_many_arguments)]
fn iterative_program(
    sys: &LtiSystem,
    gamma_bar: f64,
    sigma: f64,
    a: f64,
    l: &DMatrix<f64>,
    residual_weight: &DMatrix<f64>,
    r1_inv: &DMatrix<f64>,
    nu_bar: f64,
    margin: f64,
) -> Result<IterativeProgram> {
    let n = sys.n();
    let mut prob = SdpProblem::new();
    let vars = H2Variables::declare(&mut prob, sys)?;
    let p3 = prob.add_symmetric_var("P3", n)?;
    let a1 = prob.add_scalar_var("a1", Some(0.0), Some(CONTRACTION_CAP))?;
    let a2 = prob.add_scalar_var("a2", Some(0.0), Some(CONTRACTION_CAP))?;
    prob.add_linear_leq(AffineScalar::constant(a) - a1.expr() - a2.expr())?;

    let p3e = p3.expr();
    let shape = magnified_shape(&vars, sigma, p3e.clone(), n)?;
    let dynamics = magnified_dynamics(sys, &vars, sigma, p3e.mul_right(sys.f()))?;
    let input = AffineMatrix::blocks(&[
        vec![Some(AffineMatrix::identity(n)), None],
        vec![
            Some(vars.q1.expr().scale(1.0 / sigma)),
            Some(vars.x.expr().scale(1.0 / sigma)),
        ],
        vec![Some(p3e.clone()), Some(p3e.mul_right(l).scale(-1.0))],
    ])?;
    let weight = block_diag(
        AffineMatrix::scalar_times(&complement(a1, 1.0 / nu_bar), r1_inv),
        AffineMatrix::scalar_times(&complement(a2, 1.0), residual_weight),
    )?;
    add_block(
        &mut prob,
        "bounding",
        &contraction_lmi(a, &shape, dynamics, input, weight)?,
        margin,
    )?;
    add_block(&mut prob, "covariance", &vars.covariance_lmi(sys)?, margin)?;
    prob.add_linear_leq(budget_constraint(
        sys,
        &vars,
        AffineScalar::constant(gamma_bar * gamma_bar),
    ))?;
    prob.set_objective(vars.px.expr().trace() * sigma);
    Ok(IterativeProgram { problem: prob, vars })
}

struct ConvexProgram {
    problem: SdpProblem,
    vars: H2Variables,
    tau: Option<ScalarVar>,
    #[allow(dead_code)]
    residual_weight: SymVar,
}

/// Program on the `P_x̂ = P_xx̂` manifold for fixed `σ`, `a`, `a2`. With
/// `gamma_bar = None` the squared ceiling becomes the objective.
#[allow(clippy::too_many_arguments)]
fn convex_program(
    sys: &LtiSystem,
    gamma_bar: Option<f64>,
    sigma: f64,
    a: f64,
    a2: f64,
    r1_inv: &DMatrix<f64>,
    r2_inv: &DMatrix<f64>,
    trunc: &TruncationConfig,
    margin: f64,
) -> Result<ConvexProgram> {
    let n = sys.n();
    let c = sys.c();
    let mut prob = SdpProblem::new();
    let vars = H2Variables::declare(&mut prob, sys)?;
    let pi = prob.add_symmetric_var("Pi", sys.p())?;
    let a1 = prob.add_scalar_var("a1", Some(0.0), Some(CONTRACTION_CAP))?;
    prob.add_linear_leq(AffineScalar::constant(a - a2) - a1.expr())?;
    let tau = match gamma_bar {
        Some(_) => None,
        None => Some(prob.add_scalar_var("tau", Some(0.0), None)?),
    };

    let q1s = vars.q1.expr().scale(1.0 / sigma);
    let xs = vars.x.expr().scale(1.0 / sigma);
    let shape = magnified_shape(&vars, sigma, q1s.clone(), n)?;
    let dynamics = magnified_dynamics(sys, &vars, sigma, q1s.mul_right(sys.f()))?;
    let input = AffineMatrix::blocks(&[
        vec![Some(AffineMatrix::identity(n)), None],
        vec![Some(q1s.clone()), Some(xs.clone())],
        vec![Some(q1s), Some(xs)],
    ])?;
    let weight = block_diag(
        AffineMatrix::scalar_times(&complement(a1, 1.0 / trunc.nu_bar), r1_inv),
        pi.expr().scale(1.0 - a2),
    )?;
    add_block(
        &mut prob,
        "bounding",
        &contraction_lmi(a, &shape, dynamics, input, weight)?,
        margin,
    )?;
    add_block(&mut prob, "covariance", &vars.covariance_lmi(sys)?, margin)?;

    let q1 = vars.q1.expr();
    let x = vars.x.expr();
    let k = |m: &DMatrix<f64>| Some(AffineMatrix::constant(m.clone()));
    let estimator = AffineMatrix::symmetric_blocks(&[
        vec![Some(q1.clone())],
        vec![
            Some((q1.mul_right(sys.f()) + x.mul_right(c)).transpose()),
            Some(q1.clone()),
        ],
        vec![Some(q1.mul_left(sys.r1())), None, k(sys.r1())],
        vec![Some(x.transpose().mul_left(sys.r2())), None, None, k(sys.r2())],
    ])?;
    add_block(&mut prob, "estimator", &estimator, margin)?;

    let s = trunc.e_bar + trunc.eta_bar;
    let pic = pi.expr().mul_right(c).scale(s);
    let residual = AffineMatrix::symmetric_blocks(&[
        vec![Some(q1 - pic.mul_left(&c.transpose()))],
        vec![
            Some(-pic),
            Some(AffineMatrix::constant(r2_inv.clone()) - pi.expr().scale(s)),
        ],
    ])?;
    add_block(&mut prob, "residual", &residual, margin)?;

    match (gamma_bar, tau) {
        (Some(g), _) => {
            prob.add_linear_leq(budget_constraint(sys, &vars, AffineScalar::constant(g * g)))?;
            prob.set_objective(vars.px.expr().trace() * sigma);
        }
        (None, Some(t)) => {
            prob.add_linear_leq(budget_constraint(sys, &vars, t.expr()))?;
            prob.set_objective(t.expr());
        }
        (None, None) => unreachable!("tau is declared whenever gamma_bar is absent"),
    }
    Ok(ConvexProgram {
        problem: prob,
        vars,
        tau,
        residual_weight: pi,
    })
}

/// `L = −Q1⁻¹X`, `P_x̂ = Px − Q1⁻¹`, `K = Y P_x̂⁻ᵀ`.
pub fn manifold_gains(v: &H2Values) -> Result<GainPair> {
    let q1_inv = inverse(&v.q1, "Q1")?;
    let l = -(&q1_inv * &v.x);
    let p_hat = &v.px - &q1_inv;
    let k = &v.y * inverse(&p_hat, "P_xhat")?.transpose();
    Ok(GainPair::new(k, l))
}

struct Solved {
    a: f64,
    a2: f64,
    solution: SdpSolution,
    problem: SdpProblem,
    values: H2Values,
    tau: Option<f64>,
}

fn certificate(sys: &LtiSystem, s: &Solved, gamma_bar: f64) -> Certificate {
    let c = sys.c();
    let trr = sys.r1().trace() + sys.r2().trace();
    let output = (c * &s.values.px * c.transpose()).trace();
    Certificate {
        block_min_eigenvalues: s.problem.block_min_eigenvalues(&s.solution.values),
        budget_residual: output + sys.r2().trace() - gamma_bar * gamma_bar * trr,
        max_violation: s.solution.max_constraint_violation,
    }
}

/// Picks the smallest objective; ties keep the earlier grid point.
fn pick_best(points: Vec<Option<Solved>>) -> Option<Solved> {
    let mut best: Option<Solved> = None;
    for p in points.into_iter().flatten() {
        let replace = match &best {
            None => true,
            Some(b) => {
                let tol = 1e-9 * b.solution.objective.abs().max(1.0);
                p.solution.objective < b.solution.objective - tol
            }
        };
        if replace {
            best = Some(p);
        }
    }
    best
}

struct Context<'a> {
    sys: &'a LtiSystem,
    detector: &'a DetectorConfig,
    trunc: &'a TruncationConfig,
    config: &'a CodesignConfig,
    r1_inv: DMatrix<f64>,
    r2_inv: DMatrix<f64>,
    a_values: Vec<f64>,
    opts: SolveOptions,
}

impl<'a> Context<'a> {
    fn new(
        sys: &'a LtiSystem,
        detector: &'a DetectorConfig,
        trunc: &'a TruncationConfig,
        config: &'a CodesignConfig,
    ) -> Result<Self> {
        config.validate()?;
        let a_values = config.admissible_a(sys);
        if a_values.is_empty() {
            return Err(Error::Argument(format!(
                "a-grid holds no value at or above the squared spectral radius of F ({:.4})",
                spectral_radius(sys.f()).powi(2)
            )));
        }
        Ok(Self {
            sys,
            detector,
            trunc,
            config,
            r1_inv: symmetrize(&inverse(sys.r1(), "R1")?),
            r2_inv: symmetrize(&inverse(sys.r2(), "R2")?),
            a_values,
            opts: config.solve_options(),
        })
    }

    fn ranking(&self) -> RankingContext {
        RankingContext {
            detector: *self.detector,
            truncation: *self.trunc,
            a_grid: self.config.a_grid.clone(),
            solve: self.opts,
        }
    }

    fn iterative_point(
        &self,
        gamma_bar: f64,
        sigma: f64,
        a: f64,
        l: &DMatrix<f64>,
        weight: &DMatrix<f64>,
    ) -> Option<Solved> {
        let prog = iterative_program(
            self.sys,
            gamma_bar,
            sigma,
            a,
            l,
            weight,
            &self.r1_inv,
            self.trunc.nu_bar,
            self.config.psd_margin,
        )
        .ok()?;
        let solution = prog.problem.solve(&self.opts);
        solution.is_optimal().then(|| Solved {
            a,
            a2: f64::NAN,
            values: prog.vars.values(&solution),
            solution,
            problem: prog.problem,
            tau: None,
        })
    }

    /// Inner program over the `a` grid. With a feasible starting point the
    /// grid is walked downhill from it; otherwise every point is solved.
    fn iterative_solve(
        &self,
        gamma_bar: f64,
        sigma: f64,
        l: &DMatrix<f64>,
        a_start: Option<f64>,
    ) -> Result<Option<Solved>> {
        let (_, cov) = residual_covariance(self.sys, l)?;
        let weight = symmetrize(&(inverse(&cov, "residual covariance")? / self.detector.alpha));
        let point = |i: usize| self.iterative_point(gamma_bar, sigma, self.a_values[i], l, &weight);
        let start = a_start.and_then(|a| self.a_values.iter().position(|&v| (v - a).abs() < 1e-12));
        if let Some(i0) = start {
            if let Some(first) = point(i0) {
                let mut best = (i0, first);
                for step in [-1isize, 1] {
                    let mut moved = false;
                    loop {
                        let j = best.0 as isize + step;
                        if j < 0 || j as usize >= self.a_values.len() {
                            break;
                        }
                        match point(j as usize) {
                            Some(s) if s.solution.objective < best.1.solution.objective => {
                                best = (j as usize, s);
                                moved = true;
                            }
                            _ => break,
                        }
                    }
                    if moved {
                        break;
                    }
                }
                return Ok(Some(best.1));
            }
        }
        let points: Vec<Option<Solved>> = (0..self.a_values.len()).into_par_iter().map(point).collect();
        Ok(pick_best(points))
    }

    fn convex_grid(&self) -> Vec<(f64, f64)> {
        self.a_values
            .iter()
            .flat_map(|&a| self.config.a2_grid.iter().map(move |&a2| (a, a2)))
            .collect()
    }

    fn convex_point(&self, gamma_bar: Option<f64>, sigma: f64, a: f64, a2: f64) -> Option<Solved> {
        let prog = convex_program(
            self.sys,
            gamma_bar,
            sigma,
            a,
            a2,
            &self.r1_inv,
            &self.r2_inv,
            self.trunc,
            self.config.psd_margin,
        )
        .ok()?;
        let solution = prog.problem.solve(&self.opts);
        if !solution.is_optimal() {
            return None;
        }
        Some(Solved {
            a,
            a2,
            values: prog.vars.values(&solution),
            tau: prog.tau.map(|t| solution.scalar(t)),
            solution,
            problem: prog.problem,
        })
    }

    /// Whether any grid point is feasible; stops at the first one found.
    fn convex_feasible(&self, gamma_bar: f64, sigma: f64) -> bool {
        self.convex_grid()
            .par_iter()
            .find_map_first(|&(a, a2)| self.convex_point(Some(gamma_bar), sigma, a, a2))
            .is_some()
    }

    fn convex_best(&self, gamma_bar: Option<f64>, sigma: f64) -> Option<Solved> {
        let points: Vec<Option<Solved>> = self
            .convex_grid()
            .par_iter()
            .map(|&(a, a2)| self.convex_point(gamma_bar, sigma, a, a2))
            .collect();
        pick_best(points)
    }

    #[allow(clippy::too_many_arguments)]
    fn finish(
        &self,
        method: Method,
        gamma_bar: f64,
        sigma: f64,
        gains: GainPair,
        solved: &Solved,
        diagnostics: Vec<ProbeRecord>,
        warm_start_path: Vec<f64>,
    ) -> Result<CodesignResult> {
        let report = evaluate_gamma(self.sys, &gains)?;
        let st = build_stacked(self.sys, &gains)?;
        let attacked_radius = spectral_radius(&st.a);
        let bound = bound_reachable_set_with(
            self.sys,
            &gains,
            self.detector,
            self.trunc,
            &self.config.a_grid,
            &self.opts,
        )?;
        let n = self.sys.n();
        let px_lyap = report.covariance.view((0, 0), (n, n)).into_owned();
        Ok(CodesignResult {
            method,
            sigma,
            gamma_bar,
            gamma: report.gamma,
            bound,
            a: solved.a,
            a2: solved.a2,
            objective: solved.solution.objective,
            mae_lyapunov: (&px_lyap - &solved.values.px).abs().mean(),
            px: solved.values.px.clone(),
            q1: solved.values.q1.clone(),
            nominal_radius: report.spectral_radius,
            attacked_radius,
            certificate: certificate(self.sys, solved, gamma_bar),
            gains,
            diagnostics,
            warm_start_path,
        })
    }
}

/// Shrinks `[lo, hi]` onto the feasibility threshold; `hi` must be feasible.
fn bisect<S>(
    mut lo: f64,
    mut hi: f64,
    hi_state: S,
    tol: f64,
    mut probe: impl FnMut(f64) -> Result<Option<S>>,
) -> Result<(f64, S)> {
    let mut state = hi_state;
    while hi - lo > tol * hi {
        // Geometric midpoint while the bracket spans decades.
        let mid = if hi / lo > 4.0 {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        match probe(mid)? {
            Some(s) => {
                hi = mid;
                state = s;
            }
            None => lo = mid,
        }
    }
    Ok((hi, state))
}

/// State carried by a feasible probe of the iterative method.
struct ObserverState {
    gains: GainPair,
    solved: Solved,
}

impl ObserverState {
    fn start(&self) -> ObserverStart {
        ObserverStart {
            gains: self.gains.clone(),
            a: Some(self.solved.a),
        }
    }
}

/// Warm start of an observer iteration.
struct ObserverStart {
    gains: GainPair,
    a: Option<f64>,
}

impl Context<'_> {
    /// Observer iteration at fixed `σ`. `None` when the inner program turns
    /// infeasible. A period-two oscillation between observers within
    /// `epsilon_l` of each other is accepted at its better member.
    fn observer_iteration(
        &self,
        gamma_bar: f64,
        sigma: f64,
        start: &ObserverStart,
        log: &mut Vec<ProbeRecord>,
    ) -> Result<Option<ObserverState>> {
        let mut record = ProbeRecord {
            gamma_bar,
            sigma,
            feasible: false,
            l_deltas: Vec::new(),
            cycle_length: 0,
        };
        let ranking = self.ranking();
        let mut current = start.gains.clone();
        let mut a_hint = start.a;
        let mut history: Vec<(DMatrix<f64>, ObserverState)> = Vec::new();
        for _ in 0..self.config.max_inner_iters {
            let Some(solved) = self.iterative_solve(gamma_bar, sigma, &current.l, a_hint)? else {
                log.push(record);
                return Ok(None);
            };
            a_hint = Some(solved.a);
            let (mut candidates, _) = match recover_candidates(self.sys, &solved.values) {
                Ok(c) => c,
                Err(Error::EmptyRiccati { .. } | Error::NearSingular { .. }) => {
                    log.push(record);
                    return Ok(None);
                }
                Err(e) => return Err(e),
            };
            let Ok(idx) = rank_candidates(self.sys, &mut candidates, Some(&ranking)) else {
                log.push(record);
                return Ok(None);
            };
            let next = candidates.swap_remove(idx).gains;
            record.l_deltas.push((&next.l - &current.l).norm());
            let input = std::mem::replace(&mut current, next.clone()).l;
            history.push((input, ObserverState { gains: next, solved }));
            let last = &history[history.len() - 1].1.gains.l;
            let closed = history
                .iter()
                .rposition(|(l, _)| (last - l).norm() <= self.config.epsilon_l);
            if let Some(j) = closed {
                record.feasible = true;
                record.cycle_length = history.len() - j;
                log.push(record);
                let best = history.drain(j..).map(|(_, s)| s).reduce(|a, b| {
                    if b.solved.solution.objective < a.solved.solution.objective {
                        b
                    } else {
                        a
                    }
                });
                return Ok(best);
            }
        }
        let last_delta = record.l_deltas.last().copied().unwrap_or(f64::NAN);
        log.push(record);
        Err(Error::NonConvergence {
            iterations: self.config.max_inner_iters,
            last_delta,
        })
    }

    /// Smallest feasible `σ` below a feasible `upper` for one γ̄.
    fn iterative_stage(
        &self,
        gamma_bar: f64,
        upper: (f64, ObserverState),
        log: &mut Vec<ProbeRecord>,
    ) -> Result<(f64, ObserverState)> {
        let (hi, state) = upper;
        let mut start = state.start();
        bisect(
            self.config.sigma_min,
            hi,
            state,
            self.config.sigma_bisect_tol,
            |sigma| {
                let found = self.observer_iteration(gamma_bar, sigma, &start, log)?;
                if let Some(s) = &found {
                    start = s.start();
                }
                Ok(found)
            },
        )
    }

    /// First feasible state at `sigma`, falling back to `sigma_max`.
    fn feasible_upper(
        &self,
        gamma_bar: f64,
        sigma: f64,
        start: &ObserverStart,
        log: &mut Vec<ProbeRecord>,
    ) -> Result<(f64, ObserverState)> {
        if sigma < self.config.sigma_max {
            if let Some(s) = self.observer_iteration(gamma_bar, sigma, start, log)? {
                return Ok((sigma, s));
            }
        }
        let s = self
            .observer_iteration(gamma_bar, self.config.sigma_max, start, log)?
            .ok_or(Error::NoFeasibleMagnification {
                sigma_max: self.config.sigma_max,
            })?;
        Ok((self.config.sigma_max, s))
    }
}

fn ramp(gamma_star: f64, gamma_bar: f64, step: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut g = gamma_star + step;
    while g < gamma_bar - 1e-9 {
        out.push(g);
        g += step;
    }
    out.push(gamma_bar);
    out
}

/// Iterative co-design: alternate convex solves at fixed observer with
/// observer recovery, shrinking the magnification by bisection. When γ̄ is
/// far from the H2 optimum, intermediate ceilings are solved first and used
/// as warm starts.
pub fn design_iterative(
    sys: &LtiSystem,
    gamma_bar: f64,
    detector: &DetectorConfig,
    trunc: &TruncationConfig,
    config: &CodesignConfig,
) -> Result<CodesignResult> {
    let ctx = Context::new(sys, detector, trunc, config)?;
    let h2 = optimal_occ_h2_ranked(sys, Some(&ctx.ranking()), &ctx.opts)?;
    if gamma_bar <= h2.gamma_star {
        return Err(Error::GammaBarTooSmall {
            gamma_bar,
            gamma_star: h2.gamma_star,
        });
    }
    let stages = ramp(h2.gamma_star, gamma_bar, config.gamma_step);
    let mut log = Vec::new();
    let mut path = Vec::new();
    let mut start = ObserverStart {
        gains: h2.selected,
        a: None,
    };
    let mut sigma = config.sigma_max;
    let (last_gamma, intermediate) = stages.split_last().expect("ramp has at least one stage");
    for &g in intermediate {
        let shrunk = sigma * config.ramp_sigma_shrink;
        let (s, state) = match ctx.observer_iteration(g, shrunk, &start, &mut log) {
            Ok(Some(state)) => (shrunk, state),
            Ok(None) | Err(Error::NonConvergence { .. }) => ctx.feasible_upper(g, sigma, &start, &mut log)?,
            Err(e) => return Err(e),
        };
        path.push(g);
        start = state.start();
        sigma = s;
    }
    let upper = ctx.feasible_upper(*last_gamma, sigma, &start, &mut log)?;
    path.push(*last_gamma);
    let (sigma, state) = ctx.iterative_stage(*last_gamma, upper, &mut log)?;
    ctx.finish(
        Method::Iterative,
        gamma_bar,
        sigma,
        state.gains,
        &state.solved,
        log,
        path,
    )
}

/// Convex co-design on the `P_x̂ = P_xx̂` manifold: bisection on `σ` over a
/// grid of `(a, a2)`, with gains read directly from the solution.
pub fn design_convex(
    sys: &LtiSystem,
    gamma_bar: f64,
    detector: &DetectorConfig,
    trunc: &TruncationConfig,
    config: &CodesignConfig,
) -> Result<CodesignResult> {
    design_convex_from(sys, gamma_bar, detector, trunc, config, None)
}

/// Whether the convex program is feasible at `sigma` for some grid point.
pub fn convex_feasible_at(
    sys: &LtiSystem,
    gamma_bar: f64,
    sigma: f64,
    detector: &DetectorConfig,
    trunc: &TruncationConfig,
    config: &CodesignConfig,
) -> Result<bool> {
    Ok(Context::new(sys, detector, trunc, config)?.convex_feasible(gamma_bar, sigma))
}

/// As [`design_convex`], probing `upper_hint` before `sigma_max`.
pub fn design_convex_from(
    sys: &LtiSystem,
    gamma_bar: f64,
    detector: &DetectorConfig,
    trunc: &TruncationConfig,
    config: &CodesignConfig,
    upper_hint: Option<f64>,
) -> Result<CodesignResult> {
    let ctx = Context::new(sys, detector, trunc, config)?;
    let mut log = Vec::new();
    let feasible = |sigma: f64, log: &mut Vec<ProbeRecord>| {
        let ok = ctx.convex_feasible(gamma_bar, sigma);
        log.push(ProbeRecord {
            gamma_bar,
            sigma,
            feasible: ok,
            l_deltas: Vec::new(),
            cycle_length: 0,
        });
        ok
    };
    let hi = match upper_hint {
        Some(h) if h < config.sigma_max && feasible(h, &mut log) => h,
        _ if feasible(config.sigma_max, &mut log) => config.sigma_max,
        _ => {
            return Err(Error::InfeasibleBelowThreshold {
                gamma_bar,
                sigma_max: config.sigma_max,
            })
        }
    };
    let (sigma, ()) = bisect(config.sigma_min, hi, (), config.sigma_bisect_tol, |s| {
        Ok(feasible(s, &mut log).then_some(()))
    })?;
    let solved = ctx
        .convex_best(Some(gamma_bar), sigma)
        .ok_or_else(|| Error::Numerical(format!("no grid point solved at the bracketed sigma = {sigma}")))?;
    let gains = manifold_gains(&solved.values)?;
    ctx.finish(
        Method::Convex,
        gamma_bar,
        sigma,
        gains,
        &solved,
        log,
        vec![gamma_bar],
    )
}

/// Relative slack on `γ̄²` used to recover gains at the infimum.
pub const INFIMUM_SLACK: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfimumResult {
    /// Smallest ceiling admitting a manifold solution.
    pub gamma_bar_c: f64,
    /// Achieved performance at the corresponding gains.
    pub gamma_c: f64,
    pub gains: GainPair,
    pub sigma: f64,
    pub a: f64,
    pub a2: f64,
}

/// Smallest γ̄ for which the manifold program is feasible at a fixed large
/// magnification.
pub fn infimum_gamma_on_manifold(
    sys: &LtiSystem,
    detector: &DetectorConfig,
    trunc: &TruncationConfig,
    sigma_fixed: f64,
    config: &CodesignConfig,
) -> Result<InfimumResult> {
    let ctx = Context::new(sys, detector, trunc, config)?;
    let solved = ctx.convex_best(None, sigma_fixed).ok_or_else(|| {
        Error::Infeasible(format!(
            "manifold program infeasible at sigma = {sigma_fixed}; try a larger magnification"
        ))
    })?;
    let tau = solved.tau.expect("infimum program declares tau");
    let gamma_bar_c = tau.max(0.0).sqrt();
    // The infimum leaves the gain variables undetermined; re-solve the design
    // objective just above the ceiling to pick well-defined gains.
    let ceiling = (tau * (1.0 + INFIMUM_SLACK)).max(0.0).sqrt();
    let design = ctx
        .convex_point(Some(ceiling), sigma_fixed, solved.a, solved.a2)
        .ok_or_else(|| {
            Error::Numerical(format!(
                "design program failed just above the infimum (gamma_bar = {ceiling})"
            ))
        })?;
    let gains = manifold_gains(&design.values)?;
    let gamma_c = evaluate_gamma(sys, &gains)?.gamma;
    Ok(InfimumResult {
        gamma_bar_c,
        gamma_c,
        gains,
        sigma: sigma_fixed,
        a: solved.a,
        a2: solved.a2,
    })
}

/// One row of a γ̄ sweep; `None` fields mark a failed design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffRow {
    pub gamma_bar: f64,
    pub gamma: Option<f64>,
    pub security_objective: Option<f64>,
    pub sigma: Option<f64>,
    pub error: Option<String>,
}

/// Runs the chosen designer over an ascending γ̄ list, reusing the previous
/// magnification as the first bracket. Failures are recorded, not fatal.
pub fn tradeoff_curve(
    sys: &LtiSystem,
    detector: &DetectorConfig,
    trunc: &TruncationConfig,
    gamma_bars: &[f64],
    method: Method,
    config: &CodesignConfig,
) -> Result<Vec<TradeoffRow>> {
    if gamma_bars.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Argument("gamma_bar list must be sorted ascending".into()));
    }
    config.validate()?;
    let mut rows = Vec::with_capacity(gamma_bars.len());
    let mut hint = None;
    for &g in gamma_bars {
        let res = match method {
            Method::Convex => design_convex_from(sys, g, detector, trunc, config, hint),
            Method::Iterative => design_iterative(sys, g, detector, trunc, config),
        };
        rows.push(match res {
            Ok(r) => {
                hint = Some(r.sigma);
                TradeoffRow {
                    gamma_bar: g,
                    gamma: Some(r.gamma),
                    security_objective: Some(r.bound.objective),
                    sigma: Some(r.sigma),
                    error: None,
                }
            }
            Err(e) => TradeoffRow {
                gamma_bar: g,
                gamma: None,
                security_objective: None,
                sigma: None,
                error: Some(e.to_string()),
            },
        });
    }
    Ok(rows)
}

/// CSV with header `gamma_bar,gamma,security_objective`; failed rows leave
/// the last two fields empty.
pub fn tradeoff_csv(rows: &[TradeoffRow]) -> String {
    let mut out = String::from("gamma_bar,gamma,security_objective\n");
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in rows {
        out.push_str(&format!(
            "{},{},{}\n",
            r.gamma_bar,
            opt(r.gamma),
            opt(r.security_objective)
        ));
    }
    out
}
