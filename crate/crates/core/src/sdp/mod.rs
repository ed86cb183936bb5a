//! Declarative semidefinite programs and a native interior-point solver.
//!
//! ```
//! use lmi_codesign::sdp::{AffineMatrix, SdpProblem, SdpStatus};
//!
//! let mut prob = SdpProblem::new();
//! let x = prob.add_symmetric_var("X", 3).unwrap();
//! prob.add_psd_block(&(x.expr() - AffineMatrix::identity(3))).unwrap();
//! prob.set_objective(x.expr().trace());
//! let sol = prob.solve_default();
//! assert_eq!(sol.status, SdpStatus::Optimal);
//! assert!((sol.objective - 3.0).abs() < 1e-6);
//! ```

mod expr;
mod ipm;

use std::collections::HashSet;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use expr::{AffineMatrix, AffineScalar, MatVar, ScalarVar, SymVar};

use crate::error::{Error, Result};
use crate::numerics::min_eigenvalue;
use ipm::{ConeBlock, ConeProgram, IpmOutcome, IpmSettings};

pub const DEFAULT_FEAS_TOL: f64 = 1e-8;
pub const DEFAULT_OPT_TOL: f64 = 1e-8;
/// A stalled solve is still reported optimal when its best iterate is within
/// this factor of the requested tolerances.
const STALL_ACCEPT_FACTOR: f64 = 100.0;

#[derive(Debug, Clone, PartialEq)]
enum VarKind {
    Symmetric(usize),
    Matrix(usize, usize),
    Scalar { lower: Option<f64>, upper: Option<f64> },
}

#[derive(Debug, Clone)]
struct VarDecl {
    name: String,
    kind: VarKind,
    offset: usize,
}

#[derive(Debug, Clone)]
struct PsdConstraint {
    label: String,
    expr: AffineMatrix,
    margin: f64,
}

#[derive(Debug, Clone, Default)]
pub struct SdpProblem {
    vars: Vec<VarDecl>,
    names: HashSet<String>,
    n_slots: usize,
    psd: Vec<PsdConstraint>,
    leq: Vec<(String, AffineScalar)>,
    eq: Vec<(String, AffineScalar)>,
    objective: AffineScalar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    /// The objective is unbounded below (dual infeasible).
    Unbounded,
    NumericalFailure,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub status: SdpStatus,
    /// Flat assignment of every scalar slot.
    pub values: Vec<f64>,
    pub objective: f64,
    /// Largest violation over PSD blocks (negative eigenvalue magnitude) and
    /// linear constraints, at `values`.
    pub max_constraint_violation: f64,
    pub iterations: usize,
}

impl SdpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SdpStatus::Optimal
    }

    pub fn scalar(&self, v: ScalarVar) -> f64 {
        self.values[v.index]
    }

    pub fn symmetric(&self, v: SymVar) -> DMatrix<f64> {
        v.expr().evaluate(&self.values)
    }

    pub fn matrix(&self, v: MatVar) -> DMatrix<f64> {
        DMatrix::from_row_slice(v.rows, v.cols, &self.values[v.offset..v.offset + v.rows * v.cols])
    }

    pub fn eval(&self, e: &AffineMatrix) -> DMatrix<f64> {
        e.evaluate(&self.values)
    }

    pub fn eval_scalar(&self, e: &AffineScalar) -> f64 {
        e.evaluate(&self.values)
    }
}

/// Solver settings; tolerances default to 1e-8.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub feas_tol: f64,
    pub opt_tol: f64,
    pub max_iters: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            feas_tol: DEFAULT_FEAS_TOL,
            opt_tol: DEFAULT_OPT_TOL,
            max_iters: 100,
        }
    }
}

impl SdpProblem {
    pub fn new() -> Self {
        Self::default()
    }

    fn declare(&mut self, name: &str, kind: VarKind, slots: usize) -> Result<usize> {
        if name.is_empty() {
            return Err(Error::Argument("variable name must be non-empty".into()));
        }
        if !self.names.insert(name.to_string()) {
            return Err(Error::Argument(format!("duplicate variable name `{name}`")));
        }
        let offset = self.n_slots;
        self.vars.push(VarDecl {
            name: name.to_string(),
            kind,
            offset,
        });
        self.n_slots += slots;
        Ok(offset)
    }

    pub fn add_symmetric_var(&mut self, name: &str, dim: usize) -> Result<SymVar> {
        if dim == 0 {
            return Err(Error::Argument(format!(
                "variable `{name}` needs positive dimension"
            )));
        }
        let offset = self.declare(name, VarKind::Symmetric(dim), dim * (dim + 1) / 2)?;
        Ok(SymVar { offset, dim })
    }

    pub fn add_matrix_var(&mut self, name: &str, rows: usize, cols: usize) -> Result<MatVar> {
        if rows == 0 || cols == 0 {
            return Err(Error::Argument(format!(
                "variable `{name}` needs positive dimensions"
            )));
        }
        let offset = self.declare(name, VarKind::Matrix(rows, cols), rows * cols)?;
        Ok(MatVar { offset, rows, cols })
    }

    /// Scalar variable with optional bounds, which become linear constraints.
    pub fn add_scalar_var(
        &mut self,
        name: &str,
        lower: Option<f64>,
        upper: Option<f64>,
    ) -> Result<ScalarVar> {
        if let (Some(l), Some(u)) = (lower, upper) {
            if l > u {
                return Err(Error::Argument(format!(
                    "variable `{name}` has empty bounds [{l}, {u}]"
                )));
            }
        }
        let index = self.declare(name, VarKind::Scalar { lower, upper }, 1)?;
        let v = ScalarVar { index };
        if let Some(l) = lower {
            self.leq
                .push((format!("{name} >= {l}"), AffineScalar::constant(l) - v.expr()));
        }
        if let Some(u) = upper {
            self.leq
                .push((format!("{name} <= {u}"), v.expr() - AffineScalar::constant(u)));
        }
        Ok(v)
    }

    pub fn num_slots(&self) -> usize {
        self.n_slots
    }

    fn check_slots(&self, max: Option<usize>) -> Result<()> {
        match max {
            Some(k) if k >= self.n_slots => Err(Error::Argument(
                "expression references an undeclared variable".into(),
            )),
            _ => Ok(()),
        }
    }

    /// Requires `expr ⪰ 0`.
    pub fn add_psd_block(&mut self, expr: &AffineMatrix) -> Result<()> {
        self.add_psd_block_with_margin(expr, 0.0)
    }

    /// Requires `expr ⪰ margin·I`.
    pub fn add_psd_block_with_margin(&mut self, expr: &AffineMatrix, margin: f64) -> Result<()> {
        let label = format!("psd{}", self.psd.len());
        self.add_labeled_psd_block(&label, expr, margin)
    }

    pub fn add_labeled_psd_block(&mut self, label: &str, expr: &AffineMatrix, margin: f64) -> Result<()> {
        let (r, c) = expr.shape();
        if r != c || r == 0 {
            return Err(Error::dim(
                format!("PSD block `{label}`"),
                "non-empty square",
                format!("{r}x{c}"),
            ));
        }
        let scale = std::iter::once(expr.constant_part())
            .chain(expr.terms.values())
            .map(|m| m.amax())
            .fold(1.0, f64::max);
        if expr.asymmetry() > 1e-10 * scale {
            return Err(Error::Argument(format!(
                "PSD block `{label}` is not symmetric (asymmetry {:.3e})",
                expr.asymmetry()
            )));
        }
        self.check_slots(expr.max_slot())?;
        self.psd.push(PsdConstraint {
            label: label.to_string(),
            expr: expr.clone(),
            margin,
        });
        Ok(())
    }

    /// Requires `expr ≤ 0`.
    pub fn add_linear_leq(&mut self, expr: AffineScalar) -> Result<()> {
        self.check_slots(expr.max_slot())?;
        let label = format!("leq{}", self.leq.len());
        self.leq.push((label, expr));
        Ok(())
    }

    /// Requires `expr = 0`.
    pub fn add_linear_eq(&mut self, expr: AffineScalar) -> Result<()> {
        self.check_slots(expr.max_slot())?;
        let label = format!("eq{}", self.eq.len());
        self.eq.push((label, expr));
        Ok(())
    }

    /// Linear objective to minimize.
    pub fn set_objective(&mut self, expr: AffineScalar) {
        self.objective = expr;
    }

    pub fn solve_default(&self) -> SdpSolution {
        self.solve(&SolveOptions::default())
    }

    pub fn solve_with_tols(&self, feas_tol: f64, opt_tol: f64) -> SdpSolution {
        self.solve(&SolveOptions {
            feas_tol,
            opt_tol,
            ..Default::default()
        })
    }

    pub fn solve(&self, opts: &SolveOptions) -> SdpSolution {
        let n = self.n_slots;
        if n == 0 {
            let violation = self.violation(&[]);
            let feasible = violation <= opts.feas_tol;
            return SdpSolution {
                status: if feasible {
                    SdpStatus::Optimal
                } else {
                    SdpStatus::Infeasible
                },
                values: Vec::new(),
                objective: self.objective.constant,
                max_constraint_violation: violation,
                iterations: 0,
            };
        }
        let (prog, rho) = self.compile();
        // The interior-point tolerances act on the normalized problem.
        let settings = IpmSettings {
            feas_tol: opts.feas_tol,
            abs_tol: opts.opt_tol,
            rel_tol: opts.opt_tol,
            max_iters: opts.max_iters,
        };
        let res = ipm::solve(&prog, &settings);
        let values: Vec<f64> = res.x.iter().map(|v| v * rho).collect();
        let violation = self.violation(&values);
        let objective = self.objective.evaluate(&values);
        let status = match res.outcome {
            IpmOutcome::Optimal => SdpStatus::Optimal,
            IpmOutcome::PrimalInfeasible => SdpStatus::Infeasible,
            IpmOutcome::DualInfeasible => SdpStatus::Unbounded,
            IpmOutcome::Stalled => {
                // Accept a stalled iterate that is feasible and nearly optimal.
                if res.accuracy <= STALL_ACCEPT_FACTOR * opts.feas_tol.max(opts.opt_tol) {
                    SdpStatus::Optimal
                } else {
                    SdpStatus::NumericalFailure
                }
            }
        };
        SdpSolution {
            status,
            values,
            objective,
            max_constraint_violation: violation,
            iterations: res.iterations,
        }
    }

    /// Largest violation of any constraint at `values`.
    pub fn violation(&self, values: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for c in &self.psd {
            let m = c.expr.evaluate(values);
            worst = worst.max(c.margin - min_eigenvalue(&m));
        }
        for (_, e) in &self.leq {
            worst = worst.max(e.evaluate(values));
        }
        for (_, e) in &self.eq {
            worst = worst.max(e.evaluate(values).abs());
        }
        worst.max(0.0)
    }

    /// Per-block minimum eigenvalues at `values`, labelled.
    pub fn block_min_eigenvalues(&self, values: &[f64]) -> Vec<(String, f64)> {
        self.psd
            .iter()
            .map(|c| (c.label.clone(), min_eigenvalue(&c.expr.evaluate(values))))
            .collect()
    }

    /// Lowers to standard cone form with unit-size constants, equality rows
    /// and objective. Returns the program and the factor `ρ` with `x = ρ x̃`.
    fn compile(&self) -> (ConeProgram, f64) {
        let n = self.n_slots;
        let mut blocks: Vec<ConeBlock> = Vec::new();
        for c in &self.psd {
            let d = c.expr.nrows();
            let f0 = c.expr.constant_part() - DMatrix::identity(d, d) * c.margin;
            let coeffs = c
                .expr
                .terms
                .iter()
                .filter(|(_, m)| m.amax() > 0.0)
                .map(|(&k, m)| (k, m.clone()))
                .collect();
            blocks.push(ConeBlock { f0, coeffs });
        }
        for (_, e) in &self.leq {
            // aᵀx + b ≤ 0  ⇔  -(aᵀx + b) ≥ 0
            let coeffs = e
                .terms
                .iter()
                .filter(|(_, &v)| v != 0.0)
                .map(|(&k, &v)| (k, DMatrix::from_element(1, 1, -v)))
                .collect();
            blocks.push(ConeBlock {
                f0: DMatrix::from_element(1, 1, -e.constant),
                coeffs,
            });
        }
        let p = self.eq.len();
        let mut a_eq = DMatrix::zeros(p, n);
        let mut b_eq = DVector::zeros(p);
        for (r, (_, e)) in self.eq.iter().enumerate() {
            for (&k, &v) in &e.terms {
                a_eq[(r, k)] = v;
            }
            b_eq[r] = -e.constant;
        }
        let mut c = DVector::zeros(n);
        for (&k, &v) in &self.objective.terms {
            c[k] = v;
        }

        // Equality rows to unit max-norm.
        for r in 0..p {
            let s = a_eq.row(r).amax();
            if s > 0.0 {
                a_eq.row_mut(r).scale_mut(1.0 / s);
                b_eq[r] /= s;
            }
        }
        let obj_scale = c.amax();
        if obj_scale > 0.0 {
            c /= obj_scale;
        }

        // x = ρ x̃ brings the constant terms to unit size.
        let rho = blocks
            .iter()
            .map(|b| b.f0.amax())
            .chain(b_eq.iter().map(|v| v.abs()))
            .fold(0.0, f64::max);
        if rho > 0.0 {
            for b in blocks.iter_mut() {
                b.f0 /= rho;
            }
            b_eq /= rho;
        }
        (
            ConeProgram {
                n,
                c,
                blocks,
                a_eq,
                b_eq,
            },
            if rho > 0.0 { rho } else { 1.0 },
        )
    }

    /// Plain-text dump of the assembled problem for solver triage.
    pub fn to_sexpr(&self) -> String {
        let mut out = String::from("(sdp\n  (variables");
        for v in &self.vars {
            let kind = match &v.kind {
                VarKind::Symmetric(d) => format!("(symmetric {d})"),
                VarKind::Matrix(r, c) => format!("(matrix {r} {c})"),
                VarKind::Scalar { lower, upper } => format!(
                    "(scalar {} {})",
                    lower.map_or("-inf".to_string(), |v| format!("{v:e}")),
                    upper.map_or("+inf".to_string(), |v| format!("{v:e}"))
                ),
            };
            let _ = write!(out, "\n    ({} {} @{})", v.name, kind, v.offset);
        }
        out.push(')');
        let _ = write!(out, "\n  (minimize {})", scalar_sexpr(&self.objective));
        for c in &self.psd {
            let _ = write!(
                out,
                "\n  (psd {} (dim {}) (margin {:e})\n    (const {})",
                c.label,
                c.expr.nrows(),
                c.margin,
                matrix_sexpr(c.expr.constant_part())
            );
            for (k, m) in &c.expr.terms {
                let _ = write!(out, "\n    (x{} {})", k, matrix_sexpr(m));
            }
            out.push(')');
        }
        for (label, e) in &self.leq {
            let _ = write!(out, "\n  (leq {} {})", label, scalar_sexpr(e));
        }
        for (label, e) in &self.eq {
            let _ = write!(out, "\n  (eq {} {})", label, scalar_sexpr(e));
        }
        out.push_str(")\n");
        out
    }
}

fn scalar_sexpr(e: &AffineScalar) -> String {
    let mut s = format!("(+ {:e}", e.constant);
    for (k, v) in &e.terms {
        let _ = write!(s, " (* {v:e} x{k})");
    }
    s.push(')');
    s
}

fn matrix_sexpr(m: &DMatrix<f64>) -> String {
    let rows: Vec<String> = (0..m.nrows())
        .map(|i| {
            let cols: Vec<String> = (0..m.ncols()).map(|j| format!("{:e}", m[(i, j)])).collect();
            format!("({})", cols.join(" "))
        })
        .collect();
    format!("({})", rows.join(" "))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_var_has_triangular_dof() {
        let mut p = SdpProblem::new();
        let x = p.add_symmetric_var("X", 2).unwrap();
        assert_eq!(x.free_entries(), 3);
        assert_eq!(p.num_slots(), 3);
        let y = p.add_symmetric_var("Y", 4).unwrap();
        let mut slots: Vec<usize> = (0..4)
            .flat_map(|i| (i..4).map(move |j| (i, j)))
            .map(|(i, j)| y.slot(i, j))
            .collect();
        slots.sort();
        assert_eq!(slots, (3..13).collect::<Vec<_>>());
        assert_eq!(y.slot(2, 1), y.slot(1, 2));
    }

    #[test]
    fn duplicate_names_rejected() {
        let mut p = SdpProblem::new();
        p.add_symmetric_var("X", 2).unwrap();
        assert!(p.add_scalar_var("X", None, None).is_err());
        assert!(p.add_symmetric_var("Z", 0).is_err());
    }

    #[test]
    fn mismatched_block_dims_rejected() {
        let mut p = SdpProblem::new();
        let x = p.add_symmetric_var("X", 2).unwrap();
        let y = p.add_symmetric_var("Y", 3).unwrap();
        assert!(x.expr().checked_add(&y.expr()).is_err());
        let bad = AffineMatrix::blocks(&[
            vec![Some(x.expr()), None],
            vec![None, Some(y.expr())],
            vec![Some(y.expr()), None],
        ]);
        assert!(bad.is_err());
    }

    #[test]
    fn non_square_or_asymmetric_block_rejected() {
        let mut p = SdpProblem::new();
        let m = p.add_matrix_var("M", 2, 2).unwrap();
        assert!(p.add_psd_block(&m.expr()).is_err());
        assert!(p.add_psd_block(&AffineMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn empty_problem_is_trivially_optimal() {
        let sol = SdpProblem::new().solve_default();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert_eq!(sol.objective, 0.0);
    }

    #[test]
    fn min_trace_above_identity() {
        let mut p = SdpProblem::new();
        let x = p.add_symmetric_var("X", 3).unwrap();
        p.add_psd_block(&(x.expr() - AffineMatrix::identity(3))).unwrap();
        p.set_objective(x.expr().trace());
        let sol = p.solve_default();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.objective - 3.0).abs() < 1e-6, "{}", sol.objective);
        let xv = sol.symmetric(x);
        assert!((xv - DMatrix::<f64>::identity(3, 3)).amax() < 1e-6);
    }

    #[test]
    fn contradictory_blocks_are_infeasible() {
        let mut p = SdpProblem::new();
        let x = p.add_symmetric_var("X", 2).unwrap();
        p.add_psd_block(&(x.expr() - AffineMatrix::identity(2))).unwrap();
        p.add_psd_block(&(-x.expr())).unwrap();
        let sol = p.solve_default();
        assert_eq!(sol.status, SdpStatus::Infeasible);
    }

    #[test]
    fn unbounded_objective_detected() {
        let mut p = SdpProblem::new();
        let t = p.add_scalar_var("t", None, Some(1.0)).unwrap();
        p.set_objective(t.expr());
        assert_eq!(p.solve_default().status, SdpStatus::Unbounded);
    }

    #[test]
    fn scalar_bounds_and_equalities() {
        let mut p = SdpProblem::new();
        let a = p.add_scalar_var("a", Some(0.0), Some(1.0)).unwrap();
        let b = p.add_scalar_var("b", Some(0.0), None).unwrap();
        p.add_linear_eq(a.expr() + b.expr() - AffineScalar::constant(1.5))
            .unwrap();
        p.set_objective(b.expr());
        let sol = p.solve_default();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.scalar(a) - 1.0).abs() < 1e-6);
        assert!((sol.scalar(b) - 0.5).abs() < 1e-6);
    }

    #[test]
    fn margin_is_enforced() {
        let mut p = SdpProblem::new();
        let x = p.add_symmetric_var("X", 2).unwrap();
        p.add_psd_block_with_margin(&x.expr(), 0.25).unwrap();
        p.set_objective(x.expr().trace());
        let sol = p.solve_default();
        assert!((sol.objective - 0.5).abs() < 1e-6);
    }

    #[test]
    fn badly_scaled_lmi() {
        // min t  s.t. [[t, 1e2], [1e2, 1e-2 x]] ⪰ 0, x ≤ 1  →  t = 1e6
        let mut p = SdpProblem::new();
        let t = p.add_scalar_var("t", None, None).unwrap();
        let x = p.add_scalar_var("x", None, Some(1.0)).unwrap();
        let blk = AffineMatrix::blocks(&[
            vec![
                Some(AffineMatrix::from_scalar(&t.expr())),
                Some(AffineMatrix::constant(DMatrix::from_element(1, 1, 1e2))),
            ],
            vec![
                Some(AffineMatrix::constant(DMatrix::from_element(1, 1, 1e2))),
                Some(AffineMatrix::from_scalar(&(x.expr() * 1e-2))),
            ],
        ])
        .unwrap();
        p.add_psd_block(&blk).unwrap();
        p.set_objective(t.expr());
        let sol = p.solve_default();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.objective / 1e6 - 1.0).abs() < 1e-6, "{}", sol.objective);
    }

    #[test]
    fn sexpr_dump_mentions_everything() {
        let mut p = SdpProblem::new();
        let x = p.add_symmetric_var("X", 2).unwrap();
        let a = p.add_scalar_var("a", Some(0.0), None).unwrap();
        p.add_psd_block(&x.expr()).unwrap();
        p.set_objective(x.expr().trace() + a.expr());
        let s = p.to_sexpr();
        assert!(s.contains("(X (symmetric 2) @0)"));
        assert!(s.contains("(a (scalar"));
        assert!(s.contains("(psd psd0"));
        assert!(s.contains("(minimize"));
    }
}
