//! Homogeneous self-dual primal-dual interior-point method for
//!
//! ```text
//! minimize cᵀx  subject to  F0_b + Σ x_i F_ib ⪰ 0  (every block b),  A x = b
//! ```
//!
//! using Nesterov-Todd scaling and a Mehrotra predictor-corrector.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub(crate) struct ConeBlock {
    pub f0: DMatrix<f64>,
    /// Nonzero coefficient matrices `(variable, F_i)`.
    pub coeffs: Vec<(usize, DMatrix<f64>)>,
}

impl ConeBlock {
    fn dim(&self) -> usize {
        self.f0.nrows()
    }
}

#[derive(Debug, Clone)]
pub(crate) struct ConeProgram {
    pub n: usize,
    pub c: DVector<f64>,
    pub blocks: Vec<ConeBlock>,
    pub a_eq: DMatrix<f64>,
    pub b_eq: DVector<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum IpmOutcome {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    Stalled,
}

#[derive(Debug, Clone)]
pub(crate) struct IpmResult {
    pub outcome: IpmOutcome,
    pub x: DVector<f64>,
    pub iterations: usize,
    /// `max(primal residual, dual residual, min(absolute gap, relative gap))`
    /// of the returned iterate.
    pub accuracy: f64,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct IpmSettings {
    pub feas_tol: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_iters: usize,
}

type Blocks = Vec<DMatrix<f64>>;

/// Per-block Nesterov-Todd scaling `W z = Rᵀ z R`, `W⁻ᵀ s = R⁻¹ s R⁻ᵀ`,
/// with the scaled point `λ = W z = W⁻ᵀ s` kept diagonal.
struct Scaling {
    r: Blocks,
    r_inv: Blocks,
    lambda: Vec<DVector<f64>>,
}

fn inner(u: &Blocks, v: &Blocks) -> f64 {
    u.iter().zip(v).map(|(a, b)| a.dot(b)).sum()
}

fn norm(u: &Blocks) -> f64 {
    inner(u, u).sqrt()
}

fn sym(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Cholesky factor of a symmetric matrix, or None when it is not numerically PD.
fn chol(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    nalgebra::linalg::Cholesky::new(sym(m.clone())).map(|c| c.l())
}

impl ConeProgram {
    fn total_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.dim()).sum()
    }

    fn h(&self) -> Blocks {
        self.blocks.iter().map(|b| b.f0.clone()).collect()
    }

    /// `G x = -Σ x_i F_i`.
    fn apply_g(&self, x: &DVector<f64>) -> Blocks {
        self.blocks
            .iter()
            .map(|b| {
                let mut out = DMatrix::zeros(b.dim(), b.dim());
                for (i, f) in &b.coeffs {
                    if x[*i] != 0.0 {
                        out -= f * x[*i];
                    }
                }
                out
            })
            .collect()
    }

    /// `(Gᵀ z)_i = -Σ_b ⟨F_ib, z_b⟩`.
    fn apply_gt(&self, z: &Blocks) -> DVector<f64> {
        let mut out = DVector::zeros(self.n);
        for (b, zb) in self.blocks.iter().zip(z) {
            for (i, f) in &b.coeffs {
                out[*i] -= f.dot(zb);
            }
        }
        out
    }

    fn p(&self) -> usize {
        self.a_eq.nrows()
    }
}

impl Scaling {
    fn identity(prog: &ConeProgram) -> Self {
        Self {
            r: prog
                .blocks
                .iter()
                .map(|b| DMatrix::identity(b.dim(), b.dim()))
                .collect(),
            r_inv: prog
                .blocks
                .iter()
                .map(|b| DMatrix::identity(b.dim(), b.dim()))
                .collect(),
            lambda: prog
                .blocks
                .iter()
                .map(|b| DVector::from_element(b.dim(), 1.0))
                .collect(),
        }
    }

    /// NT scaling point from interior `s`, `z`.
    fn from_pair(s: &Blocks, z: &Blocks) -> Option<Self> {
        let mut out = Self {
            r: Vec::new(),
            r_inv: Vec::new(),
            lambda: Vec::new(),
        };
        for (sb, zb) in s.iter().zip(z) {
            let (r, lam) = nt_factor(sb, zb)?;
            out.r_inv.push(r.clone().try_inverse()?);
            out.r.push(r);
            out.lambda.push(lam);
        }
        Some(out)
    }

    /// Updates the scaling after a step, given the new point in the current
    /// scaled coordinates.
    fn update(&mut self, s_scaled: &Blocks, z_scaled: &Blocks) -> Option<()> {
        for b in 0..self.r.len() {
            let (r_step, lam) = nt_factor(&s_scaled[b], &z_scaled[b])?;
            let r = &self.r[b] * r_step;
            self.r_inv[b] = r.clone().try_inverse()?;
            self.r[b] = r;
            self.lambda[b] = lam;
        }
        Some(())
    }

    fn s(&self) -> Blocks {
        self.r
            .iter()
            .zip(&self.lambda)
            .map(|(r, l)| sym(r * DMatrix::from_diagonal(l) * r.transpose()))
            .collect()
    }

    fn z(&self) -> Blocks {
        self.r_inv
            .iter()
            .zip(&self.lambda)
            .map(|(ri, l)| sym(ri.transpose() * DMatrix::from_diagonal(l) * ri))
            .collect()
    }

    fn lambda_sq(&self) -> Blocks {
        self.lambda
            .iter()
            .map(|l| DMatrix::from_diagonal(&l.map(|v| v * v)))
            .collect()
    }

    /// `W⁻ᵀ v = R⁻¹ v Rᵀ⁻¹`.
    fn scale_primal(&self, v: &Blocks) -> Blocks {
        self.r_inv
            .iter()
            .zip(v)
            .map(|(ri, vb)| sym(ri * vb * ri.transpose()))
            .collect()
    }
}

/// Returns `(R, λ)` with `Rᵀ z R = diag(λ) = R⁻¹ s R⁻ᵀ`.
fn nt_factor(s: &DMatrix<f64>, z: &DMatrix<f64>) -> Option<(DMatrix<f64>, DVector<f64>)> {
    let ls = chol(s)?;
    let lz = chol(z)?;
    let svd = (lz.transpose() * &ls).svd(true, true);
    let v = svd.v_t?.transpose();
    let lam = svd.singular_values;
    if lam.iter().any(|&l| l.is_nan() || l <= 0.0 || !l.is_finite()) {
        return None;
    }
    let scale = lam.map(|l| 1.0 / l.sqrt());
    let r = ls * v * DMatrix::from_diagonal(&scale);
    Some((r, lam))
}

/// Solution of `λ ∘ u = r` for diagonal `λ`, with `a ∘ b = (ab + ba)/2`.
fn lambda_div(lambda: &[DVector<f64>], r: &Blocks) -> Blocks {
    lambda
        .iter()
        .zip(r)
        .map(|(l, rb)| DMatrix::from_fn(rb.nrows(), rb.ncols(), |i, j| 2.0 * rb[(i, j)] / (l[i] + l[j])))
        .collect()
}

fn jordan(u: &Blocks, v: &Blocks) -> Blocks {
    u.iter().zip(v).map(|(a, b)| (a * b + b * a) * 0.5).collect()
}

/// Largest `α ≤ cap` with `diag(λ) + α d ⪰ 0`.
fn max_step(lambda: &[DVector<f64>], d: &Blocks) -> f64 {
    let mut alpha = f64::INFINITY;
    for (l, db) in lambda.iter().zip(d) {
        let inv_sqrt = l.map(|v| 1.0 / v.sqrt());
        let m = DMatrix::from_fn(db.nrows(), db.ncols(), |i, j| {
            db[(i, j)] * inv_sqrt[i] * inv_sqrt[j]
        });
        let min = sym(m)
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min < 0.0 {
            alpha = alpha.min(-1.0 / min);
        }
    }
    alpha
}

/// Reduced KKT system for a fixed scaling, in scaled coordinates:
///   Aᵀy + Gᵀz = f1,  A x = f2,  G x − WᵀW z = f3,
/// taking `f3` as `R⁻¹ f3 R⁻ᵀ` and returning `W z` instead of `z`.
struct Kkt<'a> {
    prog: &'a ConeProgram,
    /// `R⁻¹ F_i R⁻ᵀ` per block, aligned with `ConeBlock::coeffs`.
    scaled: Vec<Vec<DMatrix<f64>>>,
    factor: KktFactor,
}

enum KktFactor {
    Cholesky(nalgebra::linalg::Cholesky<f64, nalgebra::Dyn>),
    Lu(nalgebra::linalg::FullPivLU<f64, nalgebra::Dyn, nalgebra::Dyn>),
}

impl KktFactor {
    fn solve(&self, rhs: &DVector<f64>) -> Option<DVector<f64>> {
        match self {
            KktFactor::Cholesky(c) => Some(c.solve(rhs)),
            KktFactor::Lu(lu) => lu.solve(rhs),
        }
    }
}

impl<'a> Kkt<'a> {
    fn new(prog: &'a ConeProgram, scaling: &Scaling) -> Option<Self> {
        let n = prog.n;
        let p = prog.p();
        let mut h = DMatrix::<f64>::zeros(n, n);
        let mut scaled_all = Vec::with_capacity(prog.blocks.len());
        for (b, ri) in prog.blocks.iter().zip(&scaling.r_inv) {
            let scaled: Vec<DMatrix<f64>> = b
                .coeffs
                .iter()
                .map(|(_, f)| sym(ri * f * ri.transpose()))
                .collect();
            for (a, (i, _)) in b.coeffs.iter().enumerate() {
                for (bb, (j, _)) in b.coeffs.iter().enumerate().skip(a) {
                    let v = scaled[a].dot(&scaled[bb]);
                    h[(*i, *j)] += v;
                    if a != bb {
                        h[(*j, *i)] += v;
                    }
                }
            }
            scaled_all.push(scaled);
        }
        let mut k = DMatrix::zeros(n + p, n + p);
        k.view_mut((0, 0), (n, n)).copy_from(&h);
        if p > 0 {
            k.view_mut((0, n), (n, p)).copy_from(&prog.a_eq.transpose());
            k.view_mut((n, 0), (p, n)).copy_from(&prog.a_eq);
        }
        let factor = if p == 0 {
            match nalgebra::linalg::Cholesky::new(h.clone()) {
                Some(c) => KktFactor::Cholesky(c),
                None => {
                    // Singular normal matrix: regularize slightly.
                    let dmax = h.diagonal().amax().max(1e-300);
                    let mut hr = h.clone();
                    for i in 0..n {
                        hr[(i, i)] += 1e-13 * dmax;
                    }
                    KktFactor::Cholesky(nalgebra::linalg::Cholesky::new(hr)?)
                }
            }
        } else {
            let lu = k.clone().full_piv_lu();
            if !lu.is_invertible() {
                return None;
            }
            KktFactor::Lu(lu)
        };
        Some(Self {
            prog,
            scaled: scaled_all,
            factor,
        })
    }

    /// `Σ x_i Ĝ_i` per block, with `Ĝ_i = R⁻¹ F_i R⁻ᵀ`.
    fn scaled_g(&self, x: &DVector<f64>) -> Blocks {
        self.prog
            .blocks
            .iter()
            .zip(&self.scaled)
            .map(|(b, sc)| {
                let d = b.dim();
                let mut out = DMatrix::zeros(d, d);
                for ((i, _), g) in b.coeffs.iter().zip(sc) {
                    out += g * x[*i];
                }
                out
            })
            .collect()
    }

    fn scaled_gt(&self, v: &Blocks) -> DVector<f64> {
        let mut out = DVector::zeros(self.prog.n);
        for ((b, sc), vb) in self.prog.blocks.iter().zip(&self.scaled).zip(v) {
            for ((i, _), g) in b.coeffs.iter().zip(sc) {
                out[*i] += g.dot(vb);
            }
        }
        out
    }

    fn solve(
        &self,
        f1: &DVector<f64>,
        f2: &DVector<f64>,
        f3_scaled: &Blocks,
    ) -> Option<(DVector<f64>, DVector<f64>, Blocks)> {
        let n = self.prog.n;
        let p = self.prog.p();
        let rhs_x = f1 - self.scaled_gt(f3_scaled);
        let mut rhs = DVector::zeros(n + p);
        rhs.rows_mut(0, n).copy_from(&rhs_x);
        rhs.rows_mut(n, p).copy_from(f2);
        let mut sol = self.factor.solve(&rhs)?;
        for _ in 0..3 {
            // Residual against the operator form, which is more accurate than
            // the assembled normal matrix.
            let x = sol.rows(0, n).into_owned();
            let y = sol.rows(n, p).into_owned();
            let gx = self.scaled_g(&x);
            let z: Blocks = gx.iter().zip(f3_scaled).map(|(g, f)| -g - f).collect();
            let e1 = f1 - (self.prog.a_eq.transpose() * &y - self.scaled_gt(&z));
            let e2 = f2 - &self.prog.a_eq * &x;
            let mut resid = DVector::zeros(n + p);
            resid.rows_mut(0, n).copy_from(&e1);
            resid.rows_mut(n, p).copy_from(&e2);
            sol += self.factor.solve(&resid)?;
        }
        if !sol.iter().all(|v| v.is_finite()) {
            return None;
        }
        let x = sol.rows(0, n).into_owned();
        let y = sol.rows(n, p).into_owned();
        let gx = self.scaled_g(&x);
        let z_scaled = gx.iter().zip(f3_scaled).map(|(g, f)| -g - f).collect();
        Some((x, y, z_scaled))
    }
}

fn add_scaled(u: &mut Blocks, v: &Blocks, alpha: f64) {
    for (a, b) in u.iter_mut().zip(v) {
        *a += b * alpha;
    }
}

fn identity_blocks(prog: &ConeProgram) -> Blocks {
    prog.blocks
        .iter()
        .map(|b| DMatrix::identity(b.dim(), b.dim()))
        .collect()
}

fn min_eig(u: &Blocks) -> f64 {
    u.iter()
        .map(|m| {
            sym(m.clone())
                .symmetric_eigenvalues()
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Shifts `u` into the interior of the cone.
fn push_interior(u: &mut Blocks, prog: &ConeProgram) {
    let t = -min_eig(u);
    let nrm = norm(u);
    if t >= -1e-8 * nrm.max(1.0) {
        add_scaled(u, &identity_blocks(prog), 1.0 + t);
    }
}

struct Direction {
    x: DVector<f64>,
    y: DVector<f64>,
    tau: f64,
    kappa: f64,
    s_scaled: Blocks,
    z_scaled: Blocks,
}

pub(crate) fn solve(prog: &ConeProgram, settings: &IpmSettings) -> IpmResult {
    let n = prog.n;
    let p = prog.p();
    let m = prog.total_dim();
    let h = prog.h();
    let c = &prog.c;
    let b = &prog.b_eq;

    let fail = |x: DVector<f64>, it| IpmResult {
        outcome: IpmOutcome::Stalled,
        x,
        iterations: it,
        accuracy: f64::INFINITY,
    };

    if m == 0 {
        return IpmResult {
            outcome: if c.amax() == 0.0 && p == 0 {
                IpmOutcome::Optimal
            } else if p == 0 {
                IpmOutcome::DualInfeasible
            } else {
                IpmOutcome::Stalled
            },
            x: DVector::zeros(n),
            iterations: 0,
            accuracy: 0.0,
        };
    }

    let resx0 = c.norm().max(1.0);
    let resy0 = b.norm().max(1.0);
    let resz0 = norm(&h).max(1.0);

    // Initial point from two least-squares problems with identity scaling.
    let ident = Scaling::identity(prog);
    let Some(kkt0) = Kkt::new(prog, &ident) else {
        return fail(DVector::zeros(n), 0);
    };
    let Some((mut x, _, zp)) = kkt0.solve(&DVector::zeros(n), b, &h) else {
        return fail(DVector::zeros(n), 0);
    };
    let mut s0: Blocks = zp.iter().map(|zb| -zb).collect();
    let neg_c = -c;
    let Some((_, mut y, mut z0)) = kkt0.solve(&neg_c, &DVector::zeros(p), &vec_zero(prog)) else {
        return fail(x, 0);
    };
    push_interior(&mut s0, prog);
    push_interior(&mut z0, prog);
    let Some(mut scaling) = Scaling::from_pair(&s0, &z0) else {
        return fail(x, 0);
    };
    let mut tau = 1.0;
    let mut kappa = 1.0;

    let mut best = Best {
        x: DVector::zeros(n),
        accuracy: f64::INFINITY,
        iteration: 0,
    };
    for iter in 0..settings.max_iters {
        let s = scaling.s();
        let z = scaling.z();
        let gx = prog.apply_g(&x);
        let gtz = prog.apply_gt(&z);
        let aty = prog.a_eq.transpose() * &y;
        let ax = &prog.a_eq * &x;

        let rx = &aty + &gtz + c * tau;
        let ry = &ax - b * tau;
        let rz: Blocks = s
            .iter()
            .zip(&gx)
            .zip(&h)
            .map(|((sb, gb), hb)| sb + gb - hb * tau)
            .collect();
        let ctx = c.dot(&x);
        let bty = b.dot(&y);
        let htz = inner(&h, &z);
        let rt = kappa + ctx + bty + htz;

        let gap = inner(&s, &z);
        let mu = (gap + tau * kappa) / (m as f64 + 1.0);
        let pcost = ctx / tau;
        let dcost = -(bty + htz) / tau;
        let pres = (ry.norm() / resy0).max(norm(&rz) / resz0) / tau;
        let dres = rx.norm() / resx0 / tau;
        let abs_gap = gap / (tau * tau);
        let relgap = if pcost < 0.0 {
            abs_gap / -pcost
        } else if dcost > 0.0 {
            abs_gap / dcost
        } else {
            f64::INFINITY
        };
        let accuracy = pres.max(dres).max(abs_gap.min(relgap));
        if accuracy < best.accuracy {
            best = Best {
                x: &x / tau,
                accuracy,
                iteration: iter,
            };
        } else if iter >= best.iteration + 8 {
            return best.into_stalled(iter);
        }

        let pinf = if htz + bty < 0.0 {
            (&aty + &gtz).norm() / resx0 / -(htz + bty)
        } else {
            f64::INFINITY
        };
        let dinf = if ctx < 0.0 {
            let sz: Blocks = s.iter().zip(&gx).map(|(sb, gb)| sb + gb).collect();
            (ax.norm() / resy0).max(norm(&sz) / resz0) / -ctx
        } else {
            f64::INFINITY
        };

        if pres <= settings.feas_tol
            && dres <= settings.feas_tol
            && (abs_gap <= settings.abs_tol || relgap <= settings.rel_tol)
        {
            return IpmResult {
                outcome: IpmOutcome::Optimal,
                x: x / tau,
                iterations: iter,
                accuracy,
            };
        }
        if pinf <= settings.feas_tol && tau < kappa {
            return IpmResult {
                outcome: IpmOutcome::PrimalInfeasible,
                x,
                iterations: iter,
                accuracy,
            };
        }
        if dinf <= settings.feas_tol && tau < kappa {
            return IpmResult {
                outcome: IpmOutcome::DualInfeasible,
                x,
                iterations: iter,
                accuracy,
            };
        }

        let Some(kkt) = Kkt::new(prog, &scaling) else {
            return best.into_stalled(iter);
        };
        let h_scaled = scaling.scale_primal(&h);
        let rz_scaled = scaling.scale_primal(&rz);
        // Second reduced solve is shared by predictor and corrector.
        let Some((x2, y2, z2)) = kkt.solve(&neg_c, b, &h_scaled) else {
            return best.into_stalled(iter);
        };
        let denom2 = c.dot(&x2) + b.dot(&y2) + inner(&h_scaled, &z2) - kappa / tau;

        let lam_sq = scaling.lambda_sq();
        let newton = |ds: &Blocks, dk: f64, eta: f64| -> Option<Direction> {
            let u = lambda_div(&scaling.lambda, ds);
            let f1 = &rx * (-(1.0 - eta));
            let f2 = &ry * (-(1.0 - eta));
            let f3: Blocks = rz_scaled
                .iter()
                .zip(&u)
                .map(|(r, ub)| r * (-(1.0 - eta)) - ub)
                .collect();
            let (x1, y1, z1) = kkt.solve(&f1, &f2, &f3)?;
            let num = -(1.0 - eta) * rt - dk / tau - (c.dot(&x1) + b.dot(&y1) + inner(&h_scaled, &z1));
            let dtau = num / denom2;
            let dx = x1 + &x2 * dtau;
            let dy = y1 + &y2 * dtau;
            let mut z_scaled = z1;
            add_scaled(&mut z_scaled, &z2, dtau);
            let dkappa = (dk - kappa * dtau) / tau;
            let s_scaled: Blocks = u.iter().zip(&z_scaled).map(|(a, b)| a - b).collect();
            if !dtau.is_finite() || !dx.iter().all(|v| v.is_finite()) {
                return None;
            }
            Some(Direction {
                x: dx,
                y: dy,
                tau: dtau,
                kappa: dkappa,
                s_scaled,
                z_scaled,
            })
        };
        let step_to_boundary = |d: &Direction| -> f64 {
            let mut a = max_step(&scaling.lambda, &d.s_scaled).min(max_step(&scaling.lambda, &d.z_scaled));
            if d.tau < 0.0 {
                a = a.min(-tau / d.tau);
            }
            if d.kappa < 0.0 {
                a = a.min(-kappa / d.kappa);
            }
            a
        };

        let ds_aff: Blocks = lam_sq.iter().map(|l| -l).collect();
        let Some(aff) = newton(&ds_aff, -tau * kappa, 0.0) else {
            return best.into_stalled(iter);
        };
        let alpha_aff = step_to_boundary(&aff).min(1.0);
        let sigma = (1.0 - alpha_aff).powi(3);

        let corr = jordan(&aff.s_scaled, &aff.z_scaled);
        let ds: Blocks = lam_sq
            .iter()
            .zip(&corr)
            .map(|(l, cb)| {
                let d = l.nrows();
                -l - cb + DMatrix::identity(d, d) * (sigma * mu)
            })
            .collect();
        let dk = -tau * kappa - aff.tau * aff.kappa + sigma * mu;
        let Some(dir) = newton(&ds, dk, sigma) else {
            return best.into_stalled(iter);
        };
        let alpha = (0.99 * step_to_boundary(&dir)).min(1.0);
        if alpha.is_nan() || alpha <= 1e-12 {
            return best.into_stalled(iter);
        }

        x += &dir.x * alpha;
        y += &dir.y * alpha;
        tau += alpha * dir.tau;
        kappa += alpha * dir.kappa;
        let s_new: Blocks = scaling
            .lambda
            .iter()
            .zip(&dir.s_scaled)
            .map(|(l, d)| DMatrix::from_diagonal(l) + d * alpha)
            .collect();
        let z_new: Blocks = scaling
            .lambda
            .iter()
            .zip(&dir.z_scaled)
            .map(|(l, d)| DMatrix::from_diagonal(l) + d * alpha)
            .collect();
        if scaling.update(&s_new, &z_new).is_none() {
            return best.into_stalled(iter);
        }
    }
    best.into_stalled(settings.max_iters)
}

fn vec_zero(prog: &ConeProgram) -> Blocks {
    prog.blocks
        .iter()
        .map(|b| DMatrix::zeros(b.dim(), b.dim()))
        .collect()
}

struct Best {
    x: DVector<f64>,
    accuracy: f64,
    iteration: usize,
}

impl Best {
    fn into_stalled(self, iterations: usize) -> IpmResult {
        IpmResult {
            outcome: IpmOutcome::Stalled,
            x: self.x,
            iterations,
            accuracy: self.accuracy,
        }
    }
}
