//! Dense linear-algebra kernels: discrete Lyapunov solves, spectral tests,
//! chi-squared quantiles and the quadratic matrix (generalized Riccati)
//! equation solver used to recover observer gains.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest Kronecker system solved directly; bigger problems use Smith doubling.
const KRONECKER_MAX_DIM: usize = 8;

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    symmetrize(m)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// True iff the smallest eigenvalue of the symmetric part is at least `-tol`.
pub fn is_psd(m: &DMatrix<f64>, tol: f64) -> bool {
    m.is_square() && min_eigenvalue(m) >= -tol
}

pub fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    m.is_square() && (m - m.transpose()).amax() <= tol
}

/// Symmetric PSD square root through the eigendecomposition. Negative
/// eigenvalues from round-off are clipped to zero.
pub fn sqrtm_psd(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = symmetrize(m).symmetric_eigen();
    let d = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&d) * eig.eigenvectors.transpose()
}

pub fn inverse(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    let cond = condition_number(m);
    if !cond.is_finite() || cond > 1e14 {
        return Err(Error::NearSingular {
            what: what.to_string(),
            cond,
        });
    }
    m.clone().try_inverse().ok_or_else(|| Error::NearSingular {
        what: what.to_string(),
        cond,
    })
}

/// 2-norm condition number from the singular values.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    let sv = m.singular_values();
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = DMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            if aij == 0.0 {
                continue;
            }
            out.view_mut((i * br, j * bc), (br, bc)).copy_from(&(b * aij));
        }
    }
    out
}

/// Solves `X = A X Aᵀ + Q` for a Schur-stable `A`.
pub fn dlyap(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if !a.is_square() {
        return Err(Error::dim("dlyap A", "square", format!("{}x{}", n, a.ncols())));
    }
    if q.shape() != (n, n) {
        return Err(Error::dim(
            "dlyap Q",
            format!("{n}x{n}"),
            format!("{}x{}", q.nrows(), q.ncols()),
        ));
    }
    let radius = spectral_radius(a);
    if radius >= 1.0 {
        return Err(Error::Unstable {
            what: "Lyapunov state matrix".into(),
            radius,
        });
    }
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let x = if n <= KRONECKER_MAX_DIM {
        // vec(A X Aᵀ) = (A ⊗ A) vec(X) for column-major vec.
        let lhs = DMatrix::identity(n * n, n * n) - kron(a, a);
        let rhs = DVector::from_column_slice(q.as_slice());
        let sol = lhs
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Numerical("singular Kronecker Lyapunov system".into()))?;
        DMatrix::from_column_slice(n, n, sol.as_slice())
    } else {
        smith_doubling(a, q)
    };
    Ok(symmetrize(&x))
}

fn smith_doubling(a: &DMatrix<f64>, q: &DMatrix<f64>) -> DMatrix<f64> {
    let mut x = q.clone();
    let mut ak = a.clone();
    for _ in 0..64 {
        let inc = &ak * &x * ak.transpose();
        x += &inc;
        ak = &ak * &ak;
        if inc.norm() <= 1e-16 * x.norm().max(1.0) {
            break;
        }
    }
    x
}

/// Chi-squared CDF, the regularized lower incomplete gamma P(dof/2, x/2).
pub fn chi2_cdf(x: f64, dof: usize) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    statrs::function::gamma::gamma_lr(dof as f64 / 2.0, x / 2.0)
}

/// Inverse chi-squared CDF by safeguarded Newton/bisection on the monotone CDF.
pub fn chi2_quantile(prob: f64, dof: usize) -> Result<f64> {
    if !(0.0..1.0).contains(&prob) || prob.is_nan() {
        return Err(Error::Argument(format!(
            "chi-squared probability must lie in [0, 1), got {prob}"
        )));
    }
    if dof == 0 {
        return Err(Error::Argument("chi-squared dof must be positive".into()));
    }
    if prob == 0.0 {
        return Ok(0.0);
    }
    let k = dof as f64;
    let mut lo = 0.0;
    let mut hi = k.max(1.0);
    while chi2_cdf(hi, dof) < prob {
        lo = hi;
        hi *= 2.0;
    }
    let mut x = 0.5 * (lo + hi);
    let ln_norm = (k / 2.0) * std::f64::consts::LN_2 + statrs::function::gamma::ln_gamma(k / 2.0);
    for _ in 0..200 {
        let f = chi2_cdf(x, dof) - prob;
        if f.abs() <= 1e-14 {
            break;
        }
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let ln_pdf = (k / 2.0 - 1.0) * x.ln() - x / 2.0 - ln_norm;
        let pdf = ln_pdf.exp();
        let newton = x - f / pdf;
        x = if pdf > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(x)
}

/// Coefficients of `X Γ₁ X + X Γ₂ + Γ₃ X + Γ₄ = 0`.
#[derive(Debug, Clone)]
pub struct QuadraticMatrixProblem {
    pub gamma1: DMatrix<f64>,
    pub gamma2: DMatrix<f64>,
    pub gamma3: DMatrix<f64>,
    pub gamma4: DMatrix<f64>,
}

impl QuadraticMatrixProblem {
    pub fn new(
        gamma1: DMatrix<f64>,
        gamma2: DMatrix<f64>,
        gamma3: DMatrix<f64>,
        gamma4: DMatrix<f64>,
    ) -> Result<Self> {
        let n = gamma1.nrows();
        for (name, g) in [
            ("gamma1", &gamma1),
            ("gamma2", &gamma2),
            ("gamma3", &gamma3),
            ("gamma4", &gamma4),
        ] {
            if g.shape() != (n, n) {
                return Err(Error::dim(
                    name,
                    format!("{n}x{n}"),
                    format!("{}x{}", g.nrows(), g.ncols()),
                ));
            }
        }
        Ok(Self {
            gamma1,
            gamma2,
            gamma3,
            gamma4,
        })
    }

    pub fn dim(&self) -> usize {
        self.gamma1.nrows()
    }

    pub fn residual(&self, x: &DMatrix<f64>) -> f64 {
        (x * &self.gamma1 * x + x * &self.gamma2 + &self.gamma3 * x + &self.gamma4).norm()
    }

    /// Residual normalised by the magnitude of the individual terms.
    fn relative_residual(&self, x: &DMatrix<f64>) -> f64 {
        let xn = x.norm();
        let scale = self.gamma1.norm() * xn * xn
            + (self.gamma2.norm() + self.gamma3.norm()) * xn
            + self.gamma4.norm();
        self.residual(x) / scale.max(1.0)
    }

    fn hamiltonian(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(&(-&self.gamma2));
        m.view_mut((0, n), (n, n)).copy_from(&(-&self.gamma1));
        m.view_mut((n, 0), (n, n)).copy_from(&self.gamma4);
        m.view_mut((n, n), (n, n)).copy_from(&self.gamma3);
        m
    }
}

#[derive(Debug, Clone, Default)]
pub struct RiccatiSolutionSet {
    pub solutions: Vec<DMatrix<f64>>,
    pub residuals: Vec<f64>,
    /// Subspaces with an invertible top block, real or not.
    pub candidates: usize,
    pub discarded_complex_count: usize,
    /// True when the defective-matrix fallback (generalized eigenspaces) ran.
    pub used_fallback: bool,
}

const U_COND_MAX: f64 = 1e10;
const RESIDUAL_TOL: f64 = 1e-8;

fn imag_is_negligible(x: &DMatrix<Complex64>) -> bool {
    let re_norm = x.map(|z| z.re).norm();
    let im_max = x.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    im_max < 1e-7 * (1.0 + re_norm)
}

fn complex_condition(u: &DMatrix<Complex64>) -> f64 {
    let sv = u.clone().singular_values();
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Unit null vector of `m - λI` from the smallest right singular vector.
fn eigenvector(m: &DMatrix<f64>, lambda: Complex64) -> DVector<Complex64> {
    let n = m.nrows();
    let shifted = DMatrix::from_fn(n, n, |i, j| {
        let v = Complex64::new(m[(i, j)], 0.0);
        if i == j {
            v - lambda
        } else {
            v
        }
    });
    let svd = shifted.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let (idx, _) =
        svd.singular_values.iter().enumerate().fold(
            (0, f64::INFINITY),
            |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc },
        );
    let row = v_t.row(idx);
    let mut v = DVector::from_fn(n, |i, _| row[i].conj());
    let norm = v.norm();
    v /= Complex64::new(norm, 0.0);
    v
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

/// Enumerates the real solutions of the quadratic matrix equation through the
/// n-dimensional invariant subspaces of `[[-Γ₂, -Γ₁], [Γ₄, Γ₃]]`.
pub fn solve_quadratic_matrix_eq(problem: &QuadraticMatrixProblem) -> RiccatiSolutionSet {
    let n = problem.dim();
    if n == 0 {
        return RiccatiSolutionSet::default();
    }
    let m = problem.hamiltonian();
    let eigenvalues: Vec<Complex64> = m.complex_eigenvalues().iter().copied().collect();
    let vectors: Vec<DVector<Complex64>> = eigenvalues.iter().map(|&l| eigenvector(&m, l)).collect();
    let basis = DMatrix::from_columns(&vectors);
    if complex_condition(&basis) > 1e12 {
        return generalized_eigenspace_solutions(problem, &m, &eigenvalues);
    }

    let mut set = RiccatiSolutionSet::default();
    for subset in combinations(2 * n, n) {
        let cols: Vec<DVector<Complex64>> = subset.iter().map(|&i| vectors[i].clone()).collect();
        let sub = DMatrix::from_columns(&cols);
        let u = sub.rows(0, n).into_owned();
        let v = sub.rows(n, n).into_owned();
        if complex_condition(&u) >= U_COND_MAX {
            continue;
        }
        let Some(u_inv) = u.try_inverse() else {
            continue;
        };
        set.candidates += 1;
        let x = v * u_inv;
        if !imag_is_negligible(&x) {
            set.discarded_complex_count += 1;
            continue;
        }
        push_certified(problem, &mut set, x.map(|z| z.re));
    }
    set
}

fn push_certified(problem: &QuadraticMatrixProblem, set: &mut RiccatiSolutionSet, x: DMatrix<f64>) {
    if problem.relative_residual(&x) < RESIDUAL_TOL {
        set.residuals.push(problem.residual(&x));
        set.solutions.push(x);
    }
}

/// Fallback for defective or nearly defective matrices: each admissible
/// selection of eigenvalue clusters (closed under conjugation, total
/// multiplicity n) defines the real generalized eigenspace ker p(M).
fn generalized_eigenspace_solutions(
    problem: &QuadraticMatrixProblem,
    m: &DMatrix<f64>,
    eigenvalues: &[Complex64],
) -> RiccatiSolutionSet {
    let n = problem.dim();
    let scale = eigenvalues.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let tol = 1e-6 * scale;
    let mut clusters: Vec<(Complex64, usize)> = Vec::new();
    for &l in eigenvalues {
        if let Some(c) = clusters.iter_mut().find(|(c, _)| (*c - l).norm() < tol) {
            c.1 += 1;
        } else {
            clusters.push((l, 1));
        }
    }
    let mut set = RiccatiSolutionSet {
        used_fallback: true,
        ..Default::default()
    };
    // Each cluster contributes a Jordan-chain prefix ker (M - λI)^k, k <= multiplicity.
    let dim = 2 * n;
    let mc = m.map(|v| Complex64::new(v, 0.0));
    let mut counts = vec![0usize; clusters.len()];
    loop {
        if counts.iter().sum::<usize>() == n {
            let closed = counts.iter().enumerate().all(|(i, &ki)| {
                ki == 0 || {
                    let c = clusters[i].0.conj();
                    clusters
                        .iter()
                        .zip(&counts)
                        .any(|((l, _), &kj)| kj == ki && (*l - c).norm() < tol)
                }
            });
            let mut p = DMatrix::<Complex64>::identity(dim, dim);
            for (&(l, _), &ki) in clusters.iter().zip(&counts) {
                let shifted = &mc - DMatrix::<Complex64>::identity(dim, dim) * l;
                for _ in 0..ki {
                    p = &p * &shifted;
                }
            }
            examine_subspace(problem, &mut set, p, closed);
        }
        // odometer over 0..=multiplicity per cluster
        let mut i = 0;
        while i < counts.len() {
            if counts[i] < clusters[i].1 {
                counts[i] += 1;
                break;
            }
            counts[i] = 0;
            i += 1;
        }
        if i == counts.len() {
            break;
        }
    }
    set
}

fn examine_subspace(
    problem: &QuadraticMatrixProblem,
    set: &mut RiccatiSolutionSet,
    p: DMatrix<Complex64>,
    closed: bool,
) {
    let n = problem.dim();
    let dim = 2 * n;
    let svd = p.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    let cols: Vec<DVector<Complex64>> = order[..n]
        .iter()
        .map(|&r| DVector::from_fn(dim, |i, _| v_t[(r, i)].conj()))
        .collect();
    let sub = DMatrix::from_columns(&cols);
    let u = sub.rows(0, n).into_owned();
    let v = sub.rows(n, n).into_owned();
    if complex_condition(&u) >= U_COND_MAX {
        return;
    }
    let Some(u_inv) = u.try_inverse() else {
        return;
    };
    set.candidates += 1;
    let x = v * u_inv;
    if !closed || !imag_is_negligible(&x) {
        set.discarded_complex_count += 1;
        return;
    }
    push_certified(problem, set, x.map(|z| z.re));
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn spectral_radius_examples() {
        assert_relative_eq!(spectral_radius(&DMatrix::identity(3, 3)), 1.0, epsilon = 1e-14);
        assert_eq!(spectral_radius(&DMatrix::zeros(3, 3)), 0.0);
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -0.25, 0.0]);
        assert_relative_eq!(spectral_radius(&m), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn is_psd_examples() {
        assert!(is_psd(&DMatrix::identity(2, 2), 0.0));
        assert!(!is_psd(&(-DMatrix::<f64>::identity(2, 2)), 1e-9));
        assert!(!is_psd(
            &DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]),
            1e-9
        ));
    }

    #[test]
    fn dlyap_zero_state_matrix_returns_q() {
        let q = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let x = dlyap(&DMatrix::zeros(2, 2), &q).unwrap();
        assert_relative_eq!(x, q, epsilon = 1e-14);
    }

    #[test]
    fn dlyap_scalar() {
        let x = dlyap(
            &DMatrix::from_element(1, 1, 0.5),
            &DMatrix::from_element(1, 1, 1.0),
        )
        .unwrap();
        assert_relative_eq!(x[(0, 0)], 4.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn dlyap_rejects_unstable() {
        let a = DMatrix::from_row_slice(2, 2, &[1.1, 0.0, 0.0, 0.2]);
        assert!(matches!(
            dlyap(&a, &DMatrix::identity(2, 2)),
            Err(Error::Unstable { .. })
        ));
    }

    #[test]
    fn dlyap_smith_path_matches_kronecker() {
        let n = 10;
        let a = DMatrix::from_fn(n, n, |i, j| 0.05 * (((i * 7 + j * 3) % 11) as f64 - 5.0) / 5.0);
        let q = DMatrix::identity(n, n);
        let x = dlyap(&a, &q).unwrap();
        let res = (&x - &a * &x * a.transpose() - &q).norm();
        assert!(res < 1e-10, "residual {res}");
    }

    #[test]
    fn chi2_quantile_examples() {
        assert_relative_eq!(
            chi2_quantile(0.95, 2).unwrap(),
            -2.0 * 0.05f64.ln(),
            epsilon = 1e-10
        );
        assert_eq!(chi2_quantile(0.0, 3).unwrap(), 0.0);
        // 1.959963984540054 is the standard-normal 97.5% quantile.
        let z = 1.959_963_984_540_054_f64;
        assert_relative_eq!(chi2_quantile(0.95, 1).unwrap(), z * z, epsilon = 1e-9);
        assert!(chi2_quantile(1.0, 2).is_err());
        assert!(chi2_quantile(-0.1, 2).is_err());
    }

    #[test]
    fn chi2_round_trip() {
        for dof in 1..6 {
            for &p in &[0.01, 0.3, 0.5, 0.9, 0.95, 0.999] {
                let x = chi2_quantile(p, dof).unwrap();
                assert!((chi2_cdf(x, dof) - p).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn chi2_quantile_monotone() {
        for dof in 1..5 {
            let mut prev = -1.0;
            for i in 0..100 {
                let x = chi2_quantile(i as f64 / 100.0, dof).unwrap();
                assert!(x > prev);
                prev = x;
            }
        }
    }

    #[test]
    fn scalar_quadratic_has_two_roots() {
        let one = |v: f64| DMatrix::from_element(1, 1, v);
        let p = QuadraticMatrixProblem::new(one(1.0), one(0.0), one(0.0), one(-4.0)).unwrap();
        let set = solve_quadratic_matrix_eq(&p);
        let mut roots: Vec<f64> = set.solutions.iter().map(|x| x[(0, 0)]).collect();
        roots.sort_by(f64::total_cmp);
        assert_eq!(roots.len(), 2);
        assert_relative_eq!(roots[0], -2.0, epsilon = 1e-12);
        assert_relative_eq!(roots[1], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn complex_scalar_roots_are_discarded() {
        let one = |v: f64| DMatrix::from_element(1, 1, v);
        // x² + 1 = 0
        let p = QuadraticMatrixProblem::new(one(1.0), one(0.0), one(0.0), one(1.0)).unwrap();
        let set = solve_quadratic_matrix_eq(&p);
        assert!(set.solutions.is_empty());
        assert_eq!(set.candidates, 2);
        assert_eq!(set.discarded_complex_count, 2);
    }

    #[test]
    fn defective_matrix_uses_fallback() {
        let one = |v: f64| DMatrix::from_element(1, 1, v);
        // x² - 2x + 1 = 0 has the double root 1.
        let p = QuadraticMatrixProblem::new(one(1.0), one(-1.0), one(-1.0), one(1.0)).unwrap();
        let set = solve_quadratic_matrix_eq(&p);
        assert!(set.used_fallback);
        assert_eq!(set.solutions.len(), 1);
        assert_relative_eq!(set.solutions[0][(0, 0)], 1.0, epsilon = 1e-6);
    }

    #[test]
    fn sqrtm_squares_back() {
        let m = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let r = sqrtm_psd(&m);
        assert_relative_eq!(&r * &r, m, epsilon = 1e-12);
    }
}
