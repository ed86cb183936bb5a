//! Plant, gains, detector and truncation settings, and the stacked
//! closed-loop matrices every analysis and design routine works from.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{chi2_quantile, dlyap, is_symmetric, min_eigenvalue, spectral_radius, symmetrize};

/// Default truncation probability for every noise channel.
pub const DEFAULT_TRUNCATION_PROB: f64 = 0.95;

/// Discrete LTI plant `x⁺ = F x + G u + ν`, `y = C x + η` with
/// `ν ~ N(0, R1)` and `η ~ N(0, R2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LtiSystem {
    f: DMatrix<f64>,
    g: DMatrix<f64>,
    c: DMatrix<f64>,
    r1: DMatrix<f64>,
    r2: DMatrix<f64>,
}

/// On-disk system description; matrices are row-major arrays.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    #[serde(rename = "F")]
    pub f: Vec<Vec<f64>>,
    #[serde(rename = "G")]
    pub g: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
    #[serde(rename = "R1")]
    pub r1: Vec<Vec<f64>>,
    #[serde(rename = "R2")]
    pub r2: Vec<Vec<f64>>,
}

/// Row-major nested vectors to a matrix, naming `field` on failure.
pub fn matrix_from_rows(field: &str, rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let field_err = |reason: String| Error::Field {
        field: field.to_string(),
        reason,
    };
    if rows.is_empty() {
        return Err(field_err("matrix has no rows".into()));
    }
    let ncols = rows[0].len();
    if ncols == 0 {
        return Err(field_err("matrix has no columns".into()));
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != ncols {
            return Err(field_err(format!(
                "row {i} has {} entries, expected {ncols}",
                r.len()
            )));
        }
        if let Some(j) = r.iter().position(|v| !v.is_finite()) {
            return Err(field_err(format!("entry ({i}, {j}) is not finite")));
        }
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

pub fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

/// Serde adapter writing matrices as row-major nested arrays.
pub mod rows_format {
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        super::matrix_to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        super::matrix_from_rows("matrix", &rows).map_err(serde::de::Error::custom)
    }
}

fn shape(m: &DMatrix<f64>) -> String {
    format!("{}x{}", m.nrows(), m.ncols())
}

/// PBH rank test: `[λI − A; B]` has full column rank for every eigenvalue
/// with `|λ| ≥ 1`. `b` is stacked below, so pass `C` for detectability and
/// `Gᵀ` with `Fᵀ` for stabilizability.
fn pbh_full_rank(a: &DMatrix<f64>, b: &DMatrix<f64>) -> bool {
    let n = a.nrows();
    for lambda in a.complex_eigenvalues().iter() {
        if lambda.norm() < 1.0 {
            continue;
        }
        let rows = n + b.nrows();
        let m = DMatrix::<Complex64>::from_fn(rows, n, |i, j| {
            if i < n {
                let d = if i == j { *lambda } else { Complex64::new(0.0, 0.0) };
                d - Complex64::new(a[(i, j)], 0.0)
            } else {
                Complex64::new(b[(i - n, j)], 0.0)
            }
        });
        let sv = m.singular_values();
        let max = sv.iter().copied().fold(0.0, f64::max);
        let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
        if min <= 1e-10 * max.max(1.0) {
            return false;
        }
    }
    true
}

impl LtiSystem {
    /// Validates dimensions, noise covariances, stability of `F`, and
    /// detectability/stabilizability.
    pub fn new(
        f: DMatrix<f64>,
        g: DMatrix<f64>,
        c: DMatrix<f64>,
        r1: DMatrix<f64>,
        r2: DMatrix<f64>,
    ) -> Result<Self> {
        let n = f.nrows();
        let field = |field: &str, reason: String| Error::Field {
            field: field.into(),
            reason,
        };
        if n == 0 || f.ncols() != n {
            return Err(field(
                "F",
                format!("must be square and non-empty, got {}", shape(&f)),
            ));
        }
        if g.nrows() != n || g.ncols() == 0 {
            return Err(field("G", format!("must have {n} rows, got {}", shape(&g))));
        }
        if c.ncols() != n || c.nrows() == 0 {
            return Err(field("C", format!("must have {n} columns, got {}", shape(&c))));
        }
        let p = c.nrows();
        if r1.shape() != (n, n) {
            return Err(field("R1", format!("must be {n}x{n}, got {}", shape(&r1))));
        }
        if r2.shape() != (p, p) {
            return Err(field("R2", format!("must be {p}x{p}, got {}", shape(&r2))));
        }
        for (name, r) in [("R1", &r1), ("R2", &r2)] {
            if !is_symmetric(r, 1e-12 * r.amax().max(1.0)) {
                return Err(field(name, "must be symmetric".into()));
            }
            if min_eigenvalue(r) <= 0.0 {
                return Err(field(name, "must be positive definite".into()));
            }
        }
        let radius = spectral_radius(&f);
        if radius >= 1.0 {
            return Err(Error::Unstable {
                what: "state matrix F".into(),
                radius,
            });
        }
        if !pbh_full_rank(&f, &c) {
            return Err(field("C", "(F, C) is not detectable".into()));
        }
        if !pbh_full_rank(&f.transpose(), &g.transpose()) {
            return Err(field("G", "(F, G) is not stabilizable".into()));
        }
        Ok(Self {
            f,
            g,
            c,
            r1: symmetrize(&r1),
            r2: symmetrize(&r2),
        })
    }

    pub fn from_file(file: &SystemFile) -> Result<Self> {
        Self::new(
            matrix_from_rows("F", &file.f)?,
            matrix_from_rows("G", &file.g)?,
            matrix_from_rows("C", &file.c)?,
            matrix_from_rows("R1", &file.r1)?,
            matrix_from_rows("R2", &file.r2)?,
        )
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: SystemFile = serde_json::from_str(text)?;
        Self::from_file(&file)
    }

    pub fn to_file(&self) -> SystemFile {
        SystemFile {
            f: matrix_to_rows(&self.f),
            g: matrix_to_rows(&self.g),
            c: matrix_to_rows(&self.c),
            r1: matrix_to_rows(&self.r1),
            r2: matrix_to_rows(&self.r2),
        }
    }

    /// The two-state, two-input, two-output benchmark plant.
    pub fn case_study() -> Self {
        let m = |v: [f64; 4]| DMatrix::from_row_slice(2, 2, &v);
        Self::new(
            m([1.0444, -0.1409, 0.3001, 0.6327]),
            m([2.0, 3.0, 1.0, 1.0]),
            m([2.0, 2.0, 1.0, 2.0]),
            m([0.0183, -0.0218, -0.0218, 0.0261]),
            m([0.0018, 0.0031, 0.0031, 0.0096]),
        )
        .expect("case-study plant is valid")
    }

    pub fn f(&self) -> &DMatrix<f64> {
        &self.f
    }
    pub fn g(&self) -> &DMatrix<f64> {
        &self.g
    }
    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }
    pub fn r1(&self) -> &DMatrix<f64> {
        &self.r1
    }
    pub fn r2(&self) -> &DMatrix<f64> {
        &self.r2
    }
    pub fn n(&self) -> usize {
        self.f.nrows()
    }
    pub fn m(&self) -> usize {
        self.g.ncols()
    }
    pub fn p(&self) -> usize {
        self.c.nrows()
    }
}

/// Controller gain `K` (m×n, `u = K x̂`) and observer gain `L` (n×p).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainPair {
    #[serde(rename = "K", with = "rows_format")]
    pub k: DMatrix<f64>,
    #[serde(rename = "L", with = "rows_format")]
    pub l: DMatrix<f64>,
}

impl GainPair {
    pub fn new(k: DMatrix<f64>, l: DMatrix<f64>) -> Self {
        Self { k, l }
    }

    pub fn zeros(sys: &LtiSystem) -> Self {
        Self {
            k: DMatrix::zeros(sys.m(), sys.n()),
            l: DMatrix::zeros(sys.n(), sys.p()),
        }
    }

    pub fn validate(&self, sys: &LtiSystem) -> Result<()> {
        if self.k.shape() != (sys.m(), sys.n()) {
            return Err(Error::Field {
                field: "K".into(),
                reason: format!("must be {}x{}, got {}", sys.m(), sys.n(), shape(&self.k)),
            });
        }
        if self.l.shape() != (sys.n(), sys.p()) {
            return Err(Error::Field {
                field: "L".into(),
                reason: format!("must be {}x{}, got {}", sys.n(), sys.p(), shape(&self.l)),
            });
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Chi-squared detector: alarm when `rᵀ Σ⁻¹ r > alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub false_alarm_rate: f64,
    pub dof: usize,
    pub alpha: f64,
}

pub fn make_detector(false_alarm_rate: f64, dof: usize) -> Result<DetectorConfig> {
    if !(false_alarm_rate > 0.0 && false_alarm_rate < 1.0) {
        return Err(Error::Argument(format!(
            "false-alarm rate must lie in (0, 1), got {false_alarm_rate}"
        )));
    }
    if dof == 0 {
        return Err(Error::Argument("detector needs at least one sensor".into()));
    }
    Ok(DetectorConfig {
        false_alarm_rate,
        dof,
        alpha: chi2_quantile(1.0 - false_alarm_rate, dof)?,
    })
}

impl DetectorConfig {
    /// Replaces the threshold, keeping the nominal false-alarm rate recorded.
    pub fn with_alpha(mut self, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Argument(format!(
                "threshold must be positive, got {alpha}"
            )));
        }
        self.alpha = alpha;
        Ok(self)
    }
}

/// Chi-squared ellipsoids bounding the truncated system noise, estimation
/// error and measurement noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationConfig {
    pub p_nu: f64,
    pub p_e: f64,
    pub p_eta: f64,
    pub nu_bar: f64,
    pub e_bar: f64,
    pub eta_bar: f64,
}

impl TruncationConfig {
    pub fn new(p_nu: f64, p_e: f64, p_eta: f64, n: usize, p: usize) -> Result<Self> {
        for (name, v) in [("p_nu", p_nu), ("p_e", p_e), ("p_eta", p_eta)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Argument(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        Ok(Self {
            p_nu,
            p_e,
            p_eta,
            nu_bar: chi2_quantile(p_nu, n)?,
            e_bar: chi2_quantile(p_e, n)?,
            eta_bar: chi2_quantile(p_eta, p)?,
        })
    }

    pub fn for_system(sys: &LtiSystem, p_nu: f64, p_e: f64, p_eta: f64) -> Result<Self> {
        Self::new(p_nu, p_e, p_eta, sys.n(), sys.p())
    }

    pub fn default_for(sys: &LtiSystem) -> Self {
        Self::for_system(
            sys,
            DEFAULT_TRUNCATION_PROB,
            DEFAULT_TRUNCATION_PROB,
            DEFAULT_TRUNCATION_PROB,
        )
        .expect("default truncation probabilities are valid")
    }
}

/// Closed loop stacked over `(x, x̂, e)` under attack and over `(x, x̂)`
/// nominally.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedSystem {
    /// 3n×3n attacked state matrix.
    pub a: DMatrix<f64>,
    /// 3n×(n+p) attacked input matrix for `(ν, φ)`.
    pub b: DMatrix<f64>,
    /// 2n×2n nominal state matrix.
    pub a_hat: DMatrix<f64>,
    /// 2n×(n+p) nominal input matrix for `(ν, η)`.
    pub b_hat: DMatrix<f64>,
    /// n×3n selector of `x`.
    pub e_x: DMatrix<f64>,
    /// 2n×3n selector of `(x, x̂)`.
    pub e_xxhat: DMatrix<f64>,
    /// n×2n selector of `x` from `(x, x̂)`.
    pub e_hat_x: DMatrix<f64>,
}

pub fn build_stacked(sys: &LtiSystem, gains: &GainPair) -> Result<StackedSystem> {
    gains.validate(sys)?;
    let n = sys.n();
    let p = sys.p();
    let (f, g, c) = (sys.f(), sys.g(), sys.c());
    let gk = g * &gains.k;
    let lc = &gains.l * c;
    let eye = DMatrix::<f64>::identity(n, n);

    let mut a = DMatrix::zeros(3 * n, 3 * n);
    a.view_mut((0, 0), (n, n)).copy_from(f);
    a.view_mut((0, n), (n, n)).copy_from(&gk);
    a.view_mut((n, 0), (n, n)).copy_from(&lc);
    a.view_mut((n, n), (n, n)).copy_from(&(f + &gk - &lc));
    a.view_mut((n, 2 * n), (n, n)).copy_from(&(-&lc));
    a.view_mut((2 * n, 2 * n), (n, n)).copy_from(f);

    let mut b = DMatrix::zeros(3 * n, n + p);
    b.view_mut((0, 0), (n, n)).copy_from(&eye);
    b.view_mut((n, n), (n, p)).copy_from(&gains.l);
    b.view_mut((2 * n, 0), (n, n)).copy_from(&eye);
    b.view_mut((2 * n, n), (n, p)).copy_from(&(-&gains.l));

    let mut e_xxhat = DMatrix::zeros(2 * n, 3 * n);
    e_xxhat.view_mut((0, 0), (2 * n, 2 * n)).fill_with_identity();
    let mut e_x = DMatrix::zeros(n, 3 * n);
    e_x.view_mut((0, 0), (n, n)).fill_with_identity();
    let mut e_hat_x = DMatrix::zeros(n, 2 * n);
    e_hat_x.view_mut((0, 0), (n, n)).fill_with_identity();

    let a_hat = a.view((0, 0), (2 * n, 2 * n)).into_owned();
    let mut b_hat = DMatrix::zeros(2 * n, n + p);
    b_hat.view_mut((0, 0), (n, n)).copy_from(&eye);
    b_hat.view_mut((n, n), (n, p)).copy_from(&gains.l);

    Ok(StackedSystem {
        a,
        b,
        a_hat,
        b_hat,
        e_x,
        e_xxhat,
        e_hat_x,
    })
}

/// Steady-state estimation-error covariance `P_e` and residual covariance
/// `Σ = C P_e Cᵀ + R2` for observer gain `l`.
pub fn residual_covariance(sys: &LtiSystem, l: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if l.shape() != (sys.n(), sys.p()) {
        return Err(Error::Field {
            field: "L".into(),
            reason: format!("must be {}x{}, got {}", sys.n(), sys.p(), shape(l)),
        });
    }
    let a = sys.f() - l * sys.c();
    let radius = spectral_radius(&a);
    if radius >= 1.0 {
        return Err(Error::EstimatorUnstable { radius });
    }
    let q = l * sys.r2() * l.transpose() + sys.r1();
    let pe = dlyap(&a, &q)?;
    let sigma = symmetrize(&(sys.c() * &pe * sys.c().transpose() + sys.r2()));
    Ok((pe, sigma))
}

/// Ellipsoid `{x : xᵀ Q⁻¹ x ≤ 1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ellipsoid {
    #[serde(with = "rows_format")]
    pub shape: DMatrix<f64>,
}

impl Ellipsoid {
    pub fn new(shape: DMatrix<f64>) -> Result<Self> {
        if !shape.is_square() {
            return Err(Error::dim("ellipsoid shape", "square", self::shape(&shape)));
        }
        let s = symmetrize(&shape);
        if min_eigenvalue(&s) < -1e-10 * s.amax().max(1.0) {
            return Err(Error::NotPositiveDefinite("ellipsoid shape".into()));
        }
        Ok(Self { shape: s })
    }

    /// `xᵀ Q⁻¹ x`, the level of `x` relative to the boundary.
    pub fn level(&self, x: &nalgebra::DVector<f64>) -> Option<f64> {
        let chol = nalgebra::linalg::Cholesky::new(self.shape.clone())?;
        Some(x.dot(&chol.solve(x)))
    }

    pub fn contains(&self, x: &nalgebra::DVector<f64>, tol: f64) -> bool {
        self.level(x).is_some_and(|v| v <= 1.0 + tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn detector_dof2_closed_form() {
        let d = make_detector(0.05, 2).unwrap();
        assert_relative_eq!(d.alpha, -2.0 * 0.05f64.ln(), epsilon = 1e-9);
        let d = make_detector(0.5, 2).unwrap();
        assert_relative_eq!(d.alpha, -2.0 * 0.5f64.ln(), epsilon = 1e-9);
        assert!(make_detector(1.0 - 1e-12, 2).unwrap().alpha < 1e-10);
        assert!(make_detector(0.0, 2).is_err());
        assert!(make_detector(1.0, 2).is_err());
    }

    #[test]
    fn detector_round_trip() {
        for p in 1..5 {
            let d = make_detector(0.05, p).unwrap();
            assert!((crate::numerics::chi2_cdf(d.alpha, p) - 0.95).abs() < 1e-9);
        }
    }

    #[test]
    fn truncation_quantiles() {
        let t = TruncationConfig::new(0.95, 0.9, 0.99, 2, 2).unwrap();
        assert_relative_eq!(t.nu_bar, -2.0 * 0.05f64.ln(), epsilon = 1e-9);
        assert_relative_eq!(t.e_bar, -2.0 * 0.1f64.ln(), epsilon = 1e-9);
        assert_relative_eq!(t.eta_bar, -2.0 * 0.01f64.ln(), epsilon = 1e-9);
    }

    #[test]
    fn zero_gains_stack_blockdiag() {
        let sys = LtiSystem::case_study();
        let st = build_stacked(&sys, &GainPair::zeros(&sys)).unwrap();
        let f = sys.f();
        let mut expect = DMatrix::zeros(6, 6);
        for k in 0..3 {
            expect.view_mut((2 * k, 2 * k), (2, 2)).copy_from(f);
        }
        assert_eq!(st.a, expect);
        let mut b = DMatrix::zeros(6, 4);
        b.view_mut((0, 0), (2, 2)).fill_with_identity();
        b.view_mut((4, 0), (2, 2)).fill_with_identity();
        assert_eq!(st.b, b);
    }

    #[test]
    fn a_hat_is_exact_sub_block() {
        let sys = LtiSystem::case_study();
        let gains = GainPair::new(
            DMatrix::from_row_slice(2, 2, &[0.1, -2.0, -0.4, 1.4]),
            DMatrix::from_row_slice(2, 2, &[1.0, -0.97, -0.01, 0.26]),
        );
        let st = build_stacked(&sys, &gains).unwrap();
        assert_eq!(&st.e_xxhat * &st.a * st.e_xxhat.transpose(), st.a_hat);
        assert!(spectral_radius(&st.a) < 1.0);
    }

    #[test]
    fn wrong_gain_shape_rejected() {
        let sys = LtiSystem::case_study();
        let bad = GainPair::new(DMatrix::zeros(3, 2), DMatrix::zeros(2, 2));
        assert!(build_stacked(&sys, &bad).is_err());
    }

    #[test]
    fn residual_covariance_zero_gain() {
        let sys = LtiSystem::case_study();
        let (pe, sigma) = residual_covariance(&sys, &DMatrix::zeros(2, 2)).unwrap();
        let res = &pe - sys.f() * &pe * sys.f().transpose() - sys.r1();
        assert!(res.norm() < 1e-10);
        let expect = sys.c() * &pe * sys.c().transpose() + sys.r2();
        assert!((sigma - expect).norm() < 1e-12);
    }

    #[test]
    fn residual_covariance_rejects_unstable_estimator() {
        let sys = LtiSystem::case_study();
        // F − L C = 1.2 I for L = (F − 1.2 I) C⁻¹.
        let cinv = sys.c().clone().try_inverse().unwrap();
        let l = (sys.f() - DMatrix::identity(2, 2) * 1.2) * cinv;
        assert!(matches!(
            residual_covariance(&sys, &l),
            Err(Error::EstimatorUnstable { .. })
        ));
    }

    #[test]
    fn json_errors_name_field() {
        let text = r#"{"F": [[0.5]], "G": [[1.0]], "C": [[1.0]], "R1": [[1.0]], "R2": [[-1.0]]}"#;
        let err = LtiSystem::from_json(text).unwrap_err().to_string();
        assert!(err.contains("R2"), "{err}");
        let text = r#"{"F": [[0.5, 0.1]], "G": [[1.0]], "C": [[1.0]], "R1": [[1.0]], "R2": [[1.0]]}"#;
        let err = LtiSystem::from_json(text).unwrap_err().to_string();
        assert!(err.contains("`F`"), "{err}");
        let text = r#"{"F": [[0.5], [0.1, 0.2]], "G": [[1.0]], "C": [[1.0]], "R1": [[1.0]], "R2": [[1.0]]}"#;
        assert!(LtiSystem::from_json(text)
            .unwrap_err()
            .to_string()
            .contains("`F`"));
    }

    #[test]
    fn json_round_trip() {
        let sys = LtiSystem::case_study();
        let text = serde_json::to_string(&sys.to_file()).unwrap();
        assert_eq!(LtiSystem::from_json(&text).unwrap(), sys);
    }

    #[test]
    fn unstable_plant_rejected() {
        let r = LtiSystem::new(
            DMatrix::from_element(1, 1, 1.5),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
        );
        assert!(matches!(r, Err(Error::Unstable { .. })));
    }

    #[test]
    fn pbh_detects_unobservable_unstable_mode() {
        let a = DMatrix::from_row_slice(2, 2, &[1.2, 0.0, 0.0, 0.5]);
        let c = DMatrix::from_row_slice(1, 2, &[0.0, 1.0]);
        assert!(!pbh_full_rank(&a, &c));
        let c = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        assert!(pbh_full_rank(&a, &c));
    }

    #[test]
    fn ellipsoid_level() {
        let e = Ellipsoid::new(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            4.0, 1.0,
        ])))
        .unwrap();
        assert_relative_eq!(
            e.level(&nalgebra::DVector::from_vec(vec![2.0, 0.0])).unwrap(),
            1.0
        );
        assert!(e.contains(&nalgebra::DVector::from_vec(vec![0.0, 1.0]), 1e-12));
        assert!(!e.contains(&nalgebra::DVector::from_vec(vec![0.0, 1.1]), 1e-12));
    }
}
