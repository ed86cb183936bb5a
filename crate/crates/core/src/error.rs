use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension {
        what: String,
        expected: String,
        got: String,
    },

    #[error("{what} is not stable (spectral radius {radius:.6})")]
    Unstable { what: String, radius: f64 },

    #[error("estimator is unstable: spectral radius of F - LC is {radius:.6}")]
    EstimatorUnstable { radius: f64 },

    #[error("{0} is not symmetric positive definite")]
    NotPositiveDefinite(String),

    #[error("near-singular factor {what} (condition number {cond:.3e})")]
    NearSingular { what: String, cond: f64 },

    #[error("quadratic matrix equation has no real solution ({candidates} candidates examined)")]
    EmptyRiccati { candidates: usize },

    #[error("semidefinite program is infeasible: {0}")]
    Infeasible(String),

    #[error("semidefinite solver failed: {0}")]
    Numerical(String),

    #[error(
        "reachable-set analysis infeasible for every a in the grid ({grid_len} values); \
         the attacked loop may be unstable or the grid too coarse"
    )]
    InfeasibleAnalysis { grid_len: usize },

    #[error("no feasible magnification factor up to sigma_max = {sigma_max}")]
    NoFeasibleMagnification { sigma_max: f64 },

    #[error(
        "convex co-design infeasible for gamma_bar = {gamma_bar} at every sigma <= {sigma_max}; \
         gamma_bar is likely below the manifold threshold (compute it with the infimum routine)"
    )]
    InfeasibleBelowThreshold { gamma_bar: f64, sigma_max: f64 },

    #[error("gamma_bar = {gamma_bar} does not exceed the optimal H2 gain gamma* = {gamma_star}")]
    GammaBarTooSmall { gamma_bar: f64, gamma_star: f64 },

    #[error(
        "observer iteration did not converge after {iterations} iterations (last |dL| = {last_delta:.4e})"
    )]
    NonConvergence { iterations: usize, last_delta: f64 },

    #[error("unsupported dimension: {0}")]
    UnsupportedDimension(String),

    #[error("invalid field `{field}`: {reason}")]
    Field { field: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn dim(what: impl Into<String>, expected: impl ToString, got: impl ToString) -> Self {
        Error::Dimension {
            what: what.into(),
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }
}
