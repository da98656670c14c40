use thiserror::Error;

/// Errors raised by the solver pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{key}`: {reason}")]
    InvalidParams { key: &'static str, reason: String },

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("field shape {got:?} does not match grid {expected:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("non-finite value in field `{0}`")]
    NonFinite(&'static str),

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("eigensolver did not converge after {iterations} iterations (best residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("invalid bracket [{lo}, {hi}]: indicator is {indicator} at both ends")]
    InvalidBracket { lo: f64, hi: f64, indicator: bool },

    #[error("too close to eigenvalue collision: |∫u1·u1(x,-y)| = {0:.3e} < 1e-4")]
    NearDefective(f64),

    #[error("leading eigenvalue is real (Im λ1 = {0:.3e}); no Hopf pair at this parameter point")]
    RealLeadingEigenvalue(f64),

    #[error("unsupported parameter point: {0}")]
    Unsupported(String),

    #[error("normalization impossible: |u1(0,0)| = {0:.3e}")]
    Unnormalizable(f64),

    #[error("branch tracking step too coarse near parameter {param} (max overlap {overlap:.3})")]
    StepTooCoarse { param: f64, overlap: f64 },

    #[error("snapshot stride too coarse at t = {t}: vortex moved more than {cells} cells")]
    StrideTooCoarse { t: f64, cells: f64 },

    #[error("simulation blew up at t = {t}: max|psi| = {max_abs:.3e}")]
    BlowUp { t: f64, max_abs: f64 },

    #[error("series not periodic at tolerance (best correlation {0:.3})")]
    NotPeriodic(f64),

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn param(key: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParams {
            key,
            reason: reason.into(),
        }
    }
}
