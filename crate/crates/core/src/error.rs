use std::path::PathBuf;

/// Errors produced by the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("profile has a cone point at the pole: phi(0) = {phi0:e}, phi'(0) = {dphi0:e}")]
    ConePoint { phi0: f64, dphi0: f64 },

    #[error("profile rejected: {0}")]
    ProfileRejected(String),

    #[error("quadrature did not converge: estimate {value:e}, error estimate {error:e}")]
    Quadrature { value: f64, error: f64 },

    #[error("asymptotic slope not reached: slope estimate {slope:e}, volume estimate {volume:e}")]
    ThetaMismatch { slope: f64, volume: f64 },

    #[error("ODE integration failed at t = {t:e}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("conjugate point at t = {t:e} (det P changed sign)")]
    ConjugatePoint { t: f64 },

    #[error("geodesic shooting did not converge: {0}")]
    Shooting(String),

    #[error("mismatched sample grids: {0}")]
    GridMismatch(String),

    #[error("unnormalized density: compatibility residual {residual:e} exceeds {limit:e}")]
    Unnormalized { residual: f64, limit: f64 },

    #[error("degenerate domain: {0}")]
    DegenerateDomain(String),

    #[error("linear solver failed: {0}")]
    Solver(String),

    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("degenerate immersion at node {node}: {reason}")]
    DegenerateImmersion { node: usize, reason: String },

    #[error("point is outside U: |grad u| = {grad_norm:e}")]
    NotInU { grad_norm: f64 },

    #[error("too many probes skipped: {skipped} of {total}")]
    ProbesSkipped { skipped: usize, total: usize },

    #[error("codimension {0} requires the product lift before this check")]
    CodimensionTooLow(usize),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at {path}:{line}: {reason}")]
    Parse {
        path: String,
        line: usize,
        reason: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
