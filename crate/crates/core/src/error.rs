use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid leaf: {0}")]
    InvalidLeaf(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{what} did not converge: {detail}")]
    NoConvergence { what: &'static str, detail: String },

    #[error("degenerate series: coefficient {first_zero} vanishes")]
    DegenerateSeries { first_zero: usize },

    #[error("no dominant orbit: {0}")]
    NoDominantOrbit(String),

    #[error("branch jump during continuation at t = {t}")]
    BranchJump { t: f64 },

    #[error("Gram tail not converged: M_tail = {used}, need about {required}")]
    TailNotConverged { used: usize, required: usize },

    #[error("moment quadrature not converged: relative change {change:e} at N = {n}")]
    QuadratureNotConverged { n: usize, change: f64 },

    #[error("trajectory stalled at T = {t}")]
    TrajectoryStalled { t: f64 },

    #[error("univalence lost at T = {t}")]
    UnivalenceLost { t: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate characteristic value: {0}")]
    Degenerate(String),

    #[error("log branch cut reached at u = {u}")]
    LogBranchCut { u: String },

    #[error("not bracketed: {0}")]
    NotBracketed(String),

    #[error("config error at `{key}`: expected {expected}")]
    Config { key: String, expected: String },

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Short machine-readable tag used in CSV status columns.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidLeaf(_) => "invalid_leaf",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::NoConvergence { .. } => "no_convergence",
            Error::DegenerateSeries { .. } => "degenerate_series",
            Error::NoDominantOrbit(_) => "no_dominant_orbit",
            Error::BranchJump { .. } => "branch_jump",
            Error::TailNotConverged { .. } => "tail_not_converged",
            Error::QuadratureNotConverged { .. } => "quadrature_not_converged",
            Error::TrajectoryStalled { .. } => "trajectory_stalled",
            Error::UnivalenceLost { .. } => "univalence_lost",
            Error::InsufficientData(_) => "insufficient_data",
            Error::Degenerate(_) => "degenerate",
            Error::LogBranchCut { .. } => "log_branch_cut",
            Error::NotBracketed(_) => "not_bracketed",
            Error::Config { .. } => "config",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
