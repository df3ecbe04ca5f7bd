use thiserror::Error;

/// Errors raised by the relay design library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is singular or ill-conditioned (condition estimate {condition:.3e})")]
    IllConditioned { condition: f64 },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not Hermitian (max asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },

    #[error("polynomial has no real root")]
    NoRealRoot,

    #[error("station {station} has zero amplification gain")]
    ZeroGain { station: usize },

    #[error("noise power must be positive, got {0}")]
    NonPositiveNoise(f64),

    #[error("switch pattern is not pairwise; this solver requires an involutive derangement")]
    PairingRequired,

    #[error("solver requires exactly two stations, got {0}")]
    TwoStationsRequired(usize),

    #[error("relay power never reached the budget within the search range (last bracket [{lo:.6e}, {hi:.6e}])")]
    BracketFailure { lo: f64, hi: f64 },

    #[error("semidefinite program is infeasible")]
    SdpInfeasible,

    #[error("semidefinite program is unbounded")]
    SdpUnbounded,

    #[error("semidefinite solver hit the iteration cap ({iterations} iterations, residual {residual:.3e})")]
    SdpMaxIter { iterations: usize, residual: f64 },

    #[error("noise caps cannot be met for the given gains")]
    InfeasibleNoiseCaps,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("scheme {0} missing from result")]
    MissingScheme(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
