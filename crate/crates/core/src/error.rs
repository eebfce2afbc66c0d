use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("axis {axis} out of range for rank-{rank} tensor")]
    AxisOutOfRange { axis: usize, rank: usize },
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error("solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("singular value decomposition failed to converge")]
    SvdFailed,
    #[error("dense dimension {dim} exceeds cap {cap}")]
    DimensionCap { dim: usize, cap: usize },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("operation requires a blocked chain layout")]
    NotBlocked,
    #[error("site {site} out of range for a chain with {sites} sites")]
    SiteOutOfRange { site: usize, sites: usize },
    #[error("expectation value has imaginary part {imag:.3e}")]
    NotReal { imag: f64 },
    #[error("malformed state file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
