use thiserror::Error;

/// Everything that can go wrong while setting up or running a simulation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("wave functions live on different grids")]
    GridMismatch,

    #[error("packet too wide for the domain: tail mass {tail_mass:e} beyond {side} end")]
    PacketTooWide { tail_mass: f64, side: &'static str },

    #[error("tridiagonal system is singular at row {row}; check dt/dx")]
    SingularSystem { row: usize },

    #[error("non-finite amplitude encountered at t = {time}")]
    NonFinite { time: f64 },

    #[error("domain truncation violated at t = {time}: mass {mass:e} within the guard region near x_min")]
    TruncationViolation { time: f64, mass: f64 },

    #[error("boundary flux requested for a non-absorbing boundary ({kind})")]
    WrongBoundary { kind: &'static str },

    #[error("time {time} outside the recorded range [0, {t_final}]")]
    OutOfRange { time: f64, t_final: f64 },

    #[error("nothing was detected; conditional statistics are undefined")]
    NothingDetected,

    #[error("slab matching residual {residual:e} exceeds tolerance")]
    BranchFailure { residual: f64 },

    #[error("density {density:e} below floor at x = {x}, t = {time}")]
    NodeVicinity { x: f64, time: f64, density: f64 },

    #[error("output failed: {0}")]
    Output(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Output(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Output(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field,
        reason: reason.into(),
    }
}
