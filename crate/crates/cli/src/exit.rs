//! Exit codes and the errors that select them.

use std::fmt;

pub const OK: u8 = 0;
pub const OTHER: u8 = 1;
pub const CONFIG: u8 = 2;
pub const NUMERICAL: u8 = 3;
pub const TRUNCATION: u8 = 4;
pub const NON_CONVERGENCE: u8 = 5;
pub const STALL: u8 = 6;

/// Invalid or unreadable configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

/// A run refused or abandoned for numerical reasons.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NumericalError(pub String);

impl fmt::Display for NumericalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "numerical failure: {}", self.0)
    }
}

impl std::error::Error for NumericalError {}

pub fn code_for(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ConfigError>().is_some() {
        return CONFIG;
    }
    if err.downcast_ref::<NumericalError>().is_some() {
        return NUMERICAL;
    }
    match err.downcast_ref::<abrule::Error>() {
        Some(e) => {
            use abrule::Error::*;
            match e {
                InvalidParameter { .. }
                | GridMismatch
                | PacketTooWide { .. }
                | WrongBoundary { .. } => CONFIG,
                TruncationViolation { .. } => TRUNCATION,
                SingularSystem { .. }
                | NonFinite { .. }
                | BranchFailure { .. }
                | NodeVicinity { .. }
                | NothingDetected
                | OutOfRange { .. } => NUMERICAL,
                Output(_) => OTHER,
            }
        }
        None => OTHER,
    }
}
