use thiserror::Error;

use crate::linalg2::Degeneracy;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A model or scan parameter failed validation. `key` names the parameter.
    #[error("invalid parameter `{key}`: {reason}")]
    InvalidParameter { key: &'static str, reason: String },

    /// Kitaev and SSH grids need an even number of unit cells.
    #[error("system size L = {0} must be even for this model")]
    OddSize(usize),

    /// A degenerate two-band block was met while running in strict mode.
    #[error("degenerate mode ({flag:?}): {detail}")]
    Degenerate { flag: Degeneracy, detail: String },

    /// The requested grid has more nodes than the configured cap.
    #[error("grid of {nodes} nodes exceeds the cap of {cap}")]
    ResolutionCap { nodes: usize, cap: usize },

    #[error("scan result holds no f_min data")]
    EmptyScan,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(key: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        key,
        reason: reason.into(),
    }
}
