use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied parameter violates an operation's precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{what} = {requested} exceeds the configured cap {cap}")]
    ResourceLimit {
        what: &'static str,
        requested: usize,
        cap: usize,
    },

    /// Continuation of the physical root lost track of its branch.
    #[error("branch tracking failed at z = {z}: {detail}")]
    BranchTracking { z: Complex64, detail: String },

    #[error("polynomial root finder did not converge: {0}")]
    RootFinder(String),

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    /// The integrated density strayed too far from unit mass.
    #[error("density normalization factor {factor} outside [{lo}, {hi}]")]
    Normalization { factor: f64, lo: f64, hi: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for failures of a numerical routine (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::BranchTracking { .. }
                | Error::RootFinder(_)
                | Error::Eigensolver(_)
                | Error::Normalization { .. }
        )
    }
}
