use std::fmt;

use thiserror::Error;

use crate::fieldgrid::SamplingReport;

pub type Result<T> = std::result::Result<T, Error>;

/// Which correlation branch of a source an error belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Classical,
    Quantum,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Branch::Classical => f.write_str("classical"),
            Branch::Quantum => f.write_str("quantum"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("sampling violation: {0}")]
    SamplingViolation(SamplingReport),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("imaging equation unsatisfied (relative residual {residual:.3e})")]
    ImagingEquationUnsatisfied { residual: f64 },

    #[error("region of interest contains no samples")]
    EmptyRegion,

    #[error("{branch} branch: {source}")]
    Branch {
        branch: Branch,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::DegenerateGeometry(msg.into())
    }

    pub(crate) fn in_branch(self, branch: Branch) -> Self {
        Error::Branch {
            branch,
            source: Box::new(self),
        }
    }

    /// The innermost error, looking through branch tags.
    pub fn root(&self) -> &Error {
        match self {
            Error::Branch { source, .. } => source.root(),
            other => other,
        }
    }
}
