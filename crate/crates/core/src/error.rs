use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("config: {0}")]
    Config(String),

    #[error("phase mismatch is undefined for the Gaussian angular model")]
    PhaseMismatchUndefined,

    #[error("grid too narrow: edge value {edge_ratio:e} of peak exceeds {limit:e}")]
    GridTooNarrow { edge_ratio: f64, limit: f64 },

    #[error("degenerate parameter: {0}")]
    Degenerate(String),

    #[error("amplitude is zero everywhere")]
    ZeroAmplitude,

    #[error("conditional slice at {value} has integral {integral:e} (below 1e-12)")]
    SliceUnderflow { value: f64, integral: f64 },

    #[error("value {value} outside grid extent [{min}, {max}]")]
    OutOfGrid { value: f64, min: f64, max: f64 },

    #[error("degenerate curve: {0}")]
    DegenerateCurve(String),

    #[error("slit correction {correction:e} exceeds raw variance {raw:e}")]
    OverCorrection { raw: f64, correction: f64 },

    #[error("conditional density has no conditioning value attached")]
    MissingConditioning,

    #[error("{path}:{line}: {reason}")]
    Schema {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Data,
    Numerical,
    Io,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidParameter { .. } | Error::Config(_) => ErrorKind::Validation,
            Error::Schema { .. } | Error::MissingConditioning => ErrorKind::Data,
            Error::Io { .. } => ErrorKind::Io,
            Error::Context { source, .. } => source.kind(),
            Error::PhaseMismatchUndefined
            | Error::GridTooNarrow { .. }
            | Error::Degenerate(_)
            | Error::ZeroAmplitude
            | Error::SliceUnderflow { .. }
            | Error::OutOfGrid { .. }
            | Error::DegenerateCurve(_)
            | Error::OverCorrection { .. } => ErrorKind::Numerical,
        }
    }

    /// Exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            ErrorKind::Validation => 2,
            ErrorKind::Data => 3,
            ErrorKind::Numerical => 4,
            ErrorKind::Io => 1,
        }
    }

    pub fn context(self, context: impl Into<String>) -> Error {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub(crate) fn require_positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::invalid(name, format!("must be finite and > 0, got {value}")))
    }
}

pub(crate) fn require_finite(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::invalid(name, format!("must be finite, got {value}")))
    }
}
