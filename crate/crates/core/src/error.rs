use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("division by zero: `{0}` must be non-zero")]
    Division(&'static str),

    #[error("integration diverged at step {step} (t = {time}): Bloch norm {norm_sq:.6e} exceeds bound {bound:.6e}")]
    IntegrationDiverged {
        step: usize,
        time: f64,
        norm_sq: f64,
        bound: f64,
    },

    #[error("self-trapping order parameter undefined: initial imbalance is zero")]
    UndefinedOrderParameter,

    #[error("resource limit: {what} = {value} exceeds cap {cap}")]
    ResourceLimit {
        what: &'static str,
        value: usize,
        cap: usize,
    },

    #[error("step size too large at t = {time}: {reason}; reduce dt")]
    StepSize { time: f64, reason: String },

    #[error("time grids do not align: {0}")]
    Alignment(String),

    #[error("config parse error at line {line}: {message}")]
    ConfigParse { line: usize, message: String },

    #[error("config validation failed:\n  {}", .0.join("\n  "))]
    ConfigInvalid(Vec<String>),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::IntegrationDiverged { .. } | Error::StepSize { .. } | Error::Alignment(_)
        )
    }
}
