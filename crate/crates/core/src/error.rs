use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A scalar argument is outside the domain of the function.
    #[error("domain error in {func}: {detail}")]
    Domain { func: &'static str, detail: String },

    /// An invalid system configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// An operation was called with arguments that violate its contract
    /// (wrong kernel kind, unsorted grid, bad geometry, ...).
    #[error("usage error: {0}")]
    Usage(String),

    /// An iterative or quadrature routine failed to reach its tolerance.
    #[error("numeric error in {context}: {detail}")]
    Numeric { context: &'static str, detail: String },

    /// The gamma correction could not be fitted to the residual moments.
    #[error("fit error: {0}")]
    Fit(String),

    /// A distribution model violated one of its invariants at evaluation time.
    #[error("model error: {0}")]
    Model(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(func: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            func,
            detail: detail.into(),
        }
    }

    pub(crate) fn numeric(context: &'static str, detail: impl Into<String>) -> Self {
        Error::Numeric {
            context,
            detail: detail.into(),
        }
    }
}
