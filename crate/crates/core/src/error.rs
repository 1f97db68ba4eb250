use thiserror::Error;

/// Errors surfaced by the simulation and estimation layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("validation: {0}")]
    Validation(String),

    /// Quadratic form of `a(x)` left the configured `[lambda, Lambda]` band.
    #[error("ellipticity violation: {0}")]
    Ellipticity(String),

    /// A state became non-finite during integration.
    #[error("blow-up at step {step}: {context}")]
    BlowUp { step: usize, context: String },

    /// A numerical guard tripped (PSD floor, residual tolerance, ...).
    #[error("numerical degradation: {0}")]
    Numerical(String),

    /// A configured work budget would be exceeded.
    #[error("resource budget exceeded: {0}")]
    Resource(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}
