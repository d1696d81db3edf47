use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical blowup at t = {t}: {context}")]
    Blowup { t: f64, context: String },

    #[error("incompatible initial data: max boundary residual {residual:e}")]
    IncompatibleData { residual: f64 },

    #[error("field format error: {0}")]
    Format(String),

    #[error("invalid configuration:\n{0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
