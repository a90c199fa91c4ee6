use alloc::string::String;

/// Errors raised by the numerical operations.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("point outside the domain: {0}")]
    Domain(String),
    #[error("degenerate point: {0}")]
    Degenerate(String),
    #[error("no convergence: {reason} (residual {residual:e})")]
    Convergence { reason: String, residual: f64 },
    #[error("input error: {0}")]
    Input(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("search range exhausted: {0}")]
    SearchRange(String),
    #[error("certificate rejected: {0}")]
    CertificateRejected(String),
    #[error("inconclusive: {0}")]
    Inconclusive(String),
    #[error("assembly error: {0}")]
    Assembly(String),
    #[error("ill-conditioned basis: {0}")]
    Conditioning(String),
    #[error("degenerate model: {0}")]
    ModelDegeneracy(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! err {
    ($kind:ident, $($arg:tt)*) => {
        $crate::Error::$kind(alloc::format!($($arg)*))
    };
}
pub(crate) use err;
