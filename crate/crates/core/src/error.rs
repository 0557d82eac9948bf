use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("frequency {omega} rad/s outside tabulated range [{lo}, {hi}]")]
    OutOfRange { omega: f64, lo: f64, hi: f64 },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("singular Gramian: no eigenvalue above {threshold:e} (largest {lambda_max:e})")]
    SingularGramian { threshold: f64, lambda_max: f64 },

    #[error("nnls did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize, best: Vec<f64> },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Whether the error stems from user input rather than a numerical failure.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::InvalidParameter(_)
                | Error::Io(_)
                | Error::Csv(_)
                | Error::Json(_)
                | Error::GridTooCoarse(_)
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification() {
        assert!(Error::config("x").is_config());
        assert!(Error::invalid("x").is_config());
        assert!(Error::GridTooCoarse("x".into()).is_config());
        assert!(!Error::SingularGramian { threshold: 0.0, lambda_max: 0.0 }.is_config());
        assert!(!Error::NonConvergence { iterations: 3, best: vec![] }.is_config());
        assert!(!Error::Unsupported("x".into()).is_config());
    }
}
