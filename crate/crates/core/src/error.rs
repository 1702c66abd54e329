use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Factorization failures raised by the dense and sparse Cholesky kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FactorError {
    #[error("sparse Cholesky failed at row {index}: pivot {pivot:e} is not positive")]
    Sparse { index: usize, pivot: f64 },
    #[error("dense Cholesky of {what} failed at pivot {index}: matrix is not positive definite")]
    Dense { what: &'static str, index: usize },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("solver error: {0}")]
    Solver(#[from] FactorError),
    #[error("sampler error at sweep {sweep}: {source}")]
    Sampler {
        sweep: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
