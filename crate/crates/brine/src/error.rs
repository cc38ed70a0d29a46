use crate::minimize::MinimizerSet;

/// Errors produced by the analytic layer, the solvers and the samplers.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("root bracketing failed: {0}")]
    Bracketing(String),

    #[error("lattice side {0} exceeds the exact-enumeration limit L = 5")]
    SizeLimit(u32),

    #[error("magnetization {m} has the wrong parity for volume {volume}")]
    Parity { volume: u64, m: i64 },

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("point sits on a critical curve; {} minimizers", .0.minimizers().len())]
    MultipleMinimizers(MinimizerSet),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::sync::Arc<std::io::Error>,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Wraps an i/o error with the path it occurred on.
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source: std::sync::Arc::new(source),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
