use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = NncError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum NncError {
    #[error("invalid k-mer {0:?}")]
    InvalidKmer(String),

    #[error("no level for k-mer {0}")]
    MissingLevel(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("entropy undefined: {0}")]
    UndefinedEntropy(String),

    #[error("no component with positive entropy")]
    NoPositiveEntropyComponent,

    #[error("graph is not strongly connected")]
    NotStronglyConnected,

    #[error("power iteration did not converge after {0} iterations")]
    NoConvergence(usize),

    #[error("infeasible trace: {0}")]
    Infeasible(String),

    #[error("model mismatch: {0}")]
    ModelMismatch(String),

    #[error("instance too large for enumeration: {paths:.3e} paths exceeds bound {bound:.0e}")]
    InstanceTooLarge { paths: f64, bound: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
