use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit count mismatch: {0} vs {1}")]
    QubitMismatch(usize, usize),

    #[error("{n_qubits} qubits exceeds the dense limit of {limit}")]
    DenseLimit { n_qubits: usize, limit: usize },

    #[error("basis index {index} out of range for {n_qubits} qubits")]
    IndexOutOfRange { index: u64, n_qubits: usize },

    #[error("operator is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("FCIDUMP line {line}: {msg}")]
    Fcidump { line: usize, msg: String },

    #[error("circuit text line {line}: {msg}")]
    CircuitFormat { line: usize, msg: String },

    #[error("matrix element has imaginary part {0:e}; only real Hamiltonians are supported")]
    ComplexElement(f64),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("walker population died out at step {0}")]
    Extinction(u64),

    #[error("cache file: {0}")]
    CacheFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// True for failures of a numerical routine rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DenseLimit { .. }
                | Error::Numerical(_)
                | Error::Extinction(_)
                | Error::ComplexElement(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
