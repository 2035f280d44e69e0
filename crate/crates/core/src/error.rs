use alloc::string::String;

/// Errors raised by the simulator, autodiff engine, models, data pipeline
/// and statistics.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("wire {wire} out of range for a {n_qubits}-qubit register")]
    WireOutOfRange { wire: usize, n_qubits: usize },
    #[error("data error: {0}")]
    Data(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error(
        "batched/serial mismatch: l2 {l2:.3e} exceeds {tolerance:.1e} (worst sample {worst_sample}, deviation {worst_deviation:.3e})"
    )]
    Equivalence {
        l2: f64,
        tolerance: f64,
        worst_sample: usize,
        worst_deviation: f64,
    },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

pub(crate) fn data_err(msg: impl Into<String>) -> Error {
    Error::Data(msg.into())
}
