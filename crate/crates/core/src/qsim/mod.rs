//! Minimal state-vector simulator for the {H, RY, CNOT} gate set with
//! Pauli-Z readout, in single-sample and batch-broadcast forms.

mod batched;
mod circuit;
mod state;

pub use batched::{run_circuit_batched, BatchedStateVector};
pub use circuit::{build_even_odd_ladder, CircuitProgram, Gate, ParamRole, MAX_QUBITS};
pub use state::{run_circuit, StateVector};

pub(crate) use state::final_state;
