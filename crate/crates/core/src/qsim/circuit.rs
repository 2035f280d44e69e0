use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{config_err, Error, Result};

/// Largest register the simulator accepts.
pub const MAX_QUBITS: usize = 12;

pub(crate) fn check_qubits(n_qubits: usize) -> Result<()> {
    if (1..=MAX_QUBITS).contains(&n_qubits) {
        Ok(())
    } else {
        Err(config_err(format!(
            "n_qubits must be in 1..={MAX_QUBITS}, got {n_qubits}"
        )))
    }
}

pub(crate) fn check_wire(wire: usize, n_qubits: usize) -> Result<()> {
    if wire < n_qubits {
        Ok(())
    } else {
        Err(Error::WireOutOfRange { wire, n_qubits })
    }
}

/// The supported gate set. Wire 0 is the most significant bit of the
/// amplitude index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Hadamard {
        wire: usize,
    },
    /// Y rotation whose angle is read from `params[slot]`.
    Ry {
        wire: usize,
        slot: usize,
    },
    Cnot {
        control: usize,
        target: usize,
    },
}

impl Gate {
    pub fn param_slot(&self) -> Option<usize> {
        match *self {
            Gate::Ry { slot, .. } => Some(slot),
            _ => None,
        }
    }

    fn validate(&self, n_qubits: usize) -> Result<()> {
        match *self {
            Gate::Hadamard { wire } | Gate::Ry { wire, .. } => check_wire(wire, n_qubits),
            Gate::Cnot { control, target } => {
                check_wire(control, n_qubits)?;
                check_wire(target, n_qubits)?;
                if control == target {
                    return Err(config_err(format!("CNOT control and target are both wire {control}")));
                }
                Ok(())
            }
        }
    }
}

/// What a parameter slot carries. Both kinds are differentiable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamRole {
    /// Data-dependent angle (an input feature, hidden state or latent).
    Encoding,
    /// Trainable rotation angle, or an angle generated per step by a
    /// classical controller.
    Variational,
}

/// Ordered gate list plus Pauli-Z observables, executed from |0...0>.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitProgram {
    n_qubits: usize,
    gates: Vec<Gate>,
    observables: Vec<usize>,
    roles: Vec<ParamRole>,
}

impl CircuitProgram {
    /// Validates wires, CNOT pairs, observables and that the slot indices
    /// are exactly `0..roles.len()`, each referenced once.
    pub fn new(n_qubits: usize, gates: Vec<Gate>, observables: Vec<usize>, roles: Vec<ParamRole>) -> Result<Self> {
        check_qubits(n_qubits)?;
        let mut seen = vec![false; roles.len()];
        for g in &gates {
            g.validate(n_qubits)?;
            if let Some(slot) = g.param_slot() {
                match seen.get_mut(slot) {
                    None => return Err(config_err(format!("param slot {slot} outside 0..{}", roles.len()))),
                    Some(true) => return Err(config_err(format!("param slot {slot} referenced twice"))),
                    Some(s) => *s = true,
                }
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(config_err(format!("param slot {missing} is never used")));
        }
        for &w in &observables {
            check_wire(w, n_qubits)?;
        }
        Ok(Self {
            n_qubits,
            gates,
            observables,
            roles,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn observables(&self) -> &[usize] {
        &self.observables
    }

    pub fn roles(&self) -> &[ParamRole] {
        &self.roles
    }

    pub fn n_params(&self) -> usize {
        self.roles.len()
    }

    pub(crate) fn check_params(&self, len: usize) -> Result<()> {
        if len == self.n_params() {
            Ok(())
        } else {
            Err(config_err(format!(
                "circuit has {} param slots, got {} params",
                self.n_params(),
                len
            )))
        }
    }
}

/// CNOTs on (0,1),(2,3),... followed by (1,2),(3,4),... with no wrap-around.
pub fn build_even_odd_ladder(n_qubits: usize) -> Result<Vec<Gate>> {
    if n_qubits < 2 {
        return Err(config_err(format!(
            "an entangling ladder needs at least 2 wires, got {n_qubits}"
        )));
    }
    let pairs = (0..n_qubits - 1).step_by(2).chain((1..n_qubits - 1).step_by(2));
    Ok(pairs
        .map(|control| Gate::Cnot {
            control,
            target: control + 1,
        })
        .collect())
}
