use alloc::vec::Vec;

use crate::error::Result;
use crate::matrix::Matrix;
use crate::qsim::{final_state, CircuitProgram, Gate, StateVector};

/// Expectations and their Jacobian (`K x P`) with respect to every
/// parameter slot, encoding slots included.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointOutput {
    pub expectations: Vec<f64>,
    pub jacobian: Matrix,
}

/// Adjoint-method gradient of every Z observable of `program`.
///
/// One forward pass, then per observable a reverse sweep that un-applies
/// each gate from the final state |psi> and from |lambda> = Z_k |psi>.
/// At each rotation `d<Z_k>/d theta = 2 Re <lambda| dG/dtheta |psi_before>`.
/// Working memory is a fixed number of state-sized buffers regardless of
/// the gate count.
pub fn adjoint_expval_grad(program: &CircuitProgram, params: &[f64]) -> Result<AdjointOutput> {
    adjoint_counted(program, params, &mut 0)
}

/// Same as [`adjoint_expval_grad`], adding the number of state-sized
/// buffers it allocated to `buffers`.
pub(crate) fn adjoint_counted(program: &CircuitProgram, params: &[f64], buffers: &mut usize) -> Result<AdjointOutput> {
    let final_psi = final_state(program, params)?;
    *buffers += 1;
    let observables = program.observables();
    let expectations: Vec<f64> = observables.iter().map(|&w| final_psi.expval_z_unchecked(w)).collect();
    let mut jacobian = Matrix::zeros(observables.len(), program.n_params());

    let Some((&last, rest)) = observables.split_last() else {
        return Ok(AdjointOutput { expectations, jacobian });
    };
    let mut lambda = final_psi.clone();
    let mut mu = final_psi.clone();
    *buffers += 2;
    if rest.is_empty() {
        // single observable: sweep the forward buffer in place
        let mut psi = final_psi;
        sweep(
            program,
            params,
            last,
            &mut psi,
            &mut lambda,
            &mut mu,
            jacobian.row_mut(0),
        );
    } else {
        let mut psi = final_psi.clone();
        *buffers += 1;
        for (k, &w) in observables.iter().enumerate() {
            psi.copy_from(&final_psi);
            sweep(program, params, w, &mut psi, &mut lambda, &mut mu, jacobian.row_mut(k));
        }
    }
    Ok(AdjointOutput { expectations, jacobian })
}

fn sweep(
    program: &CircuitProgram,
    params: &[f64],
    observable: usize,
    psi: &mut StateVector,
    lambda: &mut StateVector,
    mu: &mut StateVector,
    grad: &mut [f64],
) {
    lambda.copy_from(psi);
    lambda.apply_z(observable);
    for gate in program.gates().iter().rev() {
        psi.apply_gate_inverse(gate, params);
        if let Gate::Ry { wire, slot } = *gate {
            mu.copy_from(psi);
            mu.apply_ry_derivative(wire, params[slot]);
            grad[slot] = 2.0 * lambda.inner(mu).re;
        }
        lambda.apply_gate_inverse(gate, params);
    }
}
