//! Parameter-broadcast execution: one pass over the gate list updates every
//! sample of the batch.
//!
//! Layout is structure-of-arrays: amplitude `i` of sample `b` lives at
//! `i * batch + b`, so each gate kernel walks the same amplitude pairs as
//! the single-state kernel and updates a contiguous run of `batch` values
//! per pair. The inner loop has no branches and vectorizes over the batch.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use super::circuit::{check_qubits, CircuitProgram, Gate};
use super::state::{wire_mask, StateVector};
use crate::error::{config_err, Result};
use crate::matrix::Matrix;

/// `batch` independent pure states over the same register.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchedStateVector {
    n_qubits: usize,
    batch: usize,
    amps: Vec<Complex64>,
}

impl BatchedStateVector {
    pub fn init_zero(n_qubits: usize, batch: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        if batch == 0 {
            return Err(config_err("batch size must be at least 1"));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); batch << n_qubits];
        amps[..batch].fill(Complex64::new(1.0, 0.0));
        Ok(Self { n_qubits, batch, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn batch_size(&self) -> usize {
        self.batch
    }

    /// Copies sample `b` out as a standalone state.
    pub fn sample(&self, b: usize) -> StateVector {
        let amps = self.amps.iter().skip(b).step_by(self.batch).copied().collect();
        StateVector::from_amplitudes(amps).expect("register size already validated")
    }

    pub fn norms_sqr(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.batch];
        for chunk in self.amps.chunks_exact(self.batch) {
            for (o, a) in out.iter_mut().zip(chunk) {
                *o += a.norm_sqr();
            }
        }
        out
    }

    fn apply_hadamard(&mut self, wire: usize) {
        let stride = wire_mask(self.n_qubits, wire) * self.batch;
        for block in self.amps.chunks_exact_mut(stride << 1) {
            let (lo, hi) = block.split_at_mut(stride);
            for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a0, *a1);
                *a0 = (x + y) * FRAC_1_SQRT_2;
                *a1 = (x - y) * FRAC_1_SQRT_2;
            }
        }
    }

    /// Per-sample rotation; `cos_half[b]`, `sin_half[b]` hold cos/sin of theta_b / 2.
    fn apply_ry(&mut self, wire: usize, cos_half: &[f64], sin_half: &[f64]) {
        let batch = self.batch;
        let stride = wire_mask(self.n_qubits, wire) * batch;
        for block in self.amps.chunks_exact_mut(stride << 1) {
            let (lo, hi) = block.split_at_mut(stride);
            for (l, h) in lo.chunks_exact_mut(batch).zip(hi.chunks_exact_mut(batch)) {
                for (((a0, a1), &c), &s) in l.iter_mut().zip(h.iter_mut()).zip(cos_half).zip(sin_half) {
                    let (x, y) = (*a0, *a1);
                    *a0 = x * c + y * -s;
                    *a1 = x * s + y * c;
                }
            }
        }
    }

    fn apply_cnot(&mut self, control: usize, target: usize) {
        let batch = self.batch;
        let cmask = wire_mask(self.n_qubits, control);
        let tmask = wire_mask(self.n_qubits, target);
        let stride = tmask * batch;
        for (blk, block) in self.amps.chunks_exact_mut(stride << 1).enumerate() {
            let base = blk * (tmask << 1);
            let (lo, hi) = block.split_at_mut(stride);
            for (j, (l, h)) in lo.chunks_exact_mut(batch).zip(hi.chunks_exact_mut(batch)).enumerate() {
                if (base + j) & cmask != 0 {
                    l.swap_with_slice(h);
                }
            }
        }
    }

    fn expval_z_into(&self, wire: usize, out: &mut [f64]) {
        let mask = wire_mask(self.n_qubits, wire);
        out.fill(0.0);
        for (i, chunk) in self.amps.chunks_exact(self.batch).enumerate() {
            if i & mask == 0 {
                for (o, a) in out.iter_mut().zip(chunk) {
                    *o += a.norm_sqr();
                }
            } else {
                for (o, a) in out.iter_mut().zip(chunk) {
                    *o += -a.norm_sqr();
                }
            }
        }
    }
}

/// Executes `program` once for every row of `params` (`B x P`), returning a
/// `B x K` matrix of Z expectations. Row `b` matches
/// [`run_circuit`](super::run_circuit) on `params.row(b)`.
pub fn run_circuit_batched(program: &CircuitProgram, params: &Matrix) -> Result<Matrix> {
    Ok(batched_final_state(program, params)?.observe(program))
}

pub(crate) fn batched_final_state(program: &CircuitProgram, params: &Matrix) -> Result<BatchedStateVector> {
    program.check_params(params.cols())?;
    let batch = params.rows();
    let mut state = BatchedStateVector::init_zero(program.n_qubits(), batch)?;
    let mut cos_half = vec![0.0; batch];
    let mut sin_half = vec![0.0; batch];
    for g in program.gates() {
        match *g {
            Gate::Hadamard { wire } => state.apply_hadamard(wire),
            Gate::Ry { wire, slot } => {
                for (b, (c, s)) in cos_half.iter_mut().zip(sin_half.iter_mut()).enumerate() {
                    (*s, *c) = libm::sincos(0.5 * params.get(b, slot));
                }
                state.apply_ry(wire, &cos_half, &sin_half);
            }
            Gate::Cnot { control, target } => state.apply_cnot(control, target),
        }
    }
    Ok(state)
}

impl BatchedStateVector {
    fn observe(&self, program: &CircuitProgram) -> Matrix {
        let k = program.observables().len();
        let mut out = Matrix::zeros(self.batch, k);
        let mut col = vec![0.0; self.batch];
        for (j, &w) in program.observables().iter().enumerate() {
            self.expval_z_into(w, &mut col);
            for (b, v) in col.iter().enumerate() {
                out.row_mut(b)[j] = *v;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::{build_even_odd_ladder, run_circuit, ParamRole};

    fn demo_program() -> CircuitProgram {
        let mut gates: Vec<Gate> = (0..4).map(|wire| Gate::Hadamard { wire }).collect();
        gates.extend((0..4).map(|wire| Gate::Ry { wire, slot: wire }));
        gates.extend(build_even_odd_ladder(4).unwrap());
        gates.extend((0..4).map(|wire| Gate::Ry { wire, slot: 4 + wire }));
        CircuitProgram::new(4, gates, vec![0, 1, 3], vec![ParamRole::Variational; 8]).unwrap()
    }

    #[test]
    fn single_row_matches_serial() {
        let p = demo_program();
        let params: Vec<f64> = (0..8).map(|i| 0.37 * i as f64 - 1.0).collect();
        let out = run_circuit_batched(&p, &Matrix::row_vector(params.clone())).unwrap();
        let serial = run_circuit(&p, &params).unwrap();
        for (a, b) in out.row(0).iter().zip(&serial) {
            assert!((a - b).abs() <= 1e-14);
        }
    }

    #[test]
    fn identical_rows_give_identical_outputs() {
        let p = demo_program();
        let row: Vec<f64> = (0..8).map(|i| 0.1 * i as f64).collect();
        let out = run_circuit_batched(&p, &Matrix::from_rows(&[&row, &row, &row, &row]).unwrap()).unwrap();
        for b in 1..4 {
            assert_eq!(out.row(b), out.row(0));
        }
    }

    #[test]
    fn rows_are_independent_states() {
        let p = demo_program();
        let rows: Vec<Vec<f64>> = (0..5)
            .map(|b| (0..8).map(|i| libm::sin(1.3 * b as f64 + 0.7 * i as f64)).collect())
            .collect();
        let params = Matrix::from_rows(&rows).unwrap();
        let state = batched_final_state(&p, &params).unwrap();
        for n in state.norms_sqr() {
            assert!((n - 1.0).abs() < 1e-12);
        }
        for (b, r) in rows.iter().enumerate() {
            let serial = super::super::state::final_state(&p, r).unwrap();
            let sample = state.sample(b);
            for (x, y) in sample.amplitudes().iter().zip(serial.amplitudes()) {
                assert!((x - y).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn wrong_param_width_is_rejected() {
        let p = demo_program();
        assert!(run_circuit_batched(&p, &Matrix::zeros(3, 7)).is_err());
        assert!(run_circuit_batched(&p, &Matrix::zeros(0, 8)).is_err());
    }
}
