use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use super::circuit::{check_qubits, check_wire, CircuitProgram, Gate};
use crate::error::{config_err, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[inline]
pub(crate) fn wire_mask(n_qubits: usize, wire: usize) -> usize {
    1 << (n_qubits - 1 - wire)
}

/// Pure state of `n_qubits` qubits as `2^n` complex amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// |0...0>
    pub fn init_zero(n_qubits: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        let mut amps = vec![ZERO; 1 << n_qubits];
        amps[0] = ONE;
        Ok(Self { n_qubits, amps })
    }

    /// |+...+>, the uniform superposition.
    pub fn init_plus(n_qubits: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        let dim = 1usize << n_qubits;
        let a = 1.0 / libm::sqrt(dim as f64);
        Ok(Self {
            n_qubits,
            amps: vec![Complex64::new(a, 0.0); dim],
        })
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let dim = amps.len();
        if !dim.is_power_of_two() || dim < 2 {
            return Err(config_err(alloc::format!(
                "amplitude count {dim} is not a power of two >= 2"
            )));
        }
        let n_qubits = dim.trailing_zeros() as usize;
        check_qubits(n_qubits)?;
        Ok(Self { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn apply_hadamard(&mut self, wire: usize) -> Result<()> {
        check_wire(wire, self.n_qubits)?;
        let mask = wire_mask(self.n_qubits, wire);
        self.for_each_pair(mask, |a0, a1| {
            let (x, y) = (*a0, *a1);
            *a0 = (x + y) * FRAC_1_SQRT_2;
            *a1 = (x - y) * FRAC_1_SQRT_2;
        });
        Ok(())
    }

    /// Applies `[[cos t/2, -sin t/2], [sin t/2, cos t/2]]` to `wire`.
    pub fn apply_ry(&mut self, wire: usize, theta: f64) -> Result<()> {
        check_wire(wire, self.n_qubits)?;
        let (s, c) = libm::sincos(0.5 * theta);
        self.apply_real_2x2(wire, [[c, -s], [s, c]]);
        Ok(())
    }

    /// Applies `d RY(theta) / d theta` (not unitary).
    pub(crate) fn apply_ry_derivative(&mut self, wire: usize, theta: f64) {
        let (s, c) = libm::sincos(0.5 * theta);
        self.apply_real_2x2(wire, [[-0.5 * s, -0.5 * c], [0.5 * c, -0.5 * s]]);
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        check_wire(control, self.n_qubits)?;
        check_wire(target, self.n_qubits)?;
        if control == target {
            return Err(config_err(alloc::format!(
                "CNOT control and target are both wire {control}"
            )));
        }
        let cmask = wire_mask(self.n_qubits, control);
        let tmask = wire_mask(self.n_qubits, target);
        for i in 0..self.amps.len() {
            if i & cmask != 0 && i & tmask == 0 {
                self.amps.swap(i, i | tmask);
            }
        }
        Ok(())
    }

    /// `<Z_wire>` = sum of |amp|^2 weighted by +1 (bit clear) or -1 (bit set).
    pub fn expval_z(&self, wire: usize) -> Result<f64> {
        check_wire(wire, self.n_qubits)?;
        Ok(self.expval_z_unchecked(wire))
    }

    pub(crate) fn expval_z_unchecked(&self, wire: usize) -> f64 {
        let mask = wire_mask(self.n_qubits, wire);
        self.amps
            .iter()
            .enumerate()
            .map(|(i, a)| if i & mask == 0 { a.norm_sqr() } else { -a.norm_sqr() })
            .sum()
    }

    /// Multiplies by Pauli Z on `wire`.
    pub(crate) fn apply_z(&mut self, wire: usize) {
        let mask = wire_mask(self.n_qubits, wire);
        for (i, a) in self.amps.iter_mut().enumerate() {
            if i & mask != 0 {
                *a = -*a;
            }
        }
    }

    /// `<self|other>`
    pub(crate) fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    pub(crate) fn copy_from(&mut self, other: &StateVector) {
        self.amps.copy_from_slice(&other.amps);
    }

    /// Applies a validated program gate. Wires are trusted.
    pub(crate) fn apply_gate(&mut self, gate: &Gate, params: &[f64]) {
        match *gate {
            Gate::Hadamard { wire } => {
                let _ = self.apply_hadamard(wire);
            }
            Gate::Ry { wire, slot } => {
                let _ = self.apply_ry(wire, params[slot]);
            }
            Gate::Cnot { control, target } => {
                let _ = self.apply_cnot(control, target);
            }
        }
    }

    /// Applies the inverse of a validated program gate.
    pub(crate) fn apply_gate_inverse(&mut self, gate: &Gate, params: &[f64]) {
        match *gate {
            Gate::Ry { wire, slot } => {
                let _ = self.apply_ry(wire, -params[slot]);
            }
            // self-inverse
            _ => self.apply_gate(gate, params),
        }
    }

    fn apply_real_2x2(&mut self, wire: usize, m: [[f64; 2]; 2]) {
        let mask = wire_mask(self.n_qubits, wire);
        self.for_each_pair(mask, |a0, a1| {
            let (x, y) = (*a0, *a1);
            *a0 = x * m[0][0] + y * m[0][1];
            *a1 = x * m[1][0] + y * m[1][1];
        });
    }

    #[inline]
    fn for_each_pair(&mut self, mask: usize, mut f: impl FnMut(&mut Complex64, &mut Complex64)) {
        // Blocks of 2*mask: first half has the bit clear, second half set.
        for block in self.amps.chunks_exact_mut(mask << 1) {
            let (lo, hi) = block.split_at_mut(mask);
            for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                f(a0, a1);
            }
        }
    }
}

/// Runs `program` from |0...0> and returns one Z expectation per observable.
pub fn run_circuit(program: &CircuitProgram, params: &[f64]) -> Result<Vec<f64>> {
    Ok(observables_of(&final_state(program, params)?, program))
}

pub(crate) fn final_state(program: &CircuitProgram, params: &[f64]) -> Result<StateVector> {
    program.check_params(params.len())?;
    let mut state = StateVector::init_zero(program.n_qubits())?;
    for g in program.gates() {
        state.apply_gate(g, params);
    }
    Ok(state)
}

fn observables_of(state: &StateVector, program: &CircuitProgram) -> Vec<f64> {
    program
        .observables()
        .iter()
        .map(|&w| state.expval_z_unchecked(w))
        .collect()
}

#[cfg(test)]
#[allow(clippy::approx_constant)] // literal amplitudes are the hand-derived expectations
mod tests {
    use super::*;
    use crate::qsim::ParamRole;
    use approx::assert_abs_diff_eq;
    use core::f64::consts::{FRAC_PI_2, PI};

    fn re(s: &StateVector) -> Vec<f64> {
        s.amplitudes().iter().map(|a| a.re).collect()
    }

    #[test]
    fn basis_and_plus_states() {
        assert_eq!(re(&StateVector::init_zero(1).unwrap()), [1.0, 0.0]);
        assert_eq!(re(&StateVector::init_zero(2).unwrap()), [1.0, 0.0, 0.0, 0.0]);
        let s3 = StateVector::init_zero(3).unwrap();
        assert_eq!(s3.amplitudes().len(), 8);
        assert_abs_diff_eq!(s3.norm_sqr(), 1.0);

        for a in re(&StateVector::init_plus(1).unwrap()) {
            assert_abs_diff_eq!(a, 0.70710678, epsilon = 1e-8);
        }
        assert_eq!(re(&StateVector::init_plus(2).unwrap()), [0.5; 4]);
        let p7 = StateVector::init_plus(7).unwrap();
        assert_eq!(p7.amplitudes().len(), 128);
        for a in re(&p7) {
            assert_abs_diff_eq!(a, libm::pow(2.0, -3.5), epsilon = 1e-15);
        }

        // |+> equals H on every wire of |0...0>
        let mut h = StateVector::init_zero(3).unwrap();
        for w in 0..3 {
            h.apply_hadamard(w).unwrap();
        }
        let p3 = StateVector::init_plus(3).unwrap();
        for (a, b) in h.amplitudes().iter().zip(p3.amplitudes()) {
            assert_abs_diff_eq!((a - b).norm(), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn qubit_range_is_enforced() {
        assert!(StateVector::init_zero(0).is_err());
        assert!(StateVector::init_plus(13).is_err());
        assert!(StateVector::init_zero(12).is_ok());
    }

    #[test]
    fn ry_examples() {
        let mut s = StateVector::init_plus(2).unwrap();
        let before = s.clone();
        s.apply_ry(1, 0.0).unwrap();
        assert_eq!(s, before);

        let mut s = StateVector::init_zero(1).unwrap();
        s.apply_ry(0, PI).unwrap();
        assert_abs_diff_eq!(s.amplitudes()[0].re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitudes()[1].re, 1.0, epsilon = 1e-15);

        let mut s = StateVector::init_zero(1).unwrap();
        s.apply_ry(0, FRAC_PI_2).unwrap();
        assert_abs_diff_eq!(s.amplitudes()[0].re, 0.70710678, epsilon = 1e-8);
        assert_abs_diff_eq!(s.amplitudes()[1].re, 0.70710678, epsilon = 1e-8);

        assert!(s.apply_ry(1, 0.3).is_err());
    }

    #[test]
    fn cnot_truth_table_fixes_wire_order() {
        // |10>: wire 0 set, which is the most significant bit (index 2)
        let mut s = StateVector::from_amplitudes(vec![ZERO, ZERO, ONE, ZERO]).unwrap();
        s.apply_cnot(0, 1).unwrap();
        assert_eq!(s.amplitudes()[3], ONE);

        let mut s = StateVector::init_zero(2).unwrap();
        s.apply_cnot(0, 1).unwrap();
        assert_eq!(s.amplitudes()[0], ONE);

        let mut s = StateVector::init_plus(2).unwrap();
        s.apply_cnot(0, 1).unwrap();
        assert_eq!(re(&s), [0.5; 4]);

        assert!(s.apply_cnot(1, 1).is_err());
        assert!(s.apply_cnot(0, 2).is_err());
    }

    #[test]
    fn z_expectations() {
        assert_eq!(StateVector::init_zero(1).unwrap().expval_z(0).unwrap(), 1.0);
        assert_abs_diff_eq!(StateVector::init_plus(1).unwrap().expval_z(0).unwrap(), 0.0);
        let mut s = StateVector::init_zero(1).unwrap();
        s.apply_ry(0, 1.0).unwrap();
        assert_abs_diff_eq!(s.expval_z(0).unwrap(), 0.54030231, epsilon = 1e-8);
        assert!(s.expval_z(1).is_err());
    }

    #[test]
    fn run_circuit_examples() {
        let h_ry = CircuitProgram::new(
            1,
            vec![Gate::Hadamard { wire: 0 }, Gate::Ry { wire: 0, slot: 0 }],
            vec![0],
            vec![ParamRole::Variational],
        )
        .unwrap();
        assert_abs_diff_eq!(run_circuit(&h_ry, &[0.0]).unwrap()[0], 0.0);

        let ry = CircuitProgram::new(
            1,
            vec![Gate::Ry { wire: 0, slot: 0 }],
            vec![0],
            vec![ParamRole::Variational],
        )
        .unwrap();
        assert_abs_diff_eq!(run_circuit(&ry, &[FRAC_PI_2]).unwrap()[0], 0.0, epsilon = 1e-15);
        assert!(run_circuit(&ry, &[0.1, 0.2]).is_err());
    }
}
