//! Quantum fast weight programmer.
//!
//! A slow classical network reads each time step `s_t` and reprograms a
//! three-qubit circuit:
//!
//! ```text
//! z_t     = W_e s_t + b_e            latent, RY-encoded on wires 0..3
//! alpha_t = W_l z_t + b_l            layer selector (1)
//! beta_t  = W_q z_t + b_q            qubit selector (3)
//! Theta_t = Theta_{t-1} + alpha_t beta_t^T
//! a_t     = <Z_0>  after  RY(z_t), CNOT(0,1), CNOT(1,2), RY(Theta_t)
//! y       = W_p a_T + b_p
//! ```
//!
//! `Theta` starts at zero for every window and is never trained directly.

use alloc::vec;
use alloc::vec::Vec;

use super::{
    affine, check_windows, hcat, run_quantum, split_params, step_inputs, ForwardTrace, InitRule, ModelKind,
    ParamCategory, ParamSegment, SequenceModel,
};
use crate::autograd::{NodeId, Tape};
use crate::data::{Row, N_FEATURES};
use crate::error::{data_err, Result};
use crate::matrix::Matrix;
use crate::qsim::{build_even_odd_ladder, CircuitProgram, Gate, ParamRole};

const LATENT: usize = 3;
const QUBITS: usize = 3;

/// Per-sequence circuit angles (one layer by three qubits).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FastWeights {
    pub theta: [f64; QUBITS],
}

/// Structured view of the flat QFWP parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct QfwpParams {
    pub encoder_weight: Vec<f64>,
    pub encoder_bias: Vec<f64>,
    pub layer_weight: Vec<f64>,
    pub layer_bias: f64,
    pub qubit_weight: Vec<f64>,
    pub qubit_bias: Vec<f64>,
    pub post_weight: f64,
    pub post_bias: f64,
}

impl QfwpParams {
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(33);
        v.extend_from_slice(&self.encoder_weight);
        v.extend_from_slice(&self.encoder_bias);
        v.extend_from_slice(&self.layer_weight);
        v.push(self.layer_bias);
        v.extend_from_slice(&self.qubit_weight);
        v.extend_from_slice(&self.qubit_bias);
        v.push(self.post_weight);
        v.push(self.post_bias);
        v
    }
}

#[derive(Debug, Clone)]
pub struct Qfwp {
    program: CircuitProgram,
    layout: Vec<ParamSegment>,
}

impl Default for Qfwp {
    fn default() -> Self {
        Self::new()
    }
}

fn classical(name: &'static str, shape: (usize, usize), fan_in: usize) -> ParamSegment {
    ParamSegment {
        name,
        shape,
        category: ParamCategory::Classical,
        init: InitRule::FanIn(fan_in),
    }
}

impl Qfwp {
    pub fn new() -> Self {
        let mut gates: Vec<Gate> = (0..QUBITS).map(|wire| Gate::Ry { wire, slot: wire }).collect();
        gates.extend(build_even_odd_ladder(QUBITS).expect("3 wires"));
        gates.extend((0..QUBITS).map(|wire| Gate::Ry {
            wire,
            slot: QUBITS + wire,
        }));
        let mut roles = vec![ParamRole::Encoding; QUBITS];
        roles.extend([ParamRole::Variational; QUBITS]);
        let program = CircuitProgram::new(QUBITS, gates, vec![0], roles).expect("static circuit is valid");
        let layout = vec![
            classical("slow_program_encoder.weight", (LATENT, N_FEATURES), N_FEATURES),
            classical("slow_program_encoder.bias", (1, LATENT), N_FEATURES),
            classical("slow_program_layer_idx.weight", (1, LATENT), LATENT),
            classical("slow_program_layer_idx.bias", (1, 1), LATENT),
            classical("slow_program_qubit_idx.weight", (QUBITS, LATENT), LATENT),
            classical("slow_program_qubit_idx.bias", (1, QUBITS), LATENT),
            classical("post_processing.weight", (1, 1), 1),
            classical("post_processing.bias", (1, 1), 1),
        ];
        Self { program, layout }
    }

    /// Slots `0..3` carry `z_t`, slots `3..6` carry `Theta_t`.
    pub fn circuit(&self) -> &CircuitProgram {
        &self.program
    }

    pub fn structured(&self, params: &[f64]) -> Result<QfwpParams> {
        let p = split_params(&self.layout, params)?;
        Ok(QfwpParams {
            encoder_weight: p[0].to_vec(),
            encoder_bias: p[1].to_vec(),
            layer_weight: p[2].to_vec(),
            layer_bias: p[3][0],
            qubit_weight: p[4].to_vec(),
            qubit_bias: p[5].to_vec(),
            post_weight: p[6][0],
            post_bias: p[7][0],
        })
    }

    /// One programmer step for a batch; returns `(a_t, Theta_t)`.
    fn step_batch(&self, s: &Matrix, theta: &Matrix, p: &[&[f64]]) -> Result<(Matrix, Matrix)> {
        let z = affine(s, p[0], p[1]);
        let alpha = affine(&z, p[2], p[3]);
        let beta = affine(&z, p[4], p[5]);
        let mut next = theta.clone();
        for r in 0..s.rows() {
            let a = alpha.get(r, 0);
            for (t, b) in next.row_mut(r).iter_mut().zip(beta.row(r)) {
                *t += a * b;
            }
        }
        let a = run_quantum(&self.program, &hcat(&z, &next))?;
        Ok((a, next))
    }

    /// Advances one sample by one step.
    pub fn step(&self, s: &Row, fast: FastWeights, params: &QfwpParams) -> Result<(f64, FastWeights)> {
        if s.iter().any(|v| !v.is_finite()) {
            return Err(data_err("non-finite step input"));
        }
        let flat = params.to_flat();
        let p = split_params(&self.layout, &flat)?;
        let (a, theta) = self.step_batch(
            &Matrix::row_vector(s.to_vec()),
            &Matrix::row_vector(fast.theta.to_vec()),
            &p,
        )?;
        let mut next = FastWeights::default();
        next.theta.copy_from_slice(theta.row(0));
        Ok((a.get(0, 0), next))
    }
}

impl SequenceModel for Qfwp {
    fn kind(&self) -> ModelKind {
        ModelKind::Qfwp
    }

    fn layout(&self) -> &[ParamSegment] {
        &self.layout
    }

    fn forward_trace(&self, params: &[f64], windows: &[&[Row]]) -> Result<ForwardTrace> {
        let seq_len = check_windows(windows)?;
        let p = split_params(&self.layout, params)?;
        let mut theta = Matrix::zeros(windows.len(), QUBITS);
        let mut a = Matrix::zeros(windows.len(), 1);
        for t in 0..seq_len {
            (a, theta) = self.step_batch(&step_inputs(windows, t), &theta, &p)?;
        }
        Ok(ForwardTrace {
            predictions: affine(&a, p[6], p[7]).into_vec(),
            states: Vec::new(),
        })
    }

    fn record<'p>(&'p self, tape: &mut Tape<'p>, params: &[f64], windows: &[&[Row]]) -> Result<(NodeId, Vec<NodeId>)> {
        let seq_len = check_windows(windows)?;
        let parts = split_params(&self.layout, params)?;
        let l: Vec<NodeId> = parts.iter().map(|p| tape.param(p)).collect();
        let mut theta = tape.constant(Matrix::zeros(windows.len(), QUBITS));
        let mut a = theta;
        for t in 0..seq_len {
            let s = tape.constant(step_inputs(windows, t));
            let z = tape.linear(l[0], l[1], s, LATENT)?;
            let alpha = tape.linear(l[2], l[3], z, 1)?;
            let beta = tape.linear(l[4], l[5], z, QUBITS)?;
            let update = tape.outer(alpha, beta)?;
            theta = tape.add(theta, update)?;
            let angles = tape.concat(z, theta)?;
            a = tape.quantum(&self.program, angles)?;
        }
        let pred = tape.linear(l[6], l[7], a, 1)?;
        Ok((pred, l))
    }
}
