//! LSTM cell whose four gates are variational circuits.
//!
//! Each gate circuit acts on `input + hidden` wires: Hadamard on every
//! wire, RY encoding of `[x_t; h_{t-1}]`, an even-odd CNOT ladder, one
//! trainable RY per wire, then `<Z>` on the first `hidden` wires. The gate
//! pre-activations feed the usual cell update
//!
//! ```text
//! c_t = sigma(e_f) * c_{t-1} + sigma(e_i) * tanh(e_c)
//! h_t = sigma(e_o) * tanh(c_t)
//! ```
//!
//! and the prediction is a linear readout of the last hidden state.

use alloc::vec;
use alloc::vec::Vec;

use super::{
    affine, check_windows, hcat, run_quantum, split_params, step_inputs, ForwardTrace, InitRule, ModelKind,
    ParamCategory, ParamSegment, SequenceModel,
};
use crate::autograd::{sigmoid, NodeId, Tape};
use crate::data::{Row, N_FEATURES};
use crate::error::{config_err, data_err, Result};
use crate::matrix::Matrix;
use crate::qsim::{build_even_odd_ladder, CircuitProgram, Gate, ParamRole};

/// How `[x_t; h_{t-1}]` becomes rotation angles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Encoding {
    /// Values are used as angles directly.
    #[default]
    Raw,
    /// `atan(v)` is used as the angle.
    Arctan,
}

/// Where the trainable rotations sit relative to the CNOT ladder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VariationalPlacement {
    #[default]
    AfterLadder,
    BeforeLadder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QlstmConfig {
    pub input: usize,
    pub hidden: usize,
    pub encoding: Encoding,
    pub placement: VariationalPlacement,
}

impl Default for QlstmConfig {
    fn default() -> Self {
        Self {
            input: N_FEATURES,
            hidden: 3,
            encoding: Encoding::Raw,
            placement: VariationalPlacement::AfterLadder,
        }
    }
}

impl QlstmConfig {
    pub fn n_qubits(&self) -> usize {
        self.input + self.hidden
    }
}

const GATE_NAMES: [&str; 4] = ["vqc_forget", "vqc_input", "vqc_cell", "vqc_output"];

/// Structured view of the flat QLSTM parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct QlstmParams {
    /// Trainable angles of the forget, input, cell and output circuits.
    pub gates: [Vec<f64>; 4],
    pub out_weight: Vec<f64>,
    pub out_bias: f64,
}

impl QlstmParams {
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.gates.iter().flatten().copied().collect();
        v.extend_from_slice(&self.out_weight);
        v.push(self.out_bias);
        v
    }
}

/// Recurrent state carried between cells.
#[derive(Debug, Clone, PartialEq)]
pub struct QlstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl QlstmState {
    pub fn zeros(hidden: usize) -> Self {
        Self {
            h: vec![0.0; hidden],
            c: vec![0.0; hidden],
        }
    }
}

#[derive(Debug, Clone)]
pub struct Qlstm {
    config: QlstmConfig,
    program: CircuitProgram,
    layout: Vec<ParamSegment>,
}

impl Qlstm {
    pub fn new(config: QlstmConfig) -> Result<Self> {
        if config.input == 0 || config.hidden == 0 {
            return Err(config_err("qlstm needs a positive input and hidden size"));
        }
        let program = gate_circuit(&config)?;
        let wires = config.n_qubits();
        let mut layout: Vec<ParamSegment> = GATE_NAMES
            .iter()
            .map(|&name| ParamSegment {
                name,
                shape: (1, wires),
                category: ParamCategory::Quantum,
                init: InitRule::Angle,
            })
            .collect();
        layout.push(ParamSegment {
            name: "output_weight",
            shape: (1, config.hidden),
            category: ParamCategory::Classical,
            init: InitRule::FanIn(config.hidden),
        });
        layout.push(ParamSegment {
            name: "output_bias",
            shape: (1, 1),
            category: ParamCategory::Classical,
            init: InitRule::FanIn(config.hidden),
        });
        Ok(Self {
            config,
            program,
            layout,
        })
    }

    pub fn config(&self) -> &QlstmConfig {
        &self.config
    }

    /// The circuit shared by all four gates. Slots `0..n` encode
    /// `[x_t; h_{t-1}]`, slots `n..2n` are the gate's trainable angles.
    pub fn gate_circuit(&self) -> &CircuitProgram {
        &self.program
    }

    pub fn structured(&self, params: &[f64]) -> Result<QlstmParams> {
        let parts = split_params(&self.layout, params)?;
        Ok(QlstmParams {
            gates: core::array::from_fn(|g| parts[g].to_vec()),
            out_weight: parts[4].to_vec(),
            out_bias: parts[5][0],
        })
    }

    fn encode(&self, v: Matrix) -> Matrix {
        match self.config.encoding {
            Encoding::Raw => v,
            Encoding::Arctan => {
                let mut v = v;
                v.as_mut_slice().iter_mut().for_each(|e| *e = libm::atan(*e));
                v
            }
        }
    }

    /// One cell step for a batch: `x` is `B x input`, `h`/`c` are `B x hidden`.
    fn cell_batch(&self, x: &Matrix, h: &Matrix, c: &Matrix, gates: &[&[f64]; 4]) -> Result<(Matrix, Matrix)> {
        let v = self.encode(hcat(x, h));
        let mut e: [Matrix; 4] = Default::default();
        for (eg, theta) in e.iter_mut().zip(gates) {
            *eg = run_quantum(&self.program, &hcat(&v, &Matrix::row_vector(theta.to_vec())))?;
        }
        let (mut h_new, mut c_new) = (
            Matrix::zeros(x.rows(), self.config.hidden),
            Matrix::zeros(x.rows(), self.config.hidden),
        );
        for r in 0..x.rows() {
            let (hr, cr) = lstm_update(e[0].row(r), e[1].row(r), e[2].row(r), e[3].row(r), c.row(r));
            h_new.row_mut(r).copy_from_slice(&hr);
            c_new.row_mut(r).copy_from_slice(&cr);
        }
        Ok((h_new, c_new))
    }

    /// Advances one sample by one step.
    pub fn cell(&self, x: &Row, state: &QlstmState, params: &QlstmParams) -> Result<QlstmState> {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(data_err("non-finite cell input"));
        }
        let gates: [&[f64]; 4] = core::array::from_fn(|g| params.gates[g].as_slice());
        let (h, c) = self.cell_batch(
            &Matrix::row_vector(x.to_vec()),
            &Matrix::row_vector(state.h.clone()),
            &Matrix::row_vector(state.c.clone()),
            &gates,
        )?;
        Ok(QlstmState {
            h: h.into_vec(),
            c: c.into_vec(),
        })
    }
}

/// Cell update from the four gate pre-activations; returns `(h_t, c_t)`.
pub fn lstm_update(e_f: &[f64], e_i: &[f64], e_c: &[f64], e_o: &[f64], c_prev: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let c: Vec<f64> = (0..c_prev.len())
        .map(|j| sigmoid(e_f[j]) * c_prev[j] + sigmoid(e_i[j]) * libm::tanh(e_c[j]))
        .collect();
    let h = c
        .iter()
        .enumerate()
        .map(|(j, cj)| sigmoid(e_o[j]) * libm::tanh(*cj))
        .collect();
    (h, c)
}

fn gate_circuit(config: &QlstmConfig) -> Result<CircuitProgram> {
    let n = config.n_qubits();
    let mut gates: Vec<Gate> = (0..n).map(|wire| Gate::Hadamard { wire }).collect();
    gates.extend((0..n).map(|wire| Gate::Ry { wire, slot: wire }));
    let trainable = (0..n).map(|wire| Gate::Ry { wire, slot: n + wire });
    let ladder = build_even_odd_ladder(n)?;
    match config.placement {
        VariationalPlacement::AfterLadder => {
            gates.extend(ladder);
            gates.extend(trainable);
        }
        VariationalPlacement::BeforeLadder => {
            gates.extend(trainable);
            gates.extend(ladder);
        }
    }
    let mut roles = vec![ParamRole::Encoding; n];
    roles.extend(core::iter::repeat_n(ParamRole::Variational, n));
    CircuitProgram::new(n, gates, (0..config.hidden).collect(), roles)
}

impl SequenceModel for Qlstm {
    fn kind(&self) -> ModelKind {
        ModelKind::Qlstm
    }

    fn layout(&self) -> &[ParamSegment] {
        &self.layout
    }

    fn forward_trace(&self, params: &[f64], windows: &[&[Row]]) -> Result<ForwardTrace> {
        let seq_len = check_windows(windows)?;
        let parts = split_params(&self.layout, params)?;
        let gates: [&[f64]; 4] = core::array::from_fn(|g| parts[g]);
        let batch = windows.len();
        let mut h = Matrix::zeros(batch, self.config.hidden);
        let mut c = Matrix::zeros(batch, self.config.hidden);
        let mut states = Vec::with_capacity(seq_len);
        for t in 0..seq_len {
            (h, c) = self.cell_batch(&step_inputs(windows, t), &h, &c, &gates)?;
            states.push(h.clone());
        }
        let predictions = affine(&h, parts[4], parts[5]).into_vec();
        Ok(ForwardTrace { predictions, states })
    }

    fn record<'p>(&'p self, tape: &mut Tape<'p>, params: &[f64], windows: &[&[Row]]) -> Result<(NodeId, Vec<NodeId>)> {
        let seq_len = check_windows(windows)?;
        let parts = split_params(&self.layout, params)?;
        let leaves: Vec<NodeId> = parts.iter().map(|p| tape.param(p)).collect();
        let batch = windows.len();
        let mut h = tape.constant(Matrix::zeros(batch, self.config.hidden));
        let mut c = tape.constant(Matrix::zeros(batch, self.config.hidden));
        for t in 0..seq_len {
            let x = tape.constant(step_inputs(windows, t));
            let mut v = tape.concat(x, h)?;
            if self.config.encoding == Encoding::Arctan {
                v = tape.atan(v);
            }
            let mut e = [v; 4];
            for (eg, &theta) in e.iter_mut().zip(&leaves[..4]) {
                let angles = tape.concat(v, theta)?;
                *eg = tape.quantum(&self.program, angles)?;
            }
            let f = tape.sigmoid(e[0]);
            let i = tape.sigmoid(e[1]);
            let cand = tape.tanh(e[2]);
            let o = tape.sigmoid(e[3]);
            let keep = tape.mul(f, c)?;
            let write = tape.mul(i, cand)?;
            c = tape.add(keep, write)?;
            let squashed = tape.tanh(c);
            h = tape.mul(o, squashed)?;
        }
        let pred = tape.linear(leaves[4], leaves[5], h, 1)?;
        Ok((pred, leaves))
    }
}
