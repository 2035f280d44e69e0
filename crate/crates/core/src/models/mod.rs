//! Parameter-matched hybrid sequence models.
//!
//! Parameters are one flat `f64` vector per model, split into named
//! [`ParamSegment`]s. Both models have a tape-free batched forward
//! ([`SequenceModel::predict`]) and a recorded forward for training
//! ([`SequenceModel::record`]).

mod optim;
mod qfwp;
mod qlstm;

use alloc::format;
use alloc::vec::Vec;

use rand::distr::{Distribution, Uniform};
use rand_chacha::ChaCha8Rng;

pub use optim::{Optimizer, OptimizerKind};
pub use qfwp::{FastWeights, Qfwp, QfwpParams};
pub use qlstm::{lstm_update, Encoding, Qlstm, QlstmConfig, QlstmParams, QlstmState, VariationalPlacement};

use crate::autograd::{NodeId, Tape};
use crate::data::Row;
use crate::error::{config_err, data_err, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    Qlstm,
    Qfwp,
}

impl ModelKind {
    pub const ALL: [ModelKind; 2] = [ModelKind::Qlstm, ModelKind::Qfwp];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Qlstm => "qlstm",
            ModelKind::Qfwp => "qfwp",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qlstm" => Some(ModelKind::Qlstm),
            "qfwp" => Some(ModelKind::Qfwp),
            _ => None,
        }
    }
}

impl core::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamCategory {
    /// Trainable circuit rotation angle.
    Quantum,
    Classical,
}

/// How parameters of a segment are drawn at initialization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitRule {
    /// Uniform on `[0, 2 pi)`.
    Angle,
    /// Uniform on `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`.
    FanIn(usize),
}

/// A named, contiguous block of the flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSegment {
    pub name: &'static str,
    pub shape: (usize, usize),
    pub category: ParamCategory,
    pub init: InitRule,
}

impl ParamSegment {
    pub fn len(&self) -> usize {
        self.shape.0 * self.shape.1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamCount {
    pub total: usize,
    pub quantum: usize,
    pub classical: usize,
}

/// Counts trainable parameters by category.
pub fn count_parameters(layout: &[ParamSegment]) -> ParamCount {
    let by = |cat| layout.iter().filter(|s| s.category == cat).map(ParamSegment::len).sum();
    let quantum = by(ParamCategory::Quantum);
    let classical = by(ParamCategory::Classical);
    ParamCount {
        total: quantum + classical,
        quantum,
        classical,
    }
}

/// Splits a flat parameter vector along `layout`.
pub fn split_params<'a>(layout: &[ParamSegment], params: &'a [f64]) -> Result<Vec<&'a [f64]>> {
    let expected: usize = layout.iter().map(ParamSegment::len).sum();
    if params.len() != expected {
        return Err(config_err(format!(
            "expected {expected} parameters, got {}",
            params.len()
        )));
    }
    let mut rest = params;
    Ok(layout
        .iter()
        .map(|seg| {
            let (head, tail) = rest.split_at(seg.len());
            rest = tail;
            head
        })
        .collect())
}

/// Deterministic initialization: the same `(kind, seed)` always yields the
/// same vector. Each model kind draws from its own ChaCha stream.
pub fn init_params(kind: ModelKind, layout: &[ParamSegment], seed: u64) -> Vec<f64> {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(kind as u64 + 1);
    let mut out = Vec::with_capacity(layout.iter().map(ParamSegment::len).sum());
    for seg in layout {
        let dist = match seg.init {
            InitRule::Angle => Uniform::new(0.0, 2.0 * core::f64::consts::PI),
            InitRule::FanIn(fan_in) => {
                let bound = 1.0 / libm::sqrt(fan_in.max(1) as f64);
                Uniform::new_inclusive(-bound, bound)
            }
        }
        .expect("finite bounds");
        out.extend((0..seg.len()).map(|_| dist.sample(&mut rng)));
    }
    out
}

/// Batched forward outputs; `states` holds the per-step hidden state for
/// recurrent models (empty otherwise).
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    pub predictions: Vec<f64>,
    pub states: Vec<Matrix>,
}

/// A sequence-to-one forecaster over windows of OHLC rows.
pub trait SequenceModel {
    fn kind(&self) -> ModelKind;

    fn layout(&self) -> &[ParamSegment];

    fn param_count(&self) -> ParamCount {
        count_parameters(self.layout())
    }

    fn init_params(&self, seed: u64) -> Vec<f64> {
        init_params(self.kind(), self.layout(), seed)
    }

    /// Tape-free forward over a batch of windows. A single window runs on
    /// the single-state simulator path, larger batches on the broadcast path.
    fn forward_trace(&self, params: &[f64], windows: &[&[Row]]) -> Result<ForwardTrace>;

    fn predict(&self, params: &[f64], windows: &[&[Row]]) -> Result<Vec<f64>> {
        Ok(self.forward_trace(params, windows)?.predictions)
    }

    /// Records the forward pass; returns the `B x 1` prediction node and the
    /// parameter leaves in layout order.
    fn record<'p>(&'p self, tape: &mut Tape<'p>, params: &[f64], windows: &[&[Row]]) -> Result<(NodeId, Vec<NodeId>)>;

    /// Mean squared error over the batch and its gradient with respect to
    /// the flat parameter vector.
    fn loss_and_grad(&self, params: &[f64], windows: &[&[Row]], targets: &[f64]) -> Result<(f64, Vec<f64>)> {
        let mut tape = Tape::new();
        let (pred, leaves) = self.record(&mut tape, params, windows)?;
        let target = tape.constant(Matrix::from_vec(targets.len(), 1, targets.to_vec())?);
        let loss = tape.mse_loss(pred, target)?;
        let sizes: Vec<usize> = self.layout().iter().map(ParamSegment::len).collect();
        let grads = tape.backward(loss)?;
        Ok((tape.value(loss).get(0, 0), grads.flatten(&leaves, &sizes)))
    }
}

/// Either model, selected at run time.
#[derive(Debug, Clone)]
pub enum Model {
    Qlstm(Qlstm),
    Qfwp(Qfwp),
}

impl Model {
    /// The parameter-matched configuration of `kind`.
    pub fn standard(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Qlstm => Model::Qlstm(Qlstm::new(QlstmConfig::default()).expect("default config is valid")),
            ModelKind::Qfwp => Model::Qfwp(Qfwp::new()),
        }
    }

    fn inner(&self) -> &dyn SequenceModel {
        match self {
            Model::Qlstm(m) => m,
            Model::Qfwp(m) => m,
        }
    }
}

impl SequenceModel for Model {
    fn kind(&self) -> ModelKind {
        self.inner().kind()
    }

    fn layout(&self) -> &[ParamSegment] {
        self.inner().layout()
    }

    fn forward_trace(&self, params: &[f64], windows: &[&[Row]]) -> Result<ForwardTrace> {
        self.inner().forward_trace(params, windows)
    }

    fn record<'p>(&'p self, tape: &mut Tape<'p>, params: &[f64], windows: &[&[Row]]) -> Result<(NodeId, Vec<NodeId>)> {
        match self {
            Model::Qlstm(m) => m.record(tape, params, windows),
            Model::Qfwp(m) => m.record(tape, params, windows),
        }
    }
}

/// Parameter accounting of a QLSTM/QFWP pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpcReport {
    pub qlstm: ParamCount,
    pub qfwp: ParamCount,
    /// `qlstm.total - qfwp.total`
    pub difference: i64,
    /// `|difference|` as a percentage of the larger model.
    pub relative_percent: f64,
}

/// Checks that the two models' trainable totals differ by at most one.
pub fn epc_alignment(qlstm: &dyn SequenceModel, qfwp: &dyn SequenceModel) -> Result<EpcReport> {
    let (a, b) = (qlstm.param_count(), qfwp.param_count());
    let difference = a.total as i64 - b.total as i64;
    let larger = a.total.max(b.total).max(1) as f64;
    let report = EpcReport {
        qlstm: a,
        qfwp: b,
        difference,
        relative_percent: 100.0 * difference.unsigned_abs() as f64 / larger,
    };
    if difference.abs() > 1 {
        return Err(config_err(format!(
            "EPC violated: qlstm has {} trainable parameters, qfwp {}",
            a.total, b.total
        )));
    }
    Ok(report)
}

/// Validates a batch of windows and returns the shared sequence length.
pub(crate) fn check_windows(windows: &[&[Row]]) -> Result<usize> {
    let Some(first) = windows.first() else {
        return Err(data_err("empty batch"));
    };
    let seq_len = first.len();
    if seq_len == 0 {
        return Err(data_err("windows must have at least one time step"));
    }
    for (b, w) in windows.iter().enumerate() {
        if w.len() != seq_len {
            return Err(data_err(format!(
                "window {b} has {} steps, expected {seq_len}",
                w.len()
            )));
        }
        if w.iter().flatten().any(|v| !v.is_finite()) {
            return Err(data_err(format!("window {b} holds a non-finite value")));
        }
    }
    Ok(seq_len)
}

/// `B x 4` features of time step `t`.
pub(crate) fn step_inputs(windows: &[&[Row]], t: usize) -> Matrix {
    let mut m = Matrix::zeros(windows.len(), crate::data::N_FEATURES);
    for (b, w) in windows.iter().enumerate() {
        m.row_mut(b).copy_from_slice(&w[t]);
    }
    m
}

/// Circuit evaluation for the tape-free path.
pub(crate) fn run_quantum(program: &crate::qsim::CircuitProgram, angles: &Matrix) -> Result<Matrix> {
    if angles.rows() == 1 {
        Ok(Matrix::row_vector(crate::qsim::run_circuit(program, angles.row(0))?))
    } else {
        crate::qsim::run_circuit_batched(program, angles)
    }
}

/// `[a, b]` row-wise, broadcasting a single-row `b`.
pub(crate) fn hcat(a: &Matrix, b: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(a.rows(), a.cols() + b.cols());
    for r in 0..a.rows() {
        let row = out.row_mut(r);
        row[..a.cols()].copy_from_slice(a.row(r));
        row[a.cols()..].copy_from_slice(b.row(if b.rows() == 1 { 0 } else { r }));
    }
    out
}

/// `y = x W^T + b` for a row-major `out x in` weight.
pub(crate) fn affine(x: &Matrix, w: &[f64], bias: &[f64]) -> Matrix {
    let (inp, out) = (x.cols(), bias.len());
    let mut y = Matrix::zeros(x.rows(), out);
    for r in 0..x.rows() {
        let xr = x.row(r);
        for (o, yo) in y.row_mut(r).iter_mut().enumerate() {
            *yo = w[o * inp..(o + 1) * inp]
                .iter()
                .zip(xr)
                .map(|(a, b)| a * b)
                .sum::<f64>()
                + bias[o];
        }
    }
    y
}
