use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::equivalence::{compare_traces, EQUIVALENCE_TOLERANCE};
use super::record::{BatchSetting, RunRecord, Timings};
use crate::autograd::Tape;
use crate::data::{directional_accuracy, rmse, Dataset, Row, WindowSample};
use crate::error::{config_err, data_err, Result};
use crate::matrix::Matrix;
use crate::models::{ForwardTrace, Model, Optimizer, OptimizerKind, ParamSegment, SequenceModel};

/// Monotonic time source in nanoseconds.
pub trait Clock {
    fn now_ns(&self) -> u64;
}

/// Clock that never advances; used when timings are not wanted.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn now_ns(&self) -> u64 {
        0
    }
}

/// Optimizer updates per epoch: `ceil(n / group)`, so a short final batch
/// still gets its own step.
pub fn steps_per_epoch(n_samples: usize, group: usize) -> usize {
    n_samples.div_ceil(group.max(1))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub optimizer: OptimizerKind,
    pub batch: BatchSetting,
    /// Non-batch arm only: samples per optimizer step (gradients averaged).
    pub nonbatch_step_every: usize,
    /// Reshuffle the training windows every epoch.
    pub shuffle: bool,
    pub shuffle_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 2,
            optimizer: OptimizerKind::default(),
            batch: BatchSetting::NonBatch,
            nonbatch_step_every: 1,
            shuffle: true,
            shuffle_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub params: Vec<f64>,
    /// Forward passes (graph recording included) during the first epoch.
    pub train_forward_ns: u64,
    /// Reverse passes during the first epoch.
    pub backward_ns: u64,
    /// Every epoch, optimizer steps included.
    pub full_train_ns: u64,
    pub optimizer_steps: u64,
    /// Mean training loss per epoch on the normalized scale.
    pub epoch_losses: Vec<f64>,
}

fn window_refs<'a>(samples: &'a [WindowSample], idx: &[usize]) -> Vec<&'a [Row]> {
    idx.iter().map(|&i| samples[i].features.as_slice()).collect()
}

/// Fixed-epoch training. Batched arms take one step per batch; the
/// non-batch arm runs forward and backward per sample and steps every
/// `nonbatch_step_every` samples.
pub fn train(
    model: &dyn SequenceModel,
    mut params: Vec<f64>,
    samples: &[WindowSample],
    cfg: &TrainConfig,
    clock: &dyn Clock,
) -> Result<TrainReport> {
    if samples.is_empty() {
        return Err(data_err("no training samples"));
    }
    if cfg.epochs == 0 {
        return Err(config_err("epochs must be positive"));
    }
    let (group, sub) = match cfg.batch {
        BatchSetting::NonBatch => (cfg.nonbatch_step_every.max(1), 1),
        BatchSetting::Batch(0) => return Err(config_err("batch size must be positive")),
        BatchSetting::Batch(b) => (b, b),
    };
    let sizes: Vec<usize> = model.layout().iter().map(ParamSegment::len).collect();
    let mut optimizer = Optimizer::new(cfg.optimizer, params.len());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.shuffle_seed);
    rng.set_stream(0x5348_5546);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut grad_acc = vec![0.0; params.len()];
    let (mut fwd_ns, mut bwd_ns) = (0u64, 0u64);
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);

    let full_start = clock.now_ns();
    for epoch in 0..cfg.epochs {
        if cfg.shuffle {
            order.shuffle(&mut rng);
        }
        let mut loss_sum = 0.0;
        for step in order.chunks(group) {
            grad_acc.iter_mut().for_each(|g| *g = 0.0);
            for part in step.chunks(sub) {
                let windows = window_refs(samples, part);
                let targets: Vec<f64> = part.iter().map(|&i| samples[i].target).collect();

                let t0 = clock.now_ns();
                let mut tape = Tape::new();
                let (pred, leaves) = model.record(&mut tape, &params, &windows)?;
                let target = tape.constant(Matrix::from_vec(targets.len(), 1, targets)?);
                let loss = tape.mse_loss(pred, target)?;
                let t1 = clock.now_ns();
                let grads = tape.backward(loss)?.flatten(&leaves, &sizes);
                let t2 = clock.now_ns();
                if epoch == 0 {
                    fwd_ns += t1.saturating_sub(t0);
                    bwd_ns += t2.saturating_sub(t1);
                }

                let weight = part.len() as f64 / step.len() as f64;
                for (a, g) in grad_acc.iter_mut().zip(&grads) {
                    *a += weight * g;
                }
                loss_sum += tape.value(loss).get(0, 0) * part.len() as f64;
            }
            optimizer.step(&mut params, &grad_acc);
        }
        epoch_losses.push(loss_sum / samples.len() as f64);
    }
    let full_train_ns = clock.now_ns().saturating_sub(full_start);

    Ok(TrainReport {
        params,
        train_forward_ns: fwd_ns,
        backward_ns: bwd_ns,
        full_train_ns,
        optimizer_steps: optimizer.steps(),
        epoch_losses,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// Predictions in price units, chronological.
    pub predictions: Vec<f64>,
    pub truth: Vec<f64>,
    pub rmse: f64,
    pub da: Option<f64>,
    /// Timed test pass after one untimed warm-up pass.
    pub infer_ns: u64,
}

fn predict_all(model: &dyn SequenceModel, params: &[f64], samples: &[WindowSample], batch: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(samples.len());
    for chunk in samples.chunks(batch.max(1)) {
        let windows: Vec<&[Row]> = chunk.iter().map(|s| s.features.as_slice()).collect();
        out.extend(model.predict(params, &windows)?);
    }
    Ok(out)
}

/// Gradient-free test pass; metrics are on the denormalized scale.
pub fn evaluate(
    model: &dyn SequenceModel,
    params: &[f64],
    samples: &[WindowSample],
    batch: usize,
    clock: &dyn Clock,
) -> Result<EvalReport> {
    if samples.len() < 2 {
        return Err(data_err("evaluation needs at least 2 test samples"));
    }
    predict_all(model, params, samples, batch)?;
    let t0 = clock.now_ns();
    let normalized = predict_all(model, params, samples, batch)?;
    let infer_ns = clock.now_ns().saturating_sub(t0);

    let predictions: Vec<f64> = normalized.iter().zip(samples).map(|(p, s)| s.denormalize(*p)).collect();
    let truth: Vec<f64> = samples.iter().map(WindowSample::target_price).collect();
    Ok(EvalReport {
        rmse: rmse(&predictions, &truth)?,
        da: directional_accuracy(&predictions, &truth)?,
        predictions,
        truth,
        infer_ns,
    })
}

/// Everything that defines one grid cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellConfig {
    pub seed: u64,
    pub batch: BatchSetting,
    pub epochs: usize,
    pub optimizer: OptimizerKind,
    pub nonbatch_step_every: usize,
    pub shuffle: bool,
    pub rep: u32,
    /// Test hook: added to the first batched prediction before the
    /// equivalence comparison.
    pub equivalence_fault: Option<f64>,
}

impl CellConfig {
    pub fn new(seed: u64, batch: BatchSetting) -> Self {
        Self {
            seed,
            batch,
            epochs: 2,
            optimizer: OptimizerKind::default(),
            nonbatch_step_every: 1,
            shuffle: true,
            rep: 0,
            equivalence_fault: None,
        }
    }
}

/// Result of one grid cell: the record plus the trained parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct CellOutcome {
    pub record: RunRecord,
    pub train: TrainReport,
}

/// Initializes from the seed, checks batched/serial equivalence on the
/// first batch of training windows, trains, and evaluates on the test set.
pub fn run_cell(model: &Model, data: &Dataset, cfg: &CellConfig, clock: &dyn Clock) -> Result<CellOutcome> {
    let params = model.init_params(cfg.seed);
    let b = cfg.batch.size().min(data.train.len());
    let probe: Vec<&[Row]> = data.train[..b].iter().map(|s| s.features.as_slice()).collect();
    let mut batched: ForwardTrace = model.forward_trace(&params, &probe)?;
    if let Some(fault) = cfg.equivalence_fault {
        batched.predictions[0] += fault;
    }
    let serial = probe
        .iter()
        .map(|w| model.forward_trace(&params, core::slice::from_ref(w)))
        .collect::<Result<Vec<_>>>()?;
    let equiv_l2 = compare_traces(&batched, &serial, EQUIVALENCE_TOLERANCE)?;

    let train_cfg = TrainConfig {
        epochs: cfg.epochs,
        optimizer: cfg.optimizer,
        batch: cfg.batch,
        nonbatch_step_every: cfg.nonbatch_step_every,
        shuffle: cfg.shuffle,
        shuffle_seed: cfg.seed,
    };
    let trained = train(model, params, &data.train, &train_cfg, clock)?;
    let eval = evaluate(model, &trained.params, &data.test, cfg.batch.size(), clock)?;
    let secs = |ns: u64| ns as f64 * 1e-9;
    let record = RunRecord {
        model: model.kind(),
        batch: cfg.batch,
        seed: cfg.seed,
        rep: cfg.rep,
        timings: Timings {
            train_forward: secs(trained.train_forward_ns),
            backward: secs(trained.backward_ns),
            full_train: secs(trained.full_train_ns),
            infer_forward: secs(eval.infer_ns),
        },
        rmse: eval.rmse,
        da: eval.da,
        equiv_l2,
    };
    Ok(CellOutcome { record, train: trained })
}
