//! Grid execution for `qbench run`.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde_json::json;

use qbench_core::bench::{run_cell, BatchSetting, CellConfig, CellOutcome, Clock, NoClock, RunRecord, Timings};
use qbench_core::data::{make_windows, split_80_20, synth_ohlc, Dataset, Row, SEQ_LEN};
use qbench_core::models::{Model, ModelKind, Qfwp, Qlstm, SequenceModel};

use crate::config::{ExperimentConfig, Mode};
use crate::error::{Error, Result};
use crate::io::{load_ohlc_csv, write_file, write_runs_csv};

/// Monotonic nanoseconds since construction.
#[derive(Debug, Clone, Copy)]
pub struct SystemClock(Instant);

impl SystemClock {
    pub fn new() -> Self {
        SystemClock(Instant::now())
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for SystemClock {
    fn now_ns(&self) -> u64 {
        self.0.elapsed().as_nanos() as u64
    }
}

pub fn load_dataset(cfg: &ExperimentConfig) -> Result<Dataset> {
    let series = match (&cfg.data.csv, &cfg.data.synthetic) {
        (Some(path), _) => load_ohlc_csv(path)?,
        (None, Some(s)) => {
            let series = synth_ohlc(s.seed, s.n_days, s.process.into())?;
            let bad = series.geometry_violations();
            if !bad.is_empty() {
                log::warn!("synthetic series: {} rows violate OHLC ordering", bad.len());
            }
            series
        }
        (None, None) => return Err(crate::error::usage("config field `data`: no source")),
    };
    Ok(split_80_20(make_windows(
        &series,
        SEQ_LEN,
        cfg.data.normalization.into(),
    )?)?)
}

pub fn build_model(kind: ModelKind, cfg: &ExperimentConfig) -> Result<Model> {
    Ok(match kind {
        ModelKind::Qlstm => Model::Qlstm(Qlstm::new(cfg.qlstm.into())?),
        ModelKind::Qfwp => Model::Qfwp(Qfwp::new()),
    })
}

/// One `(model, batch, seed, repetition)` of the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub model: ModelKind,
    pub batch: BatchSetting,
    pub seed: u64,
    pub rep: u32,
}

/// Cells in output order: model, batch, seed, repetition.
pub fn grid_cells(cfg: &ExperimentConfig) -> Vec<Cell> {
    let reps = if cfg.mode == Mode::Timed { cfg.repetitions } else { 1 };
    let mut cells = Vec::new();
    for model in cfg.model_kinds() {
        for batch in cfg.batch_settings() {
            for &seed in &cfg.seeds {
                for rep in 0..reps {
                    cells.push(Cell {
                        model,
                        batch,
                        seed,
                        rep,
                    });
                }
            }
        }
    }
    cells
}

#[derive(Debug, Clone)]
pub struct CellFailure {
    pub cell: Cell,
    pub exit_code: i32,
    pub message: String,
}

#[derive(Debug, Default)]
pub struct GridOutcome {
    pub completed: Vec<(Cell, CellOutcome)>,
    pub failures: Vec<CellFailure>,
}

impl GridOutcome {
    pub fn records(&self) -> Vec<RunRecord> {
        self.completed.iter().map(|(_, o)| o.record.clone()).collect()
    }
}

fn cell_config(cfg: &ExperimentConfig, cell: &Cell) -> CellConfig {
    CellConfig {
        epochs: cfg.epochs,
        optimizer: cfg.optimizer.into(),
        nonbatch_step_every: cfg.nonbatch_step_every,
        shuffle: cfg.shuffle,
        rep: cell.rep,
        equivalence_fault: cfg.equivalence_fault,
        ..CellConfig::new(cell.seed, cell.batch)
    }
}

/// Runs every cell. Timed mode is serial on the calling thread after an
/// untimed warm-up; accuracy-only mode runs cells in parallel and leaves
/// timings unmeasured.
pub fn run_grid(cfg: &ExperimentConfig, data: &Dataset) -> Result<GridOutcome> {
    let models: Vec<Model> = cfg
        .model_kinds()
        .into_iter()
        .map(|k| build_model(k, cfg))
        .collect::<Result<_>>()?;
    let model_of = |kind: ModelKind| models.iter().find(|m| m.kind() == kind).expect("model built");
    let cells = grid_cells(cfg);

    let results: Vec<(Cell, qbench_core::Result<CellOutcome>)> = match cfg.mode {
        Mode::Timed => {
            warm_up(&models, data)?;
            let clock = SystemClock::new();
            cells
                .iter()
                .map(|c| {
                    log::info!("cell {} batch={} seed={} rep={}", c.model, c.batch, c.seed, c.rep);
                    (*c, run_cell(model_of(c.model), data, &cell_config(cfg, c), &clock))
                })
                .collect()
        }
        Mode::AccuracyOnly => cells
            .par_iter()
            .map(|c| {
                let out = run_cell(model_of(c.model), data, &cell_config(cfg, c), &NoClock).map(|mut o| {
                    o.record.timings = Timings::UNMEASURED;
                    o
                });
                (*c, out)
            })
            .collect(),
    };

    let mut outcome = GridOutcome::default();
    for (cell, result) in results {
        match result {
            Ok(o) => outcome.completed.push((cell, o)),
            Err(e) => {
                let e = Error::from(e);
                log::error!(
                    "cell {} batch={} seed={} failed: {e}",
                    cell.model,
                    cell.batch,
                    cell.seed
                );
                outcome.failures.push(CellFailure {
                    cell,
                    exit_code: e.exit_code(),
                    message: e.to_string(),
                });
            }
        }
    }
    Ok(outcome)
}

fn warm_up(models: &[Model], data: &Dataset) -> Result<()> {
    let n = data.train.len().min(16);
    let windows: Vec<&[Row]> = data.train[..n].iter().map(|s| s.features.as_slice()).collect();
    let targets: Vec<f64> = data.train[..n].iter().map(|s| s.target).collect();
    for m in models {
        let params = m.init_params(0);
        m.loss_and_grad(&params, &windows, &targets)?;
        for w in &windows {
            m.loss_and_grad(&params, std::slice::from_ref(w), &targets[..1])?;
        }
    }
    Ok(())
}

/// Files written by `run`.
#[derive(Debug)]
pub struct RunSummary {
    pub dir: PathBuf,
    pub records: usize,
    pub failures: Vec<CellFailure>,
}

fn checkpoint_name(cell: &Cell) -> String {
    format!("{}_b{}_s{}_r{}.json", cell.model, cell.batch, cell.seed, cell.rep)
}

fn checkpoint(cfg_hash: &str, model: &Model, cell: &Cell, outcome: &CellOutcome) -> serde_json::Value {
    let mut offset = 0;
    let segments: Vec<_> = model
        .layout()
        .iter()
        .map(|s| {
            let values = &outcome.train.params[offset..offset + s.len()];
            offset += s.len();
            json!({
                "name": s.name,
                "shape": [s.shape.0, s.shape.1],
                "category": format!("{:?}", s.category).to_lowercase(),
                "values": values,
            })
        })
        .collect();
    json!({
        "model": cell.model.name(),
        "batch": cell.batch.label(),
        "seed": cell.seed,
        "rep": cell.rep,
        "config_hash": cfg_hash,
        "param_count": model.param_count().total,
        "optimizer_steps": outcome.train.optimizer_steps,
        "epoch_losses": outcome.train.epoch_losses,
        "rmse": outcome.record.rmse,
        "da": outcome.record.da,
        "segments": segments,
    })
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// `qbench run`: executes the grid and writes `runs.csv`, checkpoints, the
/// config echo and run metadata into the configured output directory.
pub fn cmd_run(config_path: &Path) -> Result<RunSummary> {
    let cfg = ExperimentConfig::load(config_path)?;
    let data = load_dataset(&cfg)?;
    log::info!("{} train / {} test windows", data.train.len(), data.test.len());
    let dir = cfg.output_dir.clone();
    let ckpt_dir = dir.join("checkpoints");
    create_dir(&ckpt_dir)?;

    let hash = cfg.hash();
    write_file(&dir.join("config.toml"), cfg.to_toml())?;
    let outcome = run_grid(&cfg, &data)?;
    let records = outcome.records();
    write_runs_csv(&dir.join("runs.csv"), &records)?;

    for (cell, o) in &outcome.completed {
        let model = build_model(cell.model, &cfg)?;
        let body = serde_json::to_string_pretty(&checkpoint(&hash, &model, cell, o)).expect("json");
        write_file(&ckpt_dir.join(checkpoint_name(cell)), body)?;
    }

    let failed: Vec<_> = outcome
        .failures
        .iter()
        .map(|f| {
            json!({
                "model": f.cell.model.name(),
                "batch": f.cell.batch.label(),
                "seed": f.cell.seed,
                "rep": f.cell.rep,
                "error": f.message,
            })
        })
        .collect();
    let meta = json!({
        "artifact_version": env!("CARGO_PKG_VERSION"),
        "config_hash": hash,
        "mode": match cfg.mode { Mode::Timed => "timed", Mode::AccuracyOnly => "accuracy_only" },
        "clock": "std::time::Instant (monotonic, ns)",
        "timing_scope": {
            "train_forward": "forward passes with graph recording, first epoch",
            "backward": "reverse passes, first epoch",
            "full_train": "all epochs including optimizer steps",
            "infer_forward": "one test pass after one untimed warm-up pass",
        },
        "normalization": format!("{:?}", cfg.data.normalization).to_lowercase(),
        "train_windows": data.train.len(),
        "test_windows": data.test.len(),
        "records": records.len(),
        "failed_cells": failed,
    });
    write_file(
        &dir.join("metadata.json"),
        serde_json::to_string_pretty(&meta).expect("json"),
    )?;

    Ok(RunSummary {
        dir,
        records: records.len(),
        failures: outcome.failures,
    })
}
