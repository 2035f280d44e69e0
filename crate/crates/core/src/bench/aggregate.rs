use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::record::{BatchSetting, Component, RunRecord};
use crate::models::ModelKind;
use crate::stats::{cliffs_delta, mean, pareto_frontier, std_dev, wilcoxon_signed_rank, Quartiles};

/// Non-batch / batched time ratios of one component, across seeds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedupSummary {
    pub model: ModelKind,
    pub batch: usize,
    pub component: Component,
    pub quartiles: Quartiles,
    /// Number of paired ratios.
    pub n: usize,
}

/// A batched record with no non-batch partner for its seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IncompleteCell {
    pub model: ModelKind,
    pub batch: BatchSetting,
    pub seed: u64,
}

/// Raw component times of one `(model, batch)` across seeds and
/// repetitions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingSummary {
    pub model: ModelKind,
    pub batch: BatchSetting,
    pub component: Component,
    pub quartiles: Quartiles,
    pub n: usize,
}

/// Median and quartiles of seconds per component. Records without
/// measured timings are skipped.
pub fn timing_summary(records: &[RunRecord]) -> Vec<TimingSummary> {
    let mut groups: BTreeMap<(ModelKind, BatchSetting, Component), Vec<f64>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.timings.is_measured()) {
        for c in Component::ALL {
            groups.entry((r.model, r.batch, c)).or_default().push(r.timings.get(c));
        }
    }
    groups
        .into_iter()
        .filter_map(|((model, batch, component), v)| {
            Some(TimingSummary {
                model,
                batch,
                component,
                quartiles: Quartiles::of(&v).ok()?,
                n: v.len(),
            })
        })
        .collect()
}

/// Per-seed ratios `T_nonbatch / T_batch`, each pairing records of the same
/// model, seed and repetition, summarized as median and quartiles. Records
/// without measured timings are skipped.
pub fn speedup_summary(records: &[RunRecord]) -> (Vec<SpeedupSummary>, Vec<IncompleteCell>) {
    let measured: Vec<&RunRecord> = records.iter().filter(|r| r.timings.is_measured()).collect();
    let baseline: BTreeMap<(ModelKind, u64, u32), &RunRecord> = measured
        .iter()
        .copied()
        .filter(|r| r.batch == BatchSetting::NonBatch)
        .map(|r| ((r.model, r.seed, r.rep), r))
        .collect();
    let mut ratios: BTreeMap<(ModelKind, usize, Component), Vec<f64>> = BTreeMap::new();
    let mut incomplete = Vec::new();
    for r in measured {
        let BatchSetting::Batch(b) = r.batch else { continue };
        let Some(base) = baseline.get(&(r.model, r.seed, r.rep)) else {
            incomplete.push(IncompleteCell {
                model: r.model,
                batch: r.batch,
                seed: r.seed,
            });
            continue;
        };
        debug_assert_eq!(base.seed, r.seed);
        for c in Component::ALL {
            ratios
                .entry((r.model, b, c))
                .or_default()
                .push(base.timings.get(c) / r.timings.get(c));
        }
    }
    let summaries = ratios
        .into_iter()
        .filter_map(|((model, batch, component), v)| {
            Some(SpeedupSummary {
                model,
                batch,
                component,
                quartiles: Quartiles::of(&v).ok()?,
                n: v.len(),
            })
        })
        .collect();
    (summaries, incomplete)
}

/// Mean and standard deviation of accuracy across seeds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracySummary {
    pub model: ModelKind,
    pub batch: BatchSetting,
    pub n: usize,
    pub rmse_mean: f64,
    pub rmse_std: f64,
    pub da_mean: Option<f64>,
    pub da_std: Option<f64>,
}

/// Accuracy is deterministic per seed, so repetitions beyond the first are
/// ignored here.
pub fn accuracy_summary(records: &[RunRecord]) -> Vec<AccuracySummary> {
    let mut groups: BTreeMap<(ModelKind, BatchSetting), Vec<&RunRecord>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.rep == 0) {
        groups.entry((r.model, r.batch)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((model, batch), rs)| {
            let rmse: Vec<f64> = rs.iter().map(|r| r.rmse).collect();
            let da: Vec<f64> = rs.iter().filter_map(|r| r.da).collect();
            AccuracySummary {
                model,
                batch,
                n: rs.len(),
                rmse_mean: mean(&rmse).unwrap_or(f64::NAN),
                rmse_std: std_dev(&rmse).unwrap_or(f64::NAN),
                da_mean: mean(&da),
                da_std: std_dev(&da),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Metric {
    Rmse,
    Da,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Rmse => "rmse",
            Metric::Da => "da",
        }
    }

    fn of(self, r: &RunRecord) -> Option<f64> {
        match self {
            Metric::Rmse => Some(r.rmse),
            Metric::Da => r.da,
        }
    }
}

/// Paired QLSTM-vs-QFWP comparison at one batch setting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatResult {
    pub metric: Metric,
    pub batch: BatchSetting,
    /// Seeds present for both models.
    pub n: usize,
    /// `None` when too few non-zero differences remain.
    pub p_value: Option<f64>,
    /// `delta(qlstm, qfwp)`: positive when QLSTM values are larger.
    pub cliffs_delta: Option<f64>,
}

/// Wilcoxon signed-rank p-value and Cliff's delta per batch setting,
/// pairing the two models by seed.
pub fn compare_models(records: &[RunRecord], metric: Metric) -> Vec<StatResult> {
    // per batch: (qlstm, qfwp) values keyed by seed
    let mut by_batch: BTreeMap<BatchSetting, [BTreeMap<u64, f64>; 2]> = BTreeMap::new();
    for r in records.iter().filter(|r| r.rep == 0) {
        let Some(v) = metric.of(r) else { continue };
        let entry = by_batch.entry(r.batch).or_default();
        match r.model {
            ModelKind::Qlstm => entry[0].insert(r.seed, v),
            ModelKind::Qfwp => entry[1].insert(r.seed, v),
        };
    }
    by_batch
        .into_iter()
        .map(|(batch, [qlstm, qfwp])| {
            let (x, y): (Vec<f64>, Vec<f64>) = qlstm
                .iter()
                .filter_map(|(seed, a)| qfwp.get(seed).map(|b| (*a, *b)))
                .unzip();
            StatResult {
                metric,
                batch,
                n: x.len(),
                p_value: wilcoxon_signed_rank(&x, &y).ok().map(|w| w.p_value),
                cliffs_delta: cliffs_delta(&x, &y).ok(),
            }
        })
        .collect()
}

/// Full-train speedup (median) against test RMSE (mean) for one
/// `(model, batch)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParetoPoint {
    pub model: ModelKind,
    pub batch: usize,
    pub speedup_median: f64,
    pub rmse_mean: f64,
    pub on_frontier: bool,
}

/// One point per batched `(model, batch)` that has both a speedup and an
/// accuracy summary, with frontier flags over the union of both models.
pub fn pareto_points(records: &[RunRecord]) -> Vec<ParetoPoint> {
    let (speedups, _) = speedup_summary(records);
    let accuracy = accuracy_summary(records);
    let mut points: Vec<ParetoPoint> = speedups
        .iter()
        .filter(|s| s.component == Component::FullTrain)
        .filter_map(|s| {
            let acc = accuracy
                .iter()
                .find(|a| a.model == s.model && a.batch == BatchSetting::Batch(s.batch))?;
            Some(ParetoPoint {
                model: s.model,
                batch: s.batch,
                speedup_median: s.quartiles.median,
                rmse_mean: acc.rmse_mean,
                on_frontier: false,
            })
        })
        .collect();
    let coords: Vec<(f64, f64)> = points.iter().map(|p| (p.speedup_median, p.rmse_mean)).collect();
    for (p, f) in points.iter_mut().zip(pareto_frontier(&coords)) {
        p.on_frontier = f;
    }
    points
}
