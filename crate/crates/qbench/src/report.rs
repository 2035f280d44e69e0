//! `qbench analyze`: report tables derived from `runs.csv` alone.

use std::collections::BTreeSet;
use std::path::Path;

use qbench_core::bench::{
    accuracy_summary, compare_models, pareto_points, speedup_summary, timing_summary, BatchSetting, Component, Metric,
    ParetoPoint, RunRecord,
};
use qbench_core::models::ModelKind;
use sha2::{Digest, Sha256};

use crate::error::{data, Error, Result};
use crate::io::{read_runs_csv, write_file};

const NA: &str = "NA";

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|e| data(format!("{}: {e}", path.display())))
}

fn finish(mut w: csv::Writer<std::fs::File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

fn row<I, S>(w: &mut csv::Writer<std::fs::File>, path: &Path, fields: I) -> Result<()>
where
    I: IntoIterator<Item = S>,
    S: AsRef<[u8]>,
{
    w.write_record(fields)
        .map_err(|e| data(format!("{}: {e}", path.display())))
}

fn opt(v: Option<f64>, prec: usize) -> String {
    v.filter(|x| x.is_finite())
        .map_or_else(|| NA.to_string(), |x| format!("{x:.prec$}"))
}

fn plus_minus(mean: Option<f64>, std: Option<f64>, prec: usize) -> String {
    match (mean.filter(|m| m.is_finite()), std.filter(|s| s.is_finite())) {
        (Some(m), Some(s)) => format!("{m:.prec$} ± {s:.prec$}"),
        (Some(m), None) => format!("{m:.prec$}"),
        _ => NA.to_string(),
    }
}

/// What `analyze` wrote and what it had to skip.
#[derive(Debug, Default)]
pub struct AnalyzeSummary {
    pub records: usize,
    pub warnings: Vec<String>,
}

/// Writes `accuracy.csv`, `stats.csv`, `timings.csv`, `speedups.csv` and
/// `pareto.csv` into `dir`. Output depends only on `runs.csv`.
pub fn cmd_analyze(dir: &Path) -> Result<AnalyzeSummary> {
    let records = read_runs_csv(&dir.join("runs.csv"))?;
    if records.is_empty() {
        return Err(data(format!("{}: runs.csv has no records", dir.display())));
    }
    let mut summary = AnalyzeSummary {
        records: records.len(),
        ..Default::default()
    };
    write_accuracy(dir, &records)?;
    write_stats(dir, &records, &mut summary.warnings)?;
    write_timings(dir, &records)?;
    write_speedups(dir, &records, &mut summary.warnings)?;
    write_pareto_csv(&dir.join("pareto.csv"), &pareto_points(&records))?;
    if records.iter().all(|r| !r.timings.is_measured()) {
        summary
            .warnings
            .push("no measured timings: timing, speedup and Pareto tables are empty".into());
    }
    for w in &summary.warnings {
        log::warn!("{w}");
    }
    write_report_meta(dir, &summary)?;
    Ok(summary)
}

/// Ties the tables to their inputs: the run's config hash (when the run
/// metadata is present) and the SHA-256 of `runs.csv`.
fn write_report_meta(dir: &Path, summary: &AnalyzeSummary) -> Result<()> {
    let runs = dir.join("runs.csv");
    let bytes = std::fs::read(&runs).map_err(|e| Error::io(&runs, e))?;
    let config_hash = std::fs::read_to_string(dir.join("metadata.json"))
        .ok()
        .and_then(|t| serde_json::from_str::<serde_json::Value>(&t).ok())
        .and_then(|v| v.get("config_hash").cloned())
        .unwrap_or(serde_json::Value::Null);
    let meta = serde_json::json!({
        "artifact_version": env!("CARGO_PKG_VERSION"),
        "config_hash": config_hash,
        "runs_sha256": hex::encode(Sha256::digest(&bytes)),
        "records": summary.records,
        "quartiles": "linear interpolation at position (n - 1) q of the sorted sample",
        "speedup": "per seed and repetition T_nonbatch / T_batch, then median [Q1, Q3]",
        "wilcoxon": "exact two-sided, zero differences dropped, average ranks for ties",
        "warnings": summary.warnings,
    });
    write_file(
        &dir.join("report.json"),
        serde_json::to_string_pretty(&meta).expect("json"),
    )
}

fn write_accuracy(dir: &Path, records: &[RunRecord]) -> Result<()> {
    let path = dir.join("accuracy.csv");
    let mut w = writer(&path)?;
    row(
        &mut w,
        &path,
        ["model", "batch", "n", "rmse_mean", "rmse_std", "da_mean", "da_std"],
    )?;
    for a in accuracy_summary(records) {
        let real = |v: f64| if v.is_finite() { v.to_string() } else { NA.into() };
        row(
            &mut w,
            &path,
            [
                a.model.name().to_string(),
                a.batch.label(),
                a.n.to_string(),
                real(a.rmse_mean),
                real(a.rmse_std),
                a.da_mean.map_or(NA.into(), real),
                a.da_std.map_or(NA.into(), real),
            ],
        )?;
    }
    finish(w, &path)
}

/// One row per batch setting: both models' mean ± std with the paired
/// Wilcoxon p-value and Cliff's delta for RMSE and DA.
fn write_stats(dir: &Path, records: &[RunRecord], warnings: &mut Vec<String>) -> Result<()> {
    let path = dir.join("stats.csv");
    let mut w = writer(&path)?;
    row(
        &mut w,
        &path,
        [
            "batch",
            "n",
            "qlstm_rmse",
            "qfwp_rmse",
            "rmse_p",
            "rmse_delta",
            "qlstm_da",
            "qfwp_da",
            "da_p",
            "da_delta",
        ],
    )?;
    let acc = accuracy_summary(records);
    let rmse = compare_models(records, Metric::Rmse);
    let da = compare_models(records, Metric::Da);
    let batches: BTreeSet<BatchSetting> = acc.iter().map(|a| a.batch).collect();
    for batch in batches {
        let find = |m: ModelKind| acc.iter().find(|a| a.model == m && a.batch == batch);
        let (q, f) = (find(ModelKind::Qlstm), find(ModelKind::Qfwp));
        let r = rmse.iter().find(|s| s.batch == batch);
        let d = da.iter().find(|s| s.batch == batch);
        if r.is_none_or(|s| s.p_value.is_none()) {
            warnings.push(format!("batch {batch}: too few paired seeds for a Wilcoxon test"));
        }
        row(
            &mut w,
            &path,
            [
                batch.label(),
                r.map_or(0, |s| s.n).to_string(),
                plus_minus(q.map(|a| a.rmse_mean), q.map(|a| a.rmse_std), 4),
                plus_minus(f.map(|a| a.rmse_mean), f.map(|a| a.rmse_std), 4),
                opt(r.and_then(|s| s.p_value), 3),
                opt(r.and_then(|s| s.cliffs_delta), 3),
                plus_minus(q.and_then(|a| a.da_mean), q.and_then(|a| a.da_std), 2),
                plus_minus(f.and_then(|a| a.da_mean), f.and_then(|a| a.da_std), 2),
                opt(d.and_then(|s| s.p_value), 3),
                opt(d.and_then(|s| s.cliffs_delta), 3),
            ],
        )?;
    }
    finish(w, &path)
}

fn component_columns(suffix: &str) -> Vec<String> {
    Component::ALL.iter().map(|c| format!("{}{suffix}", c.name())).collect()
}

fn write_timings(dir: &Path, records: &[RunRecord]) -> Result<()> {
    let path = dir.join("timings.csv");
    let mut w = writer(&path)?;
    let mut header = vec!["model".to_string(), "batch".into(), "n".into()];
    header.extend(component_columns("_s"));
    row(&mut w, &path, &header)?;
    let summary = timing_summary(records);
    let keys: BTreeSet<(ModelKind, BatchSetting)> = summary.iter().map(|s| (s.model, s.batch)).collect();
    for (model, batch) in keys {
        let mut fields = vec![model.name().to_string(), batch.label()];
        let cells: Vec<_> = Component::ALL
            .iter()
            .map(|&c| {
                summary
                    .iter()
                    .find(|s| s.model == model && s.batch == batch && s.component == c)
            })
            .collect();
        fields.push(cells[0].map_or(0, |s| s.n).to_string());
        fields.extend(
            cells
                .iter()
                .map(|s| s.map_or(NA.into(), |s| format!("{:.6}", s.quartiles))),
        );
        row(&mut w, &path, &fields)?;
    }
    finish(w, &path)
}

fn write_speedups(dir: &Path, records: &[RunRecord], warnings: &mut Vec<String>) -> Result<()> {
    let path = dir.join("speedups.csv");
    let mut w = writer(&path)?;
    let mut header = vec!["model".to_string(), "batch".into(), "n".into()];
    header.extend(component_columns(""));
    row(&mut w, &path, &header)?;
    let (summary, incomplete) = speedup_summary(records);
    for c in &incomplete {
        warnings.push(format!(
            "incomplete cell: {} batch {} seed {} has no non-batch partner",
            c.model, c.batch, c.seed
        ));
    }
    let keys: BTreeSet<(ModelKind, usize)> = summary.iter().map(|s| (s.model, s.batch)).collect();
    for (model, batch) in keys {
        let cells: Vec<_> = Component::ALL
            .iter()
            .map(|&c| {
                summary
                    .iter()
                    .find(|s| s.model == model && s.batch == batch && s.component == c)
            })
            .collect();
        let mut fields = vec![model.name().to_string(), batch.to_string()];
        fields.push(cells[0].map_or(0, |s| s.n).to_string());
        fields.extend(
            cells
                .iter()
                .map(|s| s.map_or(NA.into(), |s| format!("{:.2}", s.quartiles))),
        );
        row(&mut w, &path, &fields)?;
    }
    finish(w, &path)
}

pub const PARETO_HEADER: [&str; 5] = ["model", "batch", "speedup_median", "rmse_mean", "on_frontier"];

pub fn write_pareto_csv(path: &Path, points: &[ParetoPoint]) -> Result<()> {
    let mut w = writer(path)?;
    row(&mut w, path, PARETO_HEADER)?;
    for p in points {
        row(
            &mut w,
            path,
            [
                p.model.name().to_string(),
                p.batch.to_string(),
                p.speedup_median.to_string(),
                p.rmse_mean.to_string(),
                p.on_frontier.to_string(),
            ],
        )?;
    }
    finish(w, path)
}

pub fn read_pareto_csv(path: &Path) -> Result<Vec<ParetoPoint>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| data(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| data(format!("{}: {e}", path.display())))?;
        let bad = || data(format!("{} line {}: malformed pareto row", path.display(), i + 2));
        if rec.len() != PARETO_HEADER.len() {
            return Err(bad());
        }
        out.push(ParetoPoint {
            model: ModelKind::parse(&rec[0]).ok_or_else(bad)?,
            batch: rec[1].parse().map_err(|_| bad())?,
            speedup_median: rec[2].parse().map_err(|_| bad())?,
            rmse_mean: rec[3].parse().map_err(|_| bad())?,
            on_frontier: rec[4].parse().map_err(|_| bad())?,
        });
    }
    Ok(out)
}
