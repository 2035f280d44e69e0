//! CSV formats: OHLC input and the `runs.csv` record table.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use qbench_core::bench::{BatchSetting, RunRecord, Timings};
use qbench_core::data::{OhlcSeries, Row};
use qbench_core::models::ModelKind;

use crate::error::{data, Error, Result};

const OHLC_HEADER: [&str; 5] = ["Date", "Open", "High", "Low", "Close"];

pub const RUNS_HEADER: [&str; 11] = [
    "model",
    "batch",
    "seed",
    "train_forward_s",
    "backward_s",
    "full_train_s",
    "infer_forward_s",
    "rmse",
    "da",
    "equiv_l2",
    "rep",
];

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| format!(" line {}", p.line())).unwrap_or_default();
    data(format!("{}{line}: {e}", path.display()))
}

/// Reads `Date,Open,High,Low,Close` with ISO dates. Rows are sorted by
/// date; duplicate dates and rows with broken OHLC geometry are rejected.
pub fn load_ohlc_csv(path: &Path) -> Result<OhlcSeries> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(open(path)?);
    let header = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.iter().ne(OHLC_HEADER) {
        return Err(data(format!(
            "{}: expected header {}, found {}",
            path.display(),
            OHLC_HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }

    let mut rows: Vec<(NaiveDate, Row, u64)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let at = |what: &str| data(format!("{} line {line}: {what}", path.display()));
        let date = NaiveDate::parse_from_str(&record[0], "%Y-%m-%d")
            .map_err(|_| at(&format!("invalid date {:?}", &record[0])))?;
        let mut row: Row = [0.0; 4];
        for (k, v) in row.iter_mut().enumerate() {
            *v = record[k + 1]
                .parse()
                .ok()
                .filter(|x: &f64| x.is_finite())
                .ok_or_else(|| at(&format!("{} is not a number: {:?}", OHLC_HEADER[k + 1], &record[k + 1])))?;
        }
        let [open, high, low, close] = row;
        if !(low <= open.min(close) && open.max(close) <= high) {
            return Err(at(&format!(
                "{date}: low <= min(open, close) <= max(open, close) <= high violated"
            )));
        }
        rows.push((date, row, line));
    }
    if rows.is_empty() {
        return Err(data(format!("{}: no data rows", path.display())));
    }
    rows.sort_by_key(|r| r.0);
    if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(data(format!(
            "{}: duplicate date {} (lines {} and {})",
            path.display(),
            w[0].0,
            w[0].2.min(w[1].2),
            w[0].2.max(w[1].2)
        )));
    }
    let dates = rows.iter().map(|r| i64::from(r.0.num_days_from_ce())).collect();
    Ok(OhlcSeries::new(dates, rows.into_iter().map(|r| r.1).collect())?)
}

/// Shortest round-trip representation; non-finite values become empty.
fn num(v: f64) -> String {
    if v.is_finite() {
        v.to_string()
    } else {
        String::new()
    }
}

pub fn write_runs_csv(path: &Path, records: &[RunRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(File::create(path).map_err(|e| Error::io(path, e))?);
    let io = |e: csv::Error| data(format!("{}: {e}", path.display()));
    w.write_record(RUNS_HEADER).map_err(io)?;
    for r in records {
        let t = &r.timings;
        w.write_record([
            r.model.name().to_string(),
            r.batch.label(),
            r.seed.to_string(),
            num(t.train_forward),
            num(t.backward),
            num(t.full_train),
            num(t.infer_forward),
            num(r.rmse),
            r.da.map_or_else(String::new, num),
            num(r.equiv_l2),
            r.rep.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_runs_csv(path: &Path) -> Result<Vec<RunRecord>> {
    let mut reader = csv::Reader::from_reader(open(path)?);
    let header = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.iter().ne(RUNS_HEADER) {
        return Err(data(format!("{}: unexpected header", path.display())));
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let at = |col: usize| {
            data(format!(
                "{} line {line}: bad {} {:?}",
                path.display(),
                RUNS_HEADER[col],
                &record[col]
            ))
        };
        let real = |col: usize| -> Result<f64> {
            match &record[col] {
                "" => Ok(f64::NAN),
                s => s.parse().map_err(|_| at(col)),
            }
        };
        out.push(RunRecord {
            model: ModelKind::parse(&record[0]).ok_or_else(|| at(0))?,
            batch: BatchSetting::parse(&record[1]).ok_or_else(|| at(1))?,
            seed: record[2].parse().map_err(|_| at(2))?,
            timings: Timings {
                train_forward: real(3)?,
                backward: real(4)?,
                full_train: real(5)?,
                infer_forward: real(6)?,
            },
            rmse: real(7)?,
            da: Some(real(8)?).filter(|v| !v.is_nan()),
            equiv_l2: real(9)?,
            rep: record[10].parse().map_err(|_| at(10))?,
        });
    }
    Ok(out)
}

/// Writes `contents` to `path`, mapping failures to an IO error.
pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(contents.as_ref()).map_err(|e| Error::io(path, e))
}
