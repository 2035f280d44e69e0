use std::fs;
use std::path::Path;

use qbench::config::ExperimentConfig;
use qbench::io::{load_ohlc_csv, read_runs_csv, write_runs_csv};
use qbench::plot::{cmd_plot, PlotOutput};
use qbench::report::{cmd_analyze, read_pareto_csv};
use qbench_core::bench::{pareto_points, BatchSetting, RunRecord, Timings};
use qbench_core::models::ModelKind;

fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

#[test]
fn loads_well_formed_ohlc() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        dir.path(),
        "a.csv",
        "Date,Open,High,Low,Close\n2024-01-03,1.10,1.12,1.09,1.11\n2024-01-01,1.0,1.1,0.9,1.05\n2024-01-02,1.05,1.2,1.0,1.10\n",
    );
    let s = load_ohlc_csv(&p).unwrap();
    assert_eq!(s.len(), 3);
    assert!(s.dates().windows(2).all(|w| w[0] < w[1]));
    assert_eq!(s.rows()[0], [1.0, 1.1, 0.9, 1.05]);
}

#[test]
fn ohlc_errors_are_located() {
    let dir = tempfile::tempdir().unwrap();
    let dup = write(
        dir.path(),
        "dup.csv",
        "Date,Open,High,Low,Close\n2024-01-01,1,1,1,1\n2024-01-02,1,1,1,1\n2024-01-01,1,1,1,1\n",
    );
    let err = load_ohlc_csv(&dup).unwrap_err();
    assert!(err.to_string().contains("duplicate date 2024-01-01"), "{err}");
    assert_eq!(err.exit_code(), 2);

    let nan = write(
        dir.path(),
        "nan.csv",
        "Date,Open,High,Low,Close\n2024-01-01,1,1,1,1\n2024-01-02,1,abc,1,1\n",
    );
    let err = load_ohlc_csv(&nan).unwrap_err().to_string();
    assert!(err.contains("line 3") && err.contains("High"), "{err}");

    let empty = write(dir.path(), "empty.csv", "");
    assert_eq!(load_ohlc_csv(&empty).unwrap_err().exit_code(), 2);
    let header_only = write(dir.path(), "h.csv", "Date,Open,High,Low,Close\n");
    assert!(load_ohlc_csv(&header_only)
        .unwrap_err()
        .to_string()
        .contains("no data rows"));
    let wrong = write(dir.path(), "w.csv", "date,o,h,l,c\n2024-01-01,1,1,1,1\n");
    assert!(load_ohlc_csv(&wrong)
        .unwrap_err()
        .to_string()
        .contains("expected header"));
    let inverted = write(
        dir.path(),
        "i.csv",
        "Date,Open,High,Low,Close\n2024-01-01,1,0.9,1.1,1\n",
    );
    assert!(load_ohlc_csv(&inverted).unwrap_err().to_string().contains("line 2"));
}

fn record(model: ModelKind, batch: BatchSetting, seed: u64, t: f64, rmse: f64, da: Option<f64>) -> RunRecord {
    RunRecord {
        model,
        batch,
        seed,
        rep: 0,
        timings: Timings {
            train_forward: t,
            backward: 2.0 * t,
            full_train: 4.0 * t,
            infer_forward: 0.1 * t,
        },
        rmse,
        da,
        equiv_l2: 1e-17,
    }
}

#[test]
fn runs_csv_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let mut rs = vec![
        record(
            ModelKind::Qlstm,
            BatchSetting::NonBatch,
            3,
            0.1 + 0.2,
            1.0 / 3.0,
            Some(100.0 / 7.0),
        ),
        record(ModelKind::Qfwp, BatchSetting::Batch(64), u64::MAX, 1e-300, 0.0, None),
    ];
    rs[1].timings = Timings::UNMEASURED;
    let p = dir.path().join("runs.csv");
    write_runs_csv(&p, &rs).unwrap();
    let back = read_runs_csv(&p).unwrap();
    assert_eq!(back[0], rs[0]);
    assert!(!back[1].timings.is_measured() && back[1].da.is_none() && back[1].seed == u64::MAX);
    let header = fs::read_to_string(&p).unwrap();
    assert!(header.starts_with(
        "model,batch,seed,train_forward_s,backward_s,full_train_s,infer_forward_s,rmse,da,equiv_l2,rep\n"
    ));
}

fn table(dir: &Path, name: &str) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(dir.join(name)).unwrap();
    let mut rows = vec![r.headers().unwrap().iter().map(String::from).collect()];
    rows.extend(r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()));
    rows
}

/// QFWP beats QLSTM on RMSE for every seed and is faster when batched.
fn dominant_grid() -> Vec<RunRecord> {
    let mut rs = Vec::new();
    for model in ModelKind::ALL {
        for batch in [BatchSetting::NonBatch, BatchSetting::Batch(4), BatchSetting::Batch(8)] {
            for seed in 0..10 {
                let t = match batch {
                    BatchSetting::NonBatch => 2.0,
                    BatchSetting::Batch(b) => 2.0 / (1.0 + b as f64 / 8.0),
                };
                let rmse = match model {
                    ModelKind::Qfwp => 0.003,
                    ModelKind::Qlstm => 0.005 + 1e-4 * seed as f64,
                };
                rs.push(record(
                    model,
                    batch,
                    seed,
                    t + 1e-3 * seed as f64,
                    rmse,
                    Some(50.0 + seed as f64),
                ));
            }
        }
    }
    rs
}

#[test]
fn analyze_tables() {
    let dir = tempfile::tempdir().unwrap();
    write_runs_csv(&dir.path().join("runs.csv"), &dominant_grid()).unwrap();
    let summary = cmd_analyze(dir.path()).unwrap();
    assert_eq!(summary.records, 60);

    let acc = table(dir.path(), "accuracy.csv");
    assert_eq!(
        acc[0],
        ["model", "batch", "n", "rmse_mean", "rmse_std", "da_mean", "da_std"]
    );
    let qfwp4 = acc.iter().find(|r| r[0] == "qfwp" && r[1] == "4").unwrap();
    assert_eq!(
        (qfwp4[2].as_str(), qfwp4[3].as_str(), qfwp4[4].as_str()),
        ("10", "0.003", "0")
    );

    let stats = table(dir.path(), "stats.csv");
    assert_eq!(
        stats[0],
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
            "da_delta"
        ]
    );
    for row in &stats[1..] {
        assert_eq!((row[4].as_str(), row[5].as_str()), ("0.002", "1.000"), "{row:?}");
        assert_eq!(row[3], "0.0030 ± 0.0000");
        // identical DA for both models: no test, no effect
        assert_eq!((row[8].as_str(), row[9].as_str()), ("NA", "0.000"));
    }

    let sp = table(dir.path(), "speedups.csv");
    assert_eq!(
        sp[0],
        [
            "model",
            "batch",
            "n",
            "train_forward",
            "backward",
            "full_train",
            "infer_forward"
        ]
    );
    assert_eq!(sp.len(), 5);
    assert!(sp[1][3].starts_with("1.5") && sp[1][3].contains(" ["));

    let tm = table(dir.path(), "timings.csv");
    assert_eq!(
        tm[0],
        [
            "model",
            "batch",
            "n",
            "train_forward_s",
            "backward_s",
            "full_train_s",
            "infer_forward_s"
        ]
    );
    assert_eq!(tm.len(), 7);

    let pts = read_pareto_csv(&dir.path().join("pareto.csv")).unwrap();
    assert_eq!(pts, pareto_points(&dominant_grid()));
    let frontier: Vec<_> = pts
        .iter()
        .filter(|p| p.on_frontier)
        .map(|p| (p.model, p.batch))
        .collect();
    assert_eq!(frontier, [(ModelKind::Qfwp, 8)]);
}

#[test]
fn analyze_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    write_runs_csv(&dir.path().join("runs.csv"), &dominant_grid()).unwrap();
    let names = [
        "accuracy.csv",
        "stats.csv",
        "timings.csv",
        "speedups.csv",
        "pareto.csv",
        "report.json",
    ];
    cmd_analyze(dir.path()).unwrap();
    let first: Vec<Vec<u8>> = names.iter().map(|n| fs::read(dir.path().join(n)).unwrap()).collect();
    cmd_analyze(dir.path()).unwrap();
    for (n, before) in names.iter().zip(first) {
        assert_eq!(fs::read(dir.path().join(n)).unwrap(), before, "{n}");
    }
}

#[test]
fn partial_runs_give_warnings() {
    let dir = tempfile::tempdir().unwrap();
    let rs: Vec<RunRecord> = dominant_grid()
        .into_iter()
        .filter(|r| !(r.model == ModelKind::Qlstm && r.batch == BatchSetting::NonBatch && r.seed == 0))
        .filter(|r| r.seed < 4 || r.model == ModelKind::Qfwp)
        .collect();
    write_runs_csv(&dir.path().join("runs.csv"), &rs).unwrap();
    let summary = cmd_analyze(dir.path()).unwrap();
    assert!(summary.warnings.iter().any(|w| w.contains("incomplete cell")));
    assert!(summary.warnings.iter().any(|w| w.contains("Wilcoxon")));
}

#[test]
fn plot_outputs() {
    let dir = tempfile::tempdir().unwrap();
    write_runs_csv(&dir.path().join("runs.csv"), &dominant_grid()).unwrap();
    assert_eq!(cmd_plot(dir.path()).unwrap(), PlotOutput::Svg { points: 4 });
    let svg = fs::read_to_string(dir.path().join("pareto.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("QLSTM") && svg.contains("QFWP"));

    let single = tempfile::tempdir().unwrap();
    let one: Vec<RunRecord> = dominant_grid()
        .into_iter()
        .filter(|r| r.model == ModelKind::Qfwp && r.batch != BatchSetting::Batch(8))
        .collect();
    write_runs_csv(&single.path().join("runs.csv"), &one).unwrap();
    assert_eq!(cmd_plot(single.path()).unwrap(), PlotOutput::CsvOnly { points: 1 });
    assert!(single.path().join("pareto.csv").exists());
    assert!(!single.path().join("pareto.svg").exists());
}

#[test]
fn config_paths_resolve_against_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        dir.path(),
        "c.toml",
        "output_dir = \"out\"\nmodels = [\"qfwp\"]\nbatches = [4]\nseeds = [1]\n[data]\ncsv = \"prices.csv\"\n",
    );
    let cfg = ExperimentConfig::load(&p).unwrap();
    assert_eq!(cfg.output_dir, dir.path().join("out"));
    assert_eq!(cfg.data.csv.as_deref(), Some(dir.path().join("prices.csv").as_path()));
}
