//! `qbench verify`: the self-contained numerical check battery.
//!
//! Each check compares the core implementation against an independent
//! oracle written here: dense Kronecker-product matrices for the
//! simulator, central finite differences for gradients, and brute-force
//! sign-flip enumeration for the Wilcoxon test.

use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qbench_core::autograd::adjoint_expval_grad;
use qbench_core::bench::{steps_per_epoch, verify_equivalence, EQUIVALENCE_TOLERANCE, PAPER_BATCHES};
use qbench_core::data::{make_windows, split_80_20, synth_ohlc, Normalization, Row, SynthParams, SEQ_LEN};
use qbench_core::models::{epc_alignment, Model, ModelKind, Qfwp, Qlstm, QlstmConfig, SequenceModel};
use qbench_core::qsim::{run_circuit, CircuitProgram, Gate, ParamRole, StateVector};
use qbench_core::stats::{cliffs_delta, wilcoxon_signed_rank};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl CheckResult {
    fn new(name: &'static str, started: Instant, outcome: Result<String, String>) -> Self {
        let (passed, detail) = match outcome {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        CheckResult {
            name,
            passed,
            detail,
            elapsed: started.elapsed(),
        }
    }
}

/// Knobs for exercising the detectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub qlstm: QlstmConfig,
    pub gradient_tolerance: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            qlstm: QlstmConfig::default(),
            gradient_tolerance: 1e-4,
        }
    }
}

pub fn run_all(opts: &VerifyOptions) -> Vec<CheckResult> {
    vec![
        check_epc(&opts.qlstm),
        check_dense_oracle(100, 1),
        check_adjoint_vs_fd(opts.gradient_tolerance, 50, 20, 2),
        check_batched_vs_serial(10),
        check_step_counts(),
        check_stats_oracles(200, 3),
    ]
}

/// Parameter totals must be 32 = 28 + 4 and 33 = 0 + 33, one apart.
pub fn check_epc(qlstm: &QlstmConfig) -> CheckResult {
    let t = Instant::now();
    let outcome = (|| {
        let q = Qlstm::new(*qlstm).map_err(|e| e.to_string())?;
        let f = Qfwp::new();
        let (qc, fc) = (q.param_count(), f.param_count());
        let got = [qc.total, qc.quantum, qc.classical, fc.total, fc.quantum, fc.classical];
        if got != [32, 28, 4, 33, 0, 33] {
            return Err(format!(
                "QLSTM {}={}q+{}c, QFWP {}={}q+{}c; expected 32=28q+4c and 33=0q+33c",
                got[0], got[1], got[2], got[3], got[4], got[5]
            ));
        }
        let report = epc_alignment(&q, &f).map_err(|e| e.to_string())?;
        if report.difference != -1 || format!("{:.2}", report.relative_percent) != "3.03" {
            return Err(format!(
                "difference {} ({:.2}%)",
                report.difference, report.relative_percent
            ));
        }
        Ok("QLSTM 32 (28 quantum + 4 classical), QFWP 33, difference -1 (3.03%)".to_string())
    })();
    CheckResult::new("EPC", t, outcome)
}

type Dense = Vec<Vec<Complex64>>;

fn kron(a: &Dense, b: &Dense) -> Dense {
    let (n, m) = (a.len(), b.len());
    let mut out = vec![vec![Complex64::new(0.0, 0.0); n * m]; n * m];
    for (i, ra) in a.iter().enumerate() {
        for (j, x) in ra.iter().enumerate() {
            for (k, rb) in b.iter().enumerate() {
                for (l, y) in rb.iter().enumerate() {
                    out[i * m + k][j * m + l] = x * y;
                }
            }
        }
    }
    out
}

fn real2(m: [[f64; 2]; 2]) -> Dense {
    m.iter()
        .map(|r| r.iter().map(|&v| Complex64::new(v, 0.0)).collect())
        .collect()
}

/// Tensor product over wires, wire 0 leftmost (most significant).
fn on_wires(n: usize, pick: impl Fn(usize) -> Dense) -> Dense {
    (1..n).fold(pick(0), |acc, w| kron(&acc, &pick(w)))
}

fn add(a: &Dense, b: &Dense) -> Dense {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x + y).collect())
        .collect()
}

fn dense_gate(n: usize, g: &Gate, params: &[f64]) -> Dense {
    let id = real2([[1.0, 0.0], [0.0, 1.0]]);
    match *g {
        Gate::Hadamard { wire } => {
            let h = std::f64::consts::FRAC_1_SQRT_2;
            on_wires(n, |w| {
                if w == wire {
                    real2([[h, h], [h, -h]])
                } else {
                    id.clone()
                }
            })
        }
        Gate::Ry { wire, slot } => {
            let (s, c) = (params[slot] / 2.0).sin_cos();
            on_wires(n, |w| {
                if w == wire {
                    real2([[c, -s], [s, c]])
                } else {
                    id.clone()
                }
            })
        }
        Gate::Cnot { control, target } => {
            let p0 = on_wires(n, |w| {
                if w == control {
                    real2([[1.0, 0.0], [0.0, 0.0]])
                } else {
                    id.clone()
                }
            });
            let p1x = on_wires(n, |w| match w {
                _ if w == control => real2([[0.0, 0.0], [0.0, 1.0]]),
                _ if w == target => real2([[0.0, 1.0], [1.0, 0.0]]),
                _ => id.clone(),
            });
            add(&p0, &p1x)
        }
    }
}

fn matvec(m: &Dense, v: &[Complex64]) -> Vec<Complex64> {
    m.iter().map(|r| r.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

fn random_gates(rng: &mut ChaCha8Rng, n: usize, count: usize) -> (Vec<Gate>, usize) {
    let mut slot = 0;
    let gates = (0..count)
        .map(|_| match rng.random_range(0..3) {
            0 => Gate::Hadamard {
                wire: rng.random_range(0..n),
            },
            1 if n > 1 => {
                let control = rng.random_range(0..n);
                let target = (control + rng.random_range(1..n)) % n;
                Gate::Cnot { control, target }
            }
            _ => {
                slot += 1;
                Gate::Ry {
                    wire: rng.random_range(0..n),
                    slot: slot - 1,
                }
            }
        })
        .collect();
    (gates, slot)
}

/// State vector and expectations against dense `2^n x 2^n` products.
pub fn check_dense_oracle(programs: usize, seed: u64) -> CheckResult {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let outcome = (|| {
        for case in 0..programs {
            let n = rng.random_range(2..=3);
            let count = rng.random_range(1..=14);
            let (gates, n_params) = random_gates(&mut rng, n, count);
            let params: Vec<f64> = (0..n_params).map(|_| rng.random_range(-7.0..7.0)).collect();

            let dim = 1 << n;
            let mut dense = vec![Complex64::new(0.0, 0.0); dim];
            dense[0] = Complex64::new(1.0, 0.0);
            for g in &gates {
                dense = matvec(&dense_gate(n, g, &params), &dense);
            }

            let mut state = StateVector::init_zero(n).map_err(|e| e.to_string())?;
            for g in &gates {
                match *g {
                    Gate::Hadamard { wire } => state.apply_hadamard(wire),
                    Gate::Ry { wire, slot } => state.apply_ry(wire, params[slot]),
                    Gate::Cnot { control, target } => state.apply_cnot(control, target),
                }
                .map_err(|e| e.to_string())?;
            }
            for (a, b) in state.amplitudes().iter().zip(&dense) {
                worst = worst.max((a - b).norm());
            }

            let program = CircuitProgram::new(n, gates, (0..n).collect(), vec![ParamRole::Variational; n_params])
                .map_err(|e| e.to_string())?;
            let expvals = run_circuit(&program, &params).map_err(|e| e.to_string())?;
            for (w, e) in expvals.iter().enumerate() {
                let z = on_wires(n, |k| {
                    if k == w {
                        real2([[1.0, 0.0], [0.0, -1.0]])
                    } else {
                        real2([[1.0, 0.0], [0.0, 1.0]])
                    }
                });
                let zpsi = matvec(&z, &dense);
                let oracle: f64 = dense.iter().zip(&zpsi).map(|(a, b)| (a.conj() * b).re).sum();
                worst = worst.max((e - oracle).abs());
            }
            if worst > 1e-10 {
                return Err(format!("program {case}: deviation {worst:e} > 1e-10"));
            }
        }
        Ok(format!("{programs} programs, max deviation {worst:.1e}"))
    })();
    CheckResult::new("dense-oracle", t, outcome)
}

/// `max |a - b| / max |b|`. The denominator is floored at 1e-3: rows whose
/// gradient vanishes identically (an observable no rotation can reach)
/// leave only finite-difference rounding noise, near 1e-11.
fn rel_sup(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(1e-3f64, |m, v| m.max(v.abs()));
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}

const FD_STEP: f64 = 1e-5;

fn central_difference(f: impl Fn(&[f64]) -> Vec<f64>, x: &[f64]) -> Vec<Vec<f64>> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|i| {
            p[i] = x[i] + FD_STEP;
            let up = f(&p);
            p[i] = x[i] - FD_STEP;
            let down = f(&p);
            p[i] = x[i];
            up.iter().zip(&down).map(|(u, d)| (u - d) / (2.0 * FD_STEP)).collect()
        })
        .collect()
}

/// Adjoint Jacobians of random raw circuits and full model gradients
/// against central finite differences.
pub fn check_adjoint_vs_fd(tolerance: f64, circuits: usize, model_instances: u64, seed: u64) -> CheckResult {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let outcome = (|| {
        let mut case = 0;
        while case < circuits {
            let n = rng.random_range(1..=7);
            let count = rng.random_range(1..=30);
            let (gates, n_params) = random_gates(&mut rng, n, count);
            if n_params == 0 {
                continue;
            }
            let params: Vec<f64> = (0..n_params).map(|_| rng.random_range(-7.0..7.0)).collect();
            let observables: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.6)).chain([0]).collect();
            let program = CircuitProgram::new(n, gates, observables, vec![ParamRole::Variational; n_params])
                .map_err(|e| e.to_string())?;
            let adj = adjoint_expval_grad(&program, &params).map_err(|e| e.to_string())?;
            let fd = central_difference(|p| run_circuit(&program, p).expect("valid program"), &params);
            for k in 0..program.observables().len() {
                let fd_k: Vec<f64> = fd.iter().map(|col| col[k]).collect();
                let err = rel_sup(adj.jacobian.row(k), &fd_k);
                worst = worst.max(err);
                if err.is_nan() || err > tolerance {
                    return Err(format!(
                        "circuit {case} ({n} qubits) observable {k}: relative error {err:e}"
                    ));
                }
            }
            case += 1;
        }

        for kind in ModelKind::ALL {
            let model = Model::standard(kind);
            for instance in 0..model_instances {
                let batch = 1 + rng.random_range(0..4);
                let windows: Vec<Vec<Row>> = (0..batch)
                    .map(|_| {
                        (0..SEQ_LEN)
                            .map(|_| std::array::from_fn(|_| rng.random::<f64>()))
                            .collect()
                    })
                    .collect();
                let refs: Vec<&[Row]> = windows.iter().map(Vec::as_slice).collect();
                let targets: Vec<f64> = (0..batch).map(|_| rng.random::<f64>()).collect();
                let params = model.init_params(instance);
                let (_, grad) = model
                    .loss_and_grad(&params, &refs, &targets)
                    .map_err(|e| e.to_string())?;
                let fd: Vec<f64> = central_difference(
                    |p| vec![model.loss_and_grad(p, &refs, &targets).expect("valid inputs").0],
                    &params,
                )
                .into_iter()
                .map(|v| v[0])
                .collect();
                let err = rel_sup(&grad, &fd);
                worst = worst.max(err);
                if err.is_nan() || err > tolerance {
                    return Err(format!("{kind} instance {instance}: relative error {err:e}"));
                }
            }
        }
        Ok(format!(
            "{circuits} circuits, {model_instances} instances per model, max relative error {worst:.1e} (tolerance {tolerance:e})"
        ))
    })();
    CheckResult::new("adjoint-vs-fd", t, outcome)
}

/// Both models, every grid batch size, `seeds` seeds.
pub fn check_batched_vs_serial(seeds: u64) -> CheckResult {
    let t = Instant::now();
    let outcome = (|| {
        let series = synth_ohlc(0, 200, SynthParams::default()).map_err(|e| e.to_string())?;
        let windows = make_windows(&series, SEQ_LEN, Normalization::Joint).map_err(|e| e.to_string())?;
        let mut worst = 0.0f64;
        for kind in ModelKind::ALL {
            let model = Model::standard(kind);
            for seed in 0..seeds {
                let params = model.init_params(seed);
                for b in std::iter::once(1).chain(PAPER_BATCHES) {
                    let start = (seed as usize * 7) % (windows.len() - b);
                    let refs: Vec<&[Row]> = windows[start..start + b]
                        .iter()
                        .map(|w| w.features.as_slice())
                        .collect();
                    let l2 = verify_equivalence(&model, &params, &refs)
                        .map_err(|e| format!("{kind} seed {seed} batch {b}: {e}"))?;
                    let bound = if b == 1 { 1e-12 } else { EQUIVALENCE_TOLERANCE };
                    if l2 > bound {
                        return Err(format!("{kind} seed {seed} batch {b}: L2 {l2:e} > {bound:e}"));
                    }
                    worst = worst.max(l2);
                }
            }
        }
        Ok(format!("max L2 {worst:.1e} (tolerance {EQUIVALENCE_TOLERANCE:e})"))
    })();
    CheckResult::new("batched-vs-serial", t, outcome)
}

/// 5468 windows split to 4374 training samples and their step counts.
pub fn check_step_counts() -> CheckResult {
    let t = Instant::now();
    let outcome = (|| {
        let series = synth_ohlc(0, 5468 + SEQ_LEN, SynthParams::default()).map_err(|e| e.to_string())?;
        let windows = make_windows(&series, SEQ_LEN, Normalization::Joint).map_err(|e| e.to_string())?;
        let n_windows = windows.len();
        let data = split_80_20(windows).map_err(|e| e.to_string())?;
        let n = data.train.len();
        let steps: Vec<usize> = PAPER_BATCHES.iter().map(|&b| steps_per_epoch(n, b)).collect();
        if n_windows != 5468 || n != 4374 || steps != [1094, 547, 274, 137, 69] {
            return Err(format!("{n_windows} windows, {n} train, steps {steps:?}"));
        }
        Ok(format!("{n} train samples: steps {steps:?}"))
    })();
    CheckResult::new("step-counts", t, outcome)
}

/// Two-sided exact p by enumerating every sign assignment.
pub fn wilcoxon_by_enumeration(x: &[f64], y: &[f64]) -> Option<f64> {
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|v| *v != 0.0).collect();
    let n = d.len();
    if n < 5 {
        return None;
    }
    // doubled average rank: (#smaller * 2) + (#equal) + 1
    let ranks: Vec<u64> = d
        .iter()
        .map(|v| {
            let smaller = d.iter().filter(|u| u.abs() < v.abs()).count() as u64;
            let equal = d.iter().filter(|u| u.abs() == v.abs()).count() as u64;
            2 * smaller + equal + 1
        })
        .collect();
    let observed: u64 = d.iter().zip(&ranks).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();
    let (mut le, mut ge) = (0u64, 0u64);
    for mask in 0u64..1 << n {
        let w: u64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        le += u64::from(w <= observed);
        ge += u64::from(w >= observed);
    }
    let total = (1u64 << n) as f64;
    Some((2.0 * le.min(ge) as f64 / total).min(1.0))
}

/// Wilcoxon against enumeration plus the dominance rows of the accuracy table.
pub fn check_stats_oracles(cases: usize, seed: u64) -> CheckResult {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let outcome = (|| {
        for case in 0..cases {
            let n = rng.random_range(1..=10);
            // coarse grid values produce ties and zero differences
            let coarse = rng.random_bool(0.5);
            let draw = |rng: &mut ChaCha8Rng| {
                let v: f64 = rng.random_range(-1.0..1.0);
                if coarse {
                    (v * 4.0).round() / 4.0
                } else {
                    v
                }
            };
            let x: Vec<f64> = (0..n).map(|_| draw(&mut rng)).collect();
            let y: Vec<f64> = (0..n).map(|_| draw(&mut rng)).collect();
            let got = wilcoxon_signed_rank(&x, &y).ok().map(|r| r.p_value);
            let want = wilcoxon_by_enumeration(&x, &y);
            if got != want {
                return Err(format!("case {case} (n={n}): {got:?} vs enumeration {want:?}"));
            }
        }

        let qfwp: Vec<f64> = (0..10).map(|i| 0.0030 + 0.0001 * i as f64).collect();
        let dominated: Vec<f64> = qfwp
            .iter()
            .enumerate()
            .map(|(i, v)| v + 0.001 * (i + 1) as f64)
            .collect();
        let p_full = wilcoxon_signed_rank(&dominated, &qfwp)
            .map_err(|e| e.to_string())?
            .p_value;
        let delta = cliffs_delta(&dominated, &qfwp).map_err(|e| e.to_string())?;
        let mut one_exception = dominated.clone();
        one_exception[0] = qfwp[0] - 0.0005;
        let p_one = wilcoxon_signed_rank(&one_exception, &qfwp)
            .map_err(|e| e.to_string())?
            .p_value;
        if p_full != 2.0 / 1024.0 || format!("{p_full:.3}") != "0.002" || delta != 1.0 {
            return Err(format!("full dominance: p {p_full}, delta {delta}"));
        }
        if p_one != 4.0 / 1024.0 || format!("{p_one:.3}") != "0.004" {
            return Err(format!("one exception: p {p_one}"));
        }
        if wilcoxon_signed_rank(&qfwp, &qfwp).is_ok() {
            return Err("identical samples did not report insufficient data".into());
        }
        Ok(format!(
            "{cases} enumeration cases; dominance p = {p_full:.5}, delta = {delta:.3}; one exception p = {p_one:.5}"
        ))
    })();
    CheckResult::new("stats-oracles", t, outcome)
}

pub fn format_table(results: &[CheckResult]) -> String {
    let mut out = String::new();
    for r in results {
        out.push_str(&format!(
            "{:<18} {}  {:>8.2}s  {}\n",
            r.name,
            if r.passed { "PASS" } else { "FAIL" },
            r.elapsed.as_secs_f64(),
            r.detail
        ));
    }
    out
}
