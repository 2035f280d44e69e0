use num_complex::Complex64;
use proptest::prelude::*;
use qbench_core::data::{
    directional_accuracy, make_windows, rmse, synth_ohlc, Normalization, OhlcSeries, SynthParams, SEQ_LEN,
};
use qbench_core::qsim::{run_circuit, run_circuit_batched, CircuitProgram, Gate, ParamRole, StateVector};
use qbench_core::stats::{cliffs_delta, quantile, Quartiles};
use qbench_core::Matrix;

#[derive(Debug, Clone)]
enum G {
    H(usize),
    Ry(usize),
    Cx(usize, usize),
}

fn circuit(max_qubits: usize, max_gates: usize) -> impl Strategy<Value = (usize, Vec<G>)> {
    (1..=max_qubits).prop_flat_map(move |n| {
        let gate = prop_oneof![
            (0..n).prop_map(G::H),
            (0..n).prop_map(G::Ry),
            // offset in 1..n keeps the target distinct; one-qubit circuits get H instead
            (0..n, 1..n.max(2)).prop_map(move |(c, o)| if n < 2 { G::H(0) } else { G::Cx(c, (c + o) % n) }),
        ];
        (Just(n), prop::collection::vec(gate, 0..max_gates))
    })
}

fn program(n: usize, gates: &[G]) -> CircuitProgram {
    let mut slot = 0;
    let gates: Vec<Gate> = gates
        .iter()
        .map(|g| match *g {
            G::H(wire) => Gate::Hadamard { wire },
            G::Ry(wire) => {
                slot += 1;
                Gate::Ry { wire, slot: slot - 1 }
            }
            G::Cx(control, target) => Gate::Cnot { control, target },
        })
        .collect();
    CircuitProgram::new(n, gates, (0..n).collect(), vec![ParamRole::Variational; slot]).unwrap()
}

fn apply(state: &mut StateVector, gates: &[G], angles: &[f64]) {
    let mut k = 0;
    for g in gates {
        match *g {
            G::H(w) => state.apply_hadamard(w).unwrap(),
            G::Ry(w) => {
                state.apply_ry(w, angles[k]).unwrap();
                k += 1;
            }
            G::Cx(c, t) => state.apply_cnot(c, t).unwrap(),
        }
    }
}

fn random_state(n: usize, raw: &[(f64, f64)]) -> StateVector {
    let amps: Vec<Complex64> = raw[..1 << n].iter().map(|&(re, im)| Complex64::new(re, im)).collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    StateVector::from_amplitudes(amps.into_iter().map(|a| a / norm).collect()).unwrap()
}

fn inner(a: &StateVector, b: &StateVector) -> Complex64 {
    a.amplitudes()
        .iter()
        .zip(b.amplitudes())
        .map(|(x, y)| x.conj() * y)
        .sum()
}

proptest! {
    #[test]
    fn gates_preserve_norm((n, gates) in circuit(6, 30), angles in prop::collection::vec(-7.0..7.0f64, 30)) {
        let mut s = StateVector::init_plus(n).unwrap();
        apply(&mut s, &gates, &angles);
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gates_preserve_inner_products(
        (n, gates) in circuit(4, 20),
        angles in prop::collection::vec(-7.0..7.0f64, 20),
        ra in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 16),
        rb in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 16),
    ) {
        prop_assume!(ra.iter().any(|(x, y)| x.abs() + y.abs() > 1e-3));
        prop_assume!(rb.iter().any(|(x, y)| x.abs() + y.abs() > 1e-3));
        let (mut a, mut b) = (random_state(n, &ra), random_state(n, &rb));
        let before = inner(&a, &b);
        apply(&mut a, &gates, &angles);
        apply(&mut b, &gates, &angles);
        prop_assert!((inner(&a, &b) - before).norm() < 1e-12);
    }

    #[test]
    fn batched_matches_serial(
        (n, gates) in circuit(5, 25),
        batch in 1usize..9,
        seed_angles in prop::collection::vec(-7.0..7.0f64, 25 * 8),
    ) {
        let p = program(n, &gates);
        let np = p.n_params();
        let rows: Vec<Vec<f64>> = (0..batch).map(|b| seed_angles[b * 25..b * 25 + np].to_vec()).collect();
        let out = run_circuit_batched(&p, &Matrix::from_rows(&rows).unwrap()).unwrap();
        for (b, row) in rows.iter().enumerate() {
            let serial = run_circuit(&p, row).unwrap();
            for (x, y) in out.row(b).iter().zip(&serial) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cliffs_delta_symmetries(
        x in prop::collection::vec(-5.0..5.0f64, 1..12),
        y in prop::collection::vec(-5.0..5.0f64, 1..12),
    ) {
        let d = cliffs_delta(&x, &y).unwrap();
        prop_assert!((-1.0..=1.0).contains(&d));
        prop_assert_eq!(d, -cliffs_delta(&y, &x).unwrap());
        let f = |v: &[f64]| v.iter().map(|t| t.exp() * 3.0 - 1.0).collect::<Vec<_>>();
        prop_assert_eq!(d, cliffs_delta(&f(&x), &f(&y)).unwrap());
    }

    #[test]
    fn directional_accuracy_is_affine_invariant(
        pairs in prop::collection::vec((0.5..2.0f64, 0.5..2.0f64), 2..40),
        scale in 0.01..100.0f64,
        shift in -10.0..10.0f64,
    ) {
        let (pred, truth): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let map = |v: &[f64]| v.iter().map(|t| scale * t + shift).collect::<Vec<_>>();
        prop_assert_eq!(
            directional_accuracy(&pred, &truth).unwrap(),
            directional_accuracy(&map(&pred), &map(&truth)).unwrap()
        );
    }

    #[test]
    fn rmse_triangle(triples in prop::collection::vec((-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64), 1..30)) {
        let a: Vec<f64> = triples.iter().map(|t| t.0).collect();
        let b: Vec<f64> = triples.iter().map(|t| t.1).collect();
        let c: Vec<f64> = triples.iter().map(|t| t.2).collect();
        let ac = rmse(&a, &c).unwrap();
        prop_assert!(ac >= 0.0);
        prop_assert!(ac <= rmse(&a, &b).unwrap() + rmse(&b, &c).unwrap() + 1e-12);
    }

    #[test]
    fn quartiles_match_sorted_interpolation(xs in prop::collection::vec(-100.0..100.0f64, 1..25)) {
        let mut sorted = xs.clone();
        sorted.sort_by(f64::total_cmp);
        let q = Quartiles::of(&xs).unwrap();
        prop_assert!(q.q1 <= q.median && q.median <= q.q3);
        if xs.len() % 2 == 1 {
            prop_assert_eq!(q.median, sorted[xs.len() / 2]);
        }
        prop_assert_eq!(quantile(&xs, 0.0).unwrap(), sorted[0]);
        prop_assert_eq!(quantile(&xs, 1.0).unwrap(), sorted[xs.len() - 1]);
    }

    #[test]
    fn windows_are_normalized(seed in 0u64..200, joint in any::<bool>()) {
        let mode = if joint { Normalization::Joint } else { Normalization::PerChannel };
        let series = synth_ohlc(seed, 40, SynthParams::default()).unwrap();
        let windows = make_windows(&series, SEQ_LEN, mode).unwrap();
        prop_assert_eq!(windows.len(), 40 - SEQ_LEN);
        for w in &windows {
            for v in w.features.iter().flatten() {
                prop_assert!((-1e-12..=1.0 + 1e-12).contains(v));
            }
            let price = w.target_price();
            prop_assert!((w.denormalize(w.normalize(price)) - price).abs() < 1e-12);
        }
    }
}

#[test]
fn quartiles_of_small_sample() {
    let q = Quartiles::of(&[5.0, 1.0, 4.0, 2.0, 3.0]).unwrap();
    assert_eq!((q.q1, q.median, q.q3), (2.0, 3.0, 4.0));
    // positions 0.75 and 2.25 over [1,2,3,4]
    let q = Quartiles::of(&[4.0, 3.0, 2.0, 1.0]).unwrap();
    assert_eq!((q.q1, q.median, q.q3), (1.75, 2.5, 3.25));
}

#[test]
fn synthetic_prices_stay_positive() {
    for seed in 0..10 {
        let s = synth_ohlc(seed, 10_000, SynthParams::default()).unwrap();
        assert!(s.rows().iter().flatten().all(|v| *v > 0.0), "seed {seed}");
    }
}

#[test]
fn constant_series_is_degenerate() {
    let rows = vec![[1.3; 4]; 8];
    let s = OhlcSeries::new((0..8).collect(), rows).unwrap();
    let w = make_windows(&s, SEQ_LEN, Normalization::Joint).unwrap();
    assert_eq!(w.len(), 3);
    assert!(w[0].features.iter().flatten().all(|v| *v == 0.5));
    assert!((w[0].denormalize(0.5) - 1.3).abs() < 1e-12);
}
