use alloc::vec::Vec;

use crate::data::Row;
use crate::error::{config_err, Error, Result};
use crate::models::{ForwardTrace, SequenceModel};

/// Largest accepted L2 distance between batched and serial forwards.
pub const EQUIVALENCE_TOLERANCE: f64 = 1e-6;

/// L2 distance between a batched trace and per-sample serial traces over
/// predictions and, when present, every per-step hidden state. Fails with
/// the worst sample when the distance exceeds `tolerance`.
pub fn compare_traces(batched: &ForwardTrace, serial: &[ForwardTrace], tolerance: f64) -> Result<f64> {
    if batched.predictions.len() != serial.len() {
        return Err(config_err("batched and serial traces cover different samples"));
    }
    let mut per_sample: Vec<f64> = Vec::with_capacity(serial.len());
    for (b, s) in serial.iter().enumerate() {
        if s.predictions.len() != 1 || s.states.len() != batched.states.len() {
            return Err(config_err("serial trace shape does not match the batched trace"));
        }
        let dp = batched.predictions[b] - s.predictions[0];
        let mut sq = dp * dp;
        for (bs, ss) in batched.states.iter().zip(&s.states) {
            sq += bs
                .row(b)
                .iter()
                .zip(ss.row(0))
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>();
        }
        per_sample.push(sq);
    }
    let l2 = libm::sqrt(per_sample.iter().sum());
    if l2.is_nan() || l2 > tolerance {
        let (worst_sample, worst) =
            per_sample.iter().enumerate().fold(
                (0, f64::NEG_INFINITY),
                |acc, (i, v)| if *v > acc.1 { (i, *v) } else { acc },
            );
        return Err(Error::Equivalence {
            l2,
            tolerance,
            worst_sample,
            worst_deviation: libm::sqrt(worst),
        });
    }
    Ok(l2)
}

/// Runs `windows` once as a batch and once sample by sample from the same
/// parameters and returns the L2 distance between the two.
pub fn verify_equivalence(model: &dyn SequenceModel, params: &[f64], windows: &[&[Row]]) -> Result<f64> {
    let batched = model.forward_trace(params, windows)?;
    let serial = windows
        .iter()
        .map(|w| model.forward_trace(params, core::slice::from_ref(w)))
        .collect::<Result<Vec<_>>>()?;
    compare_traces(&batched, &serial, EQUIVALENCE_TOLERANCE)
}
