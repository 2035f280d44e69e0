use alloc::format;

use crate::error::{data_err, Result};

/// Root mean squared error.
pub fn rmse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    if pred.len() != truth.len() || pred.is_empty() {
        return Err(data_err(format!(
            "rmse needs equal non-empty inputs, got {} and {}",
            pred.len(),
            truth.len()
        )));
    }
    let sse: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok(libm::sqrt(sse / pred.len() as f64))
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Percentage of steps whose predicted move has the sign of the true move,
/// over steps where the truth moved. `Ok(None)` when the truth never moves.
pub fn directional_accuracy(pred: &[f64], truth: &[f64]) -> Result<Option<f64>> {
    if pred.len() != truth.len() || pred.len() < 2 {
        return Err(data_err(format!(
            "directional accuracy needs equal inputs of length >= 2, got {} and {}",
            pred.len(),
            truth.len()
        )));
    }
    let (mut moved, mut hits) = (0usize, 0usize);
    for t in 1..truth.len() {
        let dy = sign(truth[t] - truth[t - 1]);
        if dy == 0 {
            continue;
        }
        moved += 1;
        if sign(pred[t] - pred[t - 1]) == dy {
            hits += 1;
        }
    }
    Ok((moved > 0).then(|| 100.0 * hits as f64 / moved as f64))
}
