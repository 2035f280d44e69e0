use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{data_err, Error, Result};

/// Outcome of a two-sided paired signed-rank test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WilcoxonResult {
    /// Sum of the ranks of positive differences `x - y`.
    pub w_plus: f64,
    pub p_value: f64,
    /// Pairs left after dropping zero differences.
    pub n: usize,
}

/// Average ranks of `|d|`, doubled so ties stay integral.
pub(crate) fn doubled_ranks(abs_diffs: &[f64]) -> Vec<u64> {
    let mut order: Vec<usize> = (0..abs_diffs.len()).collect();
    order.sort_by(|&a, &b| abs_diffs[a].total_cmp(&abs_diffs[b]));
    let mut ranks = vec![0u64; abs_diffs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && abs_diffs[order[j + 1]] == abs_diffs[order[i]] {
            j += 1;
        }
        // ranks i+1..=j+1 share their mean; doubled that is i + j + 2
        for &k in &order[i..=j] {
            ranks[k] = (i + j + 2) as u64;
        }
        i = j + 1;
    }
    ranks
}

/// Exact two-sided Wilcoxon signed-rank test.
///
/// Zero differences are dropped, tied magnitudes share average ranks. The
/// null distribution of the positive rank sum is the exact distribution
/// over all `2^n` equally likely sign assignments, accumulated one pair at
/// a time. `p = min(1, 2 min(P(W <= w), P(W >= w)))`.
pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64]) -> Result<WilcoxonResult> {
    if x.len() != y.len() {
        return Err(data_err(format!(
            "paired test needs equal lengths, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let diffs: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|d| *d != 0.0).collect();
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(data_err("non-finite difference in paired test"));
    }
    let n = diffs.len();
    if n < 5 {
        return Err(Error::InsufficientData(format!(
            "{n} non-zero paired differences, need at least 5"
        )));
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = doubled_ranks(&abs);
    let observed: u64 = ranks
        .iter()
        .zip(&diffs)
        .filter(|(_, d)| **d > 0.0)
        .map(|(r, _)| r)
        .sum();

    // dist[s] = probability that the doubled positive rank sum equals s
    let total: u64 = ranks.iter().sum();
    let mut dist = vec![0.0f64; total as usize + 1];
    dist[0] = 1.0;
    let mut reach = 0usize;
    for &r in &ranks {
        let r = r as usize;
        for s in (0..=reach).rev() {
            let p = dist[s] * 0.5;
            dist[s] = p;
            dist[s + r] += p;
        }
        reach += r;
    }
    let lower: f64 = dist[..=observed as usize].iter().sum();
    let upper: f64 = dist[observed as usize..].iter().sum();
    Ok(WilcoxonResult {
        w_plus: observed as f64 / 2.0,
        p_value: (2.0 * lower.min(upper)).min(1.0),
        n,
    })
}
