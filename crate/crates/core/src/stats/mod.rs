//! Order statistics, paired nonparametric tests and Pareto dominance.

mod pareto;
mod wilcoxon;

use alloc::format;
use alloc::vec::Vec;

pub use pareto::pareto_frontier;
pub use wilcoxon::{wilcoxon_signed_rank, WilcoxonResult};

use crate::error::{data_err, Error, Result};

/// Arithmetic mean with a second-pass residual correction.
pub fn mean(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let rough = xs.iter().sum::<f64>() / n;
    Some(rough + xs.iter().map(|x| x - rough).sum::<f64>() / n)
}

/// Sample standard deviation (`n - 1` denominator); zero for one value.
pub fn std_dev(xs: &[f64]) -> Option<f64> {
    let m = mean(xs)?;
    if xs.len() < 2 {
        return Some(0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    Some(libm::sqrt(ss / (xs.len() - 1) as f64))
}

fn sorted(xs: &[f64]) -> Result<Vec<f64>> {
    if xs.is_empty() {
        return Err(data_err("quantile of an empty sample"));
    }
    if xs.iter().any(|x| x.is_nan()) {
        return Err(data_err("quantile of a sample containing NaN"));
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

fn quantile_sorted(v: &[f64], q: f64) -> f64 {
    let h = (v.len() - 1) as f64 * q;
    let lo = libm::floor(h) as usize;
    let hi = (lo + 1).min(v.len() - 1);
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

/// Quantile by linear interpolation between closest ranks: position
/// `(n - 1) q` in the sorted sample.
pub fn quantile(xs: &[f64], q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Config(format!("quantile level {q} outside [0, 1]")));
    }
    Ok(quantile_sorted(&sorted(xs)?, q))
}

/// Median with first and third quartiles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quartiles {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

impl Quartiles {
    pub fn of(xs: &[f64]) -> Result<Self> {
        let v = sorted(xs)?;
        Ok(Self {
            q1: quantile_sorted(&v, 0.25),
            median: quantile_sorted(&v, 0.5),
            q3: quantile_sorted(&v, 0.75),
        })
    }
}

impl core::fmt::Display for Quartiles {
    /// `m [q1, q3]`; precision follows the formatter (default 2).
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let p = f.precision().unwrap_or(2);
        write!(f, "{:.p$} [{:.p$}, {:.p$}]", self.median, self.q1, self.q3)
    }
}

/// Cliff's delta: `(#{x_i > y_j} - #{x_i < y_j}) / (|x| |y|)`.
pub fn cliffs_delta(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.is_empty() || y.is_empty() {
        return Err(data_err("cliff's delta needs two non-empty samples"));
    }
    let mut balance: i64 = 0;
    for a in x {
        for b in y {
            if a > b {
                balance += 1;
            } else if a < b {
                balance -= 1;
            }
        }
    }
    Ok(balance as f64 / (x.len() * y.len()) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn quartiles_of_constant_and_ladder() {
        let q = Quartiles::of(&[2.0; 10]).unwrap();
        assert_eq!((q.q1, q.median, q.q3), (2.0, 2.0, 2.0));
        let q = Quartiles::of(&[5.0, 1.0, 4.0, 2.0, 3.0]).unwrap();
        assert_eq!((q.q1, q.median, q.q3), (2.0, 3.0, 4.0));
        // 10 values 1..=10: positions 2.25, 4.5, 6.75
        let xs: Vec<f64> = (1..=10).map(f64::from).collect();
        let q = Quartiles::of(&xs).unwrap();
        assert_eq!((q.q1, q.median, q.q3), (3.25, 5.5, 7.75));
        assert_eq!(alloc::format!("{q}"), "5.50 [3.25, 7.75]");
        assert_eq!(alloc::format!("{q:.3}"), "5.500 [3.250, 7.750]");
        assert!(Quartiles::of(&[]).is_err());
        assert!(quantile(&[1.0], 1.5).is_err());
    }

    #[test]
    fn mean_and_std() {
        assert_eq!(mean(&[0.003; 10]), Some(0.003));
        assert_eq!(std_dev(&[0.003; 10]), Some(0.0));
        assert_eq!(mean(&[]), None);
        assert!((std_dev(&[1.0, 2.0, 3.0, 4.0]).unwrap() - libm::sqrt(5.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn cliffs_delta_examples() {
        assert_eq!(cliffs_delta(&[3.0, 4.0], &[1.0, 2.0]).unwrap(), 1.0);
        assert_eq!(cliffs_delta(&[1.0; 4], &[1.0; 4]).unwrap(), 0.0);
        assert_eq!(cliffs_delta(&[1.0, 2.0], &[1.5]).unwrap(), 0.0);
        assert!(cliffs_delta(&[], &[1.0]).is_err());
        let x = vec![0.1, 0.5, 0.3];
        let y = vec![0.2, 0.4];
        assert_eq!(cliffs_delta(&x, &y).unwrap(), -cliffs_delta(&y, &x).unwrap());
    }
}
