//! OHLC series, rolling windows with min-max scaling, chronological split,
//! and the accuracy metrics reported on the original price scale.

mod metrics;
mod synth;

use alloc::format;
use alloc::vec::Vec;

pub use metrics::{directional_accuracy, rmse};
pub use synth::{synth_ohlc, SynthParams};

use crate::error::{data_err, Result};

/// Number of features per time step (open, high, low, close).
pub const N_FEATURES: usize = 4;

/// Default window length.
pub const SEQ_LEN: usize = 5;

/// One time step of features.
pub type Row = [f64; N_FEATURES];

/// Daily OHLC prices. Dates are day numbers (days since 1970-01-01 for
/// real data, `0..n` for synthetic series).
#[derive(Debug, Clone, PartialEq)]
pub struct OhlcSeries {
    dates: Vec<i64>,
    rows: Vec<Row>,
}

impl OhlcSeries {
    /// Dates must be strictly increasing and prices finite.
    pub fn new(dates: Vec<i64>, rows: Vec<Row>) -> Result<Self> {
        if dates.len() != rows.len() {
            return Err(data_err(format!("{} dates but {} price rows", dates.len(), rows.len())));
        }
        if let Some(i) = dates.windows(2).position(|w| w[1] <= w[0]) {
            return Err(data_err(format!(
                "dates not strictly increasing at row {} (day {} after day {})",
                i + 1,
                dates[i + 1],
                dates[i]
            )));
        }
        if let Some(i) = rows.iter().position(|r| r.iter().any(|v| !v.is_finite())) {
            return Err(data_err(format!("non-finite price at row {i}")));
        }
        Ok(Self { dates, rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dates(&self) -> &[i64] {
        &self.dates
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn close(&self) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().map(|r| r[3])
    }

    /// Row indices violating `low <= min(open, close) <= max(open, close) <= high`.
    pub fn geometry_violations(&self) -> Vec<usize> {
        self.rows
            .iter()
            .enumerate()
            .filter(|(_, &[o, h, l, c])| !(l <= o.min(c) && o.max(c) <= h))
            .map(|(i, _)| i)
            .collect()
    }
}

/// How a window's features are scaled to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    /// One min/max over every value in the window.
    #[default]
    Joint,
    /// Separate min/max per OHLC channel; the target uses the close channel.
    PerChannel,
}

/// A normalized window, its next-day close and the scale that maps both
/// back to prices.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSample {
    pub features: Vec<Row>,
    pub target: f64,
    pub scale_min: f64,
    pub scale_max: f64,
    /// Day of the target close.
    pub target_day: i64,
}

impl WindowSample {
    pub fn denormalize(&self, value: f64) -> f64 {
        denormalize(value, self)
    }

    pub fn normalize(&self, price: f64) -> f64 {
        (price - self.scale_min) / (self.scale_max - self.scale_min)
    }

    /// The target in price units.
    pub fn target_price(&self) -> f64 {
        self.denormalize(self.target)
    }
}

/// `value * (max - min) + min`
pub fn denormalize(value: f64, sample: &WindowSample) -> f64 {
    value * (sample.scale_max - sample.scale_min) + sample.scale_min
}

/// Scale for values spanning `[lo, hi]`. A flat range is centred so the
/// midpoint 0.5 maps back to the flat value.
fn scale_for(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, lo + 0.5)
    }
}

fn normalize_with(v: f64, (lo, hi): (f64, f64)) -> f64 {
    (v - lo) / (hi - lo)
}

/// Rolling windows: window `t` holds rows `t..t+seq_len` and targets the
/// close at `t + seq_len`. Yields `len - seq_len` windows.
pub fn make_windows(series: &OhlcSeries, seq_len: usize, mode: Normalization) -> Result<Vec<WindowSample>> {
    if seq_len == 0 {
        return Err(data_err("window length must be positive"));
    }
    if series.len() < seq_len + 1 {
        return Err(data_err(format!(
            "series of {} days is too short for windows of {} plus a target",
            series.len(),
            seq_len
        )));
    }
    let rows = series.rows();
    let out = (0..series.len() - seq_len)
        .map(|t| {
            let window = &rows[t..t + seq_len];
            let target_price = rows[t + seq_len][3];
            let (features, scale) = match mode {
                Normalization::Joint => {
                    let (lo, hi) = window
                        .iter()
                        .flatten()
                        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                            (lo.min(v), hi.max(v))
                        });
                    let scale = scale_for(lo, hi);
                    let features = window.iter().map(|r| r.map(|v| normalize_with(v, scale))).collect();
                    (features, scale)
                }
                Normalization::PerChannel => {
                    let mut scales = [(0.0, 0.0); N_FEATURES];
                    for (ch, s) in scales.iter_mut().enumerate() {
                        let (lo, hi) = window
                            .iter()
                            .map(|r| r[ch])
                            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
                        *s = scale_for(lo, hi);
                    }
                    let features = window
                        .iter()
                        .map(|r| core::array::from_fn(|ch| normalize_with(r[ch], scales[ch])))
                        .collect();
                    (features, scales[3])
                }
            };
            WindowSample {
                features,
                target: normalize_with(target_price, scale),
                scale_min: scale.0,
                scale_max: scale.1,
                target_day: series.dates()[t + seq_len],
            }
        })
        .collect();
    Ok(out)
}

/// Chronological train/test partition of the windows.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub train: Vec<WindowSample>,
    pub test: Vec<WindowSample>,
}

/// First `floor(0.8 N)` windows train, the rest test.
pub fn split_80_20(mut windows: Vec<WindowSample>) -> Result<Dataset> {
    if windows.len() < 5 {
        return Err(data_err(format!(
            "need at least 5 windows to split, got {}",
            windows.len()
        )));
    }
    let n_train = windows.len() * 4 / 5;
    let test = windows.split_off(n_train);
    Ok(Dataset { train: windows, test })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn series(closes: &[f64]) -> OhlcSeries {
        let rows = closes.iter().map(|&c| [c, c, c, c]).collect();
        OhlcSeries::new((0..closes.len() as i64).collect(), rows).unwrap()
    }

    #[test]
    fn series_invariants() {
        assert!(OhlcSeries::new(vec![0, 2, 1], vec![[1.0; 4]; 3]).is_err());
        assert!(OhlcSeries::new(vec![0, 0], vec![[1.0; 4]; 2]).is_err());
        assert!(OhlcSeries::new(vec![0], vec![[1.0; 4]; 2]).is_err());
        assert!(OhlcSeries::new(vec![0], vec![[1.0, f64::NAN, 1.0, 1.0]]).is_err());
        let s = OhlcSeries::new(vec![0, 1], vec![[1.0, 1.2, 0.9, 1.1], [1.0, 0.95, 0.9, 1.1]]).unwrap();
        assert_eq!(s.geometry_violations(), [1]);
    }

    #[test]
    fn window_count_and_targets() {
        let s = series(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let w = make_windows(&s, 5, Normalization::Joint).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].target_day, 5);
        // features span 1..5, target 6 normalizes to 1.25 (outside [0,1] is kept)
        assert_eq!(w[0].target, 1.25);
        assert_eq!(w[0].features[0], [0.0; 4]);
        assert_eq!(w[0].features[4], [1.0; 4]);

        let long = series(&(0..20).map(|i| 1.0 + 0.01 * i as f64).collect::<Vec<_>>());
        assert_eq!(make_windows(&long, 5, Normalization::Joint).unwrap().len(), 15);
        assert!(make_windows(&series(&[1.0; 5]), 5, Normalization::Joint).is_err());
    }

    #[test]
    fn constant_series_is_degenerate_midpoint() {
        let w = make_windows(&series(&[1.3; 6]), 5, Normalization::Joint).unwrap();
        assert!(w[0].features.iter().flatten().all(|&v| v == 0.5));
        assert_eq!(w[0].denormalize(0.5), 1.3);
        assert_eq!(w[0].target_price(), 1.3);
    }

    #[test]
    fn target_scaling_and_denormalization() {
        // window min 1.0, max 1.2, next close 1.1
        let rows = vec![[1.0, 1.2, 1.0, 1.1]; 5]
            .into_iter()
            .chain([[1.1, 1.1, 1.1, 1.1]])
            .collect();
        let s = OhlcSeries::new((0..6).collect(), rows).unwrap();
        let w = &make_windows(&s, 5, Normalization::Joint).unwrap()[0];
        assert!((w.target - 0.5).abs() < 1e-12);
        assert!((denormalize(0.5, w) - 1.1).abs() < 1e-12);
        assert_eq!(denormalize(0.0, w), 1.0);
        assert!((denormalize(1.0, w) - 1.2).abs() < 1e-15);
    }

    #[test]
    fn per_channel_uses_close_scale_for_target() {
        let rows: Vec<Row> = (0..6)
            .map(|i| [10.0 + i as f64, 20.0 - i as f64, 5.0, 1.0 + 0.1 * i as f64])
            .collect();
        let s = OhlcSeries::new((0..6).collect(), rows).unwrap();
        let w = &make_windows(&s, 5, Normalization::PerChannel).unwrap()[0];
        assert_eq!(w.features[0][0], 0.0);
        assert_eq!(w.features[0][1], 1.0);
        assert_eq!(w.features[0][2], 0.5);
        assert!((w.scale_min - 1.0).abs() < 1e-15 && (w.scale_max - 1.4).abs() < 1e-12);
        assert!((w.target_price() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn split_sizes_and_order() {
        let s = series(&(0..15).map(|i| 1.0 + 0.01 * i as f64).collect::<Vec<_>>());
        let d = split_80_20(make_windows(&s, 5, Normalization::Joint).unwrap()).unwrap();
        assert_eq!((d.train.len(), d.test.len()), (8, 2));
        assert!(d.train.last().unwrap().target_day < d.test[0].target_day);

        let one = make_windows(&series(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]), 5, Normalization::Joint).unwrap();
        assert!(split_80_20(one).is_err());
        assert_eq!(5468 * 4 / 5, 4374);
    }
}
