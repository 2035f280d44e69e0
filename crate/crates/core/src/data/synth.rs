use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{OhlcSeries, Row};
use crate::error::{data_err, Result};

/// Shape of a synthetic daily series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SynthParams {
    /// Geometric random walk of the close: `c_t = c_{t-1} exp(drift + vol * eps)`.
    RandomWalk {
        start: f64,
        drift: f64,
        volatility: f64,
        wick: f64,
    },
    /// `base + amplitude sin(2 pi t / period)` scaled by multiplicative noise.
    Sinusoid {
        base: f64,
        amplitude: f64,
        period: f64,
        noise: f64,
        wick: f64,
    },
}

impl Default for SynthParams {
    /// Roughly EUR/USD-like daily moves.
    fn default() -> Self {
        SynthParams::RandomWalk {
            start: 1.2,
            drift: 0.0,
            volatility: 0.005,
            wick: 0.003,
        }
    }
}

/// Deterministic OHLC series: open is the previous close, high/low extend
/// the open-close range by a multiplicative half-normal wick.
pub fn synth_ohlc(seed: u64, n_days: usize, params: SynthParams) -> Result<OhlcSeries> {
    if n_days < 10 {
        return Err(data_err("synthetic series needs at least 10 days"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = move || -> f64 { StandardNormal.sample(&mut rng) };
    let (first, wick) = match params {
        SynthParams::RandomWalk { start, wick, .. } => (start, wick),
        SynthParams::Sinusoid {
            base, amplitude, wick, ..
        } => {
            if amplitude.abs() >= base {
                return Err(data_err("sinusoid amplitude must stay below the base level"));
            }
            (base, wick)
        }
    };
    if first <= 0.0 {
        return Err(data_err("synthetic prices must start positive"));
    }
    let mut rows: Vec<Row> = Vec::with_capacity(n_days);
    let mut prev = first;
    for t in 0..n_days {
        let close = match params {
            SynthParams::RandomWalk { drift, volatility, .. } => prev * libm::exp(drift + volatility * normal()),
            SynthParams::Sinusoid {
                base,
                amplitude,
                period,
                noise,
                ..
            } => {
                let phase = 2.0 * core::f64::consts::PI * t as f64 / period;
                (base + amplitude * libm::sin(phase)) * libm::exp(noise * normal())
            }
        };
        let open = prev;
        let high = open.max(close) * libm::exp(wick * libm::fabs(normal()));
        let low = open.min(close) * libm::exp(-wick * libm::fabs(normal()));
        rows.push([open, high, low, close]);
        prev = close;
    }
    OhlcSeries::new((0..n_days as i64).collect(), rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        let a = synth_ohlc(7, 100, SynthParams::default()).unwrap();
        assert_eq!(a, synth_ohlc(7, 100, SynthParams::default()).unwrap());
        assert_ne!(a, synth_ohlc(8, 100, SynthParams::default()).unwrap());
        assert!(a.geometry_violations().is_empty());
    }

    #[test]
    fn paper_scale_shape() {
        assert_eq!(synth_ohlc(0, 5468, SynthParams::default()).unwrap().len(), 5468);
        assert!(synth_ohlc(0, 9, SynthParams::default()).is_err());
    }

    #[test]
    fn prices_stay_positive() {
        for seed in 0..10 {
            let s = synth_ohlc(seed, 10_000, SynthParams::default()).unwrap();
            assert!(s.rows().iter().flatten().all(|&v| v > 0.0));
        }
        let sine = SynthParams::Sinusoid {
            base: 1.0,
            amplitude: 0.2,
            period: 30.0,
            noise: 0.01,
            wick: 0.002,
        };
        let s = synth_ohlc(3, 1000, sine).unwrap();
        assert!(s.rows().iter().flatten().all(|&v| v > 0.0));
    }
}
