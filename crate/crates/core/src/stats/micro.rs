//! Market microstructure facts: trade durations, bid-ask bounce, spread
//! versus depth and volume versus volatility.

use serde::{Deserialize, Serialize};

use super::acf::{sample_acf, sample_ccf, AcfResult, CcfResult};
use super::returns::{event_time_prices, log_returns};
use crate::engine::TickSeries;
use crate::error::{Error, Result};

pub const DEFAULT_BIN: usize = 30;

/// Durations between distinct trade times; equal times are merged first.
pub fn durations(times: &[u64]) -> Result<Vec<u64>> {
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidInput("trade times must be sorted".into()));
    }
    let mut unique = times.to_vec();
    unique.dedup();
    Ok(unique.windows(2).map(|w| w[1] - w[0]).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DurationFacts {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    /// Overdispersion ratio `std / mean`.
    pub dispersion: f64,
    /// `None` when the ACF is undefined (constant or short series).
    pub acf: Option<AcfResult>,
    pub acf_squared: Option<AcfResult>,
}

/// Dispersion ratio plus ACFs of durations and squared durations up to
/// `max_lag`.
pub fn duration_facts(d: &[u64], max_lag: usize) -> Result<DurationFacts> {
    if d.is_empty() {
        return Err(Error::InsufficientData("no durations".into()));
    }
    let x: Vec<f64> = d.iter().map(|&v| v as f64).collect();
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    if !(mean > 0.0) {
        return Err(Error::Degenerate("zero mean duration".into()));
    }
    let std = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let acfs = x.len() >= 30;
    let sq: Vec<f64> = x.iter().map(|v| v * v).collect();
    Ok(DurationFacts {
        n: x.len(),
        mean,
        std,
        min: x.iter().copied().fold(f64::INFINITY, f64::min),
        max: x.iter().copied().fold(0.0, f64::max),
        dispersion: std / mean,
        acf: acfs.then(|| sample_acf(&x, max_lag, 2.0, 0).ok()).flatten(),
        acf_squared: acfs.then(|| sample_acf(&sq, max_lag, 2.0, 0).ok()).flatten(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpreadFacts {
    /// Lag-1 autocorrelation of transaction-price returns.
    pub bounce: f64,
    pub bounce_bound: f64,
    /// Spread against resting bid depth.
    pub spread_bid: CcfResult,
    /// Spread against resting ask depth.
    pub spread_ask: CcfResult,
}

/// Bid-ask bounce and spread/depth cross-correlations. Ticks without a
/// two-sided quote are dropped from the spread series.
pub fn spread_facts(ticks: &TickSeries, max_lag: usize) -> Result<SpreadFacts> {
    let prices = event_time_prices(&ticks.price, &ticks.n_trades);
    let r = log_returns(&prices, 1)?;
    let a = sample_acf(&r, 1, 2.0, 0)?;
    if ticks.bid_depth.len() != ticks.len() || ticks.ask_depth.len() != ticks.len() {
        return Err(Error::InsufficientData("depth columns missing".into()));
    }
    let (mut s, mut b, mut k) = (Vec::new(), Vec::new(), Vec::new());
    for i in 0..ticks.len() {
        if ticks.spread[i].is_finite() {
            s.push(ticks.spread[i]);
            b.push(ticks.bid_depth[i] as f64);
            k.push(ticks.ask_depth[i] as f64);
        }
    }
    Ok(SpreadFacts {
        bounce: a.coefficients[1],
        bounce_bound: a.bound,
        spread_bid: sample_ccf(&s, &b, max_lag, 2.0)?,
        spread_ask: sample_ccf(&s, &k, max_lag, 2.0)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeVolatility {
    pub bin: usize,
    pub n_bins: usize,
    pub volume: CcfResult,
    pub trades: CcfResult,
}

/// Bin ticks into blocks of `bin`, take the mean absolute tick log return
/// per block as volatility, and cross-correlate it with block volume and
/// block trade counts.
pub fn volume_volatility_ccf(ticks: &TickSeries, bin: usize, max_lag: usize) -> Result<VolumeVolatility> {
    if bin == 0 {
        return Err(Error::InvalidInput("bin size must be positive".into()));
    }
    let r = log_returns(&ticks.price, 1)?;
    let n_bins = r.len() / bin;
    let mut vol = Vec::with_capacity(n_bins);
    let mut volume = Vec::with_capacity(n_bins);
    let mut trades = Vec::with_capacity(n_bins);
    for b in 0..n_bins {
        let span = b * bin..(b + 1) * bin;
        vol.push(r[span.clone()].iter().map(|v| v.abs()).sum::<f64>() / bin as f64);
        // return i spans ticks i and i + 1; attribute activity at i + 1
        let act = (span.start + 1)..(span.end + 1);
        volume.push(ticks.volume[act.clone()].iter().sum::<u64>() as f64);
        trades.push(ticks.n_trades[act].iter().map(|&n| n as u64).sum::<u64>() as f64);
    }
    Ok(VolumeVolatility {
        bin,
        n_bins,
        volume: sample_ccf(&vol, &volume, max_lag, 2.0)?,
        trades: sample_ccf(&vol, &trades, max_lag, 2.0)?,
    })
}
