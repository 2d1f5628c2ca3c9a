//! Log returns, moments and the relative bubble.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_prices(prices: &[f64]) -> Result<()> {
    if let Some(p) = prices.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
        return Err(Error::InvalidInput(format!("prices must be positive, got {p}")));
    }
    Ok(())
}

/// Overlapping log returns `log(p_{i+dt} / p_i)`.
pub fn log_returns(prices: &[f64], dt: usize) -> Result<Vec<f64>> {
    if dt == 0 {
        return Err(Error::InvalidInput("return interval must be positive".into()));
    }
    check_prices(prices)?;
    if prices.len() <= dt {
        return Ok(Vec::new());
    }
    Ok(prices[dt..]
        .iter()
        .zip(prices)
        .map(|(b, a)| (b / a).ln())
        .collect())
}

/// Prices observed at ticks with at least one trade: the transaction-event
/// clock used for high-frequency facts.
pub fn event_time_prices(prices: &[f64], n_trades: &[u32]) -> Vec<f64> {
    prices
        .iter()
        .zip(n_trades)
        .filter(|(_, &n)| n > 0)
        .map(|(&p, _)| p)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    /// `None` when the variance is zero.
    pub skewness: Option<f64>,
    /// Raw (not excess) kurtosis; `None` when the variance is zero.
    pub kurtosis: Option<f64>,
}

/// Population moments (divisor `n`).
pub fn moments(x: &[f64]) -> Result<Moments> {
    if x.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "moments need at least 4 points, got {}",
            x.len()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("moments input contains non-finite values".into()));
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in x {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    let (skewness, kurtosis) = if m2 > 0.0 {
        (Some(m3 / m2.powf(1.5)), Some(m4 / (m2 * m2)))
    } else {
        (None, None)
    };
    Ok(Moments {
        n: x.len(),
        mean,
        std: m2.sqrt(),
        min: x.iter().copied().fold(f64::INFINITY, f64::min),
        max: x.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        skewness,
        kurtosis,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleKurtosis {
    pub scale: usize,
    pub n: usize,
    /// `None` when the scale leaves too little data or zero variance.
    pub kurtosis: Option<f64>,
}

/// Kurtosis of overlapping `dt`-returns for each scale.
pub fn kurtosis_by_scale(prices: &[f64], scales: &[usize]) -> Result<Vec<ScaleKurtosis>> {
    check_prices(prices)?;
    scales
        .iter()
        .map(|&scale| {
            let r = log_returns(prices, scale)?;
            let kurtosis = moments(&r).ok().and_then(|m| m.kurtosis);
            Ok(ScaleKurtosis {
                scale,
                n: r.len(),
                kurtosis,
            })
        })
        .collect()
}

/// Relative bubble `B_t = (p_t - p^f_t) / p_t`.
pub fn bubble_series(prices: &[f64], fundamentals: &[f64]) -> Result<Vec<f64>> {
    if prices.len() != fundamentals.len() {
        return Err(Error::InvalidInput(format!(
            "bubble needs equal lengths, got {} and {}",
            prices.len(),
            fundamentals.len()
        )));
    }
    check_prices(prices)?;
    Ok(prices
        .iter()
        .zip(fundamentals)
        .map(|(p, f)| (p - f) / p)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn log_return_examples() {
        assert_eq!(log_returns(&[100.0, 100.0], 1).unwrap(), vec![0.0]);
        let r = log_returns(&[1.0, E, E * E], 1).unwrap();
        assert!(r.iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert!((log_returns(&[1.0, E * E], 1).unwrap()[0] - 2.0).abs() < 1e-12);
        assert_eq!(log_returns(&[1.0, 2.0, 4.0, 8.0], 2).unwrap().len(), 2);
        assert!(log_returns(&[1.0, 0.0], 1).is_err());
    }

    #[test]
    fn moment_examples() {
        let m = moments(&[-1.0, 1.0, -1.0, 1.0]).unwrap();
        assert_eq!(m.mean, 0.0);
        assert!((m.kurtosis.unwrap() - 1.0).abs() < 1e-12);
        let c = moments(&[3.0; 8]).unwrap();
        assert_eq!(c.std, 0.0);
        assert!(c.kurtosis.is_none());
        assert!(moments(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn kurtosis_by_scale_flags_constant_prices() {
        let k = kurtosis_by_scale(&[5.0; 50], &[1, 5]).unwrap();
        assert!(k.iter().all(|s| s.kurtosis.is_none()));
    }

    #[test]
    fn bubble_examples() {
        assert_eq!(bubble_series(&[10.0], &[10.0]).unwrap(), vec![0.0]);
        assert_eq!(bubble_series(&[20.0], &[10.0]).unwrap(), vec![0.5]);
        assert_eq!(bubble_series(&[5.0], &[10.0]).unwrap(), vec![-1.0]);
    }

    #[test]
    fn event_time_keeps_traded_ticks() {
        assert_eq!(event_time_prices(&[1.0, 2.0, 3.0], &[1, 0, 2]), vec![1.0, 3.0]);
    }
}
