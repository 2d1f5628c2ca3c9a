//! Inverse statistics, equity premium, excess volatility and rolling
//! volatility.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TRADING_DAYS: f64 = 252.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Barrier {
    Gain,
    Loss,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonStats {
    pub samples: Vec<usize>,
    /// Starts that never reached the barrier.
    pub censored: usize,
    /// `(horizon, count)` pairs in increasing horizon order.
    pub distribution: Vec<(usize, usize)>,
    /// Modal horizon, smallest on ties.
    pub optimal: Option<usize>,
    pub mean: Option<f64>,
    pub median: Option<f64>,
    pub std: Option<f64>,
}

/// Sparse table answering "first index at or after `from` whose value is at
/// least `v`" in `O(log n)`.
struct MaxTable {
    levels: Vec<Vec<f64>>,
}

impl MaxTable {
    fn new(x: Vec<f64>) -> Self {
        let mut levels = vec![x];
        let mut w = 1;
        while 2 * w <= levels[0].len() {
            let prev = levels.last().expect("level");
            let next: Vec<f64> = (0..prev.len() - w).map(|i| prev[i].max(prev[i + w])).collect();
            levels.push(next);
            w *= 2;
        }
        MaxTable { levels }
    }

    fn first_at_least(&self, from: usize, v: f64) -> Option<usize> {
        let n = self.levels[0].len();
        let mut pos = from;
        for k in (0..self.levels.len()).rev() {
            if pos < self.levels[k].len() && self.levels[k][pos] < v {
                pos += 1 << k;
            }
        }
        (pos < n && self.levels[0][pos] >= v).then_some(pos)
    }
}

/// First-passage times `tau(t) = inf{dt > 0 : log(p_{t+dt}/p_t) >= rho}` for
/// gains, `<= -rho` for losses, for every start `t`.
pub fn investment_horizons(prices: &[f64], rho: f64, barrier: Barrier) -> Result<HorizonStats> {
    if !(rho > 0.0) {
        return Err(Error::InvalidInput(format!("return level must be positive, got {rho}")));
    }
    if let Some(p) = prices.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
        return Err(Error::InvalidInput(format!("prices must be positive, got {p}")));
    }
    let sign = match barrier {
        Barrier::Gain => 1.0,
        Barrier::Loss => -1.0,
    };
    let lp: Vec<f64> = prices.iter().map(|p| sign * p.ln()).collect();
    let table = MaxTable::new(lp.clone());
    // tolerance for barriers hit exactly up to rounding in the logs
    let eps = 1e-12;
    let mut samples = Vec::new();
    let mut censored = 0;
    for (t, &base) in lp.iter().enumerate().take(lp.len().saturating_sub(1)) {
        match table.first_at_least(t + 1, base + rho - eps) {
            Some(j) => samples.push(j - t),
            None => censored += 1,
        }
    }
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &s in &samples {
        *counts.entry(s).or_default() += 1;
    }
    let distribution: Vec<(usize, usize)> = counts.into_iter().collect();
    let optimal = distribution
        .iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
        .map(|d| d.0);
    let (mean, median, std) = if samples.is_empty() {
        (None, None, None)
    } else {
        let v: Vec<f64> = samples.iter().map(|&s| s as f64).collect();
        let m = v.iter().sum::<f64>() / v.len() as f64;
        let sd = (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt();
        (Some(m), Some(super::median(&v)), Some(sd))
    };
    Ok(HorizonStats {
        samples,
        censored,
        distribution,
        optimal,
        mean,
        median,
        std,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquityPremium {
    pub annual_mean: f64,
    pub premium: f64,
}

/// Annualised mean daily log return less the annual risk-free rate.
pub fn equity_premium(daily_returns: &[f64], r_f_annual: f64) -> Result<EquityPremium> {
    if daily_returns.is_empty() {
        return Err(Error::InsufficientData("equity premium needs returns".into()));
    }
    let annual_mean = TRADING_DAYS * daily_returns.iter().sum::<f64>() / daily_returns.len() as f64;
    Ok(EquityPremium {
        annual_mean,
        premium: annual_mean - r_f_annual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExcessVolatility {
    pub sigma_market: f64,
    pub sigma_fundamental: f64,
    pub excess: bool,
}

fn std(x: &[f64]) -> f64 {
    let m = x.iter().sum::<f64>() / x.len() as f64;
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64).sqrt()
}

/// Annualised standard deviations of daily market and fundamental returns.
pub fn excess_volatility(market: &[f64], fundamental: &[f64]) -> Result<ExcessVolatility> {
    if market.is_empty() || fundamental.is_empty() {
        return Err(Error::InsufficientData("excess volatility needs both series".into()));
    }
    let a = TRADING_DAYS.sqrt();
    let (sm, sf) = (a * std(market), a * std(fundamental));
    Ok(ExcessVolatility {
        sigma_market: sm,
        sigma_fundamental: sf,
        excess: sm > sf,
    })
}

/// `v_T(t) = (1/n) sum |G(t')|` over forward windows of `n = window / dt`
/// increments `G = log Z(t + dt) - log Z(t)` sampled every `dt` steps.
pub fn rolling_volatility(prices: &[f64], window: usize, dt: usize) -> Result<Vec<f64>> {
    if dt == 0 || window == 0 || !window.is_multiple_of(dt) {
        return Err(Error::InvalidInput(format!(
            "window {window} must be a positive multiple of dt {dt}"
        )));
    }
    let n = window / dt;
    let sampled: Vec<f64> = prices.iter().step_by(dt).copied().collect();
    let g = super::returns::log_returns(&sampled, 1)?;
    if g.len() < n {
        return Err(Error::InsufficientData(format!(
            "window of {n} increments exceeds the {} available",
            g.len()
        )));
    }
    let abs: Vec<f64> = g.iter().map(|v| v.abs()).collect();
    let mut out = Vec::with_capacity(abs.len() - n + 1);
    let mut s: f64 = abs[..n].iter().sum();
    out.push(s / n as f64);
    for i in n..abs.len() {
        s += abs[i] - abs[i - n];
        out.push(s.max(0.0) / n as f64);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_growth_hits_in_one_step() {
        let p: Vec<f64> = (0..50).map(|i| (0.01 * i as f64).exp()).collect();
        let h = investment_horizons(&p, 0.01, Barrier::Gain).unwrap();
        assert!(h.samples.iter().all(|&s| s == 1));
        assert_eq!(h.optimal, Some(1));
        let l = investment_horizons(&p, 0.01, Barrier::Loss).unwrap();
        assert!(l.samples.is_empty());
        assert_eq!(l.censored, 49);
    }

    #[test]
    fn flat_prices_are_censored() {
        let h = investment_horizons(&[10.0; 20], 0.0025, Barrier::Gain).unwrap();
        assert!(h.samples.is_empty() && h.mean.is_none());
        assert_eq!(h.censored, 19);
    }

    #[test]
    fn horizons_match_linear_scan() {
        let p: Vec<f64> = (0..400)
            .map(|i| 100.0 * (0.02 * ((i * 7919 % 211) as f64 / 211.0 - 0.5) + 0.0001 * i as f64).exp())
            .collect();
        for barrier in [Barrier::Gain, Barrier::Loss] {
            let h = investment_horizons(&p, 0.005, barrier).unwrap();
            let mut expect = Vec::new();
            for t in 0..p.len() - 1 {
                let hit = (t + 1..p.len()).find(|&j| {
                    let r = (p[j] / p[t]).ln();
                    match barrier {
                        Barrier::Gain => r >= 0.005,
                        Barrier::Loss => r <= -0.005,
                    }
                });
                if let Some(j) = hit {
                    expect.push(j - t);
                }
            }
            assert_eq!(h.samples, expect);
        }
    }

    #[test]
    fn premium_arithmetic() {
        let r = vec![0.0457 / 252.0; 10];
        assert!(equity_premium(&r, 0.0457).unwrap().premium.abs() < 1e-15);
        let r = vec![0.07 / 252.0; 10];
        assert!((equity_premium(&r, 0.008).unwrap().premium - 0.062).abs() < 1e-12);
    }

    #[test]
    fn excess_volatility_flags() {
        let f: Vec<f64> = (0..100).map(|i| ((i * 13 % 7) as f64 - 3.0) * 1e-3).collect();
        assert!(!excess_volatility(&f, &f).unwrap().excess);
        let m: Vec<f64> = f.iter().enumerate().map(|(i, v)| v + if i % 2 == 0 { 2e-3 } else { -2e-3 }).collect();
        assert!(excess_volatility(&m, &f).unwrap().excess);
    }

    #[test]
    fn rolling_volatility_examples() {
        assert!(rolling_volatility(&[3.0; 20], 5, 1).unwrap().iter().all(|&v| v == 0.0));
        let p: Vec<f64> = (0..30).map(|i| (0.01 * i as f64).exp()).collect();
        let v = rolling_volatility(&p, 5, 1).unwrap();
        assert_eq!(v.len(), 25);
        assert!(v.iter().all(|x| (x - 0.01).abs() < 1e-12));
        assert!(rolling_volatility(&p, 4, 3).is_err());
        assert!(rolling_volatility(&p[..4], 5, 1).is_err());
    }
}
