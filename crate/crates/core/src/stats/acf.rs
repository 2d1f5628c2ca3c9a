//! Sample autocorrelation and cross-correlation with the biased (1/N)
//! autocovariance estimator and white-noise confidence bounds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcfResult {
    /// `coefficients[k]` for lags `0..=K`; `coefficients[0] == 1`.
    pub coefficients: Vec<f64>,
    /// Half-width of the confidence band around zero.
    pub bound: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcfResult {
    /// Lags `-K..=K`.
    pub lags: Vec<i64>,
    pub coefficients: Vec<f64>,
    pub bound: f64,
    pub n: usize,
}

impl CcfResult {
    pub fn at(&self, lag: i64) -> Option<f64> {
        let k = (self.lags.len() as i64 - 1) / 2;
        if lag.abs() > k {
            return None;
        }
        Some(self.coefficients[(lag + k) as usize])
    }
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn centered(x: &[f64]) -> Vec<f64> {
    let m = mean(x);
    x.iter().map(|v| v - m).collect()
}

fn check_finite(x: &[f64], what: &str) -> Result<()> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("{what} contains non-finite values")));
    }
    Ok(())
}

/// Confidence half-width `num_std * sqrt((1 + 2 sum_{j<=q} r_j^2) / T)`.
pub fn acf_bound(n: usize, num_std: f64, r: &[f64], q: usize) -> f64 {
    let s: f64 = r.iter().skip(1).take(q).map(|v| v * v).sum();
    num_std * ((1.0 + 2.0 * s) / n as f64).sqrt()
}

/// `r_k = c_k / c_0` for `k = 0..=max_lag`, bound with moving-average order `q`.
pub fn sample_acf(z: &[f64], max_lag: usize, num_std: f64, q: usize) -> Result<AcfResult> {
    let n = z.len();
    if n < 2 || max_lag >= n {
        return Err(Error::InsufficientData(format!(
            "acf needs more than {max_lag} points, got {n}"
        )));
    }
    check_finite(z, "acf input")?;
    let d = centered(z);
    let c0: f64 = d.iter().map(|v| v * v).sum::<f64>() / n as f64;
    if !(c0 > 0.0) {
        return Err(Error::Degenerate("acf of a constant series".into()));
    }
    let coefficients: Vec<f64> = (0..=max_lag)
        .map(|k| {
            let ck: f64 = d[..n - k].iter().zip(&d[k..]).map(|(a, b)| a * b).sum::<f64>() / n as f64;
            ck / c0
        })
        .collect();
    let bound = acf_bound(n, num_std, &coefficients, q.min(max_lag));
    Ok(AcfResult {
        coefficients,
        bound,
        n,
    })
}

/// Cross-correlation `r_xy(k)` for `k = -K..=K`. Positive `k` pairs `x_t`
/// with `y_{t+k}`, so a peak at `k > 0` means `x` leads `y`.
pub fn sample_ccf(x: &[f64], y: &[f64], max_lag: usize, num_std: f64) -> Result<CcfResult> {
    let n = x.len();
    if n != y.len() {
        return Err(Error::InvalidInput(format!(
            "ccf needs equal lengths, got {} and {}",
            n,
            y.len()
        )));
    }
    if n < 2 || max_lag >= n {
        return Err(Error::InsufficientData(format!(
            "ccf needs more than {max_lag} points, got {n}"
        )));
    }
    check_finite(x, "ccf x")?;
    check_finite(y, "ccf y")?;
    let dx = centered(x);
    let dy = centered(y);
    let sx = (dx.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    let sy = (dy.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    if !(sx > 0.0 && sy > 0.0) {
        return Err(Error::Degenerate("ccf of a constant series".into()));
    }
    let k_max = max_lag as i64;
    let mut lags = Vec::with_capacity(2 * max_lag + 1);
    let mut coefficients = Vec::with_capacity(2 * max_lag + 1);
    for k in -k_max..=k_max {
        let c = if k >= 0 {
            let k = k as usize;
            dx[..n - k].iter().zip(&dy[k..]).map(|(a, b)| a * b).sum::<f64>()
        } else {
            let k = (-k) as usize;
            dy[..n - k].iter().zip(&dx[k..]).map(|(a, b)| a * b).sum::<f64>()
        } / n as f64;
        lags.push(k);
        coefficients.push(c / (sx * sy));
    }
    Ok(CcfResult {
        lags,
        coefficients,
        bound: num_std / (n as f64).sqrt(),
        n,
    })
}

/// ACF of squared returns.
pub fn volatility_clustering_acf(returns: &[f64], max_lag: usize) -> Result<AcfResult> {
    let sq: Vec<f64> = returns.iter().map(|r| r * r).collect();
    sample_acf(&sq, max_lag, 2.0, 0)
}

/// ACF of absolute returns.
pub fn long_memory_acf(returns: &[f64], max_lag: usize) -> Result<AcfResult> {
    let abs: Vec<f64> = returns.iter().map(|r| r.abs()).collect();
    sample_acf(&abs, max_lag, 2.0, 0)
}

/// `L(tau) = corr(r_t, r_{t+tau}^2)` for `tau = -K..=K`.
pub fn leverage_corr(returns: &[f64], max_lag: usize) -> Result<CcfResult> {
    if returns.len() <= 2 * max_lag {
        return Err(Error::InsufficientData(format!(
            "leverage correlation needs more than {} returns",
            2 * max_lag
        )));
    }
    let sq: Vec<f64> = returns.iter().map(|r| r * r).collect();
    sample_ccf(returns, &sq, max_lag, 2.0)
}
