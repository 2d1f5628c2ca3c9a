//! Market-risk capital requirement: historical-simulation VaR and ES, and
//! the position cap they imply.
//!
//! Quantiles use the lower empirical quantile: the smallest order
//! statistic `x` with `F_n(x) >= q`, i.e. sorted index `ceil(n * q) - 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_WINDOW: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RiskMetric {
    None,
    #[serde(rename = "var")]
    VaR,
    #[serde(rename = "es")]
    ES,
}

impl std::str::FromStr for RiskMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" | "unregulated" => Ok(RiskMetric::None),
            "var" => Ok(RiskMetric::VaR),
            "es" => Ok(RiskMetric::ES),
            other => Err(Error::config("risk.metric", format!("unknown metric `{other}`"))),
        }
    }
}

impl std::fmt::Display for RiskMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RiskMetric::None => "none",
            RiskMetric::VaR => "var",
            RiskMetric::ES => "es",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskConfig {
    pub metric: RiskMetric,
    pub confidence: f64,
    /// Number of one-tick returns in the estimation window.
    pub window: usize,
    /// Holding period in ticks used for square-root-of-time scaling.
    pub horizon: u64,
    pub multiplier: f64,
}

impl RiskConfig {
    pub fn none() -> Self {
        RiskConfig {
            metric: RiskMetric::None,
            confidence: 0.99,
            window: 1000,
            horizon: 2000,
            multiplier: 3.0,
        }
    }

    /// Basel-style default confidence for each metric.
    pub fn with_metric(metric: RiskMetric) -> Self {
        let confidence = match metric {
            RiskMetric::ES => 0.975,
            _ => 0.99,
        };
        RiskConfig {
            metric,
            confidence,
            ..RiskConfig::none()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::config("risk.confidence", "must lie in (0, 1)"));
        }
        if self.window < MIN_WINDOW {
            return Err(Error::config(
                "risk.window",
                format!("must be at least {MIN_WINDOW}"),
            ));
        }
        if self.horizon == 0 {
            return Err(Error::config("risk.horizon", "must be positive"));
        }
        if !(self.multiplier > 0.0 && self.multiplier.is_finite()) {
            return Err(Error::config("risk.multiplier", "must be positive"));
        }
        Ok(())
    }

    /// The configured metric on a return window; `None` when unregulated.
    pub fn evaluate(&self, returns: &[f64]) -> Result<Option<f64>> {
        match self.metric {
            RiskMetric::None => Ok(None),
            RiskMetric::VaR => var_estimate(returns, self.confidence, self.horizon).map(Some),
            RiskMetric::ES => es_estimate(returns, self.confidence, self.horizon).map(Some),
        }
    }
}

fn check(returns: &[f64], confidence: f64) -> Result<()> {
    if returns.len() < MIN_WINDOW {
        return Err(Error::InsufficientData(format!(
            "risk window has {} returns, need {MIN_WINDOW}",
            returns.len()
        )));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::InvalidInput(format!(
            "confidence {confidence} outside (0, 1)"
        )));
    }
    Ok(())
}

/// Partition a copy so the `q`-quantile sits at its sorted position;
/// everything before it is no larger. Linear time, same value as sorting.
fn partitioned(sample: &[f64], q: f64) -> (Vec<f64>, usize) {
    let mut v = sample.to_vec();
    let k = quantile_index(v.len(), q);
    v.select_nth_unstable_by(k, f64::total_cmp);
    (v, k)
}

fn quantile_index(n: usize, q: f64) -> usize {
    // tolerance absorbs representation error in q = 1 - confidence
    ((n as f64 * q - 1e-9).ceil() as usize).clamp(1, n) - 1
}

/// Lower empirical `q`-quantile of the sample.
pub fn lower_quantile(sample: &[f64], q: f64) -> f64 {
    let (v, k) = partitioned(sample, q);
    v[k]
}

/// Historical-simulation Value-at-Risk as a nonnegative loss rate.
pub fn var_estimate(returns: &[f64], confidence: f64, horizon: u64) -> Result<f64> {
    check(returns, confidence)?;
    let q = lower_quantile(returns, 1.0 - confidence);
    Ok((-q).max(0.0) * (horizon as f64).sqrt())
}

/// Historical-simulation Expected Shortfall: mean loss strictly beyond the
/// VaR quantile, or the VaR itself when nothing lies beyond it.
pub fn es_estimate(returns: &[f64], confidence: f64, horizon: u64) -> Result<f64> {
    check(returns, confidence)?;
    let (v, k) = partitioned(returns, 1.0 - confidence);
    let q = v[k];
    let (sum, count) = v[..k]
        .iter()
        .filter(|&&r| r < q)
        .fold((0.0, 0usize), |(s, c), &r| (s + r, c + 1));
    let scale = (horizon as f64).sqrt();
    if count == 0 {
        return Ok((-q).max(0.0) * scale);
    }
    Ok((-(sum / count as f64)).max(0.0) * scale)
}

/// Cap a desired position so that `k * m * |s * p| <= W`.
pub fn apply_capital_constraint(desired: i64, wealth: f64, price: f64, metric: f64, k: f64) -> i64 {
    if wealth <= 0.0 {
        return 0;
    }
    if metric <= 0.0 {
        return desired;
    }
    let cap = (wealth / (k * metric * price)).floor();
    let cap = if cap >= i64::MAX as f64 {
        i64::MAX
    } else {
        cap as i64
    };
    desired.signum() * desired.abs().min(cap)
}
